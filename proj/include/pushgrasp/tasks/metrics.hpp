#ifndef PUSHGRASP_TASKS_METRICS_HPP_
#define PUSHGRASP_TASKS_METRICS_HPP_

#include <functional>
#include <string>
#include <vector>

#include "pushgrasp/tasks/env.hpp"

namespace pushgrasp::tasks {

using Policy = std::function<Action(const Observation&)>;

// Target transition error in centimeters: 100 * ||predicted - label||.
double compute_tte(const Vec2& predicted, const Vec2& label);

struct EvalStats {
  double sr_mean = 0.0;
  double sr_std = 0.0;
  double tte_mean = 0.0;  // NaN when no TTE is defined for the run
  double tte_std = 0.0;
  std::vector<double> sr_per_seed;
  std::vector<double> tte_per_seed;
};

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);  // population std across seeds

// Success rate of a policy over n_episodes per seed; mean/std across seeds.
EvalStats evaluate(const Policy& policy, const EnvSetup& setup, int n_episodes,
                   const std::vector<uint64_t>& seeds);

struct EvalRow {
  std::string task;
  uint64_t seed = 0;
  double sr = 0.0;
  double tte = 0.0;
};

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows);

}  // namespace pushgrasp::tasks

#endif  // PUSHGRASP_TASKS_METRICS_HPP_
