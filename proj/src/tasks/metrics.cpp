#include "pushgrasp/tasks/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pushgrasp::tasks {

double compute_tte(const Vec2& predicted, const Vec2& label) {
  if (!predicted.finite() || !label.finite())
    throw std::invalid_argument("compute_tte: non-finite input");
  return 100.0 * distance(predicted, label);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

EvalStats evaluate(const Policy& policy, const EnvSetup& setup, int n_episodes,
                   const std::vector<uint64_t>& seeds) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  EvalStats stats;
  for (uint64_t seed : seeds) {
    Env env(setup);
    int successes = 0;
    for (int ep = 0; ep < n_episodes; ++ep) {
      Observation obs = env.reset(seed * 100003 + static_cast<uint64_t>(ep));
      while (!env.done()) {
        StepOut out = env.step(policy(obs));
        obs = out.obs;
      }
      if (env.result().success) ++successes;
    }
    stats.sr_per_seed.push_back(static_cast<double>(successes) / n_episodes);
  }
  stats.sr_mean = mean(stats.sr_per_seed);
  stats.sr_std = stddev(stats.sr_per_seed);
  stats.tte_mean = std::nan("");
  stats.tte_std = std::nan("");
  return stats;
}

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows) {
  std::string out = "task,seed,sr,tte_cm\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%.17g\n", r.task.c_str(),
                  static_cast<unsigned long long>(r.seed), r.sr, r.tte);
    out += buf;
  }
  return out;
}

}  // namespace pushgrasp::tasks
