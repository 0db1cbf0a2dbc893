#ifndef PUSHGRASP_IO_TRAJECTORY_HPP_
#define PUSHGRASP_IO_TRAJECTORY_HPP_

#include <map>
#include <string>
#include <vector>

#include "pushgrasp/sim/types.hpp"

namespace pushgrasp::io {

// One control step of a rollout. Serialized as line-delimited JSON with a
// single header line, so a file holds steps + 1 lines.
struct TrajStep {
  double time = 0.0;
  std::array<double, sim::kNumJoints> q{};
  std::array<double, sim::kNumJoints> qd{};
  sim::BodyState body;
  std::vector<sim::ContactRecord> contacts;
  double reward = 0.0;
  int p_a = 0;
  int p_b = 0;
  std::map<std::string, double> extras;  // reward breakdown and task-specific scalars
};

struct Trajectory {
  std::string task;
  uint64_t seed = 0;
  bool success = false;
  std::vector<TrajStep> steps;
};

void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

std::string trajectory_to_jsonl(const Trajectory& traj);
Trajectory trajectory_from_jsonl(const std::string& text);

}  // namespace pushgrasp::io

#endif  // PUSHGRASP_IO_TRAJECTORY_HPP_
