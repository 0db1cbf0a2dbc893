#ifndef PUSHGRASP_PPO_GAE_HPP_
#define PUSHGRASP_PPO_GAE_HPP_

#include <cstdint>
#include <vector>

namespace pushgrasp::ppo {

struct GaeResult {
  std::vector<std::vector<double>> advantages;  // [T][N]
  std::vector<std::vector<double>> returns;     // advantages + values
};

// Generalized advantage estimation over a synchronous rollout segment.
// values has T+1 rows; values[T] is the bootstrap V(s_T). dones[t][e] marks
// that env e finished at step t (s_{t+1} is a reset state).
GaeResult compute_gae(const std::vector<std::vector<double>>& rewards,
                      const std::vector<std::vector<double>>& values,
                      const std::vector<std::vector<uint8_t>>& dones, double gamma, double lambda);

}  // namespace pushgrasp::ppo

#endif  // PUSHGRASP_PPO_GAE_HPP_
