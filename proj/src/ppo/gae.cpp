#include "pushgrasp/ppo/gae.hpp"

#include <stdexcept>

namespace pushgrasp::ppo {

GaeResult compute_gae(const std::vector<std::vector<double>>& rewards,
                      const std::vector<std::vector<double>>& values,
                      const std::vector<std::vector<uint8_t>>& dones, double gamma, double lambda) {
  size_t T = rewards.size();
  if (values.size() != T + 1) throw std::invalid_argument("compute_gae: values must have T+1 rows");
  if (dones.size() != T) throw std::invalid_argument("compute_gae: dones must have T rows");
  size_t N = T > 0 ? rewards[0].size() : 0;
  GaeResult out;
  out.advantages.assign(T, std::vector<double>(N, 0.0));
  out.returns.assign(T, std::vector<double>(N, 0.0));
  std::vector<double> gae(N, 0.0);
  for (size_t t = T; t-- > 0;) {
    if (rewards[t].size() != N || values[t].size() != N || dones[t].size() != N)
      throw std::invalid_argument("compute_gae: ragged inputs");
    for (size_t e = 0; e < N; ++e) {
      double not_done = dones[t][e] ? 0.0 : 1.0;
      double delta = rewards[t][e] + gamma * values[t + 1][e] * not_done - values[t][e];
      gae[e] = delta + gamma * lambda * not_done * gae[e];
      out.advantages[t][e] = gae[e];
      out.returns[t][e] = gae[e] + values[t][e];
    }
  }
  return out;
}

}  // namespace pushgrasp::ppo
