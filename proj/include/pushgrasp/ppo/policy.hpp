#ifndef PUSHGRASP_PPO_POLICY_HPP_
#define PUSHGRASP_PPO_POLICY_HPP_

#include <string>
#include <vector>

#include "pushgrasp/nn/checkpoint.hpp"
#include "pushgrasp/nn/layers.hpp"

namespace pushgrasp::ppo {

struct PolicyConfig {
  int obs_dim = 19;
  int act_dim = 5;
  std::vector<int> hidden{1024, 512, 256};
  double init_noise_std = 1.0;
  bool normalize_obs = true;
  double obs_clip = 10.0;
};

// Gaussian policy: MLP action mean with a state-independent log-std vector,
// plus a separate value MLP and running observation normalization. All state
// lives in one ParamStore so checkpoints capture everything.
class GaussianPolicy {
 public:
  GaussianPolicy(const PolicyConfig& cfg, uint64_t seed);
  explicit GaussianPolicy(nn::ParamStore store);  // from checkpoint

  struct ActOut {
    std::vector<std::vector<double>> actions;  // sampled (or mean when deterministic)
    std::vector<std::vector<double>> means;
    std::vector<double> log_probs;
    std::vector<double> values;
  };
  ActOut act(const std::vector<std::vector<double>>& obs, Rng& rng, bool stochastic) const;
  std::vector<double> value(const std::vector<std::vector<double>>& obs) const;

  // Training-graph evaluation of log pi(a|s), per-sample value, and the
  // current mean matrix. Observations must be pre-normalized rows.
  struct EvalVars {
    nn::Tape::Var log_prob;  // [M,1]
    nn::Tape::Var value;     // [M,1]
    nn::Tape::Var mean;      // [M,act]
    nn::Tape::Var log_std;   // [act]
  };
  EvalVars evaluate(nn::Tape& tape, const nn::Tensor& norm_obs,
                    const std::vector<std::vector<double>>& actions);

  nn::Tensor normalize(const std::vector<std::vector<double>>& obs) const;
  void update_norm(const std::vector<std::vector<double>>& obs);

  std::vector<double> log_std() const;
  double entropy() const;  // analytic, state-independent

  const PolicyConfig& config() const { return cfg_; }
  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }

  void save(const std::string& path) const;
  static GaussianPolicy load(const std::string& path);

 private:
  void build_wrappers();

  PolicyConfig cfg_;
  nn::ParamStore store_;
  nn::Mlp pi_, v_;
};

}  // namespace pushgrasp::ppo

#endif  // PUSHGRASP_PPO_POLICY_HPP_
