#ifndef PUSHGRASP_PPO_TRAINER_HPP_
#define PUSHGRASP_PPO_TRAINER_HPP_

#include <deque>
#include <functional>
#include <optional>
#include <string>

#include "pushgrasp/io/config.hpp"
#include "pushgrasp/ppo/gae.hpp"
#include "pushgrasp/ppo/policy.hpp"
#include "pushgrasp/tasks/env.hpp"

namespace pushgrasp::ppo {

struct PpoConfig {
  int n_envs = 256;          // desk-scale default; the reference setup used 4096
  int minibatches = 4;
  int opt_epochs = 5;
  int segment_len = 8;       // rollout segment per update ("episode length")
  double clip = 0.2;
  double max_grad_norm = 1.0;
  double lr = 5e-4;
  double gamma = 0.99;
  double lam = 0.95;
  double init_noise_std = 1.0;
  double desired_kl = 0.008;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double bounds_coef = 10.0;  // penalty on policy means beyond the normalized action range
  std::vector<int> hidden{1024, 512, 256};
  double lr_min = 1e-6;
  double lr_max = 1e-3;
  double log_std_min = -3.0;  // exploration floor; also caps 1/sigma^2 gradient growth
  double log_std_max = 1.0;

  void validate() const;
  static PpoConfig from_config(const io::Config& c);
  void to_config(io::Config& c) const;
};

struct CurriculumSpec {
  bool enabled = true;
  double advance_sr = 0.7;
  int window = 200;  // episodes in the rolling success window
};

// Synchronous vector of environments with auto-reset and deterministic
// per-episode seeding.
class VectorEnv {
 public:
  VectorEnv(const tasks::EnvSetup& setup, int n_envs, uint64_t seed_base);

  const std::vector<std::vector<double>>& observations() const { return obs_; }
  int n_envs() const { return static_cast<int>(envs_.size()); }
  tasks::Env& env(int i) { return envs_[i]; }

  struct StepRecord {
    double reward = 0.0;
    bool done = false;
    bool timeout = false;
    bool success = false;
    bool diverged = false;
    std::vector<double> terminal_obs;  // pre-reset observation when done
  };
  // Steps every env (parallel), auto-resets finished ones.
  std::vector<StepRecord> step(const std::vector<tasks::Action>& actions);

  void set_curriculum_stage(int stage);
  // Optional override of the reset distribution (handoff finetuning).
  using ResetHook = std::function<tasks::Observation(tasks::Env&, uint64_t seed)>;
  void set_reset_hook(ResetHook hook);
  // Optional per-episode target override applied right after reset (push
  // target noise finetuning). Return the new commanded target.
  using TargetHook = std::function<std::optional<Vec2>(tasks::Env&, Rng&)>;
  void set_target_hook(TargetHook hook);

 private:
  void reset_env(int i);

  tasks::EnvSetup setup_;
  std::vector<tasks::Env> envs_;
  std::vector<std::vector<double>> obs_;
  std::vector<uint64_t> episode_counter_;
  uint64_t seed_base_;
  ResetHook reset_hook_;
  TargetHook target_hook_;
  Rng hook_rng_;
};

struct RolloutBuffer {
  int T = 0, N = 0, obs_dim = 0, act_dim = 0;
  std::vector<std::vector<std::vector<double>>> obs;      // [T][N][obs] raw
  std::vector<std::vector<std::vector<double>>> norm_obs;  // normalized at collection time
  std::vector<std::vector<std::vector<double>>> actions;  // [T][N][act]
  std::vector<std::vector<std::vector<double>>> means;    // behavior means
  std::vector<std::vector<double>> log_probs;             // [T][N]
  std::vector<std::vector<double>> values;                // [T+1][N]
  std::vector<std::vector<double>> rewards;               // [T][N]
  std::vector<std::vector<uint8_t>> dones;                // [T][N]
  std::vector<double> behavior_log_std;
  std::vector<std::vector<double>> advantages, returns;

  int episodes_finished = 0;
  int episodes_succeeded = 0;
  int episodes_diverged = 0;
  double reward_sum = 0.0;
};

// segment_len synchronous steps over all envs; timeout bootstrap folds
// gamma*V(terminal) into the reward; GAE/returns are filled in.
RolloutBuffer collect_rollout(GaussianPolicy& policy, VectorEnv& venv, int segment_len,
                              const PpoConfig& cfg, Rng& rng);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double lr = 0.0;
  bool aborted = false;  // NaN loss; parameters restored
};

// Clipped-surrogate update with adaptive-KL learning rate. `lr` is carried
// across updates by the caller.
UpdateStats ppo_update(GaussianPolicy& policy, const RolloutBuffer& buffer, const PpoConfig& cfg,
                       double& lr, Rng& rng);

struct TrainLogRow {
  int update = 0;
  int64_t steps = 0;
  double sr = 0.0;
  double mean_reward = 0.0;
  double kl = 0.0;
  double lr = 0.0;
  int stage = 0;
};

struct TrainResult {
  GaussianPolicy policy;          // best rolling-SR snapshot (final stage)
  std::vector<TrainLogRow> log;
  double final_sr = 0.0;
  int64_t env_steps = 0;
  int final_stage = 0;
  bool budget_exhausted = false;
  std::vector<std::string> stage_checkpoints;  // paths, when checkpoint_dir set
};

struct TrainOptions {
  uint64_t seed = 0;
  int64_t budget_steps = 1000000;
  std::string checkpoint_dir;     // empty: keep checkpoints in memory only
  double stop_at_sr = -1.0;       // early stop threshold on the rolling SR (<0: never)
  int log_every = 1;
  std::function<void(const TrainLogRow&)> on_update;
};

TrainResult train_skill(const tasks::EnvSetup& setup, const PpoConfig& cfg,
                        const CurriculumSpec& curriculum, const TrainOptions& opts);

std::string train_log_to_csv(const std::vector<TrainLogRow>& rows);

}  // namespace pushgrasp::ppo

#endif  // PUSHGRASP_PPO_TRAINER_HPP_
