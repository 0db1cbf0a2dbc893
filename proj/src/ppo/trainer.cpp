#include "pushgrasp/ppo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <atomic>
#include <thread>

namespace pushgrasp::ppo {

using nn::Tape;
using nn::Tensor;

void PpoConfig::validate() const {
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("ppo: gamma in (0,1]");
  if (lam < 0.0 || lam > 1.0) throw std::invalid_argument("ppo: lambda in [0,1]");
  if (clip <= 0.0) throw std::invalid_argument("ppo: clip must be > 0");
  if (n_envs < 1 || segment_len < 1 || minibatches < 1 || opt_epochs < 1)
    throw std::invalid_argument("ppo: bad sizes");
  if ((n_envs * segment_len) % minibatches != 0)
    throw std::invalid_argument("ppo: minibatches must divide the batch");
}

PpoConfig PpoConfig::from_config(const io::Config& c) {
  PpoConfig p;
  p.n_envs = static_cast<int>(c.get_int("ppo", "n_envs", p.n_envs));
  p.minibatches = static_cast<int>(c.get_int("ppo", "minibatches", p.minibatches));
  p.opt_epochs = static_cast<int>(c.get_int("ppo", "opt_epochs", p.opt_epochs));
  p.segment_len = static_cast<int>(c.get_int("ppo", "segment_len", p.segment_len));
  p.clip = c.get_double("ppo", "clip", p.clip);
  p.max_grad_norm = c.get_double("ppo", "max_grad_norm", p.max_grad_norm);
  p.lr = c.get_double("ppo", "lr", p.lr);
  p.gamma = c.get_double("ppo", "gamma", p.gamma);
  p.lam = c.get_double("ppo", "lambda", p.lam);
  p.init_noise_std = c.get_double("ppo", "init_noise_std", p.init_noise_std);
  p.desired_kl = c.get_double("ppo", "desired_kl", p.desired_kl);
  p.entropy_coef = c.get_double("ppo", "entropy_coef", p.entropy_coef);
  p.value_coef = c.get_double("ppo", "value_coef", p.value_coef);
  p.bounds_coef = c.get_double("ppo", "bounds_coef", p.bounds_coef);
  if (c.has("ppo", "hidden")) {
    p.hidden.clear();
    std::string h = c.get("ppo", "hidden", "");
    size_t pos = 0;
    while (pos < h.size()) {
      size_t comma = h.find(',', pos);
      if (comma == std::string::npos) comma = h.size();
      p.hidden.push_back(std::stoi(h.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  return p;
}

void PpoConfig::to_config(io::Config& c) const {
  c.set_int("ppo", "n_envs", n_envs);
  c.set_int("ppo", "minibatches", minibatches);
  c.set_int("ppo", "opt_epochs", opt_epochs);
  c.set_int("ppo", "segment_len", segment_len);
  c.set_double("ppo", "clip", clip);
  c.set_double("ppo", "max_grad_norm", max_grad_norm);
  c.set_double("ppo", "lr", lr);
  c.set_double("ppo", "gamma", gamma);
  c.set_double("ppo", "lambda", lam);
  c.set_double("ppo", "init_noise_std", init_noise_std);
  c.set_double("ppo", "desired_kl", desired_kl);
  c.set_double("ppo", "entropy_coef", entropy_coef);
  c.set_double("ppo", "value_coef", value_coef);
  c.set_double("ppo", "bounds_coef", bounds_coef);
  std::string h;
  for (size_t i = 0; i < hidden.size(); ++i) h += (i ? "," : "") + std::to_string(hidden[i]);
  c.set("ppo", "hidden", h);
}

namespace {

// Deterministic per-episode seed stream.
uint64_t episode_seed(uint64_t base, int env_idx, uint64_t episode) {
  uint64_t h = base;
  h = fnv1a(&env_idx, sizeof(env_idx), h);
  h = fnv1a(&episode, sizeof(episode), h);
  return h;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(), 8);
  if (workers <= 1 || n < 4) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::atomic<int> next{0};
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      int i;
      while ((i = next.fetch_add(1)) < n) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

std::vector<double> obs_to_vec(const tasks::Observation& o) {
  return std::vector<double>(o.v.begin(), o.v.end());
}

}  // namespace

VectorEnv::VectorEnv(const tasks::EnvSetup& setup, int n_envs, uint64_t seed_base)
    : setup_(setup), seed_base_(seed_base), hook_rng_(seed_base ^ 0x9e3779b97f4a7c15ull) {
  envs_.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) envs_.emplace_back(setup_);
  obs_.resize(n_envs);
  episode_counter_.assign(n_envs, 0);
  for (int i = 0; i < n_envs; ++i) reset_env(i);
}

void VectorEnv::reset_env(int i) {
  uint64_t seed = episode_seed(seed_base_, i, episode_counter_[i]++);
  tasks::Observation o;
  if (reset_hook_) o = reset_hook_(envs_[i], seed);
  else o = envs_[i].reset(seed);
  if (target_hook_) {
    if (auto t = target_hook_(envs_[i], hook_rng_)) {
      envs_[i].set_target(*t);
      o = envs_[i].observe();
    }
  }
  obs_[i] = obs_to_vec(o);
}

std::vector<VectorEnv::StepRecord> VectorEnv::step(const std::vector<tasks::Action>& actions) {
  if (static_cast<int>(actions.size()) != n_envs())
    throw std::invalid_argument("vector env: action count mismatch");
  std::vector<StepRecord> records(envs_.size());
  std::vector<std::string> errors(envs_.size());
  parallel_for(n_envs(), [&](int i) {
    try {
      tasks::StepOut out = envs_[i].step(actions[i]);
      StepRecord& r = records[i];
      r.reward = out.reward;
      r.done = out.done;
      if (out.done) {
        const auto& res = envs_[i].result();
        r.timeout = res.failure_reason == tasks::FailureReason::timeout;
        r.success = res.success;
        r.diverged = res.failure_reason == tasks::FailureReason::diverged;
        r.terminal_obs = std::vector<double>(out.obs.v.begin(), out.obs.v.end());
      } else {
        obs_[i] = obs_to_vec(out.obs);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw std::runtime_error("env " + std::to_string(i) + ": " + errors[i]);
  for (int i = 0; i < n_envs(); ++i)
    if (records[i].done) reset_env(i);
  return records;
}

void VectorEnv::set_curriculum_stage(int stage) {
  for (auto& e : envs_) e.set_curriculum_stage(stage);
}

void VectorEnv::set_reset_hook(ResetHook hook) { reset_hook_ = std::move(hook); }
void VectorEnv::set_target_hook(TargetHook hook) { target_hook_ = std::move(hook); }

RolloutBuffer collect_rollout(GaussianPolicy& policy, VectorEnv& venv, int segment_len,
                              const PpoConfig& cfg, Rng& rng) {
  int N = venv.n_envs();
  const tasks::EnvSetup& setup = venv.env(0).setup();
  RolloutBuffer buf;
  buf.T = segment_len;
  buf.N = N;
  buf.obs_dim = policy.config().obs_dim;
  buf.act_dim = policy.config().act_dim;
  buf.behavior_log_std = policy.log_std();
  buf.obs.resize(segment_len);
  buf.norm_obs.resize(segment_len);
  buf.actions.resize(segment_len);
  buf.means.resize(segment_len);
  buf.log_probs.assign(segment_len, std::vector<double>(N, 0.0));
  buf.values.assign(segment_len + 1, std::vector<double>(N, 0.0));
  buf.rewards.assign(segment_len, std::vector<double>(N, 0.0));
  buf.dones.assign(segment_len, std::vector<uint8_t>(N, 0));

  for (int t = 0; t < segment_len; ++t) {
    buf.obs[t] = venv.observations();
    {
      nn::Tensor norm = policy.normalize(buf.obs[t]);
      buf.norm_obs[t].assign(N, std::vector<double>(buf.obs_dim));
      for (int e = 0; e < N; ++e)
        for (int c = 0; c < buf.obs_dim; ++c) buf.norm_obs[t][e][c] = norm.at(e, c);
    }
    auto act = policy.act(buf.obs[t], rng, true);
    buf.actions[t] = act.actions;
    buf.means[t] = act.means;
    buf.log_probs[t] = act.log_probs;
    buf.values[t] = act.values;

    std::vector<tasks::Action> env_actions(N);
    for (int e = 0; e < N; ++e) {
      std::array<double, tasks::Action::kDim> raw{};
      for (int j = 0; j < tasks::Action::kDim; ++j) raw[j] = act.actions[e][j];
      env_actions[e] = tasks::action_from_normalized(setup, raw);
    }
    auto records = venv.step(env_actions);

    // Truncation bootstrap: timeouts and successes end the episode without
    // ending the task's value stream, so gamma * V(terminal) folds into the
    // reward; compute_gae stays the clean recursion. Falls and divergences
    // are true terminations worth zero.
    std::vector<int> timeout_envs;
    std::vector<std::vector<double>> timeout_obs;
    for (int e = 0; e < N; ++e) {
      buf.rewards[t][e] = records[e].reward;
      buf.dones[t][e] = records[e].done ? 1 : 0;
      buf.reward_sum += records[e].reward;
      if (records[e].done) {
        ++buf.episodes_finished;
        if (records[e].success) ++buf.episodes_succeeded;
        if (records[e].diverged) ++buf.episodes_diverged;
        if (records[e].timeout || records[e].success) {
          timeout_envs.push_back(e);
          timeout_obs.push_back(records[e].terminal_obs);
        }
      }
    }
    if (!timeout_envs.empty()) {
      auto terminal_values = policy.value(timeout_obs);
      for (size_t k = 0; k < timeout_envs.size(); ++k)
        buf.rewards[t][timeout_envs[k]] += cfg.gamma * terminal_values[k];
    }
  }
  buf.values[segment_len] = policy.value(venv.observations());

  auto gae = compute_gae(buf.rewards, buf.values, buf.dones, cfg.gamma, cfg.lam);
  buf.advantages = std::move(gae.advantages);
  buf.returns = std::move(gae.returns);
  return buf;
}

UpdateStats ppo_update(GaussianPolicy& policy, const RolloutBuffer& buf, const PpoConfig& cfg,
                       double& lr, Rng& rng) {
  int total = buf.T * buf.N;
  int mb_size = total / cfg.minibatches;

  // Flatten and normalize advantages over the whole batch. Observations are
  // the collection-time normalized rows so ratios start at exactly 1.
  std::vector<std::vector<double>> obs(total), norm_obs(total), actions(total), means_old(total);
  std::vector<double> adv(total), ret(total), lp_old(total);
  for (int t = 0; t < buf.T; ++t)
    for (int e = 0; e < buf.N; ++e) {
      int i = t * buf.N + e;
      obs[i] = buf.obs[t][e];
      norm_obs[i] = buf.norm_obs[t][e];
      actions[i] = buf.actions[t][e];
      means_old[i] = buf.means[t][e];
      adv[i] = buf.advantages[t][e];
      ret[i] = buf.returns[t][e];
      lp_old[i] = buf.log_probs[t][e];
    }
  double adv_mean = std::accumulate(adv.begin(), adv.end(), 0.0) / total;
  double adv_var = 0.0;
  for (double a : adv) adv_var += (a - adv_mean) * (a - adv_mean);
  double adv_std = std::sqrt(adv_var / total);
  for (double& a : adv) a = (a - adv_mean) / (adv_std + 1e-8);


  nn::ParamStore snapshot = policy.store();  // restored on NaN
  UpdateStats stats;
  std::vector<int> index(total);
  std::iota(index.begin(), index.end(), 0);
  int passes = 0;

  for (int epoch = 0; epoch < cfg.opt_epochs; ++epoch) {
    std::shuffle(index.begin(), index.end(), rng.engine());
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      std::vector<std::vector<double>> mb_obs(mb_size), mb_act(mb_size), mb_mean_old(mb_size);
      std::vector<double> mb_adv(mb_size), mb_ret(mb_size), mb_lp_old(mb_size);
      for (int k = 0; k < mb_size; ++k) {
        int i = index[mb * mb_size + k];
        mb_obs[k] = norm_obs[i];
        mb_act[k] = actions[i];
        mb_mean_old[k] = means_old[i];
        mb_adv[k] = adv[i];
        mb_ret[k] = ret[i];
        mb_lp_old[k] = lp_old[i];
      }

      policy.store().zero_grads();
      Tape tape;
      Tensor norm_mb({mb_size, policy.config().obs_dim});
      for (int k = 0; k < mb_size; ++k)
        for (int c = 0; c < policy.config().obs_dim; ++c) norm_mb.at(k, c) = mb_obs[k][c];
      auto ev = policy.evaluate(tape, norm_mb, mb_act);

      Tensor adv_t({mb_size, 1}), ret_t({mb_size, 1}), lp_old_t({mb_size, 1});
      for (int k = 0; k < mb_size; ++k) {
        adv_t.v[k] = mb_adv[k];
        ret_t.v[k] = mb_ret[k];
        lp_old_t.v[k] = mb_lp_old[k];
      }
      Tape::Var ratio = tape.exp_act(tape.sub(ev.log_prob, tape.leaf(lp_old_t)));
      Tape::Var adv_v = tape.leaf(adv_t);
      Tape::Var surr1 = tape.mul(ratio, adv_v);
      Tape::Var surr2 = tape.mul(tape.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), adv_v);
      Tape::Var policy_loss = tape.scale(tape.mean_all(tape.min_elem(surr1, surr2)), -1.0);
      Tape::Var value_loss = tape.mean_all(tape.square(tape.sub(ev.value, tape.leaf(ret_t))));
      Tape::Var loss = tape.add(policy_loss, tape.scale(value_loss, cfg.value_coef));
      if (cfg.entropy_coef != 0.0) {
        Tape::Var ent = tape.add_const(tape.sum_all(ev.log_std),
                                       0.5 * policy.config().act_dim * (1.0 + 1.8378770664093453));
        loss = tape.add(loss, tape.scale(ent, -cfg.entropy_coef));
      }
      if (cfg.bounds_coef != 0.0) {
        // Keep action means inside the normalized range; outside it the env
        // clamp hides the gradient.
        Tape::Var excess = tape.relu(tape.add_const(tape.abs_act(ev.mean), -1.0));
        loss = tape.add(loss, tape.scale(tape.mean_all(tape.square(excess)), cfg.bounds_coef));
      }

      double loss_val = tape.value(loss).v[0];
      if (!std::isfinite(loss_val)) {
        policy.store() = snapshot;
        stats.aborted = true;
        stats.lr = lr;
        return stats;
      }

      // Analytic KL between the behavior Gaussian and the current one on
      // this minibatch; the learning rate adapts before the step is taken.
      const Tensor& mean_new = tape.value(ev.mean);
      const Tensor& ls_new_t = tape.value(ev.log_std);
      double kl = 0.0;
      for (int k = 0; k < mb_size; ++k) {
        for (int c = 0; c < policy.config().act_dim; ++c) {
          double ls_old = buf.behavior_log_std[c];
          double ls_new = ls_new_t.v[c];
          double var_old = std::exp(2.0 * ls_old);
          double var_new = std::exp(2.0 * ls_new);
          double dmu = mb_mean_old[k][c] - mean_new.at(k, c);
          kl += ls_new - ls_old + (var_old + dmu * dmu) / (2.0 * var_new) - 0.5;
        }
      }
      kl /= mb_size;
      kl = std::max(kl, 0.0);

      tape.backward(loss);
      nn::clip_grad_norm(policy.store(), cfg.max_grad_norm);
      nn::AdamConfig adam;
      adam.lr = lr;
      adam_step(policy.store(), adam);
      for (double& ls : policy.store().get("pi/log_std").v)
        ls = clamp(ls, cfg.log_std_min, cfg.log_std_max);

      const Tensor& ratio_v = tape.value(ratio);
      double clipped = 0.0;
      for (double r : ratio_v.v)
        if (std::abs(r - 1.0) > cfg.clip) clipped += 1.0;
      stats.policy_loss += tape.value(policy_loss).v[0];
      stats.value_loss += tape.value(value_loss).v[0];
      stats.kl += kl;
      stats.clip_fraction += clipped / mb_size;
      ++passes;
    }
  }
  stats.policy_loss /= passes;
  stats.value_loss /= passes;
  stats.kl /= passes;
  stats.clip_fraction /= passes;
  // Adapt once per update on the mean KL; per-minibatch adaptation thrashes
  // at small batch sizes.
  if (cfg.desired_kl > 0.0) {
    if (stats.kl > 2.0 * cfg.desired_kl) lr = std::max(lr * 0.5, cfg.lr_min);
    else if (stats.kl < cfg.desired_kl / 2.0) lr = std::min(lr * 1.5, cfg.lr_max);
  }
  stats.lr = lr;
  // Statistics advance after the epochs so the next rollout normalizes with
  // fresher estimates while this one stayed self-consistent.
  policy.update_norm(obs);
  return stats;
}

TrainResult train_skill(const tasks::EnvSetup& setup, const PpoConfig& cfg,
                        const CurriculumSpec& curriculum, const TrainOptions& opts) {
  cfg.validate();
  PolicyConfig pcfg;
  pcfg.obs_dim = tasks::Observation::kDim;
  pcfg.act_dim = tasks::Action::kDim;
  pcfg.hidden = cfg.hidden;
  pcfg.init_noise_std = cfg.init_noise_std;

  tasks::EnvSetup env_setup = setup;
  if (curriculum.enabled) env_setup.config.curriculum_stage = 0;

  TrainResult result{GaussianPolicy(pcfg, opts.seed), {}, 0.0, 0, 0, false, {}};
  VectorEnv venv(env_setup, cfg.n_envs, opts.seed);
  Rng rng(opts.seed ^ 0xabcdef1234567890ull);

  std::deque<uint8_t> window;
  int stage = env_setup.config.curriculum_stage;
  double lr = cfg.lr;
  int update = 0;
  double best_sr = -1.0;
  std::optional<nn::ParamStore> best_params;
  auto save_stage_ckpt = [&](int s) {
    if (opts.checkpoint_dir.empty()) return;
    std::string path = opts.checkpoint_dir + "/stage" + std::to_string(s) + ".ckpt";
    result.policy.save(path);
    result.stage_checkpoints.push_back(path);
  };

  while (result.env_steps < opts.budget_steps) {
    RolloutBuffer buf = collect_rollout(result.policy, venv, cfg.segment_len, cfg, rng);
    result.env_steps += static_cast<int64_t>(cfg.segment_len) * cfg.n_envs;
    UpdateStats stats = ppo_update(result.policy, buf, cfg, lr, rng);
    ++update;

    for (int i = 0; i < buf.episodes_finished; ++i) {
      window.push_back(i < buf.episodes_succeeded ? 1 : 0);
      while (static_cast<int>(window.size()) > curriculum.window) window.pop_front();
    }
    double sr = 0.0;
    if (!window.empty()) {
      for (uint8_t s : window) sr += s;
      sr /= static_cast<double>(window.size());
    }
    result.final_sr = sr;

    // Track the best policy seen at the final curriculum stage; training can
    // regress late, and the contract returns the best checkpoint.
    int last_stage = curriculum.enabled ? 2 : stage;
    if (stage == last_stage && static_cast<int>(window.size()) >= curriculum.window / 2 &&
        sr > best_sr) {
      best_sr = sr;
      best_params = result.policy.store();
    }

    if (curriculum.enabled && stage < 2 && static_cast<int>(window.size()) >= curriculum.window / 2 &&
        sr >= curriculum.advance_sr) {
      save_stage_ckpt(stage);
      ++stage;
      venv.set_curriculum_stage(stage);
      window.clear();
    }

    TrainLogRow row{update, result.env_steps, sr, buf.reward_sum / (cfg.segment_len * cfg.n_envs),
                    stats.kl, stats.lr, stage};
    if (update % opts.log_every == 0) result.log.push_back(row);
    if (opts.on_update) opts.on_update(row);

    if (opts.stop_at_sr > 0.0 && stage == (curriculum.enabled ? 2 : stage) && sr >= opts.stop_at_sr &&
        static_cast<int>(window.size()) >= curriculum.window / 2)
      break;
  }
  result.budget_exhausted = result.env_steps >= opts.budget_steps;
  result.final_stage = stage;
  if (best_params && best_sr > result.final_sr) {
    result.policy = GaussianPolicy(std::move(*best_params));
    result.final_sr = best_sr;
  }
  save_stage_ckpt(stage);
  return result;
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::string out = "update,steps,sr,mean_reward,kl,lr,stage\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g,%.17g,%.17g,%d\n", r.update,
                  static_cast<long long>(r.steps), r.sr, r.mean_reward, r.kl, r.lr, r.stage);
    out += buf;
  }
  return out;
}

}  // namespace pushgrasp::ppo
