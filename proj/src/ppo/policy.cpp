#include "pushgrasp/ppo/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace pushgrasp::ppo {

using nn::Tape;
using nn::Tensor;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

std::vector<int> policy_sizes(const PolicyConfig& cfg) {
  std::vector<int> sizes{cfg.obs_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(cfg.act_dim);
  return sizes;
}

std::vector<int> value_sizes(const PolicyConfig& cfg) {
  std::vector<int> sizes{cfg.obs_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  return sizes;
}

nn::Mlp wrap_mlp(const std::string& prefix, const std::vector<int>& sizes) {
  nn::Mlp m;
  m.hidden_act = nn::Activation::relu;
  m.output_act = nn::Activation::none;
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    nn::Dense d;
    d.in = sizes[i];
    d.out = sizes[i + 1];
    d.w = prefix + "/fc" + std::to_string(i) + "/w";
    d.b = prefix + "/fc" + std::to_string(i) + "/b";
    m.layers.push_back(std::move(d));
  }
  return m;
}

}  // namespace

GaussianPolicy::GaussianPolicy(const PolicyConfig& cfg, uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  nn::Mlp::create(store_, "pi", policy_sizes(cfg_), nn::Activation::relu, nn::Activation::none,
                  nn::Init::orthogonal, rng, 0.01);
  nn::Mlp::create(store_, "v", value_sizes(cfg_), nn::Activation::relu, nn::Activation::none,
                  nn::Init::orthogonal, rng, 1.0);
  store_.create("pi/log_std", {cfg_.act_dim});
  store_.init_constant("pi/log_std", std::log(cfg_.init_noise_std));
  store_.create("norm/mean", {cfg_.obs_dim});
  store_.create("norm/var", {cfg_.obs_dim});
  store_.init_constant("norm/var", 1.0);
  store_.create("norm/count", {1});
  store_.init_constant("norm/count", 1e-4);
  // Self-describing checkpoint metadata.
  store_.create("meta/dims", {4});
  store_.get("meta/dims").v = {static_cast<double>(cfg_.obs_dim), static_cast<double>(cfg_.act_dim),
                               cfg_.normalize_obs ? 1.0 : 0.0, cfg_.obs_clip};
  store_.create("meta/hidden", {static_cast<int>(cfg_.hidden.size())});
  for (size_t i = 0; i < cfg_.hidden.size(); ++i)
    store_.get("meta/hidden").v[i] = static_cast<double>(cfg_.hidden[i]);
  build_wrappers();
}

GaussianPolicy::GaussianPolicy(nn::ParamStore store) : store_(std::move(store)) {
  if (!store_.has("meta/dims") || !store_.has("meta/hidden"))
    throw std::runtime_error("policy checkpoint: missing metadata");
  const Tensor& dims = store_.get("meta/dims");
  cfg_.obs_dim = static_cast<int>(dims.v[0]);
  cfg_.act_dim = static_cast<int>(dims.v[1]);
  cfg_.normalize_obs = dims.v[2] != 0.0;
  cfg_.obs_clip = dims.v[3];
  cfg_.hidden.clear();
  for (double h : store_.get("meta/hidden").v) cfg_.hidden.push_back(static_cast<int>(h));
  cfg_.init_noise_std = std::exp(store_.get("pi/log_std").v[0]);
  build_wrappers();
}

void GaussianPolicy::build_wrappers() {
  pi_ = wrap_mlp("pi", policy_sizes(cfg_));
  v_ = wrap_mlp("v", value_sizes(cfg_));
}

Tensor GaussianPolicy::normalize(const std::vector<std::vector<double>>& obs) const {
  int n = static_cast<int>(obs.size());
  Tensor out({n, cfg_.obs_dim});
  const Tensor& mean = store_.get("norm/mean");
  const Tensor& var = store_.get("norm/var");
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(obs[r].size()) != cfg_.obs_dim)
      throw std::invalid_argument("policy: observation dim mismatch");
    for (int c = 0; c < cfg_.obs_dim; ++c) {
      double x = obs[r][c];
      if (cfg_.normalize_obs)
        x = clamp((x - mean.v[c]) / std::sqrt(var.v[c] + 1e-8), -cfg_.obs_clip, cfg_.obs_clip);
      out.at(r, c) = x;
    }
  }
  return out;
}

void GaussianPolicy::update_norm(const std::vector<std::vector<double>>& obs) {
  if (!cfg_.normalize_obs || obs.empty()) return;
  Tensor& mean = store_.get("norm/mean");
  Tensor& var = store_.get("norm/var");
  Tensor& count = store_.get("norm/count");
  double n_b = static_cast<double>(obs.size());
  for (int c = 0; c < cfg_.obs_dim; ++c) {
    double m_b = 0.0;
    for (const auto& row : obs) m_b += row[c];
    m_b /= n_b;
    double s_b = 0.0;
    for (const auto& row : obs) s_b += (row[c] - m_b) * (row[c] - m_b);
    double n_a = count.v[0];
    double delta = m_b - mean.v[c];
    double tot = n_a + n_b;
    mean.v[c] += delta * n_b / tot;
    double m2 = var.v[c] * n_a + s_b + delta * delta * n_a * n_b / tot;
    var.v[c] = m2 / tot;
  }
  count.v[0] += n_b;
}

GaussianPolicy::ActOut GaussianPolicy::act(const std::vector<std::vector<double>>& obs, Rng& rng,
                                           bool stochastic) const {
  int n = static_cast<int>(obs.size());
  Tape tape(false);
  Tape::Var x = tape.leaf(normalize(obs));
  const Tensor& mean = tape.value(pi_(tape, const_cast<nn::ParamStore&>(store_), x));
  const Tensor& val = tape.value(v_(tape, const_cast<nn::ParamStore&>(store_), x));
  const Tensor& log_std = store_.get("pi/log_std");

  ActOut out;
  out.actions.assign(n, std::vector<double>(cfg_.act_dim));
  out.means.assign(n, std::vector<double>(cfg_.act_dim));
  out.log_probs.assign(n, 0.0);
  out.values.assign(n, 0.0);
  for (int r = 0; r < n; ++r) {
    double lp = -0.5 * cfg_.act_dim * kLog2Pi;
    for (int c = 0; c < cfg_.act_dim; ++c) {
      double mu = mean.at(r, c);
      double sigma = std::exp(log_std.v[c]);
      double a = stochastic ? mu + sigma * rng.normal() : mu;
      out.actions[r][c] = a;
      out.means[r][c] = mu;
      double z = (a - mu) / sigma;
      lp += -0.5 * z * z - log_std.v[c];
    }
    out.log_probs[r] = lp;
    out.values[r] = val.at(r, 0);
  }
  return out;
}

std::vector<double> GaussianPolicy::value(const std::vector<std::vector<double>>& obs) const {
  Tape tape(false);
  Tape::Var x = tape.leaf(normalize(obs));
  const Tensor& val = tape.value(v_(tape, const_cast<nn::ParamStore&>(store_), x));
  std::vector<double> out(obs.size());
  for (size_t r = 0; r < obs.size(); ++r) out[r] = val.at(static_cast<int>(r), 0);
  return out;
}

GaussianPolicy::EvalVars GaussianPolicy::evaluate(Tape& tape, const Tensor& norm_obs,
                                                  const std::vector<std::vector<double>>& actions) {
  int n = norm_obs.rows();
  Tensor act({n, cfg_.act_dim});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < cfg_.act_dim; ++c) act.at(r, c) = actions[r][c];

  Tape::Var x = tape.leaf(norm_obs);
  Tape::Var mean = pi_(tape, store_, x);
  Tape::Var log_std = tape.param(store_, "pi/log_std");
  Tape::Var inv_std = tape.exp_act(tape.scale(log_std, -1.0));
  Tape::Var diff = tape.sub(tape.leaf(std::move(act)), mean);
  Tape::Var z = tape.mul_row_broadcast(diff, inv_std);
  Tape::Var z2 = tape.sum_per_row(tape.square(z));
  Tape::Var sum_log_std = tape.sum_all(log_std);
  Tape::Var lp = tape.add_scalar_broadcast(tape.scale(z2, -0.5), tape.scale(sum_log_std, -1.0));
  lp = tape.add_const(lp, -0.5 * cfg_.act_dim * kLog2Pi);
  Tape::Var value = v_(tape, store_, x);
  return {lp, value, mean, log_std};
}

std::vector<double> GaussianPolicy::log_std() const { return store_.get("pi/log_std").v; }

double GaussianPolicy::entropy() const {
  double e = 0.5 * cfg_.act_dim * (1.0 + kLog2Pi);
  for (double ls : store_.get("pi/log_std").v) e += ls;
  return e;
}

void GaussianPolicy::save(const std::string& path) const { nn::save_checkpoint(store_, path); }

GaussianPolicy GaussianPolicy::load(const std::string& path) {
  return GaussianPolicy(nn::load_checkpoint(path));
}

}  // namespace pushgrasp::ppo
