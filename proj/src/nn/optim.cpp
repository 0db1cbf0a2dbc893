#include "pushgrasp/nn/optim.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace pushgrasp::nn {

Tensor& ParamStore::create(const std::string& name, std::vector<int> shape) {
  if (has(name)) throw std::invalid_argument("param store: duplicate name " + name);
  Slot slot;
  slot.value = Tensor(shape);
  slot.grad = Tensor(shape);
  slot.m = Tensor(shape);
  slot.s = Tensor(std::move(shape));
  auto [it, ok] = params_.emplace(name, std::move(slot));
  (void)ok;
  return it->second.value;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("param store: unknown name " + name);
  return it->second.value;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("param store: unknown name " + name);
  return it->second.value;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("param store: unknown name " + name);
  return it->second.grad;
}

void ParamStore::zero_grads() {
  for (auto& [_, slot] : params_)
    for (double& g : slot.grad.v) g = 0.0;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

int64_t ParamStore::total_parameters() const {
  int64_t n = 0;
  for (const auto& [_, slot] : params_) n += slot.value.size();
  return n;
}

void ParamStore::init_uniform_fan_in(const std::string& name, Rng& rng) {
  Tensor& t = get(name);
  int fan_in = t.shape.size() == 2 ? t.shape[0] : static_cast<int>(t.size());
  double bound = 1.0 / std::sqrt(std::max(fan_in, 1));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
}

void ParamStore::init_orthogonal(const std::string& name, Rng& rng, double gain) {
  Tensor& t = get(name);
  if (t.shape.size() != 2) throw std::invalid_argument("orthogonal init needs a matrix: " + name);
  int r = t.shape[0], c = t.shape[1];
  int big = std::max(r, c), small = std::min(r, c);
  Eigen::MatrixXd a(big, small);
  for (int i = 0; i < big; ++i)
    for (int j = 0; j < small; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  Eigen::MatrixXd rmat = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (rmat(j, j) < 0) q.col(j) *= -1.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t.at(i, j) = gain * (r >= c ? q(i, j) : q(j, i));
}

void ParamStore::init_constant(const std::string& name, double value) {
  Tensor& t = get(name);
  for (double& x : t.v) x = value;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  for (auto& [name, slot] : store.slots_mutable()) {
    for (double g : slot.grad.v)
      if (!std::isfinite(g)) throw std::runtime_error("adam: non-finite gradient in " + name);
  }
  store.step_count += 1;
  double t = static_cast<double>(store.step_count);
  double bc1 = 1.0 - std::pow(cfg.beta1, t);
  double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [_, slot] : store.slots_mutable()) {
    for (int64_t i = 0; i < slot.value.size(); ++i) {
      double g = slot.grad.v[i];
      slot.m.v[i] = cfg.beta1 * slot.m.v[i] + (1.0 - cfg.beta1) * g;
      slot.s.v[i] = cfg.beta2 * slot.s.v[i] + (1.0 - cfg.beta2) * g * g;
      double mhat = slot.m.v[i] / bc1;
      double shat = slot.s.v[i] / bc2;
      slot.value.v[i] -= cfg.lr * mhat / (std::sqrt(shat) + cfg.eps);
    }
  }
}

double grad_norm(const ParamStore& store) {
  double s = 0.0;
  for (const auto& [_, slot] : store.slots())
    for (double g : slot.grad.v) s += g * g;
  return std::sqrt(s);
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  double n = grad_norm(store);
  if (n > max_norm && n > 0.0) {
    double scale = max_norm / n;
    for (auto& [_, slot] : store.slots_mutable())
      for (double& g : slot.grad.v) g *= scale;
  }
  return n;
}

}  // namespace pushgrasp::nn
