#ifndef PUSHGRASP_NN_OPTIM_HPP_
#define PUSHGRASP_NN_OPTIM_HPP_

#include <map>
#include <string>

#include "pushgrasp/common.hpp"
#include "pushgrasp/nn/tensor.hpp"

namespace pushgrasp::nn {

// Named parameter collection with gradient buffers and adaptive-moment
// optimizer state. Names are unique; iteration order is lexicographic, which
// makes serialization and the optimizer sweep deterministic.
class ParamStore {
 public:
  Tensor& create(const std::string& name, std::vector<int> shape);
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  Tensor& grad(const std::string& name);
  void zero_grads();

  std::vector<std::string> names() const;  // sorted
  int64_t total_parameters() const;

  struct Slot {
    Tensor value;
    Tensor grad;
    Tensor m;  // first moment
    Tensor s;  // second moment
  };
  const std::map<std::string, Slot>& slots() const { return params_; }
  std::map<std::string, Slot>& slots_mutable() { return params_; }

  int64_t step_count = 0;

  // Initializers.
  void init_uniform_fan_in(const std::string& name, Rng& rng);   // U(-1/sqrt(fan_in), +)
  void init_orthogonal(const std::string& name, Rng& rng, double gain);
  void init_constant(const std::string& name, double value);

 private:
  std::map<std::string, Slot> params_;
};

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One adaptive-moment update over all parameters; rejects non-finite grads.
void adam_step(ParamStore& store, const AdamConfig& cfg);

double grad_norm(const ParamStore& store);
// Scales gradients so the global norm is at most max_norm; returns the norm
// before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

}  // namespace pushgrasp::nn

#endif  // PUSHGRASP_NN_OPTIM_HPP_
