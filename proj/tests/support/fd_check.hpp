#ifndef PUSHGRASP_TESTS_FD_CHECK_HPP_
#define PUSHGRASP_TESTS_FD_CHECK_HPP_

#include <functional>
#include <string>

#include "pushgrasp/nn/tape.hpp"

namespace pushgrasp::testsupport {

struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int checked = 0;
};

// Central finite differences over every parameter element against the tape's
// analytic gradients. build must construct a scalar output from the store's
// parameters and be deterministic.
inline FdReport fd_check(nn::ParamStore& store,
                         const std::function<nn::Tape::Var(nn::Tape&)>& build, double eps = 1e-5,
                         int max_elems_per_param = 0) {
  using nn::Tape;
  store.zero_grads();
  {
    Tape tape(true);
    Tape::Var out = build(tape);
    tape.backward(out);
  }
  std::map<std::string, nn::Tensor> analytic;
  for (const auto& name : store.names()) analytic[name] = store.grad(name);

  auto eval = [&]() {
    Tape tape(false);
    return tape.value(build(tape)).v[0];
  };

  FdReport rep;
  for (const auto& name : store.names()) {
    nn::Tensor& t = store.get(name);
    int64_t n = t.size();
    int64_t stride = 1;
    if (max_elems_per_param > 0 && n > max_elems_per_param) stride = n / max_elems_per_param;
    for (int64_t i = 0; i < n; i += stride) {
      double saved = t.v[i];
      t.v[i] = saved + eps;
      double fp = eval();
      t.v[i] = saved - eps;
      double fm = eval();
      t.v[i] = saved;
      double fd = (fp - fm) / (2.0 * eps);
      double an = analytic[name].v[i];
      double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

}  // namespace pushgrasp::testsupport

#endif  // PUSHGRASP_TESTS_FD_CHECK_HPP_
