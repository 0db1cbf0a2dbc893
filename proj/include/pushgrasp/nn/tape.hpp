#ifndef PUSHGRASP_NN_TAPE_HPP_
#define PUSHGRASP_NN_TAPE_HPP_

#include <deque>
#include <functional>
#include <vector>

#include "pushgrasp/common.hpp"
#include "pushgrasp/nn/optim.hpp"
#include "pushgrasp/nn/tensor.hpp"

namespace pushgrasp::nn {

// Dynamic computation tape. Ops execute eagerly; each records a backward
// closure. One backward() per tape; gradients of param leaves accumulate
// into their ParamStore. With grad disabled the tape is a plain evaluator.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Var leaf(Tensor value);                                    // constant input
  Var param(ParamStore& store, const std::string& name);     // trainable leaf

  const Tensor& value(Var v) const { return node(v.id).val; }
  const Tensor& grad_of(Var v) const;

  // --- linear algebra ---
  Var matmul(Var a, Var b);     // [m,k] x [k,n]
  Var matmul_nt(Var a, Var b);  // [m,k] x [n,k]^T -> [m,n]

  // --- elementwise and broadcast ---
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_row_broadcast(Var a, Var bias);  // [m,n] + [n] per row
  Var mul_row_broadcast(Var a, Var s);     // [m,n] * [n] per row
  Var add_scalar_broadcast(Var a, Var scalar);  // a + s, scalar shape [1]
  Var scale(Var a, double s);
  Var add_const(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }
  Var relu(Var a);
  Var tanh_act(Var a);
  Var exp_act(Var a);
  Var log_act(Var a);  // requires strictly positive values
  Var square(Var a);
  Var abs_act(Var a);
  Var clamp(Var a, double lo, double hi);  // pass-through grad inside the band
  Var min_elem(Var a, Var b);

  // --- rows/cols structure ---
  Var softmax_rows(Var a);
  Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5);
  Var dropout(Var a, double p, Rng& rng, bool train);
  Var col_slice(Var a, int start, int len);
  Var concat_cols(const std::vector<Var>& parts);
  Var reshape(Var a, std::vector<int> new_shape);
  Var row_mean(Var a);  // [m,n] -> [1,n]
  Var row_max(Var a);   // [m,n] -> [1,n]
  Var sum_per_row(Var a);  // [m,n] -> [m,1]

  // --- reductions ---
  Var sum_all(Var a);   // -> [1]
  Var mean_all(Var a);  // -> [1]

  void backward(Var scalar_out);
  bool grad_enabled() const { return grad_enabled_; }
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily on backward
    std::function<void(Tape&)> back;
    ParamStore* store = nullptr;  // param leaves accumulate here
    std::string param_name;
  };

  Node& node(int id);
  const Node& node(int id) const;
  Var push(Tensor val, std::function<void(Tape&)> back = nullptr);
  Tensor& grad_buf(int id);
  void check_2d(Var v, const char* op) const;

  std::deque<Node> nodes_;  // deque: node references stay valid as the tape grows
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

}  // namespace pushgrasp::nn

#endif  // PUSHGRASP_NN_TAPE_HPP_
