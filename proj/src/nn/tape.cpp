#include "pushgrasp/nn/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <memory>
#include <cmath>
#include <stdexcept>

namespace pushgrasp::nn {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string("nn op '") + op + "': shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
}

[[noreturn]] void shape_error1(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string("nn op '") + op + "': bad shape " + a.shape_str());
}

}  // namespace

Tape::Node& Tape::node(int id) { return nodes_.at(static_cast<size_t>(id)); }
const Tape::Node& Tape::node(int id) const { return nodes_.at(static_cast<size_t>(id)); }

Tape::Var Tape::push(Tensor val, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(val);
  if (grad_enabled_) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
  Node& n = node(id);
  if (n.grad.v.empty()) n.grad = Tensor(n.val.shape);
  return n.grad;
}

const Tensor& Tape::grad_of(Var v) const {
  const Node& n = node(v.id);
  if (n.grad.v.empty()) throw std::logic_error("grad_of: no gradient (backward not run?)");
  return n.grad;
}

void Tape::check_2d(Var v, const char* op) const {
  if (node(v.id).val.shape.size() != 2) shape_error1(op, node(v.id).val);
}

Tape::Var Tape::leaf(Tensor value) { return push(std::move(value)); }

Tape::Var Tape::param(ParamStore& store, const std::string& name) {
  Node n;
  n.val = store.get(name);
  n.store = &store;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::matmul(Var a, Var b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(b.id).val;
  if (ta.cols() != tb.rows()) shape_error("matmul", ta, tb);
  Tensor val({ta.rows(), tb.cols()});
  MMap(val.v.data(), ta.rows(), tb.cols()).noalias() =
      CMap(ta.v.data(), ta.rows(), ta.cols()) * CMap(tb.v.data(), tb.rows(), tb.cols());
  Var out = push(std::move(val), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    const Tensor& vb = t.node(b.id).val;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    CMap mg(g.v.data(), g.rows(), g.cols());
    MMap(ga.v.data(), va.rows(), va.cols()).noalias() +=
        mg * CMap(vb.v.data(), vb.rows(), vb.cols()).transpose();
    MMap(gb.v.data(), vb.rows(), vb.cols()).noalias() +=
        CMap(va.v.data(), va.rows(), va.cols()).transpose() * mg;
  });
  return out;
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  check_2d(a, "matmul_nt");
  check_2d(b, "matmul_nt");
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(b.id).val;
  if (ta.cols() != tb.cols()) shape_error("matmul_nt", ta, tb);
  Tensor val({ta.rows(), tb.rows()});
  MMap(val.v.data(), ta.rows(), tb.rows()).noalias() =
      CMap(ta.v.data(), ta.rows(), ta.cols()) * CMap(tb.v.data(), tb.rows(), tb.cols()).transpose();
  Var out = push(std::move(val), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    const Tensor& vb = t.node(b.id).val;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    CMap mg(g.v.data(), g.rows(), g.cols());
    MMap(ga.v.data(), va.rows(), va.cols()).noalias() +=
        mg * CMap(vb.v.data(), vb.rows(), vb.cols());
    MMap(gb.v.data(), vb.rows(), vb.cols()).noalias() +=
        mg.transpose() * CMap(va.v.data(), va.rows(), va.cols());
  });
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(b.id).val;
  if (!ta.same_shape(tb)) shape_error("add", ta, tb);
  Tensor val = ta;
  for (int64_t i = 0; i < val.size(); ++i) val.v[i] += tb.v[i];
  return push(std::move(val), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.v[i] += g.v[i];
      gb.v[i] += g.v[i];
    }
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(b.id).val;
  if (!ta.same_shape(tb)) shape_error("sub", ta, tb);
  Tensor val = ta;
  for (int64_t i = 0; i < val.size(); ++i) val.v[i] -= tb.v[i];
  return push(std::move(val), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.v[i] += g.v[i];
      gb.v[i] -= g.v[i];
    }
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(b.id).val;
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Tensor val = ta;
  for (int64_t i = 0; i < val.size(); ++i) val.v[i] *= tb.v[i];
  return push(std::move(val), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    const Tensor& vb = t.node(b.id).val;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.v[i] += g.v[i] * vb.v[i];
      gb.v[i] += g.v[i] * va.v[i];
    }
  });
}

Tape::Var Tape::add_row_broadcast(Var a, Var bias) {
  check_2d(a, "add_row_broadcast");
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(bias.id).val;
  if (tb.shape.size() != 1 || tb.shape[0] != ta.cols()) shape_error("add_row_broadcast", ta, tb);
  Tensor val = ta;
  for (int r = 0; r < ta.rows(); ++r)
    for (int c = 0; c < ta.cols(); ++c) val.at(r, c) += tb.v[c];
  return push(std::move(val), [a, bias, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(bias.id);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) {
        ga.at(r, c) += g.at(r, c);
        gb.v[c] += g.at(r, c);
      }
  });
}

Tape::Var Tape::mul_row_broadcast(Var a, Var s) {
  check_2d(a, "mul_row_broadcast");
  const Tensor& ta = node(a.id).val;
  const Tensor& ts = node(s.id).val;
  if (ts.shape.size() != 1 || ts.shape[0] != ta.cols()) shape_error("mul_row_broadcast", ta, ts);
  Tensor val = ta;
  for (int r = 0; r < ta.rows(); ++r)
    for (int c = 0; c < ta.cols(); ++c) val.at(r, c) *= ts.v[c];
  return push(std::move(val), [a, s, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    const Tensor& vs = t.node(s.id).val;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gs = t.grad_buf(s.id);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) {
        ga.at(r, c) += g.at(r, c) * vs.v[c];
        gs.v[c] += g.at(r, c) * va.at(r, c);
      }
  });
}

Tape::Var Tape::add_scalar_broadcast(Var a, Var scalar) {
  const Tensor& ta = node(a.id).val;
  const Tensor& ts = node(scalar.id).val;
  if (ts.size() != 1) shape_error1("add_scalar_broadcast", ts);
  Tensor val = ta;
  for (double& x : val.v) x += ts.v[0];
  return push(std::move(val), [a, scalar, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gs = t.grad_buf(scalar.id);
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.v[i] += g.v[i];
      gs.v[0] += g.v[i];
    }
  });
}

Tape::Var Tape::scale(Var a, double s) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x *= s;
  return push(std::move(val), [a, s, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += s * g.v[i];
  });
}

Tape::Var Tape::add_const(Var a, double c) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x += c;
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
  });
}

Tape::Var Tape::relu(Var a) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x = x > 0.0 ? x : 0.0;
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += va.v[i] > 0.0 ? g.v[i] : 0.0;
  });
}

Tape::Var Tape::tanh_act(Var a) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x = std::tanh(x);
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& y = t.node(self).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
  });
}

Tape::Var Tape::exp_act(Var a) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x = std::exp(x);
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& y = t.node(self).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * y.v[i];
  });
}

Tape::Var Tape::log_act(Var a) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) {
    if (x <= 0.0) throw std::domain_error("nn op 'log': non-positive input");
    x = std::log(x);
  }
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] / va.v[i];
  });
}

Tape::Var Tape::square(Var a) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x = x * x;
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += 2.0 * va.v[i] * g.v[i];
  });
}

Tape::Var Tape::abs_act(Var a) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x = std::abs(x);
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i)
      ga.v[i] += va.v[i] > 0.0 ? g.v[i] : (va.v[i] < 0.0 ? -g.v[i] : 0.0);
  });
}

Tape::Var Tape::clamp(Var a, double lo, double hi) {
  Tensor val = node(a.id).val;
  for (double& x : val.v) x = pushgrasp::clamp(x, lo, hi);
  return push(std::move(val), [a, lo, hi, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i)
      if (va.v[i] >= lo && va.v[i] <= hi) ga.v[i] += g.v[i];
  });
}

Tape::Var Tape::min_elem(Var a, Var b) {
  const Tensor& ta = node(a.id).val;
  const Tensor& tb = node(b.id).val;
  if (!ta.same_shape(tb)) shape_error("min_elem", ta, tb);
  Tensor val = ta;
  for (int64_t i = 0; i < val.size(); ++i) val.v[i] = std::min(ta.v[i], tb.v[i]);
  return push(std::move(val), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& va = t.node(a.id).val;
    const Tensor& vb = t.node(b.id).val;
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    for (int64_t i = 0; i < g.size(); ++i) {
      if (va.v[i] <= vb.v[i]) ga.v[i] += g.v[i];
      else gb.v[i] += g.v[i];
    }
  });
}

Tape::Var Tape::softmax_rows(Var a) {
  check_2d(a, "softmax_rows");
  Tensor val = node(a.id).val;
  int m = val.rows(), n = val.cols();
  for (int r = 0; r < m; ++r) {
    double mx = val.at(r, 0);
    for (int c = 1; c < n; ++c) mx = std::max(mx, val.at(r, c));
    double denom = 0.0;
    for (int c = 0; c < n; ++c) denom += std::exp(val.at(r, c) - mx);
    for (int c = 0; c < n; ++c) val.at(r, c) = std::exp(val.at(r, c) - mx) / denom;
  }
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& y = t.node(self).val;
    Tensor& ga = t.grad_buf(a.id);
    int m = y.rows(), n = y.cols();
    for (int r = 0; r < m; ++r) {
      double dot = 0.0;
      for (int c = 0; c < n; ++c) dot += g.at(r, c) * y.at(r, c);
      for (int c = 0; c < n; ++c) ga.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
    }
  });
}

Tape::Var Tape::layer_norm_rows(Var a, Var gain, Var bias, double eps) {
  check_2d(a, "layer_norm_rows");
  const Tensor& ta = node(a.id).val;
  const Tensor& tg = node(gain.id).val;
  const Tensor& tb = node(bias.id).val;
  int m = ta.rows(), n = ta.cols();
  if (tg.shape.size() != 1 || tg.shape[0] != n) shape_error("layer_norm_rows", ta, tg);
  if (tb.shape.size() != 1 || tb.shape[0] != n) shape_error("layer_norm_rows", ta, tb);
  Tensor val({m, n});
  for (int r = 0; r < m; ++r) {
    double mean = 0.0;
    for (int c = 0; c < n; ++c) mean += ta.at(r, c);
    mean /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) {
      double d = ta.at(r, c) - mean;
      var += d * d;
    }
    var /= n;
    double inv = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < n; ++c) val.at(r, c) = tg.v[c] * (ta.at(r, c) - mean) * inv + tb.v[c];
  }
  return push(std::move(val), [a, gain, bias, eps, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    const Tensor& x = t.node(a.id).val;
    const Tensor& gn = t.node(gain.id).val;
    Tensor& gx = t.grad_buf(a.id);
    Tensor& gg = t.grad_buf(gain.id);
    Tensor& gb = t.grad_buf(bias.id);
    int m = x.rows(), n = x.cols();
    for (int r = 0; r < m; ++r) {
      double mean = 0.0;
      for (int c = 0; c < n; ++c) mean += x.at(r, c);
      mean /= n;
      double var = 0.0;
      for (int c = 0; c < n; ++c) {
        double d = x.at(r, c) - mean;
        var += d * d;
      }
      var /= n;
      double inv = 1.0 / std::sqrt(var + eps);
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (int c = 0; c < n; ++c) {
        double xhat = (x.at(r, c) - mean) * inv;
        double dxhat = g.at(r, c) * gn.v[c];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        gg.v[c] += g.at(r, c) * xhat;
        gb.v[c] += g.at(r, c);
      }
      for (int c = 0; c < n; ++c) {
        double xhat = (x.at(r, c) - mean) * inv;
        double dxhat = g.at(r, c) * gn.v[c];
        gx.at(r, c) += inv * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
      }
    }
  });
}

Tape::Var Tape::dropout(Var a, double p, Rng& rng, bool train) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0,1)");
  const Tensor& ta = node(a.id).val;
  if (!train || p == 0.0) {
    Tensor val = ta;
    return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
      const Tensor& g = t.node(self).grad;
      Tensor& ga = t.grad_buf(a.id);
      for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
    });
  }
  auto mask = std::make_shared<std::vector<double>>(ta.v.size());
  double keep = 1.0 - p;
  Tensor val = ta;
  for (size_t i = 0; i < val.v.size(); ++i) {
    (*mask)[i] = rng.uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    val.v[i] *= (*mask)[i];
  }
  return push(std::move(val), [a, mask, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * (*mask)[i];
  });
}

Tape::Var Tape::col_slice(Var a, int start, int len) {
  check_2d(a, "col_slice");
  const Tensor& ta = node(a.id).val;
  if (start < 0 || len <= 0 || start + len > ta.cols()) shape_error1("col_slice", ta);
  Tensor val({ta.rows(), len});
  for (int r = 0; r < ta.rows(); ++r)
    for (int c = 0; c < len; ++c) val.at(r, c) = ta.at(r, start + c);
  return push(std::move(val), [a, start, len, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < len; ++c) ga.at(r, start + c) += g.at(r, c);
  });
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  int m = node(parts[0].id).val.rows();
  int total = 0;
  for (Var p : parts) {
    check_2d(p, "concat_cols");
    if (node(p.id).val.rows() != m) shape_error("concat_cols", node(parts[0].id).val, node(p.id).val);
    total += node(p.id).val.cols();
  }
  Tensor val({m, total});
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = node(p.id).val;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < tp.cols(); ++c) val.at(r, off + c) = tp.at(r, c);
    off += tp.cols();
  }
  auto parts_copy = parts;
  return push(std::move(val), [parts_copy, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    int off = 0;
    for (Var p : parts_copy) {
      Tensor& gp = t.grad_buf(p.id);
      for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < gp.cols(); ++c) gp.at(r, c) += g.at(r, off + c);
      off += gp.cols();
    }
  });
}

Tape::Var Tape::reshape(Var a, std::vector<int> new_shape) {
  const Tensor& ta = node(a.id).val;
  if (shape_numel(new_shape) != ta.size()) shape_error1("reshape", ta);
  Tensor val = ta;
  val.shape = std::move(new_shape);
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
  });
}

Tape::Var Tape::row_mean(Var a) {
  check_2d(a, "row_mean");
  const Tensor& ta = node(a.id).val;
  int m = ta.rows(), n = ta.cols();
  Tensor val({1, n});
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += ta.at(r, c);
    val.at(0, c) = s / m;
  }
  return push(std::move(val), [a, m, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < g.cols(); ++c) ga.at(r, c) += g.at(0, c) / m;
  });
}

Tape::Var Tape::row_max(Var a) {
  check_2d(a, "row_max");
  const Tensor& ta = node(a.id).val;
  int m = ta.rows(), n = ta.cols();
  auto argmax = std::make_shared<std::vector<int>>(n, 0);
  Tensor val({1, n});
  for (int c = 0; c < n; ++c) {
    double best = ta.at(0, c);
    int bi = 0;
    for (int r = 1; r < m; ++r)
      if (ta.at(r, c) > best) {
        best = ta.at(r, c);
        bi = r;
      }
    val.at(0, c) = best;
    (*argmax)[c] = bi;
  }
  return push(std::move(val), [a, argmax, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int c = 0; c < g.cols(); ++c) ga.at((*argmax)[c], c) += g.at(0, c);
  });
}

Tape::Var Tape::sum_per_row(Var a) {
  check_2d(a, "sum_per_row");
  const Tensor& ta = node(a.id).val;
  int m = ta.rows(), n = ta.cols();
  Tensor val({m, 1});
  for (int r = 0; r < m; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += ta.at(r, c);
    val.at(r, 0) = s;
  }
  return push(std::move(val), [a, n, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < n; ++c) ga.at(r, c) += g.at(r, 0);
  });
}

Tape::Var Tape::sum_all(Var a) {
  const Tensor& ta = node(a.id).val;
  double s = 0.0;
  for (double x : ta.v) s += x;
  Tensor val({1});
  val.v[0] = s;
  return push(std::move(val), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < ga.size(); ++i) ga.v[i] += g.v[0];
  });
}

Tape::Var Tape::mean_all(Var a) {
  const Tensor& ta = node(a.id).val;
  int64_t n = ta.size();
  if (n == 0) shape_error1("mean_all", ta);
  double s = 0.0;
  for (double x : ta.v) s += x;
  Tensor val({1});
  val.v[0] = s / n;
  return push(std::move(val), [a, n, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.node(self).grad;
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < ga.size(); ++i) ga.v[i] += g.v[0] / n;
  });
}

void Tape::backward(Var scalar_out) {
  if (!grad_enabled_) throw std::logic_error("backward: tape built with grad disabled");
  if (backward_done_) throw std::logic_error("backward: called twice on one tape");
  backward_done_ = true;
  Node& out = node(scalar_out.id);
  if (out.val.size() != 1) throw std::invalid_argument("backward: output must be scalar");
  grad_buf(scalar_out.id).v[0] = 1.0;
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = node(id);
    if (n.grad.v.empty()) continue;  // no gradient flowed here
    if (n.back) n.back(*this);
    if (n.store) {
      Tensor& g = n.store->grad(n.param_name);
      for (int64_t i = 0; i < g.size(); ++i) g.v[i] += n.grad.v[i];
    }
  }
}

}  // namespace pushgrasp::nn
