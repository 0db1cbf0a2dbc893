#include "pushgrasp/nn/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace pushgrasp::nn {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("tensor: negative dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
  v.assign(shape_numel(shape), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (double& x : t.v) x = value;
  return t;
}

Tensor Tensor::row(const std::vector<double>& values) {
  Tensor t({1, static_cast<int>(values.size())});
  t.v = values;
  return t;
}

Tensor Tensor::vec(const std::vector<double>& values) {
  Tensor t({static_cast<int>(values.size())});
  t.v = values;
  return t;
}

int Tensor::rows() const {
  if (shape.size() != 2) throw std::logic_error("tensor: rows() on non-2d tensor " + shape_str());
  return shape[0];
}

int Tensor::cols() const {
  if (shape.size() != 2) throw std::logic_error("tensor: cols() on non-2d tensor " + shape_str());
  return shape[1];
}

double& Tensor::at(int r, int c) { return v[static_cast<size_t>(r) * cols() + c]; }
double Tensor::at(int r, int c) const { return v[static_cast<size_t>(r) * cols() + c]; }

bool Tensor::finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

}  // namespace pushgrasp::nn
