#ifndef PUSHGRASP_NN_TENSOR_HPP_
#define PUSHGRASP_NN_TENSOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace pushgrasp::nn {

// Dense row-major tensor of doubles. Rank is almost always 1 or 2 here.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_in);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor row(const std::vector<double>& values);  // [1, n]
  static Tensor vec(const std::vector<double>& values);  // [n]

  int64_t size() const { return static_cast<int64_t>(v.size()); }
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool finite() const;
  std::string shape_str() const;
};

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace pushgrasp::nn

#endif  // PUSHGRASP_NN_TENSOR_HPP_
