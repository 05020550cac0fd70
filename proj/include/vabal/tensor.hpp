#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vabal {

/// Dense n-dimensional array of doubles in row-major order. Tensors marked
/// requires_grad own a same-shaped gradient buffer that optimizers consume.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shp, std::vector<double> values, bool req_grad = false);

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
  static Tensor scalar(double value);

  std::size_t size() const { return data.size(); }
  /// 2-d views: a 1-d tensor counts as one row.
  std::size_t rows() const;
  std::size_t cols() const;

  void zero_grad();
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace vabal
