#include "vabal/tensor.hpp"

#include <algorithm>

#include "vabal/error.hpp"

namespace vabal {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shp, std::vector<double> values, bool req_grad)
    : shape(std::move(shp)), data(std::move(values)), requires_grad(req_grad) {
  if (shape.empty() || shape_numel(shape) != data.size())
    throw ShapeError("Tensor: data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("Tensor: zero dimension in shape " + shape_str(shape));
  if (requires_grad) grad.assign(data.size(), 0.0);
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::rows() const { return shape.size() >= 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
  return shape.size() >= 2 ? shape[shape.size() - 1] : shape.at(0);
}

void Tensor::zero_grad() {
  grad.assign(data.size(), 0.0);
}

}  // namespace vabal
