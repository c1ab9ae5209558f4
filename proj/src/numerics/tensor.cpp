#include "deepair/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace deepair {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty()) throw std::invalid_argument("Tensor: empty shape");
  for (auto d : shape_) {
    if (d == 0) throw std::invalid_argument("Tensor: zero dimension in " + shape_string(shape_));
  }
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw std::invalid_argument("Tensor: empty shape");
  for (auto d : shape_) {
    if (d == 0) throw std::invalid_argument("Tensor: zero dimension in " + shape_string(shape_));
  }
  if (shape_numel(shape_) != data_.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_string(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }
}

double Tensor::item() const {
  if (data_.size() != 1) throw std::invalid_argument("Tensor::item on shape " + shape_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw std::invalid_argument("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

}  // namespace deepair
