#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace deepair {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. A Tensor is a plain value; gradient
// tracking lives in Variable (see tape.hpp).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double item() const;

  // Same data, different shape; numel must match.
  Tensor reshaped(Shape shape) const;

  void fill(double value);
  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace deepair
