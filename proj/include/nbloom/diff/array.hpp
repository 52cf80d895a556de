#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nbloom::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major real array. Every dimension is positive; a scalar has an
// empty shape and one value.
class Array {
 public:
  Array() : values_(1, 0.0) {}
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> values);

  static Array scalar(double v) { return Array(Shape{}, std::vector<double>{v}); }
  static Array vector(std::vector<double> v);
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  // Length of the last axis (1 for scalars).
  std::size_t last_dim() const noexcept { return shape_.empty() ? 1 : shape_.back(); }
  // Product of all axes but the last.
  std::size_t outer_size() const noexcept { return size() / last_dim(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }
  const std::vector<double>& storage() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * last_dim() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * last_dim() + c]; }
  double item() const;

  std::span<double> row(std::size_t r) { return {values_.data() + r * last_dim(), last_dim()}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * last_dim(), last_dim()};
  }

  bool all_finite() const noexcept;
  void fill(double v);
  Array reshaped(Shape shape) const;

  bool operator==(const Array& other) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

double max_abs_diff(const Array& a, const Array& b);
double frobenius_norm(const Array& a);

}  // namespace nbloom::diff
