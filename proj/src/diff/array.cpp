#include "nbloom/diff/array.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nbloom/error.hpp"

namespace nbloom::diff {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void check_dims(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw Error("array shape " + shape_string(shape) + " has a zero dimension");
  }
}

}  // namespace

Array::Array(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  values_.assign(shape_size(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_dims(shape_);
  if (shape_size(shape_) != values_.size()) {
    throw Error("array shape " + shape_string(shape_) + " does not match " +
                std::to_string(values_.size()) + " values");
  }
}

Array Array::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Array(Shape{n}, std::move(v));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Array(Shape{rows, cols}, std::move(v));
}

double Array::item() const {
  if (values_.size() != 1) {
    throw Error("item() called on array of shape " + shape_string(shape_));
  }
  return values_[0];
}

bool Array::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Array::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Array Array::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size()) {
    throw Error("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Array(std::move(shape), values_);
}

double max_abs_diff(const Array& a, const Array& b) {
  if (a.shape() != b.shape()) {
    throw Error("max_abs_diff shape mismatch " + shape_string(a.shape()) + " vs " +
                shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double frobenius_norm(const Array& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace nbloom::diff
