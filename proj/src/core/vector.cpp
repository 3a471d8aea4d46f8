#include "snorelab/core/vector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snorelab {

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t got, const std::string& where)
    : std::invalid_argument(where + ": dimension mismatch (expected " + std::to_string(expected) +
                            ", got " + std::to_string(got) + ")") {}

Vector::Vector(std::size_t dim, double fill) : data_(dim, fill) {
  if (!std::isfinite(fill)) throw std::invalid_argument("Vector: non-finite fill value");
}

Vector::Vector(std::vector<double> values) : data_(std::move(values)) {
  if (!all_finite()) throw NonFiniteError("Vector: non-finite entry");
}

Vector::Vector(std::vector<double> values, Shape shape) : Vector(std::move(values)) {
  set_shape(shape);
}

Vector::Vector(std::initializer_list<double> values) : Vector(std::vector<double>(values)) {}

void Vector::set_shape(Shape shape) {
  if (shape.size() != data_.size()) {
    throw std::invalid_argument("Vector: shape " + std::to_string(shape.height) + "x" +
                                std::to_string(shape.width) + " does not match dim " +
                                std::to_string(data_.size()));
  }
  shape_ = shape;
}

Vector Vector::with_shape(Shape shape) const {
  Vector out = *this;
  out.set_shape(shape);
  return out;
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(*this, other, "Vector::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dim(*this, other, "Vector::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Vector& Vector::operator/=(double s) noexcept {
  for (double& v : data_) v /= s;
  return *this;
}

Vector& Vector::axpy(double s, const Vector& other) {
  require_same_dim(*this, other, "Vector::axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

double Vector::dot(const Vector& other) const {
  require_same_dim(*this, other, "Vector::dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) acc += data_[i] * other.data_[i];
  return acc;
}

double Vector::squared_norm() const noexcept {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return acc;
}

double Vector::norm() const noexcept { return std::sqrt(squared_norm()); }

double Vector::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Vector::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Vector::require_finite(const char* where) const {
  if (!all_finite()) throw NonFiniteError(std::string(where) + ": non-finite state");
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(Vector a, double s) { return a *= s; }
Vector operator*(double s, Vector a) { return a *= s; }
Vector operator/(Vector a, double s) { return a /= s; }

void require_same_dim(const Vector& a, const Vector& b, const std::string& where) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size(), where);
}

}  // namespace snorelab
