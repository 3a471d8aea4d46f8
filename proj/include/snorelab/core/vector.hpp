#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace snorelab {

/// Image interpretation of a flat vector, row-major.
struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got, const std::string& where);
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat real-valued state of dimension d.
///
/// Construction rejects NaN/Inf entries. In-place arithmetic does not re-check
/// every entry; callers that produce new iterates call `require_finite()`.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0);
  explicit Vector(std::vector<double> values);
  Vector(std::vector<double> values, Shape shape);
  Vector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  const std::optional<Shape>& shape() const noexcept { return shape_; }
  void set_shape(Shape shape);
  Vector with_shape(Shape shape) const;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s) noexcept;
  Vector& operator/=(double s) noexcept;
  /// this += s * other
  Vector& axpy(double s, const Vector& other);

  double dot(const Vector& other) const;
  double squared_norm() const noexcept;
  double norm() const noexcept;
  double max_abs() const noexcept;
  double sum() const noexcept;

  bool all_finite() const noexcept;
  /// Throws NonFiniteError naming `where` if any entry is NaN/Inf.
  void require_finite(const char* where) const;

  friend bool operator==(const Vector& a, const Vector& b) { return a.data_ == b.data_; }

 private:
  std::vector<double> data_;
  std::optional<Shape> shape_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(Vector a, double s);
Vector operator*(double s, Vector a);
Vector operator/(Vector a, double s);

void require_same_dim(const Vector& a, const Vector& b, const std::string& where);

}  // namespace snorelab
