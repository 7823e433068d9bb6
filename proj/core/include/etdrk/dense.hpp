#pragma once

#include <cstddef>
#include <vector>

namespace etdrk {

/// Small dense square matrix, row-major. Sized for Butcher-type arrays
/// (a handful of stages), not for field data.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static Matrix identity(std::size_t n);
  /// E_L: ones on and below the diagonal.
  static Matrix lower_ones(std::size_t n);
  /// E: all ones.
  static Matrix ones(std::size_t n);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  Matrix transpose() const;
  /// Frobenius norm.
  double norm() const;
  bool all_finite() const;

  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator*(double s, const Matrix& a);

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace etdrk
