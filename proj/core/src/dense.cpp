#include "etdrk/dense.hpp"

#include <cmath>

#include "etdrk/error.hpp"

namespace etdrk {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::lower_ones(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = 1.0;
  return m;
}

Matrix Matrix::ones(std::size_t n) { return Matrix(n, 1.0); }

Matrix Matrix::transpose() const {
  Matrix t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.n_ != b.n_) throw InvalidArgument("matrix size mismatch");
  Matrix out(a);
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) { return a + (-1.0) * b; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.n_ != b.n_) throw InvalidArgument("matrix size mismatch");
  Matrix out(a.n_);
  for (std::size_t i = 0; i < a.n_; ++i)
    for (std::size_t k = 0; k < a.n_; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < a.n_; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out(a);
  for (double& v : out.data_) v *= s;
  return out;
}

}  // namespace etdrk
