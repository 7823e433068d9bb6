#include "etdrk/phi.hpp"

#include <array>
#include <cmath>
#include <string>

#include "etdrk/error.hpp"

namespace etdrk {
namespace {

constexpr std::array<double, kMaxPhiIndex + kPhiSeriesTerms + 1> kInverseFactorial = [] {
  std::array<double, kMaxPhiIndex + kPhiSeriesTerms + 1> out{};
  double f = 1.0;
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (n > 0) f *= static_cast<double>(n);
    out[n] = 1.0 / f;
  }
  return out;
}();

void check_index(int k) {
  if (k < 0 || k > kMaxPhiIndex) {
    throw InvalidArgument("phi: index " + std::to_string(k) + " outside [0, " +
                          std::to_string(kMaxPhiIndex) + "]");
  }
}

template <typename T>
T series(int k, T z) {
  // Horner on Σ z^j/(j+k)!.
  T acc = kInverseFactorial[kPhiSeriesTerms - 1 + k];
  for (int j = kPhiSeriesTerms - 2; j >= 0; --j) acc = acc * z + kInverseFactorial[j + k];
  return acc;
}

template <typename T>
T evaluate(int k, T z) {
  if (std::abs(z) < kPhiSeriesRadius) return series(k, z);
  T value = std::exp(z);
  for (int j = 0; j < k; ++j) value = (value - kInverseFactorial[j]) / z;
  return value;
}

}  // namespace

double phi(int k, double z) {
  check_index(k);
  if (!std::isfinite(z)) throw InvalidArgument("phi: non-finite argument");
  return evaluate(k, z);
}

std::complex<double> phi(int k, std::complex<double> z) {
  check_index(k);
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw InvalidArgument("phi: non-finite argument");
  }
  return evaluate(k, z);
}

void phi_all(int max_index, double z, std::span<double> out) {
  check_index(max_index);
  if (!std::isfinite(z)) throw InvalidArgument("phi: non-finite argument");
  if (out.size() < static_cast<std::size_t>(max_index) + 1) {
    throw InvalidArgument("phi_all: output span too small");
  }
  if (std::abs(z) < kPhiSeriesRadius) {
    for (int k = 0; k <= max_index; ++k) out[k] = series(k, z);
    return;
  }
  out[0] = std::exp(z);
  for (int j = 0; j < max_index; ++j) out[j + 1] = (out[j] - kInverseFactorial[j]) / z;
}

std::vector<double> phi_on_spectrum(int k, std::span<const double> eigs) {
  check_index(k);
  std::vector<double> out(eigs.size());
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    if (eigs[i] > 1e-12) {
      throw InvalidArgument("phi_on_spectrum: positive eigenvalue " + std::to_string(eigs[i]) +
                            " (operator must be non-positive)");
    }
    out[i] = phi(k, eigs[i]);
  }
  return out;
}

PhiTable make_phi_table(int max_index, std::span<const double> points) {
  check_index(max_index);
  PhiTable table;
  table.max_index = max_index;
  table.values.assign(max_index + 1, std::vector<double>(points.size()));
  std::array<double, kMaxPhiIndex + 1> scratch{};
  for (std::size_t p = 0; p < points.size(); ++p) {
    phi_all(max_index, points[p], scratch);
    for (int k = 0; k <= max_index; ++k) table.values[k][p] = scratch[k];
  }
  return table;
}

}  // namespace etdrk
