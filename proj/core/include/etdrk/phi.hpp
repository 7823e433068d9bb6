#pragma once

#include <complex>
#include <span>
#include <vector>

namespace etdrk {

// φ-functions of exponential integrators:
//   φ_0(z) = e^z,   φ_{k+1}(z) = (φ_k(z) - 1/k!) / z,   φ_k(0) = 1/k!.
//
// For |z| < kPhiSeriesRadius the truncated Taylor series
//   φ_k(z) = Σ_{j < kPhiSeriesTerms} z^j / (j+k)!
// is used (truncation error < 1e-20 relative); elsewhere the forward
// recursion from e^z, which is cancellation-free once |z| >= 1/2.

inline constexpr int kMaxPhiIndex = 8;
inline constexpr double kPhiSeriesRadius = 0.5;
inline constexpr int kPhiSeriesTerms = 20;

/// φ_k(z). Throws InvalidArgument for non-finite z or k outside [0, 8].
double phi(int k, double z);

/// Complex argument, same evaluation path; accurate to about 1e-10.
std::complex<double> phi(int k, std::complex<double> z);

/// φ_0(z) .. φ_{max_index}(z) in one pass; `out` must hold max_index+1 values.
void phi_all(int max_index, double z, std::span<double> out);

/// φ_k applied elementwise to the eigenvalues of a diagonalised non-positive
/// operator. Entries above +1e-12 are rejected (a wrongly-signed multiplier).
std::vector<double> phi_on_spectrum(int k, std::span<const double> eigs);

struct PhiTable {
  int max_index = 0;
  /// values[k][p] = φ_k(z_p).
  std::vector<std::vector<double>> values;
};

PhiTable make_phi_table(int max_index, std::span<const double> points);

}  // namespace etdrk
