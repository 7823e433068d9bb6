#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etdrk/dense.hpp"
#include "etdrk/tableau.hpp"

namespace etdrk {

// Energy-stability certificate for an ETDRK tableau.
//
// With z = τGL, the scheme decreases the energy of the stabilized gradient
// flow for every τ > 0 if the s×s matrix
//
//   Δ(z) = z E_L + P(z)^{-1} E_L − (z/2) I
//
// is positive definite for all z < 0, where P stacks the stage rows
// (a_{i+1,1} … a_{i+1,i}) and the weights b. Equivalently the congruent
// symmetric matrix Δ'(z) = z P E Pᵀ + E_L Pᵀ + P E_Lᵀ is positive definite.
//
// The operators involved are diagonalised by the Fourier basis, so the check
// is carried out on scalar z. This is a numerical certificate on a finite
// grid plus a tail estimate; it is not a proof.

struct StabilityMatrices {
  double z = 0.0;
  Matrix P;
  Matrix delta;
  Matrix delta_prime;
  Matrix lower_ones;  // E_L
  Matrix ones;        // E
};

/// Throws SingularMatrixError if some |P_ii| < 1e-300, InvalidArgument if z >= 0.
StabilityMatrices build_matrices(const Tableau& tableau, double z);

/// Eigenvalues of ½(M + Mᵀ), ascending (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(const Matrix& m);
double min_sym_eig(const Matrix& m);

/// det of the k×k leading blocks, k = 1..n (LU with partial pivoting).
std::vector<double> leading_minors(const Matrix& m);

enum class Verdict {
  kPass,
  kFail,
  kGridPassTailUnverified,
};

std::string_view to_string(Verdict verdict);

/// Behaviour of Δ' beyond the largest |z| of the grid, from the
/// exponential-free part of P in w = 1/z.
struct TailCheck {
  bool attempted = false;
  bool verified = false;
  double z_start = 0.0;
  /// Per minor: relative dominance margin of the leading term (> 0 required).
  std::vector<double> margins;
  std::string note;
};

struct CertifyOptions {
  double z_min = -1e6;
  double z_max = -1e-6;
  int points = 2000;
  bool tail = true;
  unsigned threads = 0;  // 0: automatic
};

struct CertificateReport {
  std::string scheme;
  int stages = 0;
  std::vector<double> z_grid;  // ascending
  std::vector<double> min_eig_sym_delta;
  /// minors_delta_prime[p][k-1] = Det(Δ'_{k×k}) at z_grid[p].
  std::vector<std::vector<double>> minors_delta_prime;
  /// scaled_minors[p][k-1] = z^{2k} Det(Δ'_{k×k}).
  std::vector<std::vector<double>> scaled_minors;
  /// max over the grid of ‖P‖_F ‖P^{-1}‖_F.
  double max_condition = 0.0;
  bool conditioning_ok = true;
  TailCheck tail;
  Verdict verdict = Verdict::kFail;
  double worst_z = 0.0;
  double worst_value = 0.0;
};

inline constexpr double kConditionLimit = 1e13;

/// |z| log-spaced over [|z_max|, |z_min|], returned in ascending z order.
std::vector<double> log_grid(double z_min, double z_max, int points);

CertificateReport certify(const Tableau& tableau, const CertifyOptions& options = {});
CertificateReport certify(const Tableau& tableau, double z_min, double z_max, int points);

struct MinorCurves {
  int stages = 0;
  std::vector<double> z;
  std::vector<std::vector<double>> minors;  // [p][k-1]
  std::vector<std::vector<double>> scaled;  // z^{2k} Det_k
};

MinorCurves minor_curves(const Tableau& tableau, std::span<const double> z_grid);

/// Columns z,min_eig,minor1..minorS,scaled_minor2,scaled_minorS and a trailing
/// "# verdict=... worst_z=... worst_value=..." line.
void write_certificate_csv(std::ostream& out, const CertificateReport& report);
/// Columns z,minor1..minorS,scaled_minor1..scaled_minorS.
void write_minor_curves_csv(std::ostream& out, const MinorCurves& curves);

}  // namespace etdrk
