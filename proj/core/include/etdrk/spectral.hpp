#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace etdrk {

/// Real values at grid points, row-major (x index slowest).
using Field = std::vector<double>;
/// Half-spectrum Fourier coefficients of a real field, layout n0 × (n1/2+1)
/// in 2D and (n/2+1) in 1D. Normalised so that the zero mode is the mean.
using SpectralField = std::vector<std::complex<double>>;

struct Wavevector {
  double kx = 0.0;
  double ky = 0.0;
  double norm2() const { return kx * kx + ky * ky; }
};

/// Periodic box with 1 or 2 dimensions; every n must be a power of two.
class Grid {
 public:
  Grid() = default;
  static Grid line(std::size_t n, double length);
  static Grid square(std::size_t n, double length) { return plane(n, n, length, length); }
  static Grid plane(std::size_t nx, std::size_t ny, double lx, double ly);

  int dims() const { return dims_; }
  std::size_t n(int d) const { return n_[static_cast<std::size_t>(d)]; }
  double length(int d) const { return length_[static_cast<std::size_t>(d)]; }

  std::size_t points() const { return rows() * cols(); }
  std::size_t spectral_points() const { return rows() * half_cols(); }
  /// |Ω|
  double measure() const;
  double spacing(int d) const { return length(d) / static_cast<double>(n(d)); }
  /// Coordinate of grid point i along dimension d (x_i = i·h).
  double coordinate(int d, std::size_t i) const { return spacing(d) * static_cast<double>(i); }

  /// Wavevector of spectral index q; integer wavenumbers m ∈ {−n/2, …, n/2−1}.
  Wavevector wavevector(std::size_t q) const;
  /// 2 for half-spectrum entries standing in for a conjugate pair, else 1.
  double multiplicity(std::size_t q) const;
  /// True for entries on a Nyquist line (m = −n/2 in some dimension).
  bool is_nyquist(std::size_t q) const;
  /// Integer wavenumbers (mx, my) of spectral index q.
  std::array<long, 2> wavenumbers(std::size_t q) const;

  std::size_t rows() const { return dims_ == 2 ? n_[0] : 1; }
  std::size_t cols() const { return dims_ == 2 ? n_[1] : n_[0]; }
  std::size_t half_cols() const { return cols() / 2 + 1; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dims_ = 0;
  std::array<std::size_t, 2> n_{0, 0};
  std::array<double, 2> length_{0.0, 0.0};
};

/// FFTW-backed real transform pair for one grid shape. Immutable after
/// construction and safe to use from several threads at once.
class Transform {
 public:
  explicit Transform(const Grid& grid);
  const Grid& grid() const { return grid_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  void backward(std::span<const std::complex<double>> in, std::span<double> out) const;
  SpectralField forward(std::span<const double> in) const;
  Field backward(std::span<const std::complex<double>> in) const;

 private:
  struct Plans;
  Grid grid_;
  std::shared_ptr<const Plans> plans_;
};

/// Shared transform for a grid shape (created once, cached).
const Transform& transform_for(const Grid& grid);

SpectralField transform_forward(const Grid& grid, std::span<const double> field);
Field transform_backward(const Grid& grid, std::span<const std::complex<double>> spectrum);

using Multiplier = std::function<double(const Wavevector&)>;

/// Pointwise product in coefficient space. Throws on non-finite values.
SpectralField apply_multiplier(const Grid& grid, const Multiplier& multiplier, SpectralField spectrum);
/// Multiplier values per spectral index, e.g. for reuse across steps.
std::vector<double> multiplier_table(const Grid& grid, const Multiplier& multiplier);

/// ∂/∂x_d via i k multipliers (Nyquist modes dropped). One field per dimension.
std::vector<Field> gradient(const Grid& grid, std::span<const double> field);
Field divergence(const Grid& grid, const std::vector<Field>& components);

/// Optional 2/3-rule truncation: zeroes modes with |m_d| > n_d/3.
void dealias_two_thirds(const Grid& grid, SpectralField& spectrum);

/// Σ_x |u|² Δx
double physical_l2_squared(const Grid& grid, std::span<const double> field);
/// |Ω| Σ_k |û_k|² over the full spectrum (Parseval partner of the above).
double spectral_l2_squared(const Grid& grid, std::span<const std::complex<double>> spectrum);

double mean(std::span<const double> field);
double max_abs(std::span<const double> field);
/// Discrete L² norm (Σ u² Δx)^{1/2}.
double l2_norm(const Grid& grid, std::span<const double> field);

/// Sample f(x, y) at the grid points (y ignored in 1D).
Field sample(const Grid& grid, const std::function<double(double, double)>& f);

// Snapshot format: "ETDF", u16 version, u16 ndim, u64 per dim, f64 payload,
// all little endian.
inline constexpr std::uint16_t kSnapshotVersion = 1;

struct Snapshot {
  std::vector<std::uint64_t> dims;
  Field values;
};

void write_snapshot(const std::filesystem::path& path, const Grid& grid, std::span<const double> field);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace etdrk
