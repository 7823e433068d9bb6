#include "etdrk/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "etdrk/error.hpp"

namespace etdrk {

namespace {

// FFTW planning and plan destruction are not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool power_of_two(std::size_t n) { return n >= 2 && std::has_single_bit(n); }

long signed_wavenumber(std::size_t index, std::size_t n) {
  const auto i = static_cast<long>(index);
  const auto half = static_cast<long>(n / 2);
  return i < half ? i : i - static_cast<long>(n);
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": size " + std::to_string(got) + " does not match grid (" +
                          std::to_string(want) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid Grid::line(std::size_t n, double length) {
  if (!power_of_two(n)) throw InvalidArgument("grid size must be a power of two >= 2");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("grid length must be positive");
  Grid g;
  g.dims_ = 1;
  g.n_ = {n, 1};
  g.length_ = {length, 1.0};
  return g;
}

Grid Grid::plane(std::size_t nx, std::size_t ny, double lx, double ly) {
  if (!power_of_two(nx) || !power_of_two(ny)) throw InvalidArgument("grid sizes must be powers of two >= 2");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw InvalidArgument("grid lengths must be positive");
  }
  Grid g;
  g.dims_ = 2;
  g.n_ = {nx, ny};
  g.length_ = {lx, ly};
  return g;
}

double Grid::measure() const { return dims_ == 2 ? length_[0] * length_[1] : length_[0]; }

std::array<long, 2> Grid::wavenumbers(std::size_t q) const {
  const std::size_t i = q / half_cols();
  const std::size_t j = q % half_cols();
  const long mj = signed_wavenumber(j, cols());
  if (dims_ == 1) return {mj, 0};
  return {signed_wavenumber(i, rows()), mj};
}

Wavevector Grid::wavevector(std::size_t q) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const auto m = wavenumbers(q);
  Wavevector k;
  k.kx = two_pi * static_cast<double>(m[0]) / length_[0];
  if (dims_ == 2) k.ky = two_pi * static_cast<double>(m[1]) / length_[1];
  return k;
}

double Grid::multiplicity(std::size_t q) const {
  const std::size_t j = q % half_cols();
  return (j == 0 || j == cols() / 2) ? 1.0 : 2.0;
}

bool Grid::is_nyquist(std::size_t q) const {
  const auto m = wavenumbers(q);
  if (m[0] == -static_cast<long>(n_[0] / 2)) return true;
  return dims_ == 2 && m[1] == -static_cast<long>(n_[1] / 2);
}

// ---------------------------------------------------------------------------
// Transform

struct Transform::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

Transform::Transform(const Grid& grid) : grid_(grid) {
  if (grid.dims() != 1 && grid.dims() != 2) throw InvalidArgument("transform needs a 1D or 2D grid");
  auto plans = std::make_shared<Plans>();
  std::vector<double> real(grid.points());
  std::vector<std::complex<double>> spec(grid.spectral_points());
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int rows = static_cast<int>(grid.rows());
  const int cols = static_cast<int>(grid.cols());
  {
    std::lock_guard lock(planner_mutex());
    if (grid.dims() == 2) {
      plans->r2c = fftw_plan_dft_r2c_2d(rows, cols, real.data(), cplx, flags);
      plans->c2r = fftw_plan_dft_c2r_2d(rows, cols, cplx, real.data(), flags);
    } else {
      plans->r2c = fftw_plan_dft_r2c_1d(cols, real.data(), cplx, flags);
      plans->c2r = fftw_plan_dft_c2r_1d(cols, cplx, real.data(), flags);
    }
  }
  if (!plans->r2c || !plans->c2r) throw Error("FFTW plan creation failed");
  plans_ = std::move(plans);
}

void Transform::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  require_size(in.size(), grid_.points(), "transform_forward");
  require_size(out.size(), grid_.spectral_points(), "transform_forward output");
  // out-of-place r2c leaves the input untouched
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
  const double inv_n = 1.0 / static_cast<double>(grid_.points());
  for (auto& c : out) c *= inv_n;
}

void Transform::backward(std::span<const std::complex<double>> in, std::span<double> out) const {
  require_size(in.size(), grid_.spectral_points(), "transform_backward");
  require_size(out.size(), grid_.points(), "transform_backward output");
  // c2r overwrites its input
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

SpectralField Transform::forward(std::span<const double> in) const {
  SpectralField out(grid_.spectral_points());
  forward(in, out);
  return out;
}

Field Transform::backward(std::span<const std::complex<double>> in) const {
  Field out(grid_.points());
  backward(in, out);
  return out;
}

const Transform& transform_for(const Grid& grid) {
  static std::mutex cache_mutex;
  static std::map<std::array<std::size_t, 3>, std::unique_ptr<Transform>> cache;
  const std::array<std::size_t, 3> key{static_cast<std::size_t>(grid.dims()), grid.n(0), grid.n(1)};
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[key];
  if (!slot) {
    // plans depend on shape only; store a grid with unit lengths
    const Grid shape = grid.dims() == 2 ? Grid::plane(grid.n(0), grid.n(1), 1.0, 1.0)
                                        : Grid::line(grid.n(0), 1.0);
    slot = std::make_unique<Transform>(shape);
  }
  return *slot;
}

SpectralField transform_forward(const Grid& grid, std::span<const double> field) {
  return transform_for(grid).forward(field);
}

Field transform_backward(const Grid& grid, std::span<const std::complex<double>> spectrum) {
  return transform_for(grid).backward(spectrum);
}

// ---------------------------------------------------------------------------
// Operators

std::vector<double> multiplier_table(const Grid& grid, const Multiplier& multiplier) {
  std::vector<double> table(grid.spectral_points());
  for (std::size_t q = 0; q < table.size(); ++q) {
    table[q] = multiplier(grid.wavevector(q));
    if (!std::isfinite(table[q])) throw InvalidArgument("multiplier is not finite at spectral index " + std::to_string(q));
  }
  return table;
}

SpectralField apply_multiplier(const Grid& grid, const Multiplier& multiplier, SpectralField spectrum) {
  require_size(spectrum.size(), grid.spectral_points(), "apply_multiplier");
  const auto table = multiplier_table(grid, multiplier);
  for (std::size_t q = 0; q < spectrum.size(); ++q) spectrum[q] *= table[q];
  return spectrum;
}

namespace {

SpectralField derivative(const Grid& grid, const SpectralField& u_hat, int d) {
  SpectralField out(u_hat.size());
  for (std::size_t q = 0; q < u_hat.size(); ++q) {
    const auto m = grid.wavenumbers(q);
    if (m[static_cast<std::size_t>(d)] == -static_cast<long>(grid.n(d) / 2)) continue;
    const Wavevector k = grid.wavevector(q);
    const double kd = d == 0 ? k.kx : k.ky;
    out[q] = std::complex<double>(0.0, kd) * u_hat[q];
  }
  return out;
}

}  // namespace

std::vector<Field> gradient(const Grid& grid, std::span<const double> field) {
  const Transform& tr = transform_for(grid);
  const SpectralField u_hat = tr.forward(field);
  std::vector<Field> out;
  for (int d = 0; d < grid.dims(); ++d) out.push_back(tr.backward(derivative(grid, u_hat, d)));
  return out;
}

Field divergence(const Grid& grid, const std::vector<Field>& components) {
  if (static_cast<int>(components.size()) != grid.dims()) {
    throw InvalidArgument("divergence needs one component per dimension");
  }
  const Transform& tr = transform_for(grid);
  SpectralField acc(grid.spectral_points());
  for (int d = 0; d < grid.dims(); ++d) {
    const SpectralField part = derivative(grid, tr.forward(components[static_cast<std::size_t>(d)]), d);
    for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += part[q];
  }
  return tr.backward(acc);
}

void dealias_two_thirds(const Grid& grid, SpectralField& spectrum) {
  require_size(spectrum.size(), grid.spectral_points(), "dealias_two_thirds");
  for (std::size_t q = 0; q < spectrum.size(); ++q) {
    const auto m = grid.wavenumbers(q);
    for (int d = 0; d < grid.dims(); ++d) {
      if (3 * std::abs(m[static_cast<std::size_t>(d)]) > static_cast<long>(grid.n(d))) {
        spectrum[q] = 0.0;
        break;
      }
    }
  }
}

double physical_l2_squared(const Grid& grid, std::span<const double> field) {
  require_size(field.size(), grid.points(), "physical_l2_squared");
  double sum = 0.0;
  for (double v : field) sum += v * v;
  return sum * grid.measure() / static_cast<double>(grid.points());
}

double spectral_l2_squared(const Grid& grid, std::span<const std::complex<double>> spectrum) {
  require_size(spectrum.size(), grid.spectral_points(), "spectral_l2_squared");
  double sum = 0.0;
  for (std::size_t q = 0; q < spectrum.size(); ++q) sum += grid.multiplicity(q) * std::norm(spectrum[q]);
  return sum * grid.measure();
}

double mean(std::span<const double> field) {
  if (field.empty()) return 0.0;
  double sum = 0.0;
  for (double v : field) sum += v;
  return sum / static_cast<double>(field.size());
}

double max_abs(std::span<const double> field) {
  double m = 0.0;
  for (double v : field) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(v));
  }
  return m;
}

double l2_norm(const Grid& grid, std::span<const double> field) {
  return std::sqrt(physical_l2_squared(grid, field));
}

Field sample(const Grid& grid, const std::function<double(double, double)>& f) {
  Field out(grid.points());
  for (std::size_t i = 0; i < grid.rows(); ++i)
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      const double x = grid.dims() == 2 ? grid.coordinate(0, i) : grid.coordinate(0, j);
      const double y = grid.dims() == 2 ? grid.coordinate(1, j) : 0.0;
      out[i * grid.cols() + j] = f(x, y);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw ParseError("snapshot " + path.string() + ": truncated file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Grid& grid, std::span<const double> field) {
  require_size(field.size(), grid.points(), "write_snapshot");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write("ETDF", 4);
  put_le<std::uint16_t>(out, kSnapshotVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(grid.dims()));
  for (int d = 0; d < grid.dims(); ++d) put_le<std::uint64_t>(out, grid.n(d));
  for (double v : field) put_le<double>(out, v);
  if (!out) throw Error("write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ETDF", 4) != 0) {
    throw ParseError("snapshot " + path.string() + ": bad magic");
  }
  const auto version = get_le<std::uint16_t>(in, path);
  if (version != kSnapshotVersion) {
    throw ParseError("snapshot " + path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto ndim = get_le<std::uint16_t>(in, path);
  if (ndim < 1 || ndim > 2) throw ParseError("snapshot " + path.string() + ": ndim must be 1 or 2");
  Snapshot snap;
  std::uint64_t total = 1;
  for (int d = 0; d < ndim; ++d) {
    snap.dims.push_back(get_le<std::uint64_t>(in, path));
    total *= snap.dims.back();
  }
  if (total == 0 || total > (std::uint64_t{1} << 32)) throw ParseError("snapshot " + path.string() + ": bad dims");
  snap.values.resize(total);
  for (auto& v : snap.values) v = get_le<double>(in, path);
  return snap;
}

}  // namespace etdrk
