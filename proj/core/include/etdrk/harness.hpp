#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "etdrk/adaptive.hpp"
#include "etdrk/models.hpp"
#include "etdrk/spectral.hpp"
#include "etdrk/stepper.hpp"

namespace etdrk {

struct ModelConfig {
  std::string name = "allen-cahn";
  double epsilon = 0.5;
  std::optional<double> beta;  // model default when absent
  double M = 2.0;
};

struct GridConfig {
  int dims = 2;
  std::vector<std::size_t> n{128, 128};
  std::vector<double> lengths{6.283185307179586, 6.283185307179586};
};

/// Named initial conditions:
///   sin-product  u = amplitude · Π_d sin(2π modes_d x_d / L_d)
///   random       u = mean + amplitude · (2U − 1), U uniform on [0,1) from
///                mt19937_64(seed) mapped as (x >> 11) · 2^-53
///   constant     u = mean
///   file         ETDF snapshot at `path`
struct InitialCondition {
  std::string type = "sin-product";
  double amplitude = 0.5;
  double mean = 0.0;
  std::vector<int> modes{1, 1};
  std::uint64_t seed = 0;
  std::string path;
};

struct OutputConfig {
  std::string energy_csv;
  std::string steps_csv;
  std::string snapshot_dir;
  std::vector<double> snapshot_times;
  std::string report_csv;
};

struct ConvergeConfig {
  int halvings = 4;
  /// Reference step = finest step / reference_divisor.
  int reference_divisor = 8;
};

struct RunConfig {
  ModelConfig model;
  GridConfig grid;
  std::string scheme = "ed-etdrk3a";
  double tau = 0.01;
  double T = 0.32;
  InitialCondition initial;
  bool dealias = false;
  OutputConfig outputs;
  std::optional<AdaptiveParams> adaptive;
  ConvergeConfig converge;

  /// Checks module preconditions and that referenced files exist.
  void validate() const;
};

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& config);

Grid make_grid(const GridConfig& config);
ModelSpec make_model(const ModelConfig& config);
Field initial_field(const InitialCondition& ic, const Grid& grid);

/// Uniform [0,1) sequence, identical on every platform: the mt19937_64
/// output sequence is fixed by the standard and the mapping to double is
/// done here rather than by a library distribution.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct ConvergenceRow {
  double tau = 0.0;
  double linf_error = 0.0;
  double l2_error = 0.0;
  std::optional<double> linf_rate;
  std::optional<double> l2_rate;
};

struct ConvergenceResult {
  double reference_tau = 0.0;
  std::vector<ConvergenceRow> rows;
};

/// Runs τ = tau/2^k, k = 0..halvings, concurrently, and compares each final
/// state against a run with the finest step divided by reference_divisor.
/// Errors are relative: ‖u − u_ref‖ / ‖u_ref‖ in L∞ and discrete L².
ConvergenceResult converge(const RunConfig& config, unsigned threads = 0);

/// Columns tau,linf_error,linf_rate,l2_error,l2_rate (rate empty on row 0).
void write_convergence_csv(std::ostream& out, const ConvergenceResult& result);

/// Executes config.outputs for a finished run (energy CSV).
void write_run_outputs(const RunConfig& config, const RunRecord& record);

/// RecordOptions for the configured snapshot schedule, writing
/// <snapshot_dir>/snapshot_<t>.etdf when a directory is set.
RecordOptions record_options(const RunConfig& config, const Grid& grid);

}  // namespace etdrk
