// etdrk command-line front end.
//
// Exit codes: 0 success/pass, 1 analytic fail, 2 partial verification,
// 3 usage or input error, 4 numerical divergence.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "etdrk/adaptive.hpp"
#include "etdrk/certificate.hpp"
#include "etdrk/csv.hpp"
#include "etdrk/harness.hpp"
#include "etdrk/tableau.hpp"

namespace {

using namespace etdrk;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 3;
constexpr int kExitDivergence = 4;

/// Writes through `fn` to a file, or to stdout when path is empty or "-".
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  fn(out);
}

struct Overrides {
  std::string config;
  std::optional<std::string> model;
  std::optional<double> epsilon;
  std::optional<double> beta;
  std::optional<double> M;
  std::optional<std::size_t> n;
  std::optional<double> length;
  std::optional<std::string> scheme;
  std::optional<double> tau;
  std::optional<double> T;
  std::optional<std::string> ic;
  std::optional<double> amplitude;
  std::optional<double> mean;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> energy_csv;
  std::optional<std::string> steps_csv;
  std::optional<std::string> snapshot_dir;
  std::vector<double> snapshot_times;
  std::optional<int> halvings;
  std::optional<int> reference_divisor;
  std::optional<double> tau_min;
  std::optional<double> tau_max;
  std::optional<double> tol;
  std::optional<std::string> norm;
  bool dealias = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--model", o.model, "allen-cahn | cahn-hilliard | mbe | pfc");
  cmd->add_option("--epsilon", o.epsilon, "interface parameter");
  cmd->add_option("--beta", o.beta, "stabilization constant");
  cmd->add_option("--M", o.M, "truncation bound of the double well");
  cmd->add_option("--n", o.n, "points per dimension (square grid)");
  cmd->add_option("--length", o.length, "domain length per dimension");
  cmd->add_option("--scheme", o.scheme, "builtin scheme name or tableau file");
  cmd->add_option("--tau", o.tau, "time step");
  cmd->add_option("--T", o.T, "final time");
  cmd->add_option("--ic", o.ic, "initial condition type: sin-product | random | constant | file");
  cmd->add_option("--amplitude", o.amplitude, "initial condition amplitude");
  cmd->add_option("--mean", o.mean, "initial condition mean");
  cmd->add_option("--seed", o.seed, "seed of the random initial condition");
  cmd->add_option("--energy-csv", o.energy_csv, "energy curve output");
  cmd->add_option("--snapshot-dir", o.snapshot_dir, "directory for ETDF snapshots");
  cmd->add_option("--snapshot-times", o.snapshot_times, "snapshot times")->delimiter(',');
  cmd->add_flag("--dealias", o.dealias, "2/3-rule dealiasing of the nonlinear term");
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.model) c.model.name = *o.model;
  if (o.epsilon) c.model.epsilon = *o.epsilon;
  if (o.beta) c.model.beta = *o.beta;
  if (o.M) c.model.M = *o.M;
  if (o.n) c.grid.n.assign(static_cast<std::size_t>(c.grid.dims), *o.n);
  if (o.length) c.grid.lengths.assign(static_cast<std::size_t>(c.grid.dims), *o.length);
  if (o.scheme) c.scheme = *o.scheme;
  if (o.tau) c.tau = *o.tau;
  if (o.T) c.T = *o.T;
  if (o.ic) c.initial.type = *o.ic;
  if (o.amplitude) c.initial.amplitude = *o.amplitude;
  if (o.mean) c.initial.mean = *o.mean;
  if (o.seed) c.initial.seed = *o.seed;
  if (o.energy_csv) c.outputs.energy_csv = *o.energy_csv;
  if (o.steps_csv) c.outputs.steps_csv = *o.steps_csv;
  if (o.snapshot_dir) c.outputs.snapshot_dir = *o.snapshot_dir;
  if (!o.snapshot_times.empty()) c.outputs.snapshot_times = o.snapshot_times;
  if (o.halvings) c.converge.halvings = *o.halvings;
  if (o.reference_divisor) c.converge.reference_divisor = *o.reference_divisor;
  if (o.tau_min || o.tau_max || o.tol || o.norm) {
    if (!c.adaptive) c.adaptive = AdaptiveParams{};
    if (o.tau_min) c.adaptive->tau_min = *o.tau_min;
    if (o.tau_max) c.adaptive->tau_max = *o.tau_max;
    if (o.tol) c.adaptive->tol = *o.tol;
    if (o.norm) c.adaptive->norm = parse_error_norm(*o.norm);
  }
  if (o.dealias) c.dealias = true;
  c.validate();
  return c;
}

int cmd_certify(const std::string& scheme, const CertifyOptions& opt, const std::string& csv) {
  const Tableau t = resolve_scheme(scheme);
  const CertificateReport rep = certify(t, opt);
  emit(csv, [&](std::ostream& out) { write_certificate_csv(out, rep); });
  std::cerr << t.name << ": " << to_string(rep.verdict) << " (worst z=" << format_double(rep.worst_z)
            << ", value=" << format_double(rep.worst_value) << ")";
  if (rep.tail.attempted) std::cerr << "; tail: " << rep.tail.note;
  std::cerr << '\n';
  switch (rep.verdict) {
    case Verdict::kPass: return kExitPass;
    case Verdict::kFail: return kExitFail;
    case Verdict::kGridPassTailUnverified: return kExitPartial;
  }
  return kExitFail;
}

int cmd_order_check(const std::string& scheme, int order, const std::vector<double>& zs) {
  const Tableau t = resolve_scheme(scheme);
  const OrderReport rep = order_conditions(t, order, zs);
  std::cout << "condition,level,strong_residual,weakened_residual,classical,form\n";
  for (const auto& c : rep.conditions) {
    std::cout << '"' << c.name << "\"," << c.level << ',' << format_double(c.strong_residual) << ','
              << format_double(c.weakened_residual) << ',' << (c.classical ? 1 : 0) << ',' << to_string(c.form)
              << '\n';
  }
  std::cout << "# target_order=" << rep.target_order << " sampled_order=" << rep.sampled_order
            << " verdict=" << (rep.pass ? "pass" : "fail")
            << " (scalar-sampled necessary conditions, operators replaced by the identity)\n";
  return rep.pass ? kExitPass : kExitFail;
}

int cmd_converge(const RunConfig& c, const std::string& csv) {
  const ConvergenceResult r = converge(c);
  emit(csv.empty() ? c.outputs.report_csv : csv, [&](std::ostream& out) { write_convergence_csv(out, r); });
  return kExitPass;
}

int cmd_run(const RunConfig& c) {
  const Grid grid = make_grid(c.grid);
  const ModelSpec model = make_model(c.model);
  const Field u0 = initial_field(c.initial, grid);
  if (c.adaptive) {
    const AdaptiveRecord rec = adaptive_run(model, grid, u0, *c.adaptive, c.T, record_options(c, grid));
    write_run_outputs(c, rec.record);
    if (!c.outputs.steps_csv.empty()) emit(c.outputs.steps_csv, [&](std::ostream& o) { write_step_csv(o, rec); });
    std::cerr << "adaptive run: " << rec.record.step_sizes.size() << " accepted steps, " << rec.rejections
              << " rejections, E(T)=" << format_double(rec.record.energies.back()) << '\n';
    return kExitPass;
  }
  const Tableau t = resolve_scheme(c.scheme);
  const RunRecord rec = run(model, t, grid, u0, c.tau, c.T, record_options(c, grid));
  write_run_outputs(c, rec);
  std::cerr << "run: " << rec.step_sizes.size() << " steps, E(0)=" << format_double(rec.energies.front())
            << " E(T)=" << format_double(rec.energies.back()) << '\n';
  return kExitPass;
}

int cmd_minors(const std::string& scheme, double z_min, double z_max, int points, bool log_spacing,
               const std::string& csv) {
  const Tableau t = resolve_scheme(scheme);
  if (!(z_min < z_max && z_max < 0.0) || points < 2) {
    throw InvalidArgument("minors: need z_min < z_max < 0 and points >= 2");
  }
  std::vector<double> zs;
  if (log_spacing) {
    zs = log_grid(z_min, z_max, points);
  } else {
    for (int p = 0; p < points; ++p) zs.push_back(z_min + (z_max - z_min) * p / (points - 1));
  }
  const MinorCurves curves = minor_curves(t, zs);
  emit(csv, [&](std::ostream& out) { write_minor_curves_csv(out, curves); });
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential time differencing Runge-Kutta integrators for gradient flows"};
  app.require_subcommand(1);

  std::string scheme;
  std::string csv;
  CertifyOptions copt;
  bool no_tail = false;
  auto* certify_cmd = app.add_subcommand("certify", "energy-stability certificate of a tableau");
  certify_cmd->add_option("scheme", scheme, "builtin scheme name or tableau file")->required();
  certify_cmd->add_option("--z-min", copt.z_min, "most negative z of the grid");
  certify_cmd->add_option("--z-max", copt.z_max, "least negative z of the grid");
  certify_cmd->add_option("--points", copt.points, "grid points (log-spaced in |z|)");
  certify_cmd->add_option("--csv", csv, "CSV output path (default stdout)");
  certify_cmd->add_flag("--no-tail", no_tail, "skip the large-|z| tail check");

  int order = 1;
  std::vector<double> zs{-0.5, -1.0, -2.0, -5.0, -20.0};
  auto* order_cmd = app.add_subcommand("order-check", "stiff order conditions, scalar-sampled");
  order_cmd->add_option("scheme", scheme, "builtin scheme name or tableau file")->required();
  order_cmd->add_option("order", order, "target order 1..4")->required()->check(CLI::Range(1, 4));
  order_cmd->add_option("--z", zs, "sample points (negative)")->delimiter(',');

  Overrides o;
  auto* converge_cmd = app.add_subcommand("converge", "self-convergence study");
  add_run_flags(converge_cmd, o);
  converge_cmd->add_option("--halvings", o.halvings, "number of step halvings");
  converge_cmd->add_option("--reference-divisor", o.reference_divisor, "reference step = finest / divisor");
  converge_cmd->add_option("--csv", csv, "CSV output path (default stdout)");

  auto* run_cmd = app.add_subcommand("run", "fixed-step run");
  add_run_flags(run_cmd, o);

  auto* adapt_cmd = app.add_subcommand("adapt", "adaptive run (ETD1 / ETDRK3 pair)");
  add_run_flags(adapt_cmd, o);
  adapt_cmd->add_option("--steps-csv", o.steps_csv, "step-size log output");
  adapt_cmd->add_option("--tau-min", o.tau_min, "smallest step");
  adapt_cmd->add_option("--tau-max", o.tau_max, "largest step");
  adapt_cmd->add_option("--tol", o.tol, "reference tolerance");
  adapt_cmd->add_option("--norm", o.norm, "l2 | linf");

  double z_min = -6.0;
  double z_max = -1e-3;
  int points = 500;
  bool log_spacing = false;
  auto* minors_cmd = app.add_subcommand("minors", "leading principal minors of the certificate matrix");
  minors_cmd->add_option("scheme", scheme, "builtin scheme name or tableau file")->required();
  minors_cmd->add_option("--z-min", z_min, "most negative z");
  minors_cmd->add_option("--z-max", z_max, "least negative z");
  minors_cmd->add_option("--points", points, "number of samples");
  minors_cmd->add_flag("--log", log_spacing, "log-spaced |z| instead of uniform z");
  minors_cmd->add_option("--csv", csv, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*certify_cmd) {
      copt.tail = !no_tail;
      return cmd_certify(scheme, copt, csv);
    }
    if (*order_cmd) return cmd_order_check(scheme, order, zs);
    if (*minors_cmd) return cmd_minors(scheme, z_min, z_max, points, log_spacing, csv);
    if (*converge_cmd) return cmd_converge(build_config(o), csv);
    if (*run_cmd) {
      RunConfig c = build_config(o);
      c.adaptive.reset();
      return cmd_run(c);
    }
    if (*adapt_cmd) {
      RunConfig c = build_config(o);
      if (!c.adaptive) c.adaptive = AdaptiveParams{};
      return cmd_run(c);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
