#include "etdrk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "etdrk/csv.hpp"
#include "etdrk/error.hpp"
#include "etdrk/parallel.hpp"
#include "json.hpp"

namespace etdrk {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw ParseError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw ParseError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config key '") + key + "': " + e.what());
  }
}

ModelConfig parse_model(const json& j) {
  reject_unknown(j, "model", {"name", "epsilon", "beta", "M"});
  ModelConfig m;
  read(j, "name", m.name);
  read(j, "epsilon", m.epsilon);
  if (j.contains("beta") && !j.at("beta").is_null()) {
    double b = 0.0;
    read(j, "beta", b);
    m.beta = b;
  }
  read(j, "M", m.M);
  return m;
}

GridConfig parse_grid(const json& j) {
  reject_unknown(j, "grid", {"dims", "n", "lengths"});
  GridConfig g;
  read(j, "dims", g.dims);
  read(j, "n", g.n);
  read(j, "lengths", g.lengths);
  return g;
}

InitialCondition parse_initial(const json& j) {
  reject_unknown(j, "initial", {"type", "amplitude", "mean", "modes", "seed", "path"});
  InitialCondition ic;
  read(j, "type", ic.type);
  read(j, "amplitude", ic.amplitude);
  read(j, "mean", ic.mean);
  read(j, "modes", ic.modes);
  read(j, "seed", ic.seed);
  read(j, "path", ic.path);
  return ic;
}

OutputConfig parse_outputs(const json& j) {
  reject_unknown(j, "outputs", {"energy_csv", "steps_csv", "snapshot_dir", "snapshot_times", "report_csv"});
  OutputConfig o;
  read(j, "energy_csv", o.energy_csv);
  read(j, "steps_csv", o.steps_csv);
  read(j, "snapshot_dir", o.snapshot_dir);
  read(j, "snapshot_times", o.snapshot_times);
  read(j, "report_csv", o.report_csv);
  return o;
}

AdaptiveParams parse_adaptive(const json& j) {
  reject_unknown(j, "adaptive", {"rho", "tol", "r", "tau_min", "tau_max", "norm", "max_rejections"});
  AdaptiveParams p;
  read(j, "rho", p.rho);
  read(j, "tol", p.tol);
  read(j, "r", p.r);
  read(j, "tau_min", p.tau_min);
  read(j, "tau_max", p.tau_max);
  std::string norm = std::string(to_string(p.norm));
  read(j, "norm", norm);
  p.norm = parse_error_norm(norm);
  read(j, "max_rejections", p.max_rejections);
  return p;
}

ConvergeConfig parse_converge(const json& j) {
  reject_unknown(j, "converge", {"halvings", "reference_divisor"});
  ConvergeConfig c;
  read(j, "halvings", c.halvings);
  read(j, "reference_divisor", c.reference_divisor);
  return c;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  reject_unknown(j, "config",
                 {"model", "grid", "scheme", "tau", "T", "initial", "dealias", "outputs", "adaptive", "converge"});
  RunConfig c;
  if (j.contains("model")) c.model = parse_model(j.at("model"));
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
  read(j, "scheme", c.scheme);
  read(j, "tau", c.tau);
  read(j, "T", c.T);
  if (j.contains("initial")) c.initial = parse_initial(j.at("initial"));
  read(j, "dealias", c.dealias);
  if (j.contains("outputs")) c.outputs = parse_outputs(j.at("outputs"));
  if (j.contains("adaptive") && !j.at("adaptive").is_null()) c.adaptive = parse_adaptive(j.at("adaptive"));
  if (j.contains("converge")) c.converge = parse_converge(j.at("converge"));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str());
  // relative file references resolve against the config's directory
  const auto base = path.parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative() && !base.empty()) p = (base / p).string();
  };
  if (c.initial.type == "file") rebase(c.initial.path);
  if (c.scheme.find('/') != std::string::npos || c.scheme.ends_with(".txt")) {
    std::string scheme = c.scheme;
    rebase(scheme);
    if (std::filesystem::exists(scheme)) c.scheme = scheme;
  }
  return c;
}

std::string to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"name", c.model.name}, {"epsilon", c.model.epsilon}, {"M", c.model.M}};
  j["model"]["beta"] = c.model.beta ? json(*c.model.beta) : json(nullptr);
  j["grid"] = {{"dims", c.grid.dims}, {"n", c.grid.n}, {"lengths", c.grid.lengths}};
  j["scheme"] = c.scheme;
  j["tau"] = c.tau;
  j["T"] = c.T;
  j["initial"] = {{"type", c.initial.type}, {"amplitude", c.initial.amplitude}, {"mean", c.initial.mean},
                  {"modes", c.initial.modes},  {"seed", c.initial.seed},           {"path", c.initial.path}};
  j["dealias"] = c.dealias;
  j["outputs"] = {{"energy_csv", c.outputs.energy_csv},
                  {"steps_csv", c.outputs.steps_csv},
                  {"snapshot_dir", c.outputs.snapshot_dir},
                  {"snapshot_times", c.outputs.snapshot_times},
                  {"report_csv", c.outputs.report_csv}};
  if (c.adaptive) {
    const auto& a = *c.adaptive;
    j["adaptive"] = {{"rho", a.rho},         {"tol", a.tol},
                     {"r", a.r},             {"tau_min", a.tau_min},
                     {"tau_max", a.tau_max}, {"norm", std::string(to_string(a.norm))},
                     {"max_rejections", a.max_rejections}};
  } else {
    j["adaptive"] = nullptr;
  }
  j["converge"] = {{"halvings", c.converge.halvings}, {"reference_divisor", c.converge.reference_divisor}};
  return j.dump(2);
}

void RunConfig::validate() const {
  make_model(model);
  make_grid(grid);
  resolve_scheme(scheme);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("config: tau must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("config: T must be positive");
  if (initial.type == "file" && !std::filesystem::exists(initial.path)) {
    throw InvalidArgument("config: initial condition file not found: " + initial.path);
  }
  static const std::set<std::string> ic_types{"sin-product", "random", "constant", "file"};
  if (!ic_types.contains(initial.type)) {
    throw InvalidArgument("config: unknown initial type '" + initial.type +
                          "' (choices: sin-product, random, constant, file)");
  }
  if (adaptive) adaptive->validate();
  if (converge.halvings < 1) throw InvalidArgument("config: converge.halvings must be >= 1");
  if (converge.reference_divisor < 2) throw InvalidArgument("config: converge.reference_divisor must be >= 2");
}

Grid make_grid(const GridConfig& g) {
  const auto d = static_cast<std::size_t>(g.dims);
  if ((g.dims != 1 && g.dims != 2) || g.n.size() != d || g.lengths.size() != d) {
    throw InvalidArgument("grid: dims must be 1 or 2 with one n and one length per dimension");
  }
  return g.dims == 2 ? Grid::plane(g.n[0], g.n[1], g.lengths[0], g.lengths[1]) : Grid::line(g.n[0], g.lengths[0]);
}

ModelSpec make_model(const ModelConfig& m) { return make_model(m.name, m.epsilon, m.beta.value_or(-1.0), m.M); }

Field initial_field(const InitialCondition& ic, const Grid& grid) {
  if (ic.type == "sin-product") {
    if (static_cast<int>(ic.modes.size()) != grid.dims()) {
      throw InvalidArgument("sin-product: need one mode number per dimension");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double wx = two_pi * ic.modes[0] / grid.length(0);
    const double wy = grid.dims() == 2 ? two_pi * ic.modes[1] / grid.length(1) : 0.0;
    const bool two_d = grid.dims() == 2;
    return sample(grid, [&](double x, double y) {
      return ic.mean + ic.amplitude * std::sin(wx * x) * (two_d ? std::sin(wy * y) : 1.0);
    });
  }
  if (ic.type == "random") {
    UniformSource source(ic.seed);
    Field u(grid.points());
    for (auto& v : u) v = ic.mean + ic.amplitude * (2.0 * source.next() - 1.0);
    return u;
  }
  if (ic.type == "constant") return Field(grid.points(), ic.mean);
  if (ic.type == "file") {
    const Snapshot snap = read_snapshot(ic.path);
    std::vector<std::uint64_t> want;
    for (int d = 0; d < grid.dims(); ++d) want.push_back(grid.n(d));
    if (snap.dims != want) throw InvalidArgument("initial snapshot " + ic.path + " does not match the grid");
    return snap.values;
  }
  throw InvalidArgument("unknown initial type '" + ic.type + "' (choices: sin-product, random, constant, file)");
}

ConvergenceResult converge(const RunConfig& config, unsigned threads) {
  config.validate();
  const ModelSpec model = make_model(config.model);
  const Grid grid = make_grid(config.grid);
  const Tableau tableau = resolve_scheme(config.scheme);
  const Field u0 = initial_field(config.initial, grid);
  const int K = config.converge.halvings;

  std::vector<double> taus;
  for (int k = 0; k <= K; ++k) taus.push_back(config.tau / std::ldexp(1.0, k));
  ConvergenceResult result;
  result.reference_tau = taus.back() / config.converge.reference_divisor;
  taus.push_back(result.reference_tau);

  std::vector<Field> finals(taus.size());
  RecordOptions quiet;
  quiet.dealias = config.dealias;
  // the reference is the longest run; start it first
  parallel_for(
      taus.size(),
      [&](std::size_t i) {
        const std::size_t idx = taus.size() - 1 - i;
        finals[idx] = run(model, tableau, grid, u0, taus[idx], config.T, quiet).final_state;
      },
      threads == 0 ? worker_count() : threads);

  const Field& ref = finals.back();
  const double ref_inf = max_abs(ref);
  const double ref_l2 = l2_norm(grid, ref);
  for (int k = 0; k <= K; ++k) {
    Field diff(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = finals[k][i] - ref[i];
    ConvergenceRow row;
    row.tau = taus[k];
    row.linf_error = max_abs(diff) / ref_inf;
    row.l2_error = l2_norm(grid, diff) / ref_l2;
    if (k > 0) {
      const auto& prev = result.rows.back();
      row.linf_rate = std::log2(prev.linf_error / row.linf_error);
      row.l2_rate = std::log2(prev.l2_error / row.l2_error);
    }
    result.rows.push_back(row);
  }
  return result;
}

void write_convergence_csv(std::ostream& out, const ConvergenceResult& r) {
  out << "tau,linf_error,linf_rate,l2_error,l2_rate\n";
  for (const auto& row : r.rows) {
    out << format_double(row.tau) << ',' << format_double(row.linf_error) << ','
        << (row.linf_rate ? format_double(*row.linf_rate) : "") << ',' << format_double(row.l2_error) << ','
        << (row.l2_rate ? format_double(*row.l2_rate) : "") << '\n';
  }
}

void write_run_outputs(const RunConfig& config, const RunRecord& record) {
  if (config.outputs.energy_csv.empty()) return;
  std::ofstream out(config.outputs.energy_csv);
  if (!out) throw Error("cannot write " + config.outputs.energy_csv);
  write_energy_csv(out, record);
}

RecordOptions record_options(const RunConfig& config, const Grid& grid) {
  RecordOptions opt;
  opt.dealias = config.dealias;
  opt.snapshot_times = config.outputs.snapshot_times;
  std::sort(opt.snapshot_times.begin(), opt.snapshot_times.end());
  opt.keep_snapshots = false;
  if (!config.outputs.snapshot_dir.empty()) {
    const std::filesystem::path dir = config.outputs.snapshot_dir;
    std::filesystem::create_directories(dir);
    opt.on_snapshot = [dir, grid](double t, const Field& u) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_t%.6g.etdf", t);
      write_snapshot(dir / name, grid, u);
    };
  }
  return opt;
}

}  // namespace etdrk
