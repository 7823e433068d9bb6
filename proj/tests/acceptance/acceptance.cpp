// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   etdrk_acceptance [--criterion N]... [--artifacts DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "etdrk/adaptive.hpp"
#include "etdrk/certificate.hpp"
#include "etdrk/harness.hpp"
#include "etdrk/phi.hpp"
#include "etdrk/stepper.hpp"
#include "etdrk/tableau.hpp"
#include "phi_oracle.hpp"

using namespace etdrk;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
  }
  void note(const std::string& what) { notes.push_back(what); }
};

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

std::filesystem::path g_artifacts = std::filesystem::temp_directory_path() / "etdrk_acceptance";

Field random_ic(const Grid& grid, double mean, double amplitude, std::uint64_t seed) {
  InitialCondition ic;
  ic.type = "random";
  ic.mean = mean;
  ic.amplitude = amplitude;
  ic.seed = seed;
  return initial_field(ic, grid);
}

double max_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool non_increasing(const std::vector<double>& e, double* worst = nullptr) {
  bool ok = true;
  double w = -1e300;  // largest raw increase
  for (std::size_t n = 1; n < e.size(); ++n) {
    const double rise = e[n] - e[n - 1];
    w = std::max(w, rise);
    ok = ok && rise <= 1e-9 * (1 + std::abs(e[n - 1]));
  }
  if (worst) *worst = w;
  return ok;
}

const std::vector<std::string> kPassing{"etd1", "etdrk2", "ed-etdrk3a", "ed-etdrk3b"};
const std::vector<std::string> kFailing{"cm-etdrk3", "cm-etdrk4", "krogstad-etdrk4"};

// ---------------------------------------------------------------------------

Outcome certificate_signs() {
  Outcome out;
  for (const auto& name : kPassing) {
    const auto r = certify(builtin_scheme(name));
    out.require(r.verdict == Verdict::kPass, name + " verdict " + std::string(to_string(r.verdict)));
  }
  for (const auto& name : kFailing) {
    const auto r = certify(builtin_scheme(name));
    out.require(r.verdict == Verdict::kFail,
                name + " verdict " + std::string(to_string(r.verdict)) + fmt(" worst z=%.3g", r.worst_z));
  }
  const auto cm3 = certify(builtin_scheme("cm-etdrk3"));
  const auto it = std::min_element(cm3.min_eig_sym_delta.begin(), cm3.min_eig_sym_delta.end());
  const auto idx = static_cast<std::size_t>(it - cm3.min_eig_sym_delta.begin());
  out.require(idx + 1 == cm3.z_grid.size(),
              fmt("cm-etdrk3 most negative eigenvalue %.4g at z=%.3g", *it, cm3.z_grid[idx]));
  return out;
}

std::vector<double> linspace(double lo, double hi, int n, bool include_hi) {
  std::vector<double> z(static_cast<std::size_t>(n));
  const int div = include_hi ? n - 1 : n;
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / div;
  return z;
}

Outcome scaled_minor_bounds() {
  Outcome out;
  const Tableau t = builtin_scheme("ed-etdrk3a");
  struct Bound {
    const char* label;
    double lo, hi;
    bool closed;  // include hi
    int k;        // minor order
    bool scaled;
    double bound;
  };
  const std::vector<Bound> bounds{
      {"z^4 Det2 on [-3,-1]", -3.0, -1.0, true, 2, true, 0.2},
      {"Det2 on [-1,0)", -1.0, 0.0, false, 2, false, 0.2},
      {"z^6 Det3 on [-6,-1]", -6.0, -1.0, true, 3, true, 0.1},
      {"Det3 on [-1,0)", -1.0, 0.0, false, 3, false, 0.1},
  };
  for (const auto& b : bounds) {
    const auto grid = linspace(b.lo, b.hi, 500, b.closed);
    const auto curves = minor_curves(t, grid);
    double lowest = 1e300;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto& row = b.scaled ? curves.scaled[p] : curves.minors[p];
      lowest = std::min(lowest, row[static_cast<std::size_t>(b.k - 1)]);
    }
    out.require(lowest >= b.bound - 1e-12, std::string(b.label) + fmt(" min %.6g", lowest) + fmt(" (bound %g)", b.bound));
  }
  return out;
}

Outcome convergence_tables() {
  Outcome out;
  struct Published {
    const char* model;
    double linf, l2;
  };
  for (const Published& p : {Published{"allen-cahn", 2.6852e-08, 2.0736e-09}, Published{"cahn-hilliard", 4.2646e-07, 3.7881e-08}}) {
    RunConfig c;
    c.model.name = p.model;
    c.model.epsilon = 0.5;
    c.grid.n = {128, 128};
    c.tau = 0.01;
    c.T = 0.32;
    c.converge.halvings = 4;
    const auto r = converge(c);
    std::ostringstream rates;
    bool ok = true;
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
      const double a = *r.rows[k].linf_rate, b = *r.rows[k].l2_rate;
      rates << fmt(" %.4f/%.4f", a, b);
      ok = ok && std::abs(a - 3.0) <= 0.1 && std::abs(b - 3.0) <= 0.1;
    }
    out.require(ok, std::string(p.model) + " rates (Linf/L2):" + rates.str());
    const double ratio = r.rows[0].linf_error / p.linf;
    out.require(ratio >= 0.1 && ratio <= 10.0,
                std::string(p.model) + fmt(" Linf error at tau=0.01 %.4e (%.2fx the published value)",
                                           r.rows[0].linf_error, ratio));
    out.note(std::string(p.model) + fmt(" relative L2 error at tau=0.01 %.4e (published %.4e; normalisation differs)",
                                        r.rows[0].l2_error, p.l2));
    std::ofstream csv(g_artifacts / (std::string("convergence_") + p.model + ".csv"));
    write_convergence_csv(csv, r);
  }
  return out;
}

Outcome energy_decay() {
  Outcome out;
  struct Case {
    const char* model;
    double epsilon, beta, length;
    double mean, amplitude;
  };
  const std::vector<Case> cases{
      {"allen-cahn", 0.1, 2.0, kTwoPi, 0.0, 0.5},
      {"cahn-hilliard", 0.5, 2.0, kTwoPi, 0.0, 0.5},
      {"pfc", 0.025, 3.0, 32.0, 0.05, 0.5},
  };
  for (const auto& c : cases) {
    const Grid grid = Grid::square(128, c.length);
    const ModelSpec model = make_model(c.model, c.epsilon, c.beta);
    const Field u0 = random_ic(grid, c.mean, c.amplitude, 42);
    for (const auto& scheme : kPassing) {
      const Tableau t = builtin_scheme(scheme);
      for (double tau : {0.01, 0.1, 1.0, 10.0}) {
        const auto rec = run(model, t, grid, u0, tau, 200 * tau);
        double worst = 0.0;
        const bool ok = non_increasing(rec.energies, &worst);
        if (!ok) out.require(false, std::string(c.model) + " " + scheme + fmt(" tau=%g rise %.3g", tau, worst));
      }
    }
    out.require(true, std::string(c.model) + " 4 schemes x 4 step sizes x 200 steps");
  }
  return out;
}

Outcome conservation_and_equilibria() {
  Outcome out;
  const Grid grid = Grid::square(128, kTwoPi);
  for (const char* name : {"cahn-hilliard", "pfc"}) {
    const ModelSpec m = make_model(name, name == std::string("pfc") ? 0.025 : 0.5);
    const Field u0 = random_ic(grid, 0.05, 0.5, 7);
    const StepPlan plan = make_plan(m, builtin_scheme("ed-etdrk3a"), grid, 0.1);
    Field u = u0;
    double drift = 0.0;
    const double m0 = mean(u0);
    for (int n = 0; n < 1000; ++n) {
      u = step(plan, u);
      drift = std::max(drift, std::abs(mean(u) - m0));
    }
    out.require(drift <= 1e-12, std::string(name) + fmt(" mass drift %.3g over 1000 steps", drift));
  }

  const ModelSpec ac = make_model("allen-cahn", 0.5, 2.0);
  const Field one(grid.points(), 1.0);
  double fixed = 0.0;
  for (const auto& scheme : builtin_scheme_names())
    for (double tau : {0.01, 1.0, 10.0})
      fixed = std::max(fixed, max_diff(step(make_plan(ac, builtin_scheme(scheme), grid, tau), one), one));
  out.require(fixed <= 1e-12, fmt("u=1 fixed by all schemes, max change %.3g", fixed));

  double linear = 0.0;
  for (const char* name : {"allen-cahn", "cahn-hilliard", "pfc"}) {
    ModelSpec m = make_model(name, 0.3, 2.0);
    m.f = [](double u) { return 2.0 * u; };
    const Field u0 = sample(grid, [](double x, double y) { return 0.7 * std::sin(x) * std::cos(3 * y) + 0.2; });
    for (double tau : {0.01, 1.0}) {
      const Field exact = transform_backward(grid, apply_multiplier(grid, [&](const Wavevector& k) {
        return std::exp(tau * m.G_hat(k) * m.L_hat(k));
      }, transform_forward(grid, u0)));
      for (const auto& scheme : builtin_scheme_names())
        linear = std::max(linear, max_diff(step(make_plan(m, builtin_scheme(scheme), grid, tau), u0), exact));
    }
  }
  out.require(linear <= 1e-12, fmt("linear flows one-step error %.3g", linear));
  return out;
}

Outcome adaptive_controller() {
  Outcome out;
  const Grid grid = Grid::square(128, kTwoPi);
  const ModelSpec m = make_model("cahn-hilliard", 0.1, 2.0);
  const Field u0 = random_ic(grid, 0.0, 0.05, 42);
  const double T = 3.0;
  AdaptiveParams p;  // ρ = 0.9, tol = 5e-3, r = 1/3, τ ∈ [1e-4, 1e-2]
  const auto ad = adaptive_run(m, grid, u0, p, T);
  const auto& rec = ad.record;
  {
    std::ofstream steps(g_artifacts / "adaptive_steps.csv");
    write_step_csv(steps, ad);
    std::ofstream energy(g_artifacts / "adaptive_energy.csv");
    write_energy_csv(energy, rec);
  }

  bool bounded = true;
  for (double dt : rec.step_sizes) bounded = bounded && dt >= p.tau_min && dt <= p.tau_max;
  out.require(bounded, fmt("%g accepted steps, %g rejections, all within [tau_min, tau_max]",
                           static_cast<double>(rec.step_sizes.size()), static_cast<double>(ad.rejections)));

  // the initial transient is taken as the first third of the run
  std::size_t late = 0, near_max = 0;
  for (std::size_t n = 0; n < rec.step_sizes.size(); ++n) {
    if (rec.times[n] < T / 3) continue;
    ++late;
    near_max += rec.step_sizes[n] >= 0.5 * p.tau_max;
  }
  const double fraction = late ? static_cast<double>(near_max) / static_cast<double>(late) : 0.0;
  out.require(fraction >= 0.6, fmt("%.1f%% of steps after t=T/3 within 2x of tau_max", 100 * fraction));

  const Field ref = run(m, builtin_scheme("ed-etdrk3a"), grid, u0, p.tau_min, T).final_state;
  Field diff(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = rec.final_state[i] - ref[i];
  const double rel = l2_norm(grid, diff) / l2_norm(grid, ref);
  out.require(rel <= 2.5e-2, fmt("relative L2 distance to the tau=1e-4 reference %.4g", rel));

  double worst = 0.0;
  const bool monotone = non_increasing(rec.energies, &worst);
  out.note(std::string(monotone ? "energy non-increasing" : "energy rises") +
           fmt(" (largest step-to-step change %.3g)", worst));
  return out;
}

Outcome oracle_equivalence() {
  Outcome out;
  const Grid grid = Grid::square(64, kTwoPi);
  const ModelSpec ac = make_model("allen-cahn", 0.5, 2.0);
  const Tableau etd1 = builtin_scheme("etd1"), etdrk2 = builtin_scheme("etdrk2");
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> tau_dist(-3.0, 1.0);
  double worst1 = 0.0, worst2 = 0.0;
  for (int s = 0; s < 50; ++s) {
    const double tau = std::pow(10.0, tau_dist(rng));
    const Field u = random_ic(grid, 0.0, 1.0, 100 + static_cast<std::uint64_t>(s));
    const auto u_hat = transform_forward(grid, u);
    const auto g1 = transform_forward(grid, nonlinear_g(ac, grid, u));
    // e^{τGL}u + (I − e^{τGL})L⁻¹g(u), with G = −1
    SpectralField v(u_hat.size());
    for (std::size_t q = 0; q < v.size(); ++q) {
      const double L = ac.L_hat(grid.wavevector(q));
      v[q] = std::exp(-tau * L) * u_hat[q] - std::expm1(-tau * L) / L * g1[q];
    }
    const Field etd1_closed = transform_backward(grid, v);
    worst1 = std::max(worst1, max_diff(step(make_plan(ac, etd1, grid, tau), u), etd1_closed));

    const auto g2 = transform_forward(grid, nonlinear_g(ac, grid, etd1_closed));
    SpectralField w(u_hat.size());
    for (std::size_t q = 0; q < w.size(); ++q) {
      const double L = ac.L_hat(grid.wavevector(q));
      const double z = -tau * L;
      const double p2 = (std::expm1(z) - z) / (z * z);
      w[q] = v[q] + tau * p2 * (g2[q] - g1[q]);
    }
    worst2 = std::max(worst2, max_diff(step(make_plan(ac, etdrk2, grid, tau), u), transform_backward(grid, w)));
  }
  out.require(worst1 <= 1e-12, fmt("etd1 vs closed form over 50 states, max %.3g", worst1));
  out.require(worst2 <= 1e-12, fmt("etdrk2 vs closed form over 50 states, max %.3g", worst2));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double routes = 0.0, production = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double z = -std::exp(std::log(1e-8) + unit(rng) * (std::log(50.0) - std::log(1e-8)));
    const int k = 1 + i % 4;
    const auto taylor = oracle::phi_taylor(k, z);
    const auto recursion = oracle::phi_recursion(k, z);
    routes = std::max(routes, static_cast<double>(abs(taylor - recursion) / abs(taylor)));
    production = std::max(production, oracle::relative_error(phi(k, z), taylor));
    production = std::max(production, oracle::relative_error(phi(k, z), recursion));
  }
  out.require(routes <= 1e-10, fmt("Taylor vs recursion over 1000 points, max relative %.3g", routes));
  out.require(production <= 1e-10, fmt("production phi vs both routes, max relative %.3g", production));
  return out;
}

Outcome pfc_long_run() {
  Outcome out;
  const Grid grid = Grid::square(256, 128.0);
  const ModelSpec m = make_model("pfc", 0.025, 3.0);
  const Field u0 = random_ic(grid, 0.05, 0.01, 1);
  const auto dir = g_artifacts / "pfc_snapshots";
  std::filesystem::create_directories(dir);
  RecordOptions opt;
  opt.snapshot_times = {50, 100, 200, 500, 1000, 2000};
  opt.keep_snapshots = false;
  int written = 0;
  opt.on_snapshot = [&](double t, const Field& u) {
    char name[64];
    std::snprintf(name, sizeof name, "pfc_t%g.etdf", t);
    write_snapshot(dir / name, grid, u);
    ++written;
  };
  const auto rec = run(m, builtin_scheme("ed-etdrk3a"), grid, u0, 0.1, 2000.0, opt);
  {
    std::ofstream energy(g_artifacts / "pfc_energy.csv");
    write_energy_csv(energy, rec);
  }
  out.require(written == 6, fmt("%g snapshots written", written));

  // The energy is bounded below by 0 (both the quadratic part and the
  // truncated ¼(u²−ε)² density are non-negative), so any eventual drop is at
  // most E(0).
  const double e0 = rec.energies.front(), e_end = rec.energies.back();
  const double fraction = (e0 - e_end) / e0;
  out.require(fraction >= 0.9, fmt("E(0)=%.6g, E(2000)=%.6g", e0, e_end) +
                                   fmt(": drop is at least %.1f%% of any eventual drop", 100 * fraction));
  double worst = 0.0;
  const bool monotone = non_increasing(rec.energies, &worst);
  out.note(std::string(monotone ? "energy non-increasing" : "energy rises") +
           fmt(" over %g steps, largest step-to-step change %.3g", static_cast<double>(rec.step_sizes.size()), worst));
  return out;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0: none stated
  std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.insert(std::stoi(argv[++i]));
    } else if (arg == "--artifacts" && i + 1 < argc) {
      g_artifacts = argv[++i];
    } else {
      std::cerr << "usage: etdrk_acceptance [--criterion N]... [--artifacts DIR]\n";
      return 3;
    }
  }
  std::filesystem::create_directories(g_artifacts);

  const std::vector<Criterion> criteria{
      {1, "certificate sign reproduction", 10, certificate_signs},
      {2, "scaled-minor bounds for ed-etdrk3a", 5, scaled_minor_bounds},
      {3, "third-order self-convergence", 120, convergence_tables},
      {4, "unconditional energy decay", 300, energy_decay},
      {5, "conservation and equilibria", 60, conservation_and_equilibria},
      {6, "adaptive controller", 300, adaptive_controller},
      {7, "oracle equivalence", 10, oracle_equivalence},
      {8, "long PFC run energy drop", 0, pfc_long_run},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0) o.require(secs < c.budget_seconds, fmt("runtime %.1f s (budget %g s)", secs, c.budget_seconds));
    for (const auto& n : o.notes) std::cout << "    " << n << '\n';
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << fmt(" [%.1f s]", secs)
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
