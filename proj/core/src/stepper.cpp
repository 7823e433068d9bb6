#include "etdrk/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "etdrk/csv.hpp"

namespace etdrk {

StepPlan make_plan(const ModelSpec& model, const Tableau& tableau, const Grid& grid, double tau, bool dealias) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("time step must be positive and finite");
  tableau.validate();
  StepPlan plan;
  plan.tableau = std::make_shared<const Tableau>(tableau);
  plan.model = std::make_shared<const ModelSpec>(model);
  plan.grid = grid;
  plan.tau = tau;
  plan.dealias = dealias;

  const std::size_t K = grid.spectral_points();
  const int s = tableau.stages();
  plan.z.resize(K);
  plan.G.resize(K);
  for (std::size_t q = 0; q < K; ++q) {
    const Wavevector k = grid.wavevector(q);
    plan.G[q] = model.G_hat(k);
    plan.z[q] = tau * plan.G[q] * model.L_hat(k);
    if (!std::isfinite(plan.z[q])) throw InvalidArgument("non-finite multiplier at spectral index " + std::to_string(q));
    if (plan.z[q] > 1e-12) {
      throw InvalidArgument("tau*G*L is positive at spectral index " + std::to_string(q) +
                            " (G must be <= 0 and L >= 0)");
    }
    plan.z[q] = std::min(plan.z[q], 0.0);
  }

  plan.chi_final.resize(K);
  plan.chi.assign(static_cast<std::size_t>(s), std::vector<double>(K));
  plan.a.resize(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    plan.a[i].resize(static_cast<std::size_t>(i));
    for (int j = 0; j < i; ++j)
      if (!tableau.a[i][j].is_zero()) plan.a[i][j].resize(K);
  }
  plan.b.resize(static_cast<std::size_t>(s));
  for (int j = 0; j < s; ++j)
    if (!tableau.b[j].is_zero()) plan.b[j].resize(K);

  // Many modes share |k| and hence z; evaluate each distinct z once.
  std::unordered_map<double, std::size_t> first_seen;
  first_seen.reserve(K);
  for (std::size_t q = 0; q < K; ++q) {
    auto [it, inserted] = first_seen.try_emplace(plan.z[q], q);
    const std::size_t src = it->second;
    if (!inserted) {
      plan.chi_final[q] = plan.chi_final[src];
      for (int i = 0; i < s; ++i) {
        plan.chi[i][q] = plan.chi[i][src];
        for (int j = 0; j < i; ++j)
          if (!plan.a[i][j].empty()) plan.a[i][j][q] = plan.a[i][j][src];
      }
      for (int j = 0; j < s; ++j)
        if (!plan.b[j].empty()) plan.b[j][q] = plan.b[j][src];
      continue;
    }
    const EvaluatedTableau ev = evaluate(tableau, plan.z[q]);
    plan.chi_final[q] = std::exp(plan.z[q]);
    for (int i = 0; i < s; ++i) {
      plan.chi[i][q] = ev.chi[i];
      for (int j = 0; j < i; ++j)
        if (!plan.a[i][j].empty()) plan.a[i][j][q] = ev.a(i, j);
    }
    for (int j = 0; j < s; ++j)
      if (!plan.b[j].empty()) plan.b[j][q] = ev.b[j];
  }
  return plan;
}

namespace detail {

void check_bounds(const ModelSpec& model, std::span<const double> u, int stage) {
  const double m = max_abs(u);
  if (!std::isfinite(m)) {
    throw DivergenceError("non-finite values in stage " + std::to_string(stage), stage);
  }
  if (model.bounded && m > 10.0 * model.M) {
    throw DivergenceError("max|u| = " + format_double(m) + " exceeds 10M in stage " + std::to_string(stage), stage);
  }
}

void capture_snapshots(const RecordOptions& options, std::size_t& next, double t, const Field& u,
                       RunRecord& record) {
  while (next < options.snapshot_times.size()) {
    const double ts = options.snapshot_times[next];
    if (t < ts - 1e-9 * std::max(1.0, std::abs(ts))) break;
    if (options.on_snapshot) options.on_snapshot(t, u);
    if (options.keep_snapshots) record.snapshots.push_back({t, u});
    ++next;
  }
}

}  // namespace detail

Field step(const StepPlan& plan, std::span<const double> u_n) {
  const Grid& grid = plan.grid;
  if (u_n.size() != grid.points()) throw InvalidArgument("step: field does not match the plan's grid");
  const Transform& tr = transform_for(grid);
  const ModelSpec& model = *plan.model;
  const int s = plan.tableau->stages();
  const std::size_t K = grid.spectral_points();
  const double tau = plan.tau;

  detail::check_bounds(model, u_n, 1);
  const SpectralField u_hat = tr.forward(u_n);
  std::vector<SpectralField> g_hat(static_cast<std::size_t>(s));
  SpectralField work(K);
  Field v(u_n.begin(), u_n.end());

  auto nonlinear = [&](int i) {
    g_hat[i] = tr.forward(nonlinear_g(model, grid, v));
    if (plan.dealias) dealias_two_thirds(grid, g_hat[i]);
  };

  nonlinear(0);
  for (int i = 1; i < s; ++i) {
    const auto& chi = plan.chi[i];
    for (std::size_t q = 0; q < K; ++q) work[q] = chi[q] * u_hat[q];
    for (int j = 0; j < i; ++j) {
      const auto& a = plan.a[i][j];
      if (a.empty()) continue;
      const auto& gj = g_hat[j];
      for (std::size_t q = 0; q < K; ++q) work[q] -= (tau * plan.G[q] * a[q]) * gj[q];
    }
    tr.backward(work, v);
    detail::check_bounds(model, v, i + 1);
    nonlinear(i);
  }

  for (std::size_t q = 0; q < K; ++q) work[q] = plan.chi_final[q] * u_hat[q];
  for (int j = 0; j < s; ++j) {
    const auto& b = plan.b[j];
    if (b.empty()) continue;
    const auto& gj = g_hat[j];
    for (std::size_t q = 0; q < K; ++q) work[q] -= (tau * plan.G[q] * b[q]) * gj[q];
  }
  Field out(grid.points());
  tr.backward(work, out);
  detail::check_bounds(model, out, s + 1);
  return out;
}

PlanCache::PlanCache(ModelSpec model, Tableau tableau, Grid grid, bool dealias, std::size_t capacity)
    : model_(std::make_shared<const ModelSpec>(std::move(model))),
      tableau_(std::make_shared<const Tableau>(std::move(tableau))),
      grid_(grid),
      dealias_(dealias),
      capacity_(std::max<std::size_t>(capacity, 1)) {}

const StepPlan& PlanCache::get(double tau) {
  for (auto it = plans_.begin(); it != plans_.end(); ++it) {
    if (it->tau == tau) {
      plans_.splice(plans_.begin(), plans_, it);
      return plans_.front();
    }
  }
  plans_.push_front(make_plan(*model_, *tableau_, grid_, tau, dealias_));
  ++builds_;
  if (plans_.size() > capacity_) plans_.pop_back();
  return plans_.front();
}

RunRecord run(const ModelSpec& model, const Tableau& tableau, const Grid& grid, std::span<const double> u0,
              double tau, double T, const RecordOptions& options) {
  if (!(tau > 0.0) || !(T >= tau * (1.0 - 1e-12)) || !std::isfinite(T)) {
    throw InvalidArgument("run requires T >= tau > 0");
  }
  if (u0.size() != grid.points()) throw InvalidArgument("run: initial field does not match grid");

  // whole steps, then one shortened step if T is not a multiple of τ
  auto full = static_cast<long long>(std::llround(T / tau));
  if (std::abs(static_cast<double>(full) * tau - T) > 1e-9 * T) full = static_cast<long long>(std::floor(T / tau));
  const double remainder = T - static_cast<double>(full) * tau;
  const bool partial = remainder > 1e-9 * T;

  RunRecord rec;
  Field u(u0.begin(), u0.end());
  std::size_t next_snapshot = 0;
  auto record = [&](double t, double dt) {
    rec.times.push_back(t);
    rec.energies.push_back(energy(model, grid, u));
    rec.max_norms.push_back(max_abs(u));
    if (dt > 0.0) rec.step_sizes.push_back(dt);
    detail::capture_snapshots(options, next_snapshot, t, u, rec);
  };
  record(0.0, 0.0);

  double t = 0.0;
  try {
    const StepPlan plan = make_plan(model, tableau, grid, tau, options.dealias);
    for (long long n = 1; n <= full; ++n) {
      u = step(plan, u);
      t = static_cast<double>(n) * tau;
      record(t, tau);
    }
    if (partial) {
      const StepPlan last = make_plan(model, tableau, grid, remainder, options.dealias);
      u = step(last, u);
      t = T;
      record(t, remainder);
    }
  } catch (const DivergenceError& e) {
    rec.final_state = u;
    throw RunDivergence(e, t, std::move(rec));
  }
  rec.final_state = std::move(u);
  return rec;
}

void write_energy_csv(std::ostream& out, const RunRecord& r) {
  out << "step,t,dt,energy,max_norm\n";
  for (std::size_t n = 0; n < r.times.size(); ++n) {
    const double dt = n == 0 ? 0.0 : r.step_sizes[n - 1];
    out << n << ',' << format_double(r.times[n]) << ',' << format_double(dt) << ','
        << format_double(r.energies[n]) << ',' << format_double(r.max_norms[n]) << '\n';
  }
}

}  // namespace etdrk
