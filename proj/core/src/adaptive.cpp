#include "etdrk/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "etdrk/csv.hpp"

namespace etdrk {

std::string_view to_string(ErrorNorm norm) { return norm == ErrorNorm::kL2 ? "l2" : "linf"; }

ErrorNorm parse_error_norm(std::string_view text) {
  if (text == "l2") return ErrorNorm::kL2;
  if (text == "linf") return ErrorNorm::kLinf;
  throw InvalidArgument("unknown norm '" + std::string(text) + "' (choices: l2, linf)");
}

void AdaptiveParams::validate() const {
  if (!(tau_min > 0.0) || !(tau_min <= tau_max) || !std::isfinite(tau_max)) {
    throw InvalidArgument("adaptive: need 0 < tau_min <= tau_max");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("adaptive: rho must lie in (0, 1]");
  if (!(r > 0.0)) throw InvalidArgument("adaptive: r must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("adaptive: tol must be positive");
  if (max_rejections < 1) throw InvalidArgument("adaptive: max_rejections must be >= 1");
}

double a_dp(double e, double tau, const AdaptiveParams& p) {
  if (!(tau > 0.0)) throw InvalidArgument("a_dp: tau must be positive");
  if (e < 0.0 || std::isnan(e)) throw InvalidArgument("a_dp: e must be non-negative");
  if (e == 0.0) return p.tau_max;
  const double proposal = p.rho * std::pow(p.tol / e, p.r) * tau;
  return std::clamp(proposal, p.tau_min, p.tau_max);
}

AdaptiveController::AdaptiveController(AdaptiveParams params) : params_(params), tau_(params.tau_min) {
  params_.validate();
}

AdaptiveController::Decision AdaptiveController::observe(double e, double tau_used) {
  const bool forced = tau_ <= params_.tau_min;
  const double next = a_dp(e, tau_used, params_);
  if (e > params_.tol && !forced) {
    ++rejections_;
    if (rejections_ >= params_.max_rejections) {
      throw Error("adaptive: " + std::to_string(rejections_) + " consecutive rejections (e=" + format_double(e) +
                  ", tau=" + format_double(tau_used) + ")");
    }
    tau_ = next;
    return {false, tau_};
  }
  rejections_ = 0;
  tau_ = next;
  return {true, tau_};
}

namespace {

double norm_of(const Grid& grid, std::span<const double> u, ErrorNorm norm) {
  return norm == ErrorNorm::kL2 ? l2_norm(grid, u) : max_abs(u);
}

/// Shrinks τ so that no step shorter than tau_min is left before T.
double landing_step(double tau, double remaining, const AdaptiveParams& p) {
  if (remaining < tau + p.tau_min) return remaining <= p.tau_max ? remaining : 0.5 * remaining;
  return tau;
}

}  // namespace

AdaptiveRecord adaptive_run(const ModelSpec& model, const Grid& grid, std::span<const double> u0,
                            const AdaptiveParams& params, double T, const RecordOptions& options) {
  params.validate();
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("adaptive_run requires T > 0");
  if (u0.size() != grid.points()) throw InvalidArgument("adaptive_run: initial field does not match grid");

  PlanCache low(model, builtin_scheme("etd1"), grid, options.dealias);
  PlanCache high(model, builtin_scheme("ed-etdrk3a"), grid, options.dealias);
  AdaptiveController controller(params);

  AdaptiveRecord out;
  RunRecord& rec = out.record;
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
  long n = 0;
  try {
    while (T - t > 1e-12 * T) {
      const double tau = landing_step(controller.tau(), T - t, params);
      const Field u1 = step(low.get(tau), u);
      Field u2 = step(high.get(tau), u);
      Field diff(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u1[i] - u2[i];
      const double num = norm_of(grid, diff, params.norm);
      const double den = norm_of(grid, u2, params.norm);
      const double e = num == 0.0 ? 0.0 : (den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
      const auto decision = controller.observe(e, tau);
      out.attempts.push_back({n + 1, t, tau, e, decision.accepted});
      if (!decision.accepted) {
        ++out.rejections;
        continue;
      }
      u = std::move(u2);
      ++n;
      t = (T - t - tau <= 1e-12 * T) ? T : t + tau;
      record(t, tau);
    }
  } catch (const DivergenceError& e) {
    rec.final_state = u;
    throw RunDivergence(e, t, std::move(rec));
  }
  rec.final_state = std::move(u);
  return out;
}

void write_step_csv(std::ostream& out, const AdaptiveRecord& r) {
  out << "step,t,dt,e_rel,accepted\n";
  for (const auto& a : r.attempts) {
    out << a.step << ',' << format_double(a.t) << ',' << format_double(a.dt) << ',' << format_double(a.e_rel) << ','
        << (a.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace etdrk
