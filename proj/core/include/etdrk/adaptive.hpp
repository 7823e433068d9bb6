#pragma once

#include <string_view>
#include <vector>

#include "etdrk/stepper.hpp"

namespace etdrk {

enum class ErrorNorm { kL2, kLinf };

std::string_view to_string(ErrorNorm norm);
ErrorNorm parse_error_norm(std::string_view text);

struct AdaptiveParams {
  double rho = 0.9;
  double tol = 5e-3;
  double r = 1.0 / 3.0;
  double tau_min = 1e-4;
  double tau_max = 1e-2;
  ErrorNorm norm = ErrorNorm::kL2;
  int max_rejections = 25;

  /// Throws InvalidArgument unless 0 < tau_min <= tau_max, 0 < rho <= 1,
  /// r > 0, tol > 0.
  void validate() const;
};

/// ρ (tol/e)^r τ clamped to [tau_min, tau_max]; e = 0 gives tau_max.
double a_dp(double e, double tau, const AdaptiveParams& params);

/// Accept/reject logic of the ETD1 / ETDRK3 pair, independent of any PDE.
class AdaptiveController {
 public:
  explicit AdaptiveController(AdaptiveParams params);

  /// Step size for the next attempt; starts at tau_min.
  double tau() const { return tau_; }
  int consecutive_rejections() const { return rejections_; }

  struct Decision {
    bool accepted = false;
    double next_tau = 0.0;
  };

  /// Feeds the relative error of an attempt taken with step `tau_used`.
  /// Rejects while e > tol unless the proposal was already tau_min. Throws
  /// Error after max_rejections consecutive rejections.
  Decision observe(double e, double tau_used);

 private:
  AdaptiveParams params_;
  double tau_;
  int rejections_ = 0;
};

struct StepAttempt {
  long step = 0;  // index of the accepted step this attempt belongs to
  double t = 0.0;   // start time of the attempt
  double dt = 0.0;
  double e_rel = 0.0;
  bool accepted = false;
};

struct AdaptiveRecord {
  RunRecord record;
  std::vector<StepAttempt> attempts;
  long rejections = 0;
};

/// ETD1 and ed-etdrk3a from the same state, e = ‖U1 − U2‖ / ‖U2‖, keep U2.
/// Step sizes are adjusted near T so the run ends exactly at T.
AdaptiveRecord adaptive_run(const ModelSpec& model, const Grid& grid, std::span<const double> u0,
                            const AdaptiveParams& params, double T, const RecordOptions& options = {});

/// Columns step,t,dt,e_rel,accepted.
void write_step_csv(std::ostream& out, const AdaptiveRecord& record);

}  // namespace etdrk
