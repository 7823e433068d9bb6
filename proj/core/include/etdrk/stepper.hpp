#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "etdrk/error.hpp"
#include "etdrk/models.hpp"
#include "etdrk/spectral.hpp"
#include "etdrk/tableau.hpp"

namespace etdrk {

/// Coefficient tables of one tableau for one model, grid and τ, evaluated at
/// z_k = τ Ĝ(k) L̂(k) for every spectral index k.
struct StepPlan {
  std::shared_ptr<const Tableau> tableau;
  std::shared_ptr<const ModelSpec> model;
  Grid grid;
  double tau = 0.0;
  bool dealias = false;

  std::vector<double> z;
  std::vector<double> G;                 // Ĝ(k)
  std::vector<double> chi_final;         // e^{z}
  std::vector<std::vector<double>> chi;  // [i][k] = e^{c_i z}
  /// a[i][j][k], j < i. Empty when the coefficient is identically zero.
  std::vector<std::vector<std::vector<double>>> a;
  std::vector<std::vector<double>> b;  // [j][k]
};

StepPlan make_plan(const ModelSpec& model, const Tableau& tableau, const Grid& grid, double tau,
                   bool dealias = false);

/// Non-finite values, or |u| > 10M for bounded models, during a step.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, int stage) : Error(message), stage_(stage) {}
  /// 1-based stage index; s+1 for the final combination.
  int stage() const { return stage_; }

 private:
  int stage_;
};

/// One ETDRK step u_n -> u_{n+1}.
Field step(const StepPlan& plan, std::span<const double> u_n);

/// Keeps the plans of the most recently used step sizes for one
/// (model, tableau, grid).
class PlanCache {
 public:
  PlanCache(ModelSpec model, Tableau tableau, Grid grid, bool dealias = false, std::size_t capacity = 4);
  const StepPlan& get(double tau);
  std::size_t builds() const { return builds_; }

 private:
  std::shared_ptr<const ModelSpec> model_;
  std::shared_ptr<const Tableau> tableau_;
  Grid grid_;
  bool dealias_;
  std::size_t capacity_;
  std::size_t builds_ = 0;
  std::list<StepPlan> plans_;  // most recent first
};

struct RecordOptions {
  /// Times at which to capture the solution; each is taken at the first
  /// step that reaches it.
  std::vector<double> snapshot_times;
  bool keep_snapshots = true;
  std::function<void(double t, const Field& u)> on_snapshot;
  bool dealias = false;
};

struct TimedField {
  double t = 0.0;
  Field u;
};

struct RunRecord {
  std::vector<double> times;       // initial state plus every accepted step
  std::vector<double> energies;    // same length as times
  std::vector<double> max_norms;   // same length as times
  std::vector<double> step_sizes;  // one per accepted step
  std::vector<TimedField> snapshots;
  Field final_state;
};

/// Run aborted by divergence; carries everything recorded up to the failure.
class RunDivergence : public DivergenceError {
 public:
  RunDivergence(const DivergenceError& cause, double t, RunRecord partial)
      : DivergenceError(std::string(cause.what()) + " at t=" + std::to_string(t), cause.stage()),
        t_(t),
        partial_(std::move(partial)) {}
  double time() const { return t_; }
  const RunRecord& partial() const { return partial_; }

 private:
  double t_;
  RunRecord partial_;
};

/// Advances u0 to time T with step τ; the last step is shortened to land on T.
RunRecord run(const ModelSpec& model, const Tableau& tableau, const Grid& grid, std::span<const double> u0,
              double tau, double T, const RecordOptions& options = {});

/// Columns step,t,dt,energy,max_norm; row 0 is the initial state (dt = 0).
void write_energy_csv(std::ostream& out, const RunRecord& record);

namespace detail {
/// Records a snapshot for every pending time <= t.
void capture_snapshots(const RecordOptions& options, std::size_t& next, double t, const Field& u,
                       RunRecord& record);
void check_bounds(const ModelSpec& model, std::span<const double> u, int stage);
}  // namespace detail

}  // namespace etdrk
