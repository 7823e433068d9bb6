#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etdrk/spectral.hpp"

namespace etdrk {

// Gradient flows u_t = G(𝓛u + f(u)) with energy E(u) = ∫ ½(𝓛u)u + F(u),
// stabilized as u_t = G(Lu − g(u)) with L = β + 𝓛 and g = βu − f(u).
// G and 𝓛 are Fourier multipliers; f acts pointwise on u or on ∇u.

enum class NonlinearityKind {
  kPointwise,  // f(u), F(u)
  kGradient,   // f(∇u) = −∇·(q(|∇u|²) ∇u), F(|∇u|²)
};

struct ModelSpec {
  std::string name;
  double epsilon = 0.0;
  double beta = 0.0;
  double M = 2.0;

  Multiplier G_hat;     // <= 0
  Multiplier Lcal_hat;  // >= 0

  NonlinearityKind kind = NonlinearityKind::kPointwise;
  std::function<double(double)> f;  // pointwise f(u)
  std::function<double(double)> F;  // pointwise F(u)
  std::function<double(double)> flux_factor;         // q(s), s = |∇u|²
  std::function<double(double)> gradient_potential;  // F(s), s = |∇u|²

  /// Solutions stay in [-M, M]; |u| > 10M is treated as divergence.
  bool bounded = true;

  double L_hat(const Wavevector& k) const { return beta + Lcal_hat(k); }
};

const std::vector<std::string>& model_names();

/// allen-cahn, cahn-hilliard, mbe or pfc. Negative beta or M selects the
/// model's default (β: 2 for allen-cahn and cahn-hilliard, 3 for pfc, 1 for
/// mbe; M = 2).
ModelSpec make_model(std::string_view name, double epsilon, double beta = -1.0, double M = -1.0);

double default_beta(std::string_view name);

struct PotentialValue {
  double F = 0.0;
  double f = 0.0;
};

/// Double well ¼(u²−1)² continued quadratically beyond |u| = M, so that f̃
/// is globally Lipschitz with constant 3M²−1.
PotentialValue truncated_potential(double u, double M);

/// g = βu − f(u), or βu + ∇·(q ∇u) for gradient-type models.
Field nonlinear_g(const ModelSpec& model, const Grid& grid, std::span<const double> field);

/// E(u) = |Ω| (½ Σ_k 𝓛̂(k)|û_k|² + mean F).
double energy(const ModelSpec& model, const Grid& grid, std::span<const double> field);

}  // namespace etdrk
