#include "etdrk/models.hpp"

#include <cmath>

#include "etdrk/error.hpp"

namespace etdrk {

namespace {

void require_parameters(double epsilon, double beta, double M) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be non-negative");
  if (!(M >= 1.0) || !std::isfinite(M)) throw InvalidArgument("M must be at least 1");
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"allen-cahn", "cahn-hilliard", "mbe", "pfc"};
  return names;
}

double default_beta(std::string_view name) {
  if (name == "allen-cahn" || name == "cahn-hilliard") return 2.0;
  if (name == "pfc") return 3.0;
  if (name == "mbe") return 1.0;
  throw InvalidArgument("unknown model '" + std::string(name) +
                        "' (choices: allen-cahn, cahn-hilliard, mbe, pfc)");
}

PotentialValue truncated_potential(double u, double M) {
  if (std::abs(u) <= M) {
    const double w = u * u - 1.0;
    return {0.25 * w * w, u * u * u - u};
  }
  const double sgn = u > 0.0 ? 1.0 : -1.0;
  const double M2 = M * M;
  const double M3 = M2 * M;
  return {0.5 * (3.0 * M2 - 1.0) * u * u - 2.0 * sgn * M3 * u + 0.25 * (3.0 * M2 * M2 + 1.0),
          (3.0 * M2 - 1.0) * u - 2.0 * sgn * M3};
}

ModelSpec make_model(std::string_view name, double epsilon, double beta, double M) {
  if (beta < 0.0) beta = default_beta(name);
  if (M < 0.0) M = 2.0;
  require_parameters(epsilon, beta, M);

  ModelSpec m;
  m.name = std::string(name);
  m.epsilon = epsilon;
  m.beta = beta;
  m.M = M;
  const double eps2 = epsilon * epsilon;

  if (name == "allen-cahn" || name == "cahn-hilliard") {
    if (name == "allen-cahn") {
      m.G_hat = [](const Wavevector&) { return -1.0; };
    } else {
      m.G_hat = [](const Wavevector& k) { return -k.norm2(); };
    }
    m.Lcal_hat = [eps2](const Wavevector& k) { return eps2 * k.norm2(); };
    m.f = [M](double u) { return truncated_potential(u, M).f; };
    m.F = [M](double u) { return truncated_potential(u, M).F; };
  } else if (name == "pfc") {
    // F(u) = ¼(u²−ε)² = F̃(u) + (1−ε)u²/2 + (ε²−1)/4 with the truncated well
    m.G_hat = [](const Wavevector& k) { return -k.norm2(); };
    m.Lcal_hat = [](const Wavevector& k) {
      const double w = 1.0 - k.norm2();
      return w * w;
    };
    m.f = [M, epsilon](double u) { return truncated_potential(u, M).f + (1.0 - epsilon) * u; };
    m.F = [M, epsilon](double u) {
      return truncated_potential(u, M).F + 0.5 * (1.0 - epsilon) * u * u + 0.25 * (epsilon * epsilon - 1.0);
    };
  } else if (name == "mbe") {
    m.G_hat = [](const Wavevector&) { return -1.0; };
    m.Lcal_hat = [eps2](const Wavevector& k) {
      const double k2 = k.norm2();
      return eps2 * k2 * k2;
    };
    m.kind = NonlinearityKind::kGradient;
    m.flux_factor = [](double s) { return 1.0 / (1.0 + s); };
    m.gradient_potential = [](double s) { return -0.5 * std::log1p(s); };
    m.bounded = false;
  } else {
    default_beta(name);  // throws the enumerated-choices error
  }
  return m;
}

Field nonlinear_g(const ModelSpec& model, const Grid& grid, std::span<const double> field) {
  if (field.size() != grid.points()) throw InvalidArgument("nonlinear_g: field does not match grid");
  Field g(field.size());
  if (model.kind == NonlinearityKind::kPointwise) {
    for (std::size_t i = 0; i < field.size(); ++i) g[i] = model.beta * field[i] - model.f(field[i]);
    return g;
  }
  auto grad = gradient(grid, field);
  for (std::size_t i = 0; i < field.size(); ++i) {
    double s = 0.0;
    for (const auto& c : grad) s += c[i] * c[i];
    const double q = model.flux_factor(s);
    for (auto& c : grad) c[i] *= q;
  }
  const Field div = divergence(grid, grad);
  for (std::size_t i = 0; i < field.size(); ++i) g[i] = model.beta * field[i] + div[i];
  return g;
}

double energy(const ModelSpec& model, const Grid& grid, std::span<const double> field) {
  if (field.size() != grid.points()) throw InvalidArgument("energy: field does not match grid");
  const SpectralField u_hat = transform_forward(grid, field);
  double quadratic = 0.0;
  for (std::size_t q = 0; q < u_hat.size(); ++q) {
    quadratic += grid.multiplicity(q) * model.Lcal_hat(grid.wavevector(q)) * std::norm(u_hat[q]);
  }
  double potential = 0.0;
  if (model.kind == NonlinearityKind::kPointwise) {
    for (double u : field) potential += model.F(u);
  } else {
    const auto grad = gradient(grid, field);
    for (std::size_t i = 0; i < field.size(); ++i) {
      double s = 0.0;
      for (const auto& c : grad) s += c[i] * c[i];
      potential += model.gradient_potential(s);
    }
  }
  potential /= static_cast<double>(field.size());
  return grid.measure() * (0.5 * quadratic + potential);
}

}  // namespace etdrk
