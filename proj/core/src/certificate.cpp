#include "etdrk/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "etdrk/csv.hpp"
#include "etdrk/error.hpp"
#include "etdrk/parallel.hpp"

namespace etdrk {

namespace {

Matrix stacked_coefficients(const Tableau& t, double z) {
  const auto s = static_cast<std::size_t>(t.stages());
  Matrix p(s);
  for (std::size_t row = 0; row + 1 < s; ++row)
    for (std::size_t j = 0; j <= row; ++j) p(row, j) = t.a[row + 1][j](z);
  for (std::size_t j = 0; j < s; ++j) p(s - 1, j) = t.b[j](z);
  return p;
}

Matrix lower_inverse(const Matrix& p, double z) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::abs(p(i, i)) >= 1e-300)) {
      throw SingularMatrixError("P(z) singular at z=" + format_double(z) + ": |P_" +
                                std::to_string(i + 1) + std::to_string(i + 1) + "| < 1e-300");
    }
  }
  Matrix inv(n);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t i = col; i < n; ++i) {
      double acc = i == col ? 1.0 : 0.0;
      for (std::size_t k = col; k < i; ++k) acc -= p(i, k) * inv(k, col);
      inv(i, col) = acc / p(i, i);
    }
  }
  return inv;
}

double determinant(Matrix m) {
  const std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (m(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(pivot, c), m(col, c));
      det = -det;
    }
    det *= m(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      for (std::size_t c = col; c < n; ++c) m(r, c) -= f * m(col, c);
    }
  }
  return det;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw InvalidArgument(std::string(what) + ": non-finite matrix entry");
}

// ---------------------------------------------------------------------------
// Tail analysis. For z <= -Z0 every atom φ_k(sz) splits into an exact
// Laurent polynomial in w = 1/z plus e^{sz}(sz)^{-k}, which is bounded by
// e^{-sZ0} once sZ0 >= 1.

using Laurent = std::map<int, Rational>;

void add_into(Laurent& acc, const Laurent& x, const Rational& scale = Rational(1)) {
  for (const auto& [e, c] : x) {
    acc[e] += scale * c;
    if (acc[e].is_zero()) acc.erase(e);
  }
}

Laurent multiply(const Laurent& a, const Laurent& b) {
  Laurent out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      auto& slot = out[ea + eb];
      slot += ca * cb;
    }
  std::erase_if(out, [](const auto& kv) { return kv.second.is_zero(); });
  return out;
}

/// Σ |c_e| w0^e, an upper bound for |p(w)| on 0 < |w| <= w0 when all e >= 0
/// and the value at |w| = w0 otherwise.
double magnitude_bound(const Laurent& p, double w0) {
  double sum = 0.0;
  for (const auto& [e, c] : p) sum += std::abs(c.to_double()) * std::pow(w0, e);
  return sum;
}

/// Non-exponential part of φ_k(s z): −Σ_{j<k} s^{j−k}/j! · w^{k−j}.
Laurent atom_polynomial(const PhiAtom& atom) {
  Laurent out;
  for (int j = 0; j < atom.index; ++j) {
    out[atom.index - j] = -(Rational(1) / (pow(atom.scale, atom.index - j) * factorial(j)));
  }
  return out;
}

struct EntrySplit {
  Laurent poly;
  double remainder = 0.0;  // bound on |entry − poly| for z <= −Z0
};

EntrySplit split_entry(const CoefficientExpr& expr, double z0) {
  const double w0 = 1.0 / z0;
  EntrySplit out;
  for (const auto& m : expr.monomials()) {
    Laurent poly{{0, m.weight}};
    double with_exp = 1.0;
    double without_exp = 1.0;
    for (const auto& f : m.factors) {
      const Laurent p = atom_polynomial(f);
      const double sz = f.scale.to_double() * z0;
      const double eps = std::exp(-sz) * std::pow(sz, -f.index);
      const double bound = magnitude_bound(p, w0);
      with_exp *= bound + eps;
      without_exp *= bound;
      poly = multiply(poly, p);
    }
    add_into(out.poly, poly);
    out.remainder += std::abs(m.weight.to_double()) * (with_exp - without_exp);
  }
  return out;
}

Laurent laurent_det(const std::vector<std::vector<Laurent>>& m, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  Laurent det;
  do {
    int inversions = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) inversions += perm[i] > perm[j];
    Laurent term{{0, Rational(inversions % 2 == 0 ? 1 : -1)}};
    for (int i = 0; i < k && !term.empty(); ++i) term = multiply(term, m[i][perm[i]]);
    add_into(det, term);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

constexpr int kMaxTailStages = 6;

TailCheck tail_check(const Tableau& t, double z0) {
  TailCheck out;
  out.attempted = true;
  out.z_start = -z0;
  const int s = t.stages();
  if (s > kMaxTailStages) {
    out.note = "tail check limited to " + std::to_string(kMaxTailStages) + " stages";
    return out;
  }
  const double w0 = 1.0 / z0;
  try {
    std::vector<std::vector<EntrySplit>> p(s, std::vector<EntrySplit>(s));
    double s_min = std::numeric_limits<double>::infinity();
    auto scan_scales = [&](const CoefficientExpr& e) {
      for (const auto& m : e.monomials())
        for (const auto& f : m.factors) s_min = std::min(s_min, f.scale.to_double());
    };
    for (int row = 0; row + 1 < s; ++row)
      for (int j = 0; j <= row; ++j) {
        p[row][j] = split_entry(t.a[row + 1][j], z0);
        scan_scales(t.a[row + 1][j]);
      }
    for (int j = 0; j < s; ++j) {
      p[s - 1][j] = split_entry(t.b[j], z0);
      scan_scales(t.b[j]);
    }

    std::vector<Laurent> r(s);
    std::vector<double> r_bound(s), r_rem(s, 0.0);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        add_into(r[i], p[i][j].poly);
        r_rem[i] += p[i][j].remainder;
      }
      r_bound[i] = magnitude_bound(r[i], w0);
    }

    // Δ'_ij = z r_i r_j + Σ_{l<=j} P_il + Σ_{l<=i} P_jl
    const Laurent z_term{{-1, Rational(1)}};
    std::vector<std::vector<Laurent>> dp(s, std::vector<Laurent>(s));
    std::vector<std::vector<double>> dp_rem(s, std::vector<double>(s, 0.0));
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        Laurent e = multiply(z_term, multiply(r[i], r[j]));
        double rem = z0 * (r_bound[i] * r_rem[j] + r_bound[j] * r_rem[i] + r_rem[i] * r_rem[j]);
        for (int l = 0; l <= j; ++l) {
          add_into(e, p[i][l].poly);
          rem += p[i][l].remainder;
        }
        for (int l = 0; l <= i; ++l) {
          add_into(e, p[j][l].poly);
          rem += p[j][l].remainder;
        }
        dp[i][j] = std::move(e);
        dp_rem[i][j] = rem;
      }

    bool ok = true;
    int worst_growth = 0;
    for (int k = 1; k <= s; ++k) {
      const Laurent det = laurent_det(dp, k);
      if (det.empty()) {
        out.margins.push_back(-1.0);
        out.note = "exponential-free part of minor " + std::to_string(k) + " vanishes identically";
        ok = false;
        continue;
      }
      const auto [lo, lead] = *det.begin();
      const double lead_abs = std::abs(lead.to_double());
      double tail_sum = 0.0;
      for (const auto& [e, c] : det)
        if (e > lo) tail_sum += std::abs(c.to_double()) * std::pow(w0, e - lo);
      const double margin = 1.0 - tail_sum / lead_abs;
      out.margins.push_back(margin);
      const bool sign_ok = (lead.num() > 0) == (lo % 2 == 0);
      if (!sign_ok || margin <= 0.0) {
        out.note = "minor " + std::to_string(k) + " leading term w^" + std::to_string(lo) + " (" +
                   lead.str() + ") does not dominate for z <= " + format_double(-z0);
        ok = false;
        continue;
      }

      double a_max = 0.0;
      double d_max = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          a_max = std::max(a_max, magnitude_bound(dp[i][j], w0));
          d_max = std::max(d_max, dp_rem[i][j]);
        }
      const double kfact = std::tgamma(k + 1.0);
      const double perturbation = kfact * (std::pow(a_max + d_max, k) - std::pow(a_max, k));
      const double lower = lead_abs * margin * std::pow(w0, lo);
      if (!(perturbation < lower)) {
        out.note = "exponential remainder not negligible against minor " + std::to_string(k) +
                   " at z=" + format_double(-z0);
        ok = false;
      }
      worst_growth = std::max(worst_growth, 2 * k + std::abs(lo));
    }
    // The remainder/leading-term ratio behaves like Z^q e^{-s_min Z}; it is
    // decreasing for Z beyond q / s_min.
    if (ok && s_min * z0 < std::max(1.0, static_cast<double>(worst_growth + 2))) {
      out.note = "grid too short for the tail bound (need |z| >= " +
                 format_double((worst_growth + 2) / s_min) + ")";
      ok = false;
    }
    out.verified = ok;
    if (ok) out.note = "polynomial part dominates for all z <= " + format_double(-z0);
  } catch (const Error& e) {
    out.verified = false;
    out.note = std::string("tail check aborted: ") + e.what();
  }
  return out;
}

}  // namespace

StabilityMatrices build_matrices(const Tableau& t, double z) {
  if (!(z < 0.0) || !std::isfinite(z)) throw InvalidArgument("build_matrices requires finite z < 0");
  t.validate();
  const auto s = static_cast<std::size_t>(t.stages());
  StabilityMatrices m;
  m.z = z;
  m.P = stacked_coefficients(t, z);
  m.lower_ones = Matrix::lower_ones(s);
  m.ones = Matrix::ones(s);
  const Matrix p_inv = lower_inverse(m.P, z);
  m.delta = z * m.lower_ones + p_inv * m.lower_ones - (0.5 * z) * Matrix::identity(s);
  const Matrix pt = m.P.transpose();
  m.delta_prime = z * (m.P * m.ones * pt) + m.lower_ones * pt + m.P * m.lower_ones.transpose();
  return m;
}

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
  require_finite(m, "symmetric_eigenvalues");
  const std::size_t n = m.size();
  Matrix a = 0.5 * (m + m.transpose());
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-17 * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double min_sym_eig(const Matrix& m) {
  if (m.size() == 0) throw InvalidArgument("min_sym_eig: empty matrix");
  return symmetric_eigenvalues(m).front();
}

std::vector<double> leading_minors(const Matrix& m) {
  const std::size_t n = m.size();
  std::vector<double> out(n);
  for (std::size_t k = 1; k <= n; ++k) {
    Matrix block(k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) block(i, j) = m(i, j);
    out[k - 1] = determinant(block);
  }
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kGridPassTailUnverified: return "tail-unverified";
  }
  return "?";
}

std::vector<double> log_grid(double z_min, double z_max, int points) {
  if (!(z_min < z_max && z_max < 0.0)) throw InvalidArgument("certify grid requires z_min < z_max < 0");
  if (points < 2) throw InvalidArgument("certify grid requires at least 2 points");
  const double lo = std::log(-z_max);
  const double hi = std::log(-z_min);
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int p = 0; p < points; ++p) {
    // ascending z: start at the largest |z|
    const double frac = static_cast<double>(p) / (points - 1);
    grid[static_cast<std::size_t>(p)] = -std::exp(hi + (lo - hi) * frac);
  }
  grid.front() = z_min;
  grid.back() = z_max;
  return grid;
}

CertificateReport certify(const Tableau& t, const CertifyOptions& opt) {
  t.validate();
  CertificateReport rep;
  rep.scheme = t.name;
  rep.stages = t.stages();
  rep.z_grid = log_grid(opt.z_min, opt.z_max, opt.points);
  const std::size_t n = rep.z_grid.size();
  const int s = t.stages();
  rep.min_eig_sym_delta.resize(n);
  rep.minors_delta_prime.resize(n);
  rep.scaled_minors.resize(n);
  std::vector<double> condition(n);

  parallel_for(
      n,
      [&](std::size_t p) {
        const double z = rep.z_grid[p];
        const StabilityMatrices m = build_matrices(t, z);
        rep.min_eig_sym_delta[p] = min_sym_eig(m.delta);
        rep.minors_delta_prime[p] = leading_minors(m.delta_prime);
        auto& scaled = rep.scaled_minors[p];
        scaled.resize(static_cast<std::size_t>(s));
        for (int k = 1; k <= s; ++k) scaled[k - 1] = std::pow(z, 2 * k) * rep.minors_delta_prime[p][k - 1];
        condition[p] = m.P.norm() * lower_inverse(m.P, z).norm();
      },
      opt.threads);

  rep.max_condition = *std::max_element(condition.begin(), condition.end());
  rep.conditioning_ok = std::isfinite(rep.max_condition) && rep.max_condition < kConditionLimit;

  // Worst point: smallest eigenvalue of the symmetrizer; a non-positive
  // minor on an otherwise positive eigenvalue curve is reported instead.
  bool grid_pass = true;
  std::size_t worst = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (rep.min_eig_sym_delta[p] < rep.min_eig_sym_delta[worst]) worst = p;
  }
  rep.worst_z = rep.z_grid[worst];
  rep.worst_value = rep.min_eig_sym_delta[worst];
  if (!(rep.worst_value > 0.0)) grid_pass = false;
  if (grid_pass) {
    for (std::size_t p = 0; p < n && grid_pass; ++p)
      for (double d : rep.minors_delta_prime[p])
        if (!(d > 0.0)) {
          grid_pass = false;
          rep.worst_z = rep.z_grid[p];
          rep.worst_value = d;
          break;
        }
  }

  if (!grid_pass) {
    rep.verdict = Verdict::kFail;
    return rep;
  }
  if (opt.tail) rep.tail = tail_check(t, -opt.z_min);
  const bool tail_ok = opt.tail && rep.tail.verified;
  rep.verdict = tail_ok && rep.conditioning_ok ? Verdict::kPass : Verdict::kGridPassTailUnverified;
  return rep;
}

CertificateReport certify(const Tableau& t, double z_min, double z_max, int points) {
  CertifyOptions opt;
  opt.z_min = z_min;
  opt.z_max = z_max;
  opt.points = points;
  return certify(t, opt);
}

MinorCurves minor_curves(const Tableau& t, std::span<const double> z_grid) {
  t.validate();
  MinorCurves out;
  out.stages = t.stages();
  out.z.assign(z_grid.begin(), z_grid.end());
  out.minors.resize(z_grid.size());
  out.scaled.resize(z_grid.size());
  parallel_for(z_grid.size(), [&](std::size_t p) {
    const double z = z_grid[p];
    out.minors[p] = leading_minors(build_matrices(t, z).delta_prime);
    out.scaled[p].resize(out.minors[p].size());
    for (std::size_t k = 0; k < out.minors[p].size(); ++k)
      out.scaled[p][k] = std::pow(z, 2 * static_cast<int>(k + 1)) * out.minors[p][k];
  });
  return out;
}

void write_certificate_csv(std::ostream& out, const CertificateReport& rep) {
  const int s = rep.stages;
  std::vector<int> scaled_cols;
  if (s >= 2) scaled_cols.push_back(2);
  if (s > 2) scaled_cols.push_back(s);

  out << "z,min_eig";
  for (int k = 1; k <= s; ++k) out << ",minor" << k;
  for (int k : scaled_cols) out << ",scaled_minor" << k;
  out << '\n';
  for (std::size_t p = 0; p < rep.z_grid.size(); ++p) {
    out << format_double(rep.z_grid[p]) << ',' << format_double(rep.min_eig_sym_delta[p]);
    for (double d : rep.minors_delta_prime[p]) out << ',' << format_double(d);
    for (int k : scaled_cols) out << ',' << format_double(rep.scaled_minors[p][k - 1]);
    out << '\n';
  }
  out << "# verdict=" << to_string(rep.verdict) << " worst_z=" << format_double(rep.worst_z)
      << " worst_value=" << format_double(rep.worst_value) << '\n';
}

void write_minor_curves_csv(std::ostream& out, const MinorCurves& c) {
  out << 'z';
  for (int k = 1; k <= c.stages; ++k) out << ",minor" << k;
  for (int k = 1; k <= c.stages; ++k) out << ",scaled_minor" << k;
  out << '\n';
  for (std::size_t p = 0; p < c.z.size(); ++p) {
    out << format_double(c.z[p]);
    for (double d : c.minors[p]) out << ',' << format_double(d);
    for (double d : c.scaled[p]) out << ',' << format_double(d);
    out << '\n';
  }
}

}  // namespace etdrk
