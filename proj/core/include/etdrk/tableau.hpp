#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etdrk/dense.hpp"
#include "etdrk/rational.hpp"

namespace etdrk {

/// φ_index(scale · z).
struct PhiAtom {
  int index = 0;
  Rational scale{1};

  friend bool operator==(const PhiAtom&, const PhiAtom&) = default;
  friend auto operator<=>(const PhiAtom&, const PhiAtom&) = default;
};

/// weight · Π factors. An empty factor list is a constant.
struct Monomial {
  Rational weight{1};
  std::vector<PhiAtom> factors;
};

/// A tableau coefficient as a function of z: a finite sum of rational
/// multiples of products of φ atoms. Linear combinations of φ_i(c z) are the
/// common case; products appear only in a few classical schemes.
class CoefficientExpr {
 public:
  CoefficientExpr() = default;

  static CoefficientExpr constant(Rational value);
  static CoefficientExpr phi(int index, Rational scale = Rational(1), Rational weight = Rational(1));

  const std::vector<Monomial>& monomials() const { return monomials_; }
  bool is_zero() const;
  int max_phi_index() const;

  double operator()(double z) const;

  /// Exact Taylor coefficients t_0..t_degree of the expansion about z = 0.
  std::vector<Rational> taylor(int degree) const;

  /// Like terms merged, factors sorted, zero terms dropped.
  CoefficientExpr normalized() const;

  /// Text form, e.g. "3/4*phi1(z)-phi2(z)" or "4/9*phi2(2/3*z)".
  std::string str() const;
  static CoefficientExpr parse(std::string_view text);

  CoefficientExpr& operator+=(const CoefficientExpr& o);
  CoefficientExpr& operator-=(const CoefficientExpr& o);
  CoefficientExpr& operator*=(const CoefficientExpr& o);
  CoefficientExpr& operator*=(const Rational& s);

  friend CoefficientExpr operator+(CoefficientExpr a, const CoefficientExpr& b) { return a += b; }
  friend CoefficientExpr operator-(CoefficientExpr a, const CoefficientExpr& b) { return a -= b; }
  friend CoefficientExpr operator*(CoefficientExpr a, const CoefficientExpr& b) { return a *= b; }
  friend CoefficientExpr operator*(const Rational& s, CoefficientExpr a) { return a *= s; }
  friend CoefficientExpr operator-(CoefficientExpr a) { return a *= Rational(-1); }

  /// Structural equality after normalisation.
  friend bool operator==(const CoefficientExpr& a, const CoefficientExpr& b);

 private:
  std::vector<Monomial> monomials_;
};

/// An explicit exponential Runge–Kutta scheme
///
///   v_1 = u_n
///   v_i = χ_i(τGL) u_n − τ Σ_{j<i} a_ij(τGL) G g(v_j)
///   u_{n+1} = χ(τGL) u_n − τ Σ_j b_j(τGL) G g(v_j)
///
/// with χ(z) = e^z and χ_i(z) = e^{c_i z}.
struct Tableau {
  std::string name;
  std::vector<Rational> c;
  /// a[i][j] for j < i; a[0] is empty.
  std::vector<std::vector<CoefficientExpr>> a;
  std::vector<CoefficientExpr> b;
  int claimed_order = 1;

  int stages() const { return static_cast<int>(c.size()); }
  /// Shape checks: c_1 = 0, strictly lower a, |b| = s. Throws InvalidArgument.
  void validate() const;
};

const std::vector<std::string>& builtin_scheme_names();

/// One of etd1, etdrk2, cm-etdrk3, ed-etdrk3a, ed-etdrk3b, cm-etdrk4,
/// krogstad-etdrk4. Throws InvalidArgument listing the choices otherwise.
Tableau builtin_scheme(std::string_view name);

/// Builtin name, or a path to a tableau text file.
Tableau resolve_scheme(std::string_view name_or_path);

// Text format:
//   name <identifier>            (optional)
//   order <integer>              (optional)
//   stage <i> c=<rational> a=<expr>,<expr>,...
//   weights b=<expr>,...
// '#' starts a comment.
std::string to_text(const Tableau& tableau);
Tableau parse_tableau(std::string_view text);
Tableau load_tableau(const std::filesystem::path& path);

struct EvaluatedTableau {
  Matrix a;                  // s x s, strictly lower
  std::vector<double> b;     // s
  std::vector<double> chi;   // e^{c_i z}
};

EvaluatedTableau evaluate(const Tableau& tableau, double z);

struct EquilibriaFailure {
  double z = 0.0;
  int row = 0;  // 0 for the weights, i >= 2 for stage i
  double residual = 0.0;
};

struct EquilibriaReport {
  bool pass = true;
  double max_residual = 0.0;
  std::vector<EquilibriaFailure> failures;
};

/// Row-sum identities Σ_j b_j = (e^z − 1)/z and Σ_j a_ij = (e^{c_i z} − 1)/z,
/// each to 1e-11 (1 + |z|).
EquilibriaReport equilibria_check(const Tableau& tableau, std::span<const double> z_samples);

/// How a stiff order condition was found to hold.
enum class ConditionForm {
  kStrong,     // residual vanishes at every sampled z
  kWeakened,   // outer coefficients frozen at z = 0 (weakened form)
  kClassical,  // residual is O(z^{p+1-level}) as z -> 0 (exact Taylor check)
  kFailed,
};

std::string_view to_string(ConditionForm form);

struct OrderCondition {
  std::string name;
  int level = 0;
  double strong_residual = 0.0;    // max over samples
  double weakened_residual = 0.0;  // max over samples
  bool classical = false;
  ConditionForm form = ConditionForm::kFailed;
};

struct OrderReport {
  int target_order = 0;
  bool pass = false;
  /// Largest p <= target whose conditions all hold in strong or weakened form.
  int sampled_order = 0;
  std::vector<OrderCondition> conditions;
};

inline constexpr double kOrderConditionTolerance = 1e-10;

/// Scalar-sampled stiff order conditions up to `target_order` (1..4), with the
/// arbitrary operators J, K replaced by the identity. These are necessary
/// conditions only.
OrderReport order_conditions(const Tableau& tableau, int target_order,
                             std::span<const double> z_samples);

}  // namespace etdrk
