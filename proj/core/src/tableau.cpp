#include "etdrk/tableau.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "etdrk/error.hpp"
#include "etdrk/phi.hpp"

namespace etdrk {

// ---------------------------------------------------------------------------
// CoefficientExpr

CoefficientExpr CoefficientExpr::constant(Rational value) {
  CoefficientExpr e;
  if (!value.is_zero()) e.monomials_.push_back({value, {}});
  return e;
}

CoefficientExpr CoefficientExpr::phi(int index, Rational scale, Rational weight) {
  if (index < 0 || index > kMaxPhiIndex) throw InvalidArgument("phi index out of range");
  if (scale <= Rational(0) || scale > Rational(1)) {
    throw InvalidArgument("phi atom scale must lie in (0, 1], got " + scale.str());
  }
  CoefficientExpr e;
  if (!weight.is_zero()) e.monomials_.push_back({weight, {PhiAtom{index, scale}}});
  return e;
}

bool CoefficientExpr::is_zero() const { return normalized().monomials_.empty(); }

int CoefficientExpr::max_phi_index() const {
  int k = 0;
  for (const auto& m : monomials_)
    for (const auto& f : m.factors) k = std::max(k, f.index);
  return k;
}

double CoefficientExpr::operator()(double z) const {
  double sum = 0.0;
  for (const auto& m : monomials_) {
    double term = m.weight.to_double();
    for (const auto& f : m.factors) term *= etdrk::phi(f.index, f.scale.to_double() * z);
    sum += term;
  }
  return sum;
}

namespace {

using Series = std::vector<Rational>;

Series series_multiply(const Series& a, const Series& b) {
  Series out(a.size(), Rational(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero()) continue;
    for (std::size_t j = 0; i + j < out.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

/// φ_k(s z) = Σ_m s^m z^m / (m+k)!
Series atom_series(const PhiAtom& atom, int degree) {
  Series out(degree + 1);
  for (int m = 0; m <= degree; ++m) out[m] = pow(atom.scale, m) / factorial(m + atom.index);
  return out;
}

}  // namespace

std::vector<Rational> CoefficientExpr::taylor(int degree) const {
  Series total(degree + 1, Rational(0));
  for (const auto& m : monomials_) {
    Series term(degree + 1, Rational(0));
    term[0] = m.weight;
    for (const auto& f : m.factors) term = series_multiply(term, atom_series(f, degree));
    for (int i = 0; i <= degree; ++i) total[i] += term[i];
  }
  return total;
}

CoefficientExpr CoefficientExpr::normalized() const {
  std::map<std::vector<PhiAtom>, Rational> merged;
  std::vector<std::vector<PhiAtom>> order;
  for (auto m : monomials_) {
    std::sort(m.factors.begin(), m.factors.end());
    auto [it, inserted] = merged.try_emplace(m.factors, Rational(0));
    if (inserted) order.push_back(m.factors);
    it->second += m.weight;
  }
  std::sort(order.begin(), order.end());
  CoefficientExpr out;
  for (const auto& key : order) {
    const Rational w = merged.at(key);
    if (!w.is_zero()) out.monomials_.push_back({w, key});
  }
  return out;
}

namespace {

std::string atom_str(const PhiAtom& a) {
  std::string out = "phi" + std::to_string(a.index) + "(";
  if (a.scale != Rational(1)) out += a.scale.str() + "*";
  return out + "z)";
}

}  // namespace

std::string CoefficientExpr::str() const {
  if (monomials_.empty()) return "0";
  std::string out;
  for (const auto& m : monomials_) {
    std::string term;
    if (m.factors.empty()) {
      term = m.weight.str();
    } else {
      std::string product;
      for (const auto& f : m.factors) {
        if (!product.empty()) product += "*";
        product += atom_str(f);
      }
      if (m.weight == Rational(1)) {
        term = product;
      } else if (m.weight == Rational(-1)) {
        term = "-" + product;
      } else {
        term = m.weight.str() + "*" + product;
      }
    }
    if (!out.empty() && term.front() != '-') out += "+";
    out += term;
  }
  return out;
}

CoefficientExpr& CoefficientExpr::operator+=(const CoefficientExpr& o) {
  monomials_.insert(monomials_.end(), o.monomials_.begin(), o.monomials_.end());
  return *this;
}

CoefficientExpr& CoefficientExpr::operator-=(const CoefficientExpr& o) {
  for (auto m : o.monomials_) {
    m.weight = -m.weight;
    monomials_.push_back(std::move(m));
  }
  return *this;
}

CoefficientExpr& CoefficientExpr::operator*=(const CoefficientExpr& o) {
  std::vector<Monomial> product;
  for (const auto& x : monomials_) {
    for (const auto& y : o.monomials_) {
      Monomial m{x.weight * y.weight, x.factors};
      m.factors.insert(m.factors.end(), y.factors.begin(), y.factors.end());
      product.push_back(std::move(m));
    }
  }
  monomials_ = std::move(product);
  return *this;
}

CoefficientExpr& CoefficientExpr::operator*=(const Rational& s) {
  for (auto& m : monomials_) m.weight *= s;
  return *this;
}

bool operator==(const CoefficientExpr& a, const CoefficientExpr& b) {
  const auto na = a.normalized();
  const auto nb = b.normalized();
  if (na.monomials_.size() != nb.monomials_.size()) return false;
  for (std::size_t i = 0; i < na.monomials_.size(); ++i) {
    if (na.monomials_[i].weight != nb.monomials_[i].weight ||
        na.monomials_[i].factors != nb.monomials_[i].factors) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Expression parser
//
//   expr   := ['+'|'-'] term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := rational | 'phi' digits '(' [rational '*'] 'z' ')' | '(' expr ')'

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  CoefficientExpr parse_all() {
    CoefficientExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression '" + std::string(text_) + "' at column " +
                     std::to_string(pos_ + 1) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char ch) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char ch) {
    if (!accept(ch)) fail(std::string("expected '") + ch + "'");
  }

  bool at_digit() {
    skip_ws();
    return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }

  std::string_view digits() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected digits");
    return text_.substr(start, pos_ - start);
  }

  Rational rational() {
    skip_ws();
    const std::size_t start = pos_;
    digits();
    if (pos_ < text_.size() && text_[pos_] == '/') {
      ++pos_;
      digits();
    }
    return Rational::parse(text_.substr(start, pos_ - start));
  }

  CoefficientExpr expr() {
    CoefficientExpr out;
    bool negate = false;
    if (accept('-')) {
      negate = true;
    } else {
      accept('+');
    }
    CoefficientExpr first = term();
    if (negate) first *= Rational(-1);
    out += first;
    for (;;) {
      if (accept('+')) {
        out += term();
      } else if (accept('-')) {
        out -= term();
      } else {
        break;
      }
    }
    return out;
  }

  CoefficientExpr term() {
    CoefficientExpr out = factor();
    while (accept('*')) out *= factor();
    return out;
  }

  CoefficientExpr factor() {
    skip_ws();
    if (accept('(')) {
      CoefficientExpr inner = expr();
      expect(')');
      return inner;
    }
    if (at_digit()) return CoefficientExpr::constant(rational());
    if (text_.substr(pos_, 3) == "phi") {
      pos_ += 3;
      const auto idx = digits();
      const int index = std::stoi(std::string(idx));
      if (index > kMaxPhiIndex) fail("phi index above " + std::to_string(kMaxPhiIndex));
      expect('(');
      Rational scale(1);
      if (at_digit()) {
        scale = rational();
        expect('*');
      }
      expect('z');
      expect(')');
      if (scale <= Rational(0) || scale > Rational(1)) fail("phi scale must lie in (0, 1]");
      return CoefficientExpr::phi(index, scale);
    }
    fail("expected a rational, phi<k>(...) or '('");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

CoefficientExpr CoefficientExpr::parse(std::string_view text) {
  return ExprParser(text).parse_all();
}

// ---------------------------------------------------------------------------
// Tableau

void Tableau::validate() const {
  const int s = stages();
  if (s < 1) throw InvalidArgument("tableau '" + name + "': needs at least one stage");
  if (!c.front().is_zero()) throw InvalidArgument("tableau '" + name + "': c_1 must be 0");
  if (static_cast<int>(a.size()) != s) {
    throw InvalidArgument("tableau '" + name + "': a must have one row per stage");
  }
  for (int i = 0; i < s; ++i) {
    if (static_cast<int>(a[i].size()) != i) {
      throw InvalidArgument("tableau '" + name + "': stage " + std::to_string(i + 1) + " needs " +
                            std::to_string(i) + " coefficients");
    }
  }
  if (static_cast<int>(b.size()) != s) {
    throw InvalidArgument("tableau '" + name + "': b must have one weight per stage");
  }
  for (const auto& ci : c) {
    if (ci < Rational(0) || ci > Rational(1)) {
      throw InvalidArgument("tableau '" + name + "': nodes must lie in [0, 1]");
    }
  }
}

const std::vector<std::string>& builtin_scheme_names() {
  static const std::vector<std::string> names{"etd1",       "etdrk2",    "cm-etdrk3",
                                              "ed-etdrk3a", "ed-etdrk3b", "cm-etdrk4",
                                              "krogstad-etdrk4"};
  return names;
}

namespace {

using CE = CoefficientExpr;

CE phi_(int k, Rational scale = Rational(1)) { return CE::phi(k, scale); }

Tableau make(std::string name, std::vector<Rational> c, std::vector<std::vector<CE>> a,
             std::vector<CE> b, int order) {
  Tableau t{std::move(name), std::move(c), std::move(a), std::move(b), order};
  t.validate();
  return t;
}

}  // namespace

Tableau builtin_scheme(std::string_view name) {
  const Rational half(1, 2);
  const Rational two_thirds(2, 3);
  const Rational four_ninths(4, 9);

  if (name == "etd1") {
    return make("etd1", {0}, {{}}, {phi_(1)}, 1);
  }
  if (name == "etdrk2") {
    return make("etdrk2", {0, 1}, {{}, {phi_(1)}}, {phi_(1) - phi_(2), phi_(2)}, 2);
  }
  if (name == "cm-etdrk3") {
    return make("cm-etdrk3", {0, half, 1},
                {{}, {half * phi_(1, half)}, {-phi_(1), Rational(2) * phi_(1)}},
                {Rational(4) * phi_(3) - Rational(3) * phi_(2) + phi_(1),
                 Rational(-8) * phi_(3) + Rational(4) * phi_(2), Rational(4) * phi_(3) - phi_(2)},
                3);
  }
  if (name == "ed-etdrk3a") {
    return make("ed-etdrk3a", {0, 1, two_thirds},
                {{},
                 {phi_(1)},
                 {two_thirds * phi_(1, two_thirds) - four_ninths * phi_(2, two_thirds),
                  four_ninths * phi_(2, two_thirds)}},
                {Rational(3, 4) * phi_(1) - phi_(2), phi_(2) - half * phi_(1),
                 Rational(3, 4) * phi_(1)},
                3);
  }
  if (name == "ed-etdrk3b") {
    return make("ed-etdrk3b", {0, four_ninths, two_thirds},
                {{},
                 {four_ninths * phi_(1, four_ninths)},
                 {two_thirds * phi_(1, two_thirds) - phi_(2, two_thirds), phi_(2, two_thirds)}},
                {phi_(1) - Rational(3, 2) * phi_(2), CE{}, Rational(3, 2) * phi_(2)}, 3);
  }
  const std::vector<CE> rk4_weights{
      phi_(1) - Rational(3) * phi_(2) + Rational(4) * phi_(3),
      Rational(2) * phi_(2) - Rational(4) * phi_(3),
      Rational(2) * phi_(2) - Rational(4) * phi_(3),
      Rational(4) * phi_(3) - phi_(2),
  };
  if (name == "cm-etdrk4") {
    // a_41 = ½ φ_{1,3} (φ_{0,3} − 1)
    return make("cm-etdrk4", {0, half, half, 1},
                {{},
                 {half * phi_(1, half)},
                 {CE{}, half * phi_(1, half)},
                 {half * phi_(1, half) * (phi_(0, half) - CE::constant(1)), CE{}, phi_(1, half)}},
                rk4_weights, 4);
  }
  if (name == "krogstad-etdrk4") {
    return make("krogstad-etdrk4", {0, half, half, 1},
                {{},
                 {half * phi_(1, half)},
                 {half * phi_(1, half) - phi_(2, half), phi_(2, half)},
                 {phi_(1) - Rational(2) * phi_(2), CE{}, Rational(2) * phi_(2)}},
                rk4_weights, 4);
  }
  std::string choices;
  for (const auto& n : builtin_scheme_names()) choices += (choices.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown scheme '" + std::string(name) + "'; choose one of: " + choices);
}

Tableau resolve_scheme(std::string_view name_or_path) {
  const auto& names = builtin_scheme_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_scheme(name_or_path);
  }
  const std::filesystem::path path(name_or_path);
  if (std::filesystem::exists(path)) return load_tableau(path);
  return builtin_scheme(name_or_path);  // throws the enumerated-choices error
}

// ---------------------------------------------------------------------------
// Text format

std::string to_text(const Tableau& t) {
  std::ostringstream out;
  out << "name " << t.name << "\n";
  out << "order " << t.claimed_order << "\n";
  for (int i = 0; i < t.stages(); ++i) {
    out << "stage " << i + 1 << " c=" << t.c[i].str() << " a=";
    for (int j = 0; j < i; ++j) out << (j ? "," : "") << t.a[i][j].str();
    out << "\n";
  }
  out << "weights b=";
  for (int j = 0; j < t.stages(); ++j) out << (j ? "," : "") << t.b[j].str();
  out << "\n";
  return out.str();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<CoefficientExpr> parse_list(std::string_view list, int line_no) {
  std::vector<CoefficientExpr> out;
  list = trim(list);
  if (list.empty()) return out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= list.size(); ++i) {
    if (i < list.size() && list[i] == '(') ++depth;
    if (i < list.size() && list[i] == ')') --depth;
    if (i == list.size() || (list[i] == ',' && depth == 0)) {
      try {
        out.push_back(CoefficientExpr::parse(trim(list.substr(start, i - start))));
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
      start = i + 1;
    }
  }
  return out;
}

std::string_view expect_key(std::string_view token, std::string_view key, int line_no) {
  if (token.substr(0, key.size()) != key) {
    throw ParseError("line " + std::to_string(line_no) + ": expected '" + std::string(key) + "'");
  }
  return token.substr(key.size());
}

}  // namespace

Tableau parse_tableau(std::string_view text) {
  Tableau t;
  t.name = "custom";
  bool have_weights = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto space = line.find(' ');
    const std::string_view keyword = line.substr(0, space);
    const std::string_view rest = space == std::string_view::npos ? "" : trim(line.substr(space));
    const std::string where = "line " + std::to_string(line_no) + ": ";

    if (keyword == "name") {
      if (rest.empty()) throw ParseError(where + "empty name");
      t.name = std::string(rest);
    } else if (keyword == "order") {
      try {
        t.claimed_order = std::stoi(std::string(rest));
      } catch (const std::exception&) {
        throw ParseError(where + "invalid order");
      }
    } else if (keyword == "stage") {
      if (have_weights) throw ParseError(where + "stage after weights");
      const auto s1 = rest.find(' ');
      if (s1 == std::string_view::npos) throw ParseError(where + "stage needs c= and a=");
      int index = 0;
      try {
        index = std::stoi(std::string(rest.substr(0, s1)));
      } catch (const std::exception&) {
        throw ParseError(where + "invalid stage index");
      }
      if (index != t.stages() + 1) {
        throw ParseError(where + "expected stage " + std::to_string(t.stages() + 1));
      }
      std::string_view fields = trim(rest.substr(s1));
      const auto s2 = fields.find(' ');
      const std::string_view c_token = fields.substr(0, s2);
      const std::string_view a_token =
          s2 == std::string_view::npos ? std::string_view{} : trim(fields.substr(s2));
      try {
        t.c.push_back(Rational::parse(expect_key(c_token, "c=", line_no)));
      } catch (const InvalidArgument& e) {
        throw ParseError(where + e.what());
      }
      auto row = a_token.empty() ? std::vector<CoefficientExpr>{}
                                 : parse_list(expect_key(a_token, "a=", line_no), line_no);
      if (static_cast<int>(row.size()) != index - 1) {
        throw ParseError(where + "stage " + std::to_string(index) + " needs " +
                         std::to_string(index - 1) + " coefficients, got " +
                         std::to_string(row.size()));
      }
      t.a.push_back(std::move(row));
    } else if (keyword == "weights") {
      t.b = parse_list(expect_key(rest, "b=", line_no), line_no);
      have_weights = true;
    } else {
      throw ParseError(where + "unknown directive '" + std::string(keyword) + "'");
    }
  }
  if (!have_weights) throw ParseError("tableau text has no 'weights' line");
  try {
    t.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return t;
}

Tableau load_tableau(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tableau file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Tableau t = parse_tableau(buf.str());
  const std::vector<double> probe{-1e-3, -0.5, -1.0, -10.0, -100.0};
  if (!equilibria_check(t, probe).pass) {
    throw ParseError("tableau " + path.string() + " violates the equilibria row-sum identities");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Evaluation and checks

EvaluatedTableau evaluate(const Tableau& t, double z) {
  if (!std::isfinite(z)) throw InvalidArgument("evaluate: non-finite z");
  const int s = t.stages();
  EvaluatedTableau out{Matrix(s), std::vector<double>(s), std::vector<double>(s)};
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < i; ++j) out.a(i, j) = t.a[i][j](z);
    out.b[i] = t.b[i](z);
    out.chi[i] = std::exp(t.c[i].to_double() * z);
  }
  return out;
}

EquilibriaReport equilibria_check(const Tableau& t, std::span<const double> z_samples) {
  if (z_samples.empty()) throw InvalidArgument("equilibria_check: no samples");
  EquilibriaReport report;
  auto record = [&](double z, int row, double residual) {
    report.max_residual = std::max(report.max_residual, residual);
    if (!(residual <= 1e-11 * (1.0 + std::abs(z)))) {
      report.pass = false;
      report.failures.push_back({z, row, residual});
    }
  };
  for (double z : z_samples) {
    if (z > 0.0) throw InvalidArgument("equilibria_check: samples must be <= 0");
    const auto ev = evaluate(t, z);
    double sum_b = 0.0;
    for (double bj : ev.b) sum_b += bj;
    record(z, 0, std::abs(sum_b - phi(1, z)));
    for (int i = 1; i < t.stages(); ++i) {
      double sum_a = 0.0;
      for (int j = 0; j < i; ++j) sum_a += ev.a(i, j);
      const double ci = t.c[i].to_double();
      // (e^{c z} − 1)/z = c φ_1(c z)
      record(z, i + 1, std::abs(sum_a - ci * phi(1, ci * z)));
    }
  }
  return report;
}

std::string_view to_string(ConditionForm form) {
  switch (form) {
    case ConditionForm::kStrong: return "strong";
    case ConditionForm::kWeakened: return "weakened";
    case ConditionForm::kClassical: return "classical";
    case ConditionForm::kFailed: return "failed";
  }
  return "?";
}

namespace {

/// Truncated power series in z with exact coefficients.
struct TSeries {
  std::vector<Rational> c;

  friend TSeries operator+(TSeries a, const TSeries& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] += b.c[i];
    return a;
  }
  friend TSeries operator-(TSeries a, const TSeries& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] -= b.c[i];
    return a;
  }
  friend TSeries operator*(const TSeries& a, const TSeries& b) { return {series_multiply(a.c, b.c)}; }
  friend TSeries operator*(const Rational& s, TSeries a) {
    for (auto& x : a.c) x *= s;
    return a;
  }
};

double scale(const Rational& r, double v) { return r.to_double() * v; }
TSeries scale(const Rational& r, TSeries v) { return r * std::move(v); }

/// Values of the tableau entries in some arithmetic: plain doubles at one z,
/// or Taylor series about z = 0.
template <typename T>
struct Arith {
  std::vector<std::vector<T>> a;
  std::vector<T> b;
  std::function<T(int, const Rational&)> phi;  // φ_k(c z)
  T zero;
};

struct ConditionValues {
  std::string name;
  int level;
};

/// ψ_j = φ_j(z) − Σ_k b_k c_k^{j−1}/(j−1)!
template <typename T>
T psi(const Tableau& t, const Arith<T>& ar, int j) {
  T out = ar.phi(j, Rational(1));
  for (int k = 0; k < t.stages(); ++k) {
    out = out - scale(pow(t.c[k], j - 1) / factorial(j - 1), ar.b[k]);
  }
  return out;
}

/// ψ_{j,i} = φ_j(c_i z) c_i^j − Σ_{k<i} a_ik c_k^{j−1}/(j−1)!
template <typename T>
T psi_stage(const Tableau& t, const Arith<T>& ar, int j, int i) {
  T out = t.c[i].is_zero() ? ar.zero : scale(pow(t.c[i], j), ar.phi(j, t.c[i]));
  for (int k = 0; k < i; ++k) out = out - scale(pow(t.c[k], j - 1) / factorial(j - 1), ar.a[i][k]);
  return out;
}

/// Residual components of every condition up to `order`. `outer` supplies the
/// b/a weights multiplying inner ψ_{j,i}; for the strong and classical forms it
/// is the same as `inner`.
template <typename T>
std::vector<std::pair<ConditionValues, std::vector<T>>> residuals(const Tableau& t,
                                                                  const Arith<T>& inner,
                                                                  const Arith<T>& outer,
                                                                  const Arith<T>& bare, int order) {
  const int s = t.stages();
  std::vector<std::pair<ConditionValues, std::vector<T>>> out;
  auto add = [&](std::string name, int level, std::vector<T> v) {
    if (level <= order) out.push_back({{std::move(name), level}, std::move(v)});
  };
  add("psi_1", 1, {psi(t, bare, 1)});
  if (order >= 2) {
    add("psi_2", 2, {psi(t, bare, 2)});
    std::vector<T> stage;
    for (int i = 1; i < s; ++i) stage.push_back(psi_stage(t, bare, 1, i));
    add("psi_1,i", 2, stage);
  }
  if (order >= 3) {
    add("psi_3", 3, {psi(t, bare, 3)});
    T sum = inner.zero;
    for (int i = 0; i < s; ++i) sum = sum + outer.b[i] * psi_stage(t, inner, 2, i);
    add("sum b_i J psi_2,i", 3, {sum});
  }
  if (order >= 4) {
    add("psi_4", 4, {psi(t, bare, 4)});
    T s3 = inner.zero;
    T sa = inner.zero;
    T sc = inner.zero;
    for (int i = 0; i < s; ++i) {
      s3 = s3 + outer.b[i] * psi_stage(t, inner, 3, i);
      T nested = inner.zero;
      for (int j = 1; j < i; ++j) nested = nested + outer.a[i][j] * psi_stage(t, inner, 2, j);
      sa = sa + outer.b[i] * nested;
      sc = sc + scale(t.c[i], outer.b[i] * psi_stage(t, inner, 2, i));
    }
    add("sum b_i J psi_3,i", 4, {s3});
    add("sum b_i J sum a_ij J psi_2,j", 4, {sa});
    add("sum b_i c_i K psi_2,i", 4, {sc});
  }
  return out;
}

Arith<double> numeric_at(const Tableau& t, double z) {
  const auto ev = evaluate(t, z);
  Arith<double> ar;
  ar.zero = 0.0;
  ar.a.resize(t.stages());
  for (int i = 0; i < t.stages(); ++i)
    for (int j = 0; j < i; ++j) ar.a[i].push_back(ev.a(i, j));
  ar.b = ev.b;
  ar.phi = [z](int k, const Rational& c) { return phi(k, c.to_double() * z); };
  return ar;
}

Arith<TSeries> series_of(const Tableau& t, int degree) {
  Arith<TSeries> ar;
  ar.zero = TSeries{std::vector<Rational>(degree + 1, Rational(0))};
  ar.a.resize(t.stages());
  for (int i = 0; i < t.stages(); ++i)
    for (int j = 0; j < i; ++j) ar.a[i].push_back(TSeries{t.a[i][j].taylor(degree)});
  for (const auto& bj : t.b) ar.b.push_back(TSeries{bj.taylor(degree)});
  ar.phi = [degree](int k, const Rational& c) {
    return TSeries{atom_series(PhiAtom{k, c}, degree)};
  };
  return ar;
}

}  // namespace

OrderReport order_conditions(const Tableau& t, int target_order, std::span<const double> z_samples) {
  if (target_order < 1 || target_order > 4) {
    throw InvalidArgument("order_conditions: target order must be 1..4");
  }
  OrderReport report;
  report.target_order = target_order;

  // Classical: exact Taylor coefficients of the strong residual.
  const auto series = series_of(t, target_order);
  const auto classical = residuals(t, series, series, series, target_order);
  for (const auto& [cond, values] : classical) {
    OrderCondition oc;
    oc.name = cond.name;
    oc.level = cond.level;
    oc.classical = true;
    for (const auto& v : values) {
      for (int d = 0; d <= target_order - cond.level; ++d) {
        if (!v.c[d].is_zero()) oc.classical = false;
      }
    }
    report.conditions.push_back(oc);
  }

  const auto at_zero = numeric_at(t, 0.0);
  for (double z : z_samples) {
    const auto at_z = numeric_at(t, z);
    const auto strong = residuals(t, at_z, at_z, at_z, target_order);
    const auto weak = residuals(t, at_z, at_zero, at_zero, target_order);
    for (std::size_t c = 0; c < report.conditions.size(); ++c) {
      auto& oc = report.conditions[c];
      for (double v : strong[c].second) oc.strong_residual = std::max(oc.strong_residual, std::abs(v));
      for (double v : weak[c].second) {
        oc.weakened_residual = std::max(oc.weakened_residual, std::abs(v));
      }
    }
  }

  report.pass = true;
  std::vector<bool> level_sampled(target_order + 1, true);
  for (auto& oc : report.conditions) {
    if (!z_samples.empty() && oc.strong_residual <= kOrderConditionTolerance) {
      oc.form = ConditionForm::kStrong;
    } else if (!z_samples.empty() && oc.weakened_residual <= kOrderConditionTolerance) {
      oc.form = ConditionForm::kWeakened;
    } else if (oc.classical) {
      oc.form = ConditionForm::kClassical;
    } else {
      oc.form = ConditionForm::kFailed;
    }
    if (oc.form == ConditionForm::kFailed) report.pass = false;
    if (oc.form != ConditionForm::kStrong && oc.form != ConditionForm::kWeakened) {
      level_sampled[oc.level] = false;
    }
  }
  for (int p = 1; p <= target_order && level_sampled[p]; ++p) report.sampled_order = p;
  return report;
}

}  // namespace etdrk
