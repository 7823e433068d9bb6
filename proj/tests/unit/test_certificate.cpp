#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "etdrk/certificate.hpp"
#include "etdrk/error.hpp"
#include "etdrk/phi.hpp"
#include "etdrk/tableau.hpp"

using namespace etdrk;

namespace {

double max_abs_entry(const Matrix& m) {
  double v = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

const std::vector<std::string> kPassing{"etd1", "etdrk2", "ed-etdrk3a", "ed-etdrk3b"};
const std::vector<std::string> kFailing{"cm-etdrk3", "cm-etdrk4", "krogstad-etdrk4"};

}  // namespace

TEST_SUITE("certificate") {
  TEST_CASE("etd1 delta has the closed form") {
    const Tableau t = builtin_scheme("etd1");
    const auto m = build_matrices(t, -1.0);
    CHECK(m.delta(0, 0) == doctest::Approx(1.0819767068693264).epsilon(1e-14));
    for (double z : {-1e-4, -0.7, -30.0, -2e3}) {
      const double want = z * std::exp(z) / std::expm1(z) - z / 2;
      CHECK(build_matrices(t, z).delta(0, 0) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  TEST_CASE("etdrk2 delta at z = -1") {
    const auto m = build_matrices(builtin_scheme("etdrk2"), -1.0);
    CHECK(m.delta(0, 0) == doctest::Approx(1.0819767068693264).epsilon(1e-13));
    CHECK(m.delta(1, 1) == doctest::Approx(2.2182818284590452).epsilon(1e-13));
    CHECK(m.delta(1, 0) == doctest::Approx(0.58197670686932642).epsilon(1e-13));
    CHECK(std::abs(m.delta(0, 1)) <= 1e-14);

    // 2x2 closed form for the smallest eigenvalue of the symmetrizer.
    const double a = m.delta(0, 0), d = m.delta(1, 1), off = 0.5 * (m.delta(0, 1) + m.delta(1, 0));
    const double closed = 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + off * off);
    CHECK(min_sym_eig(m.delta) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(min_sym_eig(m.delta) == doctest::Approx(1.0117942818045881).epsilon(1e-12));
  }

  TEST_CASE("P layout, E_L and E") {
    const Tableau t = builtin_scheme("ed-etdrk3a");
    const double z = -1.7;
    const auto m = build_matrices(t, z);
    const auto ev = evaluate(t, z);
    CHECK(m.P(0, 0) == ev.a(1, 0));
    CHECK(m.P(1, 0) == ev.a(2, 0));
    CHECK(m.P(1, 1) == ev.a(2, 1));
    CHECK(m.P(0, 1) == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(m.P(2, j) == ev.b[j]);
    CHECK(m.lower_ones(2, 0) == 1.0);
    CHECK(m.lower_ones(0, 2) == 0.0);
    CHECK(m.ones(0, 2) == 1.0);
    CHECK_THROWS_AS(build_matrices(t, 0.0), InvalidArgument);
    CHECK_THROWS_AS(build_matrices(t, 0.5), InvalidArgument);
  }

  TEST_CASE("singular P is reported") {
    const Tableau t = parse_tableau("stage 1 c=0 a=\nstage 2 c=0 a=0\nweights b=phi1(z),0\n");
    CHECK_THROWS_AS(build_matrices(t, -1.0), SingularMatrixError);
  }

  TEST_CASE("frozen ed-etdrk3a minors and eigenvalues") {
    struct Row {
      double z, m1, m2, m3, eig;
    };
    const std::vector<Row> rows{
        {-0.5, 1.2642411176571154, 0.36291264780464164, 0.3348568640647267, 0.66351532087265605},
        {-2.0, 0.49084218055563291, 0.11752574435717097, 0.051295320143358701, 1.2113045401659251},
        {-1e-6, 1.9999980000013333, 0.58024633882064788, 0.70678904003859086, 0.49311456832056656},
        {-1e3, 0.001, 8.8822122222222222e-7, 7.2209572222222222e-10, 500.0},
    };
    const Tableau t = builtin_scheme("ed-etdrk3a");
    for (const auto& r : rows) {
      CAPTURE(r.z);
      const auto m = build_matrices(t, r.z);
      const auto minors = leading_minors(m.delta_prime);
      CHECK(minors[0] == doctest::Approx(r.m1).epsilon(1e-10));
      CHECK(minors[1] == doctest::Approx(r.m2).epsilon(1e-8));
      CHECK(minors[2] == doctest::Approx(r.m3).epsilon(1e-8));
      CHECK(min_sym_eig(m.delta) == doctest::Approx(r.eig).epsilon(1e-8));
    }
  }

  TEST_CASE("small dense helpers") {
    CHECK(min_sym_eig(Matrix::identity(3)) == doctest::Approx(1.0));
    CHECK(min_sym_eig(from_rows({{0, 1}, {0, 0}})) == doctest::Approx(-0.5));
    CHECK(leading_minors(Matrix::identity(3)) == std::vector<double>{1.0, 1.0, 1.0});
    const Matrix m = from_rows({{4, 1, 2}, {1, 3, 0}, {2, 0, 5}});
    const auto minors = leading_minors(m);
    CHECK(minors[0] == doctest::Approx(4.0));
    CHECK(minors[1] == doctest::Approx(11.0));
    CHECK(minors[2] == doctest::Approx(43.0));
    const auto eig = symmetric_eigenvalues(m);
    double sum = 0.0, prod = 1.0;
    for (double v : eig) {
      sum += v;
      prod *= v;
    }
    CHECK(sum == doctest::Approx(12.0));
    CHECK(prod == doctest::Approx(43.0));
    Matrix bad = Matrix::identity(2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(min_sym_eig(bad), InvalidArgument);
  }

  TEST_CASE("delta reconstruction, congruence and symmetry at 100 random z") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> expo(-5.0, 4.0);
    for (const auto& name : builtin_scheme_names()) {
      CAPTURE(name);
      const Tableau t = builtin_scheme(name);
      for (int i = 0; i < 100; ++i) {
        const double z = -std::pow(10.0, expo(rng));
        const auto m = build_matrices(t, z);
        const std::size_t s = m.P.size();

        // P Δ = z P E_L + E_L − (z/2) P
        const Matrix lhs = m.P * m.delta;
        const Matrix rhs = z * (m.P * m.lower_ones) + m.lower_ones - (z / 2) * m.P;
        CHECK(max_abs_entry(lhs - rhs) <= 1e-10 * (max_abs_entry(rhs) + 1.0));

        const Matrix cong = m.P * (m.delta + m.delta.transpose()) * m.P.transpose();
        CHECK(max_abs_entry(cong - m.delta_prime) <= 1e-10 * max_abs_entry(m.delta_prime));
        for (std::size_t a = 0; a < s; ++a)
          for (std::size_t b = 0; b < a; ++b)
            CHECK(std::abs(m.delta_prime(a, b) - m.delta_prime(b, a)) <=
                  1e-12 * max_abs_entry(m.delta_prime));
      }
    }
  }

  TEST_CASE("first minor closed forms on the full grid") {
    const auto grid = log_grid(-1e6, -1e-6, 2000);
    const auto a = minor_curves(builtin_scheme("ed-etdrk3a"), grid);
    const auto b = minor_curves(builtin_scheme("ed-etdrk3b"), grid);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double z = grid[p];
      // Δ′_11 = z·a21² + 2·a21 with a21 = φ_1(z), i.e. (e^{2z} − 1)/z
      CHECK(a.minors[p][0] == doctest::Approx(std::expm1(2 * z) / z).epsilon(1e-10));
      CHECK(b.minors[p][0] == doctest::Approx(std::expm1(8 * z / 9) / z).epsilon(1e-10));
    }
  }

  TEST_CASE("eigenvalue and minor verdicts agree at every grid point") {
    const auto grid = log_grid(-1e6, -1e-6, 400);
    for (const auto& name : builtin_scheme_names()) {
      CAPTURE(name);
      const auto r = certify(builtin_scheme(name), -1e6, -1e-6, 400);
      REQUIRE(r.z_grid.size() == grid.size());
      for (std::size_t p = 0; p < grid.size(); ++p) {
        const double eig = r.min_eig_sym_delta[p];
        bool minors_positive = true;
        for (double m : r.minors_delta_prime[p]) minors_positive = minors_positive && m > 0.0;
        // Near-zero values are excluded: both tests then hinge on rounding.
        if (std::abs(eig) > 1e-8) CHECK((eig > 0.0) == minors_positive);
      }
    }
  }

  TEST_CASE("verdicts on the default grid") {
    for (const auto& name : kPassing) {
      CAPTURE(name);
      const auto r = certify(builtin_scheme(name));
      CHECK(r.verdict == Verdict::kPass);
      CHECK(r.tail.verified);
      CHECK(r.conditioning_ok);
      CHECK(r.z_grid.size() == 2000);
      for (double v : r.min_eig_sym_delta) CHECK(v > 0.0);
    }
    for (const auto& name : kFailing) {
      CAPTURE(name);
      CHECK(certify(builtin_scheme(name)).verdict == Verdict::kFail);
    }
    const auto cm3 = certify(builtin_scheme("cm-etdrk3"));
    CHECK(cm3.worst_z == doctest::Approx(-1e-6));
    CHECK(cm3.worst_value < 0.0);
  }

  TEST_CASE("grid without tail check") {
    CertifyOptions opt;
    opt.tail = false;
    const auto r = certify(builtin_scheme("ed-etdrk3a"), opt);
    CHECK(r.verdict == Verdict::kGridPassTailUnverified);
    CHECK(to_string(r.verdict) == "tail-unverified");
  }

  TEST_CASE("scan is deterministic across thread counts") {
    CertifyOptions one;
    one.threads = 1;
    one.points = 300;
    CertifyOptions many = one;
    many.threads = 4;
    const auto a = certify(builtin_scheme("krogstad-etdrk4"), one);
    const auto b = certify(builtin_scheme("krogstad-etdrk4"), many);
    CHECK(a.min_eig_sym_delta == b.min_eig_sym_delta);
    CHECK(a.minors_delta_prime == b.minors_delta_prime);
    CHECK(a.worst_z == b.worst_z);
  }

  TEST_CASE("scaled minor bounds for ed-etdrk3a") {
    const Tableau t = builtin_scheme("ed-etdrk3a");
    auto linear = [](double lo, double hi, int n) {
      std::vector<double> z(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) z[i] = lo + (hi - lo) * i / (n - 1);
      return z;
    };
    const auto c1 = minor_curves(t, linear(-3.0, -1.0, 200));
    for (const auto& row : c1.scaled) CHECK(row[1] >= 0.2);
    const auto c2 = minor_curves(t, linear(-6.0, -1.0, 200));
    for (const auto& row : c2.scaled) CHECK(row[2] >= 0.1);
    const std::vector<double> half{-0.5};
    CHECK(minor_curves(t, half).minors[0][1] >= 0.2);
  }

  TEST_CASE("argument checks") {
    const Tableau t = builtin_scheme("etd1");
    CHECK_THROWS_AS(certify(t, -1.0, -2.0, 10), InvalidArgument);
    CHECK_THROWS_AS(certify(t, -2.0, 1.0, 10), InvalidArgument);
    CHECK_THROWS_AS(certify(t, -2.0, -1.0, 1), InvalidArgument);
  }

  TEST_CASE("csv layout") {
    const auto r = certify(builtin_scheme("ed-etdrk3a"), -10.0, -0.1, 5);
    std::ostringstream out;
    write_certificate_csv(out, r);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "z,min_eig,minor1,minor2,minor3,scaled_minor2,scaled_minor3");
    int rows = 0;
    std::string line, last;
    while (std::getline(in, line)) {
      if (line.rfind("#", 0) == 0) {
        last = line;
      } else {
        ++rows;
      }
    }
    CHECK(rows == 5);
    CHECK(last.rfind("# verdict=", 0) == 0);

    const auto curves = minor_curves(builtin_scheme("etdrk2"), r.z_grid);
    std::ostringstream mc;
    write_minor_curves_csv(mc, curves);
    CHECK(mc.str().rfind("z,minor1,minor2,scaled_minor1,scaled_minor2\n", 0) == 0);
  }
}
