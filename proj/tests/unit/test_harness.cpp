#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "etdrk/error.hpp"
#include "etdrk/harness.hpp"
#include "json.hpp"

using namespace etdrk;

namespace {

const char* kConfig = R"({
  // comments are allowed
  "model": {"name": "cahn-hilliard", "epsilon": 0.1, "beta": 2, "M": 2},
  "grid": {"dims": 2, "n": [32, 32], "lengths": [6.283185307179586, 6.283185307179586]},
  "scheme": "ed-etdrk3b",
  "tau": 0.02,
  "T": 0.5,
  "initial": {"type": "random", "amplitude": 0.05, "mean": 0.1, "seed": 9},
  "outputs": {"energy_csv": "energy.csv", "snapshot_times": [0.1, 0.5]},
  "adaptive": {"tol": 0.001, "norm": "linf"},
  "converge": {"halvings": 2, "reference_divisor": 4}
})";

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("parse fills every block") {
    const RunConfig c = parse_config(kConfig);
    CHECK(c.model.name == "cahn-hilliard");
    CHECK(c.model.beta == 2.0);
    CHECK(c.grid.n == std::vector<std::size_t>{32, 32});
    CHECK(c.scheme == "ed-etdrk3b");
    CHECK(c.initial.seed == 9);
    CHECK(c.outputs.snapshot_times.size() == 2);
    REQUIRE(c.adaptive.has_value());
    CHECK(c.adaptive->tol == 0.001);
    CHECK(c.adaptive->rho == 0.9);
    CHECK(c.adaptive->norm == ErrorNorm::kLinf);
    CHECK(c.converge.reference_divisor == 4);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("defaults") {
    const RunConfig c = parse_config("{}");
    CHECK(c.model.name == "allen-cahn");
    CHECK_FALSE(c.model.beta.has_value());
    CHECK(make_model(c.model).beta == 2.0);
    CHECK_FALSE(c.adaptive.has_value());
    CHECK(c.tau == 0.01);
    CHECK(c.T == 0.32);
  }

  TEST_CASE("config round trip") {
    const RunConfig c = parse_config(kConfig);
    const std::string once = to_json(c);
    const RunConfig back = parse_config(once);
    CHECK(to_json(back) == once);
    const auto a = nlohmann::json::parse(once);
    const auto b = nlohmann::json::parse(kConfig, nullptr, true, true);
    for (const auto& [key, value] : b.items()) {
      CAPTURE(key);
      if (!value.is_object()) {
        CHECK(a[key] == value);
        continue;
      }
      for (const auto& [inner, v] : value.items()) {
        CAPTURE(inner);
        CHECK(a[key][inner] == v);
      }
    }
  }

  TEST_CASE("malformed configs") {
    CHECK_THROWS_AS(parse_config(R"({"modle": {}})"), ParseError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"eps": 1}})"), ParseError);
    CHECK_THROWS_AS(parse_config(R"({"tau": "fast"})"), ParseError);
    CHECK_THROWS_AS(parse_config("{"), ParseError);
    CHECK_THROWS_AS(parse_config(R"({"adaptive": {"norm": "l7"}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"scheme": "rk4"})").validate(), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"initial": {"type": "gauss"}})").validate(), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"initial": {"type": "file", "path": "/nonexistent.etdf"}})").validate(),
                    InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"dims": 2, "n": [32]}})").validate(), InvalidArgument);
  }

  TEST_CASE("initial conditions") {
    const Grid g = Grid::square(16, 6.283185307179586);
    InitialCondition ic;
    const Field s = initial_field(ic, g);
    CHECK(s[1 * 16 + 4] == doctest::Approx(0.5 * std::sin(g.coordinate(0, 1)) * std::sin(g.coordinate(1, 4))));

    ic.type = "constant";
    ic.mean = 0.3;
    for (double v : initial_field(ic, g)) CHECK(v == 0.3);

    ic.type = "random";
    ic.mean = 0.05;
    ic.amplitude = 0.01;
    ic.seed = 1;
    const Field r1 = initial_field(ic, g);
    const Field r2 = initial_field(ic, g);
    CHECK(r1 == r2);
    for (double v : r1) {
      CHECK(v >= 0.04);
      CHECK(v < 0.06);
    }
    ic.seed = 2;
    CHECK(initial_field(ic, g) != r1);

    UniformSource src(1);
    const double first = src.next();
    CHECK(first >= 0.0);
    CHECK(first < 1.0);
    CHECK(r1[0] == 0.05 + 0.01 * (2 * first - 1));

    const auto path = std::filesystem::temp_directory_path() / "etdrk_ic.etdf";
    write_snapshot(path, g, r1);
    ic.type = "file";
    ic.path = path.string();
    CHECK(initial_field(ic, g) == r1);
    CHECK_THROWS_AS(initial_field(ic, Grid::square(8, 1.0)), InvalidArgument);
    std::filesystem::remove(path);
  }

  TEST_CASE("load_config resolves relative paths") {
    const auto dir = std::filesystem::temp_directory_path() / "etdrk_cfg_test";
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "c.json");
      out << R"({"initial": {"type": "file", "path": "u0.etdf"}})";
    }
    const RunConfig c = load_config(dir / "c.json");
    CHECK(c.initial.path == (dir / "u0.etdf").string());
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ParseError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("small convergence study") {
    RunConfig c;
    c.grid.n = {32, 32};
    c.converge.halvings = 2;
    const auto r = converge(c, 2);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.reference_tau == doctest::Approx(0.01 / 4 / 8));
    CHECK_FALSE(r.rows[0].linf_rate.has_value());
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
      CHECK(*r.rows[k].linf_rate == doctest::Approx(3.0).epsilon(0.05));
      CHECK(*r.rows[k].l2_rate == doctest::Approx(3.0).epsilon(0.05));
    }
    std::ostringstream out;
    write_convergence_csv(out, r);
    CHECK(out.str().rfind("tau,linf_error,linf_rate,l2_error,l2_rate\n0.01,", 0) == 0);

    // determinism, independent of the worker count
    std::ostringstream again;
    write_convergence_csv(again, converge(c, 1));
    CHECK(again.str() == out.str());
  }

  TEST_CASE("record options write snapshots") {
    const auto dir = std::filesystem::temp_directory_path() / "etdrk_snaps";
    std::filesystem::remove_all(dir);
    RunConfig c;
    c.grid.n = {8, 8};
    c.outputs.snapshot_dir = dir.string();
    c.outputs.snapshot_times = {0.02, 0.01};
    const Grid g = make_grid(c.grid);
    const auto opt = record_options(c, g);
    run(make_model(c.model), resolve_scheme(c.scheme), g, initial_field(c.initial, g), 0.01, 0.02, opt);
    CHECK(std::filesystem::exists(dir / "snapshot_t0.01.etdf"));
    CHECK(std::filesystem::exists(dir / "snapshot_t0.02.etdf"));
    std::filesystem::remove_all(dir);
  }
}
