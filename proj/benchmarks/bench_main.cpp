#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "etdrk/certificate.hpp"
#include "etdrk/models.hpp"
#include "etdrk/phi.hpp"
#include "etdrk/spectral.hpp"
#include "etdrk/stepper.hpp"
#include "etdrk/tableau.hpp"

using namespace etdrk;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::vector<double> spectrum_like(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-8.0, 2.0);
  std::vector<double> z(n);
  for (auto& v : z) v = -std::pow(10.0, d(rng));
  return z;
}

Field noise(const Grid& g) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  Field u(g.points());
  for (auto& v : u) v = d(rng);
  return u;
}

void BM_Phi(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto z = spectrum_like(4096);
  for (auto _ : state)
    for (double x : z) benchmark::DoNotOptimize(phi(k, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(z.size()));
}
BENCHMARK(BM_Phi)->DenseRange(1, 4);

void BM_PhiTable(benchmark::State& state) {
  const auto z = spectrum_like(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(make_phi_table(4, z));
}
BENCHMARK(BM_PhiTable)->Arg(128 * 65)->Arg(256 * 129);

void BM_Transform(benchmark::State& state) {
  const Grid g = Grid::square(static_cast<std::size_t>(state.range(0)), kTwoPi);
  const Field u = noise(g);
  for (auto _ : state) benchmark::DoNotOptimize(transform_backward(g, transform_forward(g, u)));
}
BENCHMARK(BM_Transform)->Arg(64)->Arg(128)->Arg(256);

void BM_MakePlan(benchmark::State& state) {
  const Grid g = Grid::square(static_cast<std::size_t>(state.range(0)), kTwoPi);
  const auto m = make_model("cahn-hilliard", 0.1, 2.0);
  const auto t = builtin_scheme("ed-etdrk3a");
  for (auto _ : state) benchmark::DoNotOptimize(make_plan(m, t, g, 0.01));
}
BENCHMARK(BM_MakePlan)->Arg(128)->Arg(256);

void BM_Step(benchmark::State& state, const char* model, const char* scheme) {
  const Grid g = Grid::square(static_cast<std::size_t>(state.range(0)), kTwoPi);
  const auto m = make_model(model, 0.1);
  const auto plan = make_plan(m, builtin_scheme(scheme), g, 0.01);
  Field u = noise(g);
  for (auto _ : state) u = step(plan, u);
}
BENCHMARK_CAPTURE(BM_Step, ac_etd1, "allen-cahn", "etd1")->Arg(128);
BENCHMARK_CAPTURE(BM_Step, ch_ed3a, "cahn-hilliard", "ed-etdrk3a")->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(BM_Step, mbe_ed3a, "mbe", "ed-etdrk3a")->Arg(128);
BENCHMARK_CAPTURE(BM_Step, ch_cm4, "cahn-hilliard", "cm-etdrk4")->Arg(128);

void BM_Certify(benchmark::State& state, const char* scheme) {
  const auto t = builtin_scheme(scheme);
  CertifyOptions opt;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(certify(t, opt));
}
BENCHMARK_CAPTURE(BM_Certify, ed3a, "ed-etdrk3a")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Certify, cm4, "cm-etdrk4")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
