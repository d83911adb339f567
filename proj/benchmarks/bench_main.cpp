#include <benchmark/benchmark.h>

#include <random>

#include "opdyn/degroot.hpp"
#include "opdyn/diagnostics.hpp"
#include "opdyn/graph.hpp"
#include "opdyn/ra_sim.hpp"
#include "opdyn/spectral.hpp"

namespace {

// Directed ring of k - 1 ordinary agents behind a stubborn agent, plus a
// few random chords so the spectrum is not trivial.
opdyn::TrustMatrix ring_with_chords(std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::bernoulli_distribution chord(3.0 / static_cast<double>(k));
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  t(0, 0) = 1.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    t(i, i) = w(rng);
    t(i, i == n - 1 ? 1 : i + 1) = w(rng);
    for (Eigen::Index j = 1; j < n; ++j) {
      if (t(i, j) == 0.0 && chord(rng)) t(i, j) = w(rng);
    }
  }
  t(1, 0) = 0.5;
  for (Eigen::Index i = 1; i < n; ++i) t.row(i) /= t.row(i).sum();
  return opdyn::TrustMatrix::create(t, 0);
}

void BM_PowerIteration(benchmark::State& state) {
  const auto p = opdyn::partition(ring_with_chords(static_cast<std::size_t>(state.range(0)), 1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(opdyn::spectral_radius_perron(p.q));
  }
}
BENCHMARK(BM_PowerIteration)->Arg(8)->Arg(64)->Arg(256);

void BM_DegrootRun(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto net = ring_with_chords(k, 2);
  const auto x0 = opdyn::random_opinions(k, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(opdyn::degroot_run(net, x0));
  }
}
BENCHMARK(BM_DegrootRun)->Arg(8)->Arg(64);

opdyn::SimConfig sim(std::size_t horizon, std::size_t replicas) {
  opdyn::SimConfig cfg;
  cfg.alpha = 0.3;
  cfg.horizon = horizon;
  cfg.replicas = replicas;
  cfg.seed = 7;
  cfg.role.kind = opdyn::RoleKind::kStubborn;
  return cfg;
}

void BM_Replica(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const opdyn::RaModel model(ring_with_chords(k, 4), sim(1000, 1));
  std::size_t id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.run_replica(id++));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Replica)->Arg(5)->Arg(32);

void BM_Batch(benchmark::State& state) {
  const opdyn::RaModel model(ring_with_chords(5, 5),
                             sim(400, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.run_batch(1));
  }
}
BENCHMARK(BM_Batch)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ConditionalVariance(benchmark::State& state) {
  const auto p = opdyn::partition(ring_with_chords(8, 6));
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(7, 0.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(opdyn::check_conditional_variance(
        p, y, 0.5, static_cast<std::size_t>(state.range(0)), opdyn::CounterRng(1, 0)));
  }
}
BENCHMARK(BM_ConditionalVariance)->Arg(100'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
