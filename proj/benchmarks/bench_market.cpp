#include <random>

#include <benchmark/benchmark.h>

#include "lassomarket/lassomarket.hpp"

namespace lm = lassomarket;

namespace {

// Synthetic five-agent market as a design matrix; columns grow with max lag.
struct Problem {
  lm::DesignMatrix design;
  Eigen::VectorXd target;
  lm::PenaltyVector penalties;
};

Problem make_problem(int T, int D, double u) {
  lm::SyntheticSpec spec;
  spec.seed = 99;
  const auto series = lm::generate_synthetic(spec, static_cast<std::size_t>(T), static_cast<std::size_t>(D));
  lm::MarketConfig config;
  config.central_agent = "P1";
  config.support_agents = {"P2", "P3", "P4", "P5"};
  config.lag_spec = lm::LagSpec{D, T};
  Problem p;
  p.design = lm::build_lag_matrix(series, config.lag_spec);
  p.target = lm::window_target(series.front(), T);
  p.penalties = lm::penalties_from_reservations(
      config, lm::ReservationSchedule::uniform(config.support_agents, D, u), p.design);
  return p;
}

void BM_WeightedLasso(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(lm::weighted_lasso_fit(p.design, p.target, p.penalties));
  state.counters["columns"] = static_cast<double>(p.design.cols());
}
BENCHMARK(BM_WeightedLasso)->ArgsProduct({{240, 2000, 20000}, {1, 3, 12}})->Unit(benchmark::kMicrosecond);

void BM_Ols(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(lm::ols_fit(p.design, p.target));
}
BENCHMARK(BM_Ols)->ArgsProduct({{240, 20000}, {3, 12}})->Unit(benchmark::kMicrosecond);

void BM_ClearMarket(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  lm::SyntheticSpec spec;
  spec.seed = 7;
  const auto series = lm::generate_synthetic(spec, static_cast<std::size_t>(T), 3);
  lm::MarketConfig config;
  config.central_agent = "P1";
  config.support_agents = {"P2", "P3", "P4", "P5"};
  config.lag_spec = lm::LagSpec{3, T};
  const auto schedule = lm::ReservationSchedule::uniform(config.support_agents, 3, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(lm::clear_market(config, series, schedule));
}
BENCHMARK(BM_ClearMarket)->Arg(240)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_BuildLagMatrix(benchmark::State& state) {
  lm::SyntheticSpec spec;
  const int T = static_cast<int>(state.range(0));
  const auto series = lm::generate_synthetic(spec, static_cast<std::size_t>(T), 12);
  for (auto _ : state) benchmark::DoNotOptimize(lm::build_lag_matrix(series, lm::LagSpec{12, T}));
}
BENCHMARK(BM_BuildLagMatrix)->Arg(240)->Arg(20000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
