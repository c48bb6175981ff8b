#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lassomarket/errors.hpp"
#include "lassomarket/experiments.hpp"

namespace lassomarket {
namespace {

const std::filesystem::path kData = LASSOMARKET_TEST_DATA;

ScenarioConfig p1_scenario(std::uint64_t seed, double u = 0.1) {
  ScenarioConfig s = default_scenario();
  s.seed = seed;
  s.reservations.uniform = u;
  s.finalize();
  return s;
}

ScenarioConfig p2_scenario(std::uint64_t seed, double u = 0.5) {
  ScenarioConfig s = default_scenario();
  s.id = "synthetic-p2";
  s.seed = seed;
  s.market.central_agent = "P2";
  s.market.support_agents.clear();
  s.reservations.uniform = u;
  s.finalize();
  return s;
}

const CoefficientRow& row_for(const ExperimentReport& r, const FeatureKey& key) {
  for (const auto& row : r.coefficients) {
    if (row.column && *row.column == key) return row;
  }
  throw std::out_of_range("no row for " + key.agent);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(MethodComparison, P1LassoIsSparserThanOls) {
  const auto report = run_method_comparison(p1_scenario(31));
  ASSERT_EQ(report.coefficients.size(), 16u);
  int lasso_spurious = 0, ols_spurious = 0;
  for (const auto& row : report.coefficients) {
    ASSERT_TRUE(row.truth.has_value());
    if (!row.column) continue;
    const bool own = row.column->agent == "P1";
    EXPECT_EQ(row.ols_self.has_value(), own);
    if (!own && *row.truth == 0.0) {
      lasso_spurious += std::abs(row.lasso_all) > 0.02;
      ols_spurious += std::abs(row.ols_all) > 0.02;
    }
  }
  EXPECT_LE(lasso_spurious, ols_spurious);
  EXPECT_GT(row_for(report, {"P2", 1}).lasso_all, 0.2);
  EXPECT_EQ(*row_for(report, {"P2", 1}).truth, 0.4);
  EXPECT_FALSE(report.coefficients.front().column.has_value());
}

TEST(MethodComparison, P2BuysNothing) {
  const auto report = run_method_comparison(p2_scenario(31));
  for (const auto& row : report.coefficients) {
    if (row.column && row.column->agent != "P2") EXPECT_EQ(row.lasso_all, 0.0) << row.column->agent;
    if (row.column && row.column->agent != "P2") EXPECT_EQ(*row.truth, 0.0);
  }
  EXPECT_EQ(*row_for(report, {"P2", 1}).truth, 0.5);
  EXPECT_EQ(report.sweep.front().second.total_payment(), 0.0);
}

TEST(MethodComparison, NoiselessBuyerIsRecoveredByOls) {
  auto s = p1_scenario(8);
  std::get<SyntheticSpec>(s.source).noise_std[0] = 0.0;
  // With deeper lags the buyer's lag-1 column is an exact combination of lag-2
  // columns, so only the fit, not the coefficients, is pinned down.
  const auto deep = run_method_comparison(s);
  const auto& outcome = deep.sweep.front().second;
  Eigen::VectorXd ols_all(static_cast<Eigen::Index>(deep.coefficients.size()));
  for (std::size_t j = 0; j < deep.coefficients.size(); ++j) {
    ols_all[static_cast<Eigen::Index>(j)] = deep.coefficients[j].ols_all;
  }
  EXPECT_LT(mse(outcome.full_design, ols_all, outcome.target), 1e-20);

  s.market.lag_spec.max_lag = 1;
  const auto report = run_method_comparison(s);
  ASSERT_EQ(report.coefficients.size(), 6u);
  for (const auto& row : report.coefficients) EXPECT_NEAR(row.ols_all, *row.truth, 1e-6);
}

TEST(MethodComparison, CsvSourceHasNoTruth) {
  ScenarioConfig s = parse_scenario(
      R"({"central_agent": "Z1", "max_lag": 2, "window": 200, "reservations": 0.05,
          "source": {"type": "csv", "path": "zonal_300.csv", "normalization": "per-zone-max"}})",
      kData);
  const auto report = run_method_comparison(s);
  EXPECT_EQ(report.coefficients.size(), 1u + 4u * 2u);
  for (const auto& row : report.coefficients) EXPECT_FALSE(row.truth.has_value());
  EXPECT_EQ(report.summary.viability_rate, 1.0);
}

TEST(TSweep, SinglePointMatchesSingleClearing) {
  const auto s = p1_scenario(4);
  const std::vector<int> grid{240};
  const auto sweep = run_t_sweep(s, grid);
  const auto single = run_single_clearing(s);
  ASSERT_EQ(sweep.sweep.size(), 1u);
  EXPECT_EQ(sweep.sweep[0].first.param, "T");
  EXPECT_EQ(sweep.sweep[0].second.market_beta, single.sweep[0].second.market_beta);
}

TEST(TSweep, PerStepPaymentDecays) {
  const std::vector<int> grid{240, 500, 1000, 2000};
  const auto report = run_t_sweep(p1_scenario(4), grid);
  ASSERT_EQ(report.sweep.size(), 4u);
  std::vector<double> per_step;
  for (const auto& [point, outcome] : report.sweep) {
    EXPECT_EQ(outcome.window_length(), static_cast<int>(point.value));
    per_step.push_back(outcome.total_payment() / outcome.window_length());
  }
  EXPECT_GT(per_step.front(), 0.0);
  EXPECT_LT(per_step.back(), 0.25 * per_step.front());
  EXPECT_EQ(report.summary.clearings, 4u);
  EXPECT_EQ(report.summary.viability_rate, 1.0);
}

TEST(TSweep, IndependentBuyerGainVanishes) {
  // Cheap data lets P2 fit noise; the in-sample gain from that shrinks with T.
  const std::vector<int> grid{240, 4000};
  const auto report = run_t_sweep(p2_scenario(17, 0.02), grid);
  const double short_gain = report.sweep[0].second.buyer_net_gain;
  const double long_gain = report.sweep[1].second.buyer_net_gain;
  EXPECT_GE(long_gain, -kViabilityTolerance);
  EXPECT_LT(long_gain, 0.25 * short_gain);
  EXPECT_LT(long_gain, 0.01);
}

TEST(USweep, EndpointsAndInterior) {
  const std::vector<double> grid{0.0, 0.05, 0.1, 0.5, 1e4};
  const auto report = run_u_sweep(p1_scenario(6), grid, true);
  ASSERT_EQ(report.sweep.size(), grid.size());
  const auto& free = report.sweep.front().second;
  EXPECT_EQ(free.total_payment(), 0.0);
  EXPECT_NEAR(free.buyer_net_gain, free.baseline_loss.mse - free.market_loss.mse, 1e-15);
  const auto& priced_out = report.sweep.back().second;
  EXPECT_EQ(priced_out.total_payment(), 0.0);
  EXPECT_NEAR(priced_out.buyer_net_gain, 0.0, 1e-10);
  EXPECT_GT(report.sweep[2].second.total_payment(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    // Gain is the optimum value difference, so it cannot rise with the price.
    EXPECT_LE(report.sweep[k].second.buyer_net_gain, report.sweep[k - 1].second.buyer_net_gain + 1e-9);
    EXPECT_EQ(report.sweep[k].first.param, "u");
  }
}

TEST(USweep, ScaleSemanticsMultiplySchedule) {
  auto s = p1_scenario(6);
  s.reservations.per_agent["P3"] = 0.4;
  const std::vector<double> grid{0.5};
  const auto scaled = run_u_sweep(s, grid, false);
  EXPECT_EQ(scaled.sweep[0].first.param, "u_scale");
  for (const auto& p : scaled.sweep[0].second.payments) EXPECT_EQ(p.reservation, p.agent_id == "P3" ? 0.2 : 0.05);
}

TEST(TwoAgentGridTest, DiagonalMatchesUniformSweep) {
  const auto s = p1_scenario(13);
  TwoAgentGrid grid{"P2", "P3", {0.05, 0.2}, {0.05, 0.2}, 0.2};
  const auto report = run_two_agent_grid(s, grid);
  ASSERT_EQ(report.sweep.size(), 4u);
  const std::vector<double> u{0.2};
  const auto uniform = run_u_sweep(s, u, true);
  // Cell (1, 1) prices every support feature at 0.2.
  EXPECT_LT((report.sweep[3].second.market_beta - uniform.sweep[0].second.market_beta).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(report.sweep[1].first.param, "u_P3@u_P2=0.05");
  EXPECT_EQ(report.sweep[1].first.value, 0.2);
  ASSERT_TRUE(report.summary.cross_monotonicity.has_value());
  EXPECT_GE(*report.summary.cross_monotonicity, 0.0);
  EXPECT_LE(*report.summary.cross_monotonicity, 1.0);
}

TEST(TwoAgentGridTest, SingleCellAndBadAgents) {
  const auto s = p1_scenario(13);
  const auto one = run_two_agent_grid(s, TwoAgentGrid{"P2", "P3", {0.1}, {0.1}, 0.1});
  EXPECT_EQ(one.sweep.size(), 1u);
  EXPECT_FALSE(one.summary.cross_monotonicity.has_value());
  EXPECT_THROW(run_two_agent_grid(s, TwoAgentGrid{"P1", "P3", {0.1}, {0.1}, 0.1}), InputError);
  EXPECT_THROW(run_two_agent_grid(s, TwoAgentGrid{"P2", "P3", {}, {0.1}, 0.1}), InputError);
}

TEST(Writers, OutputsAreDeterministic) {
  const auto dir = std::filesystem::temp_directory_path() / "lassomarket_test_writers";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "a");
  std::filesystem::create_directories(dir / "b");
  for (const char* sub : {"a", "b"}) {
    const auto report = run_method_comparison(p1_scenario(21));
    write_outcome_table(report.sweep, dir / sub / "outcomes.csv");
    write_coefficient_table(report, dir / sub / "coefficients.csv");
    write_per_step_table(report, dir / sub / "per_step.csv");
    write_summary_json(report, dir / sub / "summary.json");
  }
  for (const char* name : {"outcomes.csv", "coefficients.csv", "per_step.csv", "summary.json"}) {
    const auto a = slurp(dir / "a" / name);
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, slurp(dir / "b" / name)) << name;
  }
  const auto coeffs = slurp(dir / "a" / "coefficients.csv");
  EXPECT_EQ(coeffs.rfind("agent,lag,truth,ols_self,ols_all,lasso_all\nintercept,0,0,", 0), 0u);
  EXPECT_NE(slurp(dir / "a" / "summary.json").find("\"viability_rate\": 1.0"), std::string::npos);
}

TEST(PrepareMarket, RejectsBadWindow) {
  EXPECT_THROW(prepare_market(p1_scenario(1), 0), InputError);
  ScenarioConfig s = parse_scenario(
      R"({"central_agent": "Z1", "max_lag": 3, "window": 400,
          "source": {"type": "csv", "path": "zonal_300.csv"}})",
      kData);
  EXPECT_THROW(run_single_clearing(s), InputError);
}

}  // namespace
}  // namespace lassomarket
