#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lassomarket/data_io.hpp"
#include "lassomarket/market.hpp"
#include "lassomarket/scenario.hpp"

namespace lassomarket {

/// Coefficients of one design column under each regression method.
struct CoefficientRow {
  ColumnKey column;
  std::optional<double> truth;     // synthetic sources only
  std::optional<double> ols_self;  // only for the intercept and the buyer's own lags
  double ols_all = 0.0;
  double lasso_all = 0.0;
};

struct ReportSummary {
  std::size_t clearings = 0;
  double viability_rate = 0.0;
  double mean_buyer_gain = 0.0;
  /// Two-agent grids: share of neighbouring grid cells where an agent's payment
  /// does not rise when the other agent's reservation rises.
  std::optional<double> cross_monotonicity;
};

struct ExperimentReport {
  std::string scenario_id;
  std::string kind;
  std::vector<CoefficientRow> coefficients;
  std::vector<SweepResult> sweep;
  ReportSummary summary;
};

/// Series and market settings ready for clearing with windows up to `window_length`.
struct MarketData {
  std::vector<AgentSeries> series;
  MarketConfig market;
};

MarketData prepare_market(const ScenarioConfig& scenario, int window_length);

ExperimentReport run_single_clearing(const ScenarioConfig& scenario);
ExperimentReport run_method_comparison(const ScenarioConfig& scenario);
ExperimentReport run_t_sweep(const ScenarioConfig& scenario, std::span<const int> t_grid);
/// `uniform`: every support feature gets u. Otherwise u multiplies the scenario's schedule.
ExperimentReport run_u_sweep(const ScenarioConfig& scenario, std::span<const double> u_grid, bool uniform);
ExperimentReport run_two_agent_grid(const ScenarioConfig& scenario, const TwoAgentGrid& grid);

void write_coefficient_table(const ExperimentReport& report, const std::filesystem::path& path);
/// Per sweep point and agent: total payment and payment / T, plus the buyer's per-step figures.
void write_per_step_table(const ExperimentReport& report, const std::filesystem::path& path);
void write_summary_json(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace lassomarket
