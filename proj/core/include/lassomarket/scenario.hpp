#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lassomarket/data_io.hpp"
#include "lassomarket/market.hpp"
#include "lassomarket/timeseries.hpp"

namespace lassomarket {

struct CsvSource {
  std::filesystem::path path;
  ColumnSchema schema;
  Normalization normalization = Normalization::none;
  /// First window hour; defaults to the first hour with max_lag hours of history.
  std::optional<std::int64_t> window_start;
};

/// How reservations are assigned: a uniform base value, overridden per agent,
/// then per feature.
struct ReservationSpec {
  double uniform = 0.0;
  std::map<std::string, double> per_agent;
  std::map<FeatureKey, double> per_feature;

  ReservationSchedule resolve(const std::vector<std::string>& support_agents, int max_lag) const;
};

struct TwoAgentGrid {
  std::string agent_a;
  std::string agent_b;
  std::vector<double> u_grid_a;
  std::vector<double> u_grid_b;
  /// Reservation held by every other support agent.
  double others_u = 0.1;
};

struct ScenarioConfig {
  std::string id = "scenario";
  std::variant<SyntheticSpec, CsvSource> source = SyntheticSpec{};
  MarketConfig market;
  ReservationSpec reservations;
  std::vector<double> u_grid;
  bool uniform_sweep = true;
  std::vector<int> t_grid;
  std::optional<TwoAgentGrid> grid2;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;

  bool synthetic() const noexcept { return std::holds_alternative<SyntheticSpec>(source); }
  /// Seeds the synthetic generator from `seed` and fills default support agents.
  void finalize();
  void validate() const;
};

/// The five-agent synthetic market with P1 as buyer, max lag 3 and a 240-hour window.
ScenarioConfig default_scenario();

/// Parses the JSON scenario format documented in the README.
ScenarioConfig parse_scenario(std::string_view json_text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace lassomarket
