#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lassomarket/market.hpp"
#include "lassomarket/timeseries.hpp"

namespace lassomarket {

/// Hourly zonal production. `hours` is strictly increasing; gaps left by
/// dropped rows are allowed and resolved when a window is cut out.
struct ZonalDataset {
  std::vector<std::string> zones;
  std::vector<std::int64_t> hours;
  /// values[z][k] is zone z at hours[k].
  std::vector<std::vector<double>> values;

  std::size_t size() const noexcept { return hours.size(); }
  std::size_t zone_index(const std::string& zone) const;
};

enum class Normalization { none, per_zone_max };

Normalization parse_normalization(std::string_view text);

struct ColumnSchema {
  std::string timestamp_column = "timestamp";
  /// (CSV header, zone id) in output order; empty means every non-timestamp column, as named.
  std::vector<std::pair<std::string, std::string>> zones;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<std::string> warnings;
};

struct IngestResult {
  ZonalDataset dataset;
  IngestReport report;
};

/// Epoch hour from an integer or an ISO-8601 "YYYY-MM-DD[T ]HH[:00[:00]]" local hour.
std::int64_t parse_hour(std::string_view text);

/// Reads `timestamp,<zone>,...` CSV. Rows with a missing or non-finite zone value
/// are dropped and counted; dropping more than 10% of rows adds a warning.
/// Throws InputError for absent schema columns or non-increasing timestamps.
IngestResult ingest_csv(std::istream& in, const ColumnSchema& schema = {}, Normalization norm = Normalization::none);
IngestResult ingest_csv(const std::filesystem::path& path, const ColumnSchema& schema = {},
                        Normalization norm = Normalization::none);

/// One series per zone whose window is hours [start_hour, start_hour + T) with
/// `max_lag` hours of history; every hour of [start_hour - max_lag, start_hour + T)
/// must be present.
std::vector<AgentSeries> to_agent_series(const ZonalDataset& dataset, std::int64_t start_hour, int window_length,
                                         int max_lag);

/// Writes the dataset back in the ingest format with integer epoch-hour timestamps.
void write_dataset_csv(const ZonalDataset& dataset, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

struct SweepPoint {
  std::string param;
  double value = 0.0;
};

using SweepResult = std::pair<SweepPoint, MarketOutcome>;

inline constexpr std::string_view kOutcomeHeader =
    "sweep_param,sweep_value,agent,lag,coefficient,reservation,payment,baseline_mse,market_mse,buyer_net_gain";

/// One row per (sweep point, support feature), followed by one buyer row
/// (central agent, lag 0, payment = total paid) per sweep point.
void write_outcome_table(std::span<const SweepResult> outcomes, std::ostream& out);
void write_outcome_table(std::span<const SweepResult> outcomes, const std::filesystem::path& path);

}  // namespace lassomarket
