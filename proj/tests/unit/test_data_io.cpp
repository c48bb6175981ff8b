#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lassomarket/data_io.hpp"
#include "lassomarket/errors.hpp"
#include "lassomarket/scenario.hpp"

namespace lassomarket {
namespace {

const std::filesystem::path kData = LASSOMARKET_TEST_DATA;

std::vector<std::vector<std::string>> read_cells(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lassomarket_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(ParseHour, IntegerAndIsoForms) {
  EXPECT_EQ(parse_hour("0"), 0);
  EXPECT_EQ(parse_hour("-5"), -5);
  EXPECT_EQ(parse_hour("1970-01-02T00"), 24);
  EXPECT_EQ(parse_hour("2024-01-01T00:00"), 19723 * 24);
  EXPECT_EQ(parse_hour("2024-01-01 13:00:00"), 19723 * 24 + 13);
  EXPECT_EQ(parse_hour("2024-03-01T05:00:00Z"), (19723 + 60) * 24 + 5);
  EXPECT_THROW(parse_hour("2024-01-01T00:30"), InputError);
  EXPECT_THROW(parse_hour("2024-02-30T00:00"), InputError);
  EXPECT_THROW(parse_hour("yesterday"), InputError);
  EXPECT_THROW(parse_hour(""), InputError);
}

TEST(IngestCsv, ValuesAreBitIdenticalToText) {
  const auto result = ingest_csv(kData / "zonal_48.csv");
  const auto& ds = result.dataset;
  ASSERT_EQ(ds.size(), 48u);
  EXPECT_EQ(ds.zones, (std::vector<std::string>{"Z1", "Z2", "Z3"}));
  EXPECT_EQ(result.report.rows_read, 48u);
  EXPECT_EQ(result.report.rows_dropped, 0u);
  EXPECT_TRUE(result.report.warnings.empty());

  const auto cells = read_cells(kData / "zonal_48.csv");
  for (std::size_t k = 0; k < 48; ++k) {
    EXPECT_EQ(ds.hours[k], parse_hour(cells[k + 1][0]));
    for (std::size_t z = 0; z < 3; ++z) EXPECT_EQ(ds.values[z][k], parse_double(cells[k + 1][z + 1]));
  }
  for (std::size_t k = 1; k < 48; ++k) EXPECT_EQ(ds.hours[k], ds.hours[k - 1] + 1);
}

TEST(IngestCsv, MissingCellDropsRow) {
  const auto result = ingest_csv(kData / "zonal_48_missing.csv");
  EXPECT_EQ(result.dataset.size(), 47u);
  EXPECT_EQ(result.report.rows_read, 48u);
  EXPECT_EQ(result.report.rows_dropped, 1u);
  EXPECT_TRUE(result.report.warnings.empty());
  // The dropped hour leaves a gap.
  const auto& h = result.dataset.hours;
  EXPECT_EQ(h[17] - h[16], 2);
}

TEST(IngestCsv, PerZoneMaxNormalisation) {
  const auto raw = ingest_csv(kData / "zonal_48.csv").dataset;
  const auto norm = ingest_csv(kData / "zonal_48.csv", {}, Normalization::per_zone_max).dataset;
  for (std::size_t z = 0; z < norm.zones.size(); ++z) {
    const double peak = *std::max_element(raw.values[z].begin(), raw.values[z].end());
    EXPECT_EQ(*std::max_element(norm.values[z].begin(), norm.values[z].end()), 1.0);
    for (std::size_t k = 0; k < norm.size(); ++k) EXPECT_DOUBLE_EQ(norm.values[z][k], raw.values[z][k] / peak);
  }
  EXPECT_EQ(parse_normalization("per-zone-max"), Normalization::per_zone_max);
  EXPECT_THROW(parse_normalization("zscore"), InputError);
}

TEST(IngestCsv, SchemaSelectsAndRenamesColumns) {
  ColumnSchema schema;
  schema.zones = {{"Z3", "north"}, {"Z1", "south"}};
  const auto ds = ingest_csv(kData / "zonal_48.csv", schema).dataset;
  const auto all = ingest_csv(kData / "zonal_48.csv").dataset;
  EXPECT_EQ(ds.zones, (std::vector<std::string>{"north", "south"}));
  EXPECT_EQ(ds.values[0], all.values[2]);
  EXPECT_EQ(ds.values[ds.zone_index("south")], all.values[0]);
  EXPECT_THROW(ds.zone_index("Z2"), InputError);
}

TEST(IngestCsv, RejectsMissingColumn) {
  ColumnSchema schema;
  schema.zones = {{"Z9", "Z9"}};
  EXPECT_THROW(ingest_csv(kData / "zonal_48.csv", schema), InputError);
  schema = ColumnSchema{};
  schema.timestamp_column = "time";
  EXPECT_THROW(ingest_csv(kData / "zonal_48.csv", schema), InputError);
}

TEST(IngestCsv, RejectsNonIncreasingTimestamps) {
  std::istringstream in("timestamp,A\n5,1.0\n6,2.0\n6,3.0\n");
  EXPECT_THROW(ingest_csv(in), InputError);
  std::istringstream back("timestamp,A\n5,1.0\n4,2.0\n");
  EXPECT_THROW(ingest_csv(back), InputError);
}

TEST(IngestCsv, WarnsWhenManyRowsDropped) {
  std::istringstream in("timestamp,A,B\n0,1,2\n1,NA,2\n2,1,2\n3,1,nan\n4,1,2\n5,1,2\n6,1,2\n7,1,2\n8,1,2\n9,1,2\n");
  const auto result = ingest_csv(in);
  EXPECT_EQ(result.report.rows_dropped, 2u);
  ASSERT_EQ(result.report.warnings.size(), 1u);
  std::istringstream few("timestamp,A\n0,1\n1,\n2,1\n3,1\n4,1\n5,1\n6,1\n7,1\n8,1\n9,1\n10,1\n");
  EXPECT_TRUE(ingest_csv(few).report.warnings.empty());
}

TEST(IngestCsv, HandlesBomCommentsAndCrlf) {
  std::istringstream in("\xEF\xBB\xBF# exported\r\ntimestamp,A\r\n0,1.5\r\n1,2.5\r\n");
  const auto ds = ingest_csv(in).dataset;
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.values[0][1], 2.5);
}

TEST(ToAgentSeries, WindowWithHistory) {
  const auto ds = ingest_csv(kData / "zonal_300.csv").dataset;
  const std::int64_t start = ds.hours.front() + 3;
  const auto series = to_agent_series(ds, start, 240, 3);
  ASSERT_EQ(series.size(), 4u);
  for (const auto& s : series) {
    EXPECT_EQ(s.values.size(), 243u);
    EXPECT_EQ(s.history, 3u);
    EXPECT_EQ(s.start_time, start);
  }
  // Spot checks against the raw text.
  const auto cells = read_cells(kData / "zonal_300.csv");
  for (std::int64_t h : {start - 3, start, start + 100, start + 239}) {
    const auto row = static_cast<std::size_t>(h - ds.hours.front()) + 1;
    EXPECT_EQ(parse_hour(cells[row][0]), h);
    EXPECT_EQ(series[2].at_hour(h), parse_double(cells[row][3]));
  }
}

TEST(ToAgentSeries, RejectsWindowWithoutHistory) {
  const auto ds = ingest_csv(kData / "zonal_300.csv").dataset;
  EXPECT_THROW(to_agent_series(ds, ds.hours.front(), 24, 3), InputError);
  EXPECT_THROW(to_agent_series(ds, ds.hours.front() + 3, 400, 3), InputError);
}

TEST(ToAgentSeries, RejectsGapInsideWindow) {
  const auto ds = ingest_csv(kData / "zonal_48_missing.csv").dataset;
  try {
    to_agent_series(ds, ds.hours.front() + 3, 30, 3);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("contiguous"), std::string::npos) << e.what();
  }
  // A window entirely after the gap is fine.
  EXPECT_NO_THROW(to_agent_series(ds, ds.hours.front() + 21, 20, 3));
}

TEST(WriteDatasetCsv, RoundTrips) {
  const auto dir = scratch_dir("dataset");
  const auto ds = ingest_csv(kData / "zonal_48_missing.csv").dataset;
  write_dataset_csv(ds, dir / "copy.csv");
  const auto again = ingest_csv(dir / "copy.csv").dataset;
  EXPECT_EQ(again.zones, ds.zones);
  EXPECT_EQ(again.hours, ds.hours);
  EXPECT_EQ(again.values, ds.values);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(3.0), "3");
  for (double v : {1.0 / 3.0, -2.5e-17, 12345.678901234567, 6.02e23}) EXPECT_EQ(parse_double(format_number(v)), v);
}

std::vector<SweepResult> sweep_of(int points) {
  SyntheticSpec spec;
  spec.seed = 9;
  const auto series = generate_synthetic(spec, 120, 1);
  MarketConfig config;
  config.central_agent = "P1";
  config.support_agents = {"P2", "P3", "P4", "P5"};
  config.lag_spec = LagSpec{1, 120};
  std::vector<SweepResult> out;
  for (int k = 0; k < points; ++k) {
    const double u = 0.05 * k;
    out.emplace_back(SweepPoint{"u", u},
                     clear_market(config, series, ReservationSchedule::uniform(config.support_agents, 1, u)));
  }
  return out;
}

TEST(WriteOutcomeTable, OneRowPerFeaturePlusBuyer) {
  const auto sweep = sweep_of(1);
  std::ostringstream out;
  write_outcome_table(sweep, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# ", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, kOutcomeHeader);
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[4].rfind("u,0,P1,0,", 0), 0u) << rows[4];
}

TEST(WriteOutcomeTable, SweepRowsAndDeterminism) {
  const auto dir = scratch_dir("outcomes");
  const auto sweep = sweep_of(10);
  write_outcome_table(sweep, dir / "a.csv");
  write_outcome_table(sweep_of(10), dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));

  const auto cells = read_cells(dir / "a.csv");
  ASSERT_EQ(cells.size(), 2u + 50u);
  double buyer_total = 0.0, feature_total = 0.0;
  for (std::size_t r = 2; r < cells.size(); ++r) {
    ASSERT_EQ(cells[r].size(), 10u);
    EXPECT_FALSE(cells[r][6].empty());
    (cells[r][2] == "P1" ? buyer_total : feature_total) += parse_double(cells[r][6]);
  }
  EXPECT_NEAR(buyer_total, feature_total, 1e-12);
}

TEST(WriteOutcomeTable, UnwritablePathThrows) {
  const auto sweep = sweep_of(1);
  EXPECT_THROW(write_outcome_table(sweep, std::filesystem::path("/nonexistent-dir/x/outcomes.csv")), IoError);
  std::ostringstream out;
  EXPECT_THROW(write_outcome_table(std::span<const SweepResult>{}, out), InputError);
}

TEST(Scenario, DefaultIsFivePlayerSynthetic) {
  const auto s = default_scenario();
  EXPECT_TRUE(s.synthetic());
  EXPECT_EQ(s.market.central_agent, "P1");
  EXPECT_EQ(s.market.support_agents, (std::vector<std::string>{"P2", "P3", "P4", "P5"}));
  EXPECT_NO_THROW(s.validate());
}

TEST(Scenario, ParsesFullDocument) {
  const auto s = parse_scenario(R"({
    "id": "grid", "central_agent": "P1", "max_lag": 2, "window": 100, "seed": 5,
    "source": {"type": "synthetic", "own_phi": 0.3},
    "solver": {"tolerance": 1e-9, "max_iterations": 500},
    "reservations": {"uniform": 0.1, "agents": {"P3": 0.2}, "features": [{"agent": "P2", "lag": 2, "u": 0.7}]},
    "sweeps": {"u_grid": [0, 0.5], "uniform": false, "t_grid": [50, 100],
               "grid2": {"agent_a": "P2", "agent_b": "P3", "u_grid_a": [0.1], "u_grid_b": [0.1, 0.2]}}
  })");
  EXPECT_EQ(s.id, "grid");
  EXPECT_EQ(s.market.lag_spec.max_lag, 2);
  EXPECT_EQ(s.market.lag_spec.window_length, 100);
  EXPECT_EQ(s.market.solver.max_iterations, 500);
  EXPECT_EQ(std::get<SyntheticSpec>(s.source).seed, 5u);
  EXPECT_EQ(std::get<SyntheticSpec>(s.source).own_phi, 0.3);
  EXPECT_FALSE(s.uniform_sweep);
  ASSERT_TRUE(s.grid2.has_value());
  const auto schedule = s.reservations.resolve(s.market.support_agents, 2);
  EXPECT_EQ(schedule.at({"P2", 1}), 0.1);
  EXPECT_EQ(schedule.at({"P2", 2}), 0.7);
  EXPECT_EQ(schedule.at({"P3", 1}), 0.2);
  EXPECT_EQ(schedule.at({"P5", 2}), 0.1);
}

TEST(Scenario, CsvSourceResolvesRelativePath) {
  const auto s = parse_scenario(
      R"({"central_agent": "Z1", "max_lag": 3, "window": 24,
          "source": {"type": "csv", "path": "zonal_48.csv", "zones": ["Z1", {"column": "Z2", "zone": "Z2"}],
                     "normalization": "per-zone-max", "window_start": "2024-01-01T05:00"}})",
      kData);
  const auto& csv = std::get<CsvSource>(s.source);
  EXPECT_EQ(csv.path, kData / "zonal_48.csv");
  EXPECT_EQ(csv.schema.zones.size(), 2u);
  EXPECT_EQ(*csv.window_start, parse_hour("2024-01-01T05"));
}

TEST(Scenario, RejectsBadDocuments) {
  EXPECT_THROW(parse_scenario("{"), InputError);
  EXPECT_THROW(parse_scenario("[]"), InputError);
  EXPECT_THROW(parse_scenario(R"({"window": 10})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"central_agent": "P1", "colour": 1})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"central_agent": "P1", "window": "long"})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"central_agent": "P9"})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"central_agent": "P1", "sweeps": {"u_grid": [0.5, 0.1]}})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"central_agent": "P1", "reservations": -1})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"central_agent": "P1", "reservations": {"agents": {"P1": 0.1}}})").reservations
                   .resolve({"P2"}, 1),
               InputError);
  EXPECT_THROW(load_scenario(kData / "missing.json"), InputError);
}

}  // namespace
}  // namespace lassomarket
