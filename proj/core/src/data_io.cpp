#include "lassomarket/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lassomarket/errors.hpp"

namespace lassomarket {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

// Empty, NA-like or non-finite cells count as missing.
std::optional<double> parse_cell(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::size_t ZonalDataset::zone_index(const std::string& zone) const {
  const auto it = std::find(zones.begin(), zones.end(), zone);
  if (it == zones.end()) throw InputError("dataset has no zone " + zone);
  return static_cast<std::size_t>(it - zones.begin());
}

Normalization parse_normalization(std::string_view text) {
  if (text == "none") return Normalization::none;
  if (text == "per-zone-max" || text == "per_zone_max") return Normalization::per_zone_max;
  throw InputError("unknown normalization '" + std::string(text) + "' (expected none or per-zone-max)");
}

std::int64_t parse_hour(std::string_view text) {
  text = trim(text);
  std::int64_t epoch_hour = 0;
  if (parse_int(text, epoch_hour)) return epoch_hour;

  auto fail = [&]() -> std::int64_t {
    throw InputError("cannot parse timestamp '" + std::string(text) + "'");
  };
  if (text.size() < 13 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ')) return fail();
  int year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month) ||
      !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hour)) {
    return fail();
  }
  std::string_view rest = text.substr(13);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  if (!rest.empty()) {
    if (rest.size() < 3 || rest[0] != ':' || !parse_int(rest.substr(1, 2), minute)) return fail();
    rest.remove_prefix(3);
    if (!rest.empty()) {
      if (rest.size() != 3 || rest[0] != ':' || !parse_int(rest.substr(1, 2), second)) return fail();
    }
  }
  if (minute != 0 || second != 0) {
    throw InputError("timestamp '" + std::string(text) + "' is not on the hour");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23) return fail();
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 24 + hour;
}

IngestResult ingest_csv(std::istream& in, const ColumnSchema& schema, Normalization norm) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&] {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  bool have_header = false;
  while (!have_header && next_line()) have_header = !trim(line).empty() && line.front() != '#';
  if (!have_header) throw InputError("ingest_csv: empty input, header row expected");
  const auto header = split_csv(line);

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("ingest_csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ts_col = column(schema.timestamp_column);

  std::vector<std::pair<std::size_t, std::string>> zone_cols;
  if (schema.zones.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != ts_col) zone_cols.emplace_back(c, std::string(header[c]));
    }
  } else {
    for (const auto& [csv_name, zone] : schema.zones) zone_cols.emplace_back(column(csv_name), zone);
  }
  if (zone_cols.empty()) throw InputError("ingest_csv: no zone columns");

  IngestResult result;
  auto& ds = result.dataset;
  for (const auto& [c, zone] : zone_cols) ds.zones.push_back(zone);
  ds.values.resize(zone_cols.size());

  std::optional<std::int64_t> previous;
  std::vector<double> row_values(zone_cols.size());
  while (next_line()) {
    if (trim(line).empty() || line.front() == '#') continue;
    ++result.report.rows_read;
    const auto cells = split_csv(line);
    if (ts_col >= cells.size() || cells[ts_col].empty()) {
      throw InputError("ingest_csv: line " + std::to_string(line_no) + " has no timestamp");
    }
    const std::int64_t hour = parse_hour(cells[ts_col]);
    if (previous && hour <= *previous) {
      throw InputError("ingest_csv: timestamps not strictly increasing at line " + std::to_string(line_no));
    }
    previous = hour;

    bool complete = true;
    for (std::size_t z = 0; z < zone_cols.size(); ++z) {
      const std::size_t c = zone_cols[z].first;
      const auto v = c < cells.size() ? parse_cell(cells[c]) : std::nullopt;
      if (!v) {
        complete = false;
        break;
      }
      row_values[z] = *v;
    }
    if (!complete) {
      ++result.report.rows_dropped;
      continue;
    }
    ds.hours.push_back(hour);
    for (std::size_t z = 0; z < zone_cols.size(); ++z) ds.values[z].push_back(row_values[z]);
  }

  if (result.report.rows_read > 0 && result.report.rows_dropped * 10 > result.report.rows_read) {
    std::ostringstream msg;
    msg << "dropped " << result.report.rows_dropped << " of " << result.report.rows_read
        << " rows with missing values (more than 10%)";
    result.report.warnings.push_back(msg.str());
  }

  if (norm == Normalization::per_zone_max) {
    for (std::size_t z = 0; z < ds.zones.size(); ++z) {
      auto& v = ds.values[z];
      if (v.empty()) continue;
      const double peak = *std::max_element(v.begin(), v.end());
      if (!(peak > 0.0)) throw InputError("ingest_csv: zone " + ds.zones[z] + " has no positive value to normalise by");
      for (double& x : v) x /= peak;
    }
  }
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnSchema& schema, Normalization norm) {
  std::ifstream in(path);
  if (!in) throw InputError("ingest_csv: cannot open " + path.string());
  return ingest_csv(in, schema, norm);
}

std::vector<AgentSeries> to_agent_series(const ZonalDataset& dataset, std::int64_t start_hour, int window_length,
                                         int max_lag) {
  LagSpec{max_lag, window_length}.validate();
  const std::int64_t first = start_hour - max_lag;
  const std::int64_t end = start_hour + window_length;  // exclusive

  auto describe_available = [&]() {
    std::ostringstream msg;
    msg << "need hours [" << first << ", " << end - 1 << "]";
    if (dataset.hours.empty()) {
      msg << " but the dataset is empty";
    } else {
      // Report the contiguous run nearest the requested start.
      auto it = std::lower_bound(dataset.hours.begin(), dataset.hours.end(), first);
      if (it == dataset.hours.end()) --it;
      std::size_t lo = static_cast<std::size_t>(it - dataset.hours.begin());
      std::size_t hi = lo;
      while (lo > 0 && dataset.hours[lo - 1] + 1 == dataset.hours[lo]) --lo;
      while (hi + 1 < dataset.hours.size() && dataset.hours[hi] + 1 == dataset.hours[hi + 1]) ++hi;
      msg << " but the nearest contiguous run is [" << dataset.hours[lo] << ", " << dataset.hours[hi] << "]";
    }
    return msg.str();
  };

  const auto it = std::lower_bound(dataset.hours.begin(), dataset.hours.end(), first);
  const auto needed = static_cast<std::size_t>(end - first);
  const auto begin_idx = static_cast<std::size_t>(it - dataset.hours.begin());
  if (it == dataset.hours.end() || *it != first || begin_idx + needed > dataset.hours.size() ||
      dataset.hours[begin_idx + needed - 1] != end - 1) {
    throw InputError("to_agent_series: " + describe_available());
  }

  std::vector<AgentSeries> out;
  for (std::size_t z = 0; z < dataset.zones.size(); ++z) {
    AgentSeries s;
    s.agent_id = dataset.zones[z];
    s.start_time = start_hour;
    s.history = static_cast<std::size_t>(max_lag);
    const auto& v = dataset.values[z];
    s.values.assign(v.begin() + static_cast<std::ptrdiff_t>(begin_idx),
                    v.begin() + static_cast<std::ptrdiff_t>(begin_idx + needed));
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0 into 0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw IoError("format_number: conversion failed");
  return std::string(buf, ptr);
}

void write_dataset_csv(const ZonalDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "timestamp";
  for (const auto& z : dataset.zones) out << ',' << z;
  out << '\n';
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    out << dataset.hours[k];
    for (std::size_t z = 0; z < dataset.zones.size(); ++z) out << ',' << format_number(dataset.values[z][k]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_outcome_table(std::span<const SweepResult> outcomes, std::ostream& out) {
  if (outcomes.empty()) throw InputError("write_outcome_table: no outcomes");
  out << "# columns: " << kOutcomeHeader
      << "; one row per support feature, then a buyer row (lag 0, payment = total) per sweep point\n";
  out << kOutcomeHeader << '\n';
  for (const auto& [point, outcome] : outcomes) {
    const std::string value = format_number(point.value);
    const std::string shared = format_number(outcome.baseline_loss.mse) + ',' +
                               format_number(outcome.market_loss.mse) + ',' + format_number(outcome.buyer_net_gain);
    for (const auto& p : outcome.payments) {
      out << point.param << ',' << value << ',' << p.agent_id << ',' << p.lag << ',' << format_number(p.coefficient)
          << ',' << format_number(p.reservation) << ',' << format_number(p.amount) << ',' << shared << '\n';
    }
    std::string central;
    if (outcome.own_design.column_map.size() > 1 && outcome.own_design.column_map[1]) {
      central = outcome.own_design.column_map[1]->agent;
    }
    out << point.param << ',' << value << ',' << central << ",0,,," << format_number(outcome.total_payment()) << ','
        << shared << '\n';
  }
}

void write_outcome_table(std::span<const SweepResult> outcomes, const std::filesystem::path& path) {
  if (outcomes.empty()) throw InputError("write_outcome_table: no outcomes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_outcome_table(outcomes, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lassomarket
