#include "lassomarket/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lassomarket/errors.hpp"

namespace lassomarket {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InputError("scenario: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : it->get<T>();
}

template <typename T>
void check_increasing(const std::vector<T>& grid, const std::string& name) {
  if (grid.empty()) throw InputError("scenario: " + name + " must not be empty");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw InputError("scenario: " + name + " must be strictly increasing");
  }
}

std::int64_t hour_from_json(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) return parse_hour(v.get<std::string>());
  throw InputError("scenario: window_start must be an integer hour or an ISO-8601 string");
}

SyntheticSpec parse_synthetic(const json& src) {
  reject_unknown_keys(src,
                      {"type", "n_independent", "ar_coefficients", "cross_coefficients", "own_phi", "noise_std"},
                      "synthetic source");
  SyntheticSpec spec;
  spec.n_independent = get_or(src, "n_independent", spec.n_independent);
  if (spec.n_independent != 4 && !src.contains("ar_coefficients")) {
    throw InputError("scenario: ar_coefficients required when n_independent is not 4");
  }
  spec.ar_coefficients = get_or(src, "ar_coefficients", spec.ar_coefficients);
  spec.cross_coefficients = get_or(src, "cross_coefficients", spec.cross_coefficients);
  spec.own_phi = get_or(src, "own_phi", spec.own_phi);
  spec.noise_std = get_or(src, "noise_std", spec.noise_std);
  return spec;
}

CsvSource parse_csv_source(const json& src, const std::filesystem::path& base_dir) {
  reject_unknown_keys(src, {"type", "path", "timestamp_column", "zones", "normalization", "window_start"},
                      "csv source");
  CsvSource csv;
  if (!src.contains("path")) throw InputError("scenario: csv source needs a path");
  csv.path = src.at("path").get<std::string>();
  if (csv.path.is_relative() && !base_dir.empty()) csv.path = base_dir / csv.path;
  csv.schema.timestamp_column = get_or<std::string>(src, "timestamp_column", "timestamp");
  if (const auto it = src.find("zones"); it != src.end()) {
    for (const auto& z : *it) {
      if (z.is_string()) {
        csv.schema.zones.emplace_back(z.get<std::string>(), z.get<std::string>());
      } else {
        csv.schema.zones.emplace_back(z.at("column").get<std::string>(), z.at("zone").get<std::string>());
      }
    }
  }
  csv.normalization = parse_normalization(get_or<std::string>(src, "normalization", "none"));
  if (const auto it = src.find("window_start"); it != src.end()) csv.window_start = hour_from_json(*it);
  return csv;
}

ReservationSpec parse_reservations(const json& r) {
  ReservationSpec spec;
  if (r.is_number()) {
    spec.uniform = r.get<double>();
    return spec;
  }
  reject_unknown_keys(r, {"uniform", "agents", "features"}, "reservations");
  spec.uniform = get_or(r, "uniform", 0.0);
  if (const auto it = r.find("agents"); it != r.end()) {
    for (const auto& [agent, u] : it->items()) spec.per_agent[agent] = u.get<double>();
  }
  if (const auto it = r.find("features"); it != r.end()) {
    for (const auto& f : *it) {
      spec.per_feature[{f.at("agent").get<std::string>(), f.at("lag").get<int>()}] = f.at("u").get<double>();
    }
  }
  return spec;
}

}  // namespace

ReservationSchedule ReservationSpec::resolve(const std::vector<std::string>& support_agents, int max_lag) const {
  ReservationSchedule schedule;
  const std::set<std::string> support(support_agents.begin(), support_agents.end());
  for (const auto& [agent, u] : per_agent) {
    if (!support.contains(agent)) throw InputError("reservation given for non-support agent " + agent);
  }
  if (!std::isfinite(uniform) || uniform < 0.0) throw InputError("uniform reservation must be finite and nonnegative");
  for (const auto& agent : support_agents) {
    const auto it = per_agent.find(agent);
    const double u = it == per_agent.end() ? uniform : it->second;
    for (int lag = 1; lag <= max_lag; ++lag) schedule.set({agent, lag}, u);
  }
  for (const auto& [feature, u] : per_feature) {
    if (!support.contains(feature.agent) || feature.lag < 1 || feature.lag > max_lag) {
      throw InputError("reservation for (" + feature.agent + ", lag " + std::to_string(feature.lag) +
                       ") does not name a support feature");
    }
    schedule.set(feature, u);
  }
  return schedule;
}

void ScenarioConfig::finalize() {
  if (auto* spec = std::get_if<SyntheticSpec>(&source)) {
    spec->seed = seed;
    if (market.support_agents.empty()) {
      for (const auto& id : spec->agent_ids()) {
        if (id != market.central_agent) market.support_agents.push_back(id);
      }
    }
  }
}

void ScenarioConfig::validate() const {
  if (const auto* spec = std::get_if<SyntheticSpec>(&source)) {
    spec->validate();
    const auto ids = spec->agent_ids();
    for (const auto& a : market.market_agents()) {
      if (std::find(ids.begin(), ids.end(), a) == ids.end()) {
        throw InputError("scenario: agent " + a + " is not part of the synthetic market");
      }
    }
  }
  if (market.support_agents.empty() && synthetic()) throw InputError("scenario: no support agents");
  market.lag_spec.validate();
  market.solver.validate();
  if (!market.support_agents.empty()) {
    market.validate();
    reservations.resolve(market.support_agents, market.lag_spec.max_lag);
  }
  if (!u_grid.empty()) {
    check_increasing(u_grid, "u_grid");
    if (u_grid.front() < 0.0) throw InputError("scenario: u_grid values must be nonnegative");
  }
  if (!t_grid.empty()) {
    check_increasing(t_grid, "t_grid");
    if (t_grid.front() < 1) throw InputError("scenario: t_grid values must be positive");
  }
  if (grid2) {
    check_increasing(grid2->u_grid_a, "grid2.u_grid_a");
    check_increasing(grid2->u_grid_b, "grid2.u_grid_b");
    if (grid2->agent_a == grid2->agent_b) throw InputError("scenario: grid2 needs two distinct agents");
    if (grid2->u_grid_a.front() < 0.0 || grid2->u_grid_b.front() < 0.0 || grid2->others_u < 0.0) {
      throw InputError("scenario: grid2 reservations must be nonnegative");
    }
  }
}

ScenarioConfig default_scenario() {
  ScenarioConfig s;
  s.id = "synthetic-p1";
  s.market.central_agent = "P1";
  s.market.lag_spec = LagSpec{3, 240};
  s.reservations.uniform = 0.1;
  s.finalize();
  return s;
}

ScenarioConfig parse_scenario(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("scenario: top level must be an object");

  try {
    reject_unknown_keys(doc,
                        {"id", "source", "central_agent", "support_agents", "max_lag", "window", "solver",
                         "reservations", "sweeps", "output_dir", "seed"},
                        "scenario");
    ScenarioConfig s;
    s.id = get_or<std::string>(doc, "id", s.id);
    if (const auto it = doc.find("source"); it != doc.end()) {
      const auto type = get_or<std::string>(*it, "type", "synthetic");
      if (type == "synthetic") {
        s.source = parse_synthetic(*it);
      } else if (type == "csv") {
        s.source = parse_csv_source(*it, base_dir);
      } else {
        throw InputError("scenario: unknown source type '" + type + "'");
      }
    }
    if (!doc.contains("central_agent")) throw InputError("scenario: central_agent is required");
    s.market.central_agent = doc.at("central_agent").get<std::string>();
    s.market.support_agents = get_or(doc, "support_agents", std::vector<std::string>{});
    s.market.lag_spec.max_lag = get_or(doc, "max_lag", s.market.lag_spec.max_lag);
    s.market.lag_spec.window_length = get_or(doc, "window", s.market.lag_spec.window_length);
    if (const auto it = doc.find("solver"); it != doc.end()) {
      reject_unknown_keys(*it, {"tolerance", "max_iterations"}, "solver");
      s.market.solver.tolerance = get_or(*it, "tolerance", s.market.solver.tolerance);
      s.market.solver.max_iterations = get_or(*it, "max_iterations", s.market.solver.max_iterations);
    }
    if (const auto it = doc.find("reservations"); it != doc.end()) s.reservations = parse_reservations(*it);
    if (const auto it = doc.find("sweeps"); it != doc.end()) {
      reject_unknown_keys(*it, {"u_grid", "uniform", "t_grid", "grid2"}, "sweeps");
      s.u_grid = get_or(*it, "u_grid", std::vector<double>{});
      s.uniform_sweep = get_or(*it, "uniform", true);
      s.t_grid = get_or(*it, "t_grid", std::vector<int>{});
      if (const auto g = it->find("grid2"); g != it->end()) {
        reject_unknown_keys(*g, {"agent_a", "agent_b", "u_grid_a", "u_grid_b", "others_u"}, "grid2");
        TwoAgentGrid grid;
        grid.agent_a = g->at("agent_a").get<std::string>();
        grid.agent_b = g->at("agent_b").get<std::string>();
        grid.u_grid_a = g->at("u_grid_a").get<std::vector<double>>();
        grid.u_grid_b = g->at("u_grid_b").get<std::vector<double>>();
        grid.others_u = get_or(*g, "others_u", grid.others_u);
        s.grid2 = std::move(grid);
      }
    }
    s.output_dir = get_or<std::string>(doc, "output_dir", s.output_dir.string());
    s.seed = get_or<std::uint64_t>(doc, "seed", s.seed);
    s.finalize();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.parent_path());
}

}  // namespace lassomarket
