#include "lassomarket/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "lassomarket/errors.hpp"

namespace lassomarket {

namespace {

ReportSummary summarise(const std::vector<SweepResult>& sweep) {
  ReportSummary s;
  s.clearings = sweep.size();
  if (sweep.empty()) return s;
  std::size_t viable = 0;
  double gain = 0.0;
  for (const auto& [point, outcome] : sweep) {
    if (verify_buyer_viability(outcome).holds) ++viable;
    gain += outcome.buyer_net_gain;
  }
  s.viability_rate = static_cast<double>(viable) / static_cast<double>(sweep.size());
  s.mean_buyer_gain = gain / static_cast<double>(sweep.size());
  return s;
}

ExperimentReport make_report(const ScenarioConfig& scenario, std::string kind, std::vector<SweepResult> sweep) {
  ExperimentReport report;
  report.scenario_id = scenario.id;
  report.kind = std::move(kind);
  report.sweep = std::move(sweep);
  report.summary = summarise(report.sweep);
  return report;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

MarketData prepare_market(const ScenarioConfig& scenario, int window_length) {
  MarketData data;
  data.market = scenario.market;
  data.market.lag_spec.window_length = window_length;
  const int D = data.market.lag_spec.max_lag;
  if (window_length < 1) throw InputError("window length must be positive");

  if (const auto* spec = std::get_if<SyntheticSpec>(&scenario.source)) {
    SyntheticSpec seeded = *spec;
    seeded.seed = scenario.seed;
    data.series = generate_synthetic(seeded, static_cast<std::size_t>(window_length), static_cast<std::size_t>(D));
  } else {
    const auto& csv = std::get<CsvSource>(scenario.source);
    const IngestResult ingested = ingest_csv(csv.path, csv.schema, csv.normalization);
    const auto& ds = ingested.dataset;
    if (ds.size() == 0) throw InputError("no complete rows in " + csv.path.string());
    const std::int64_t start = csv.window_start.value_or(ds.hours.front() + D);
    data.series = to_agent_series(ds, start, window_length, D);
  }

  if (data.market.support_agents.empty()) {
    for (const auto& s : data.series) {
      if (s.agent_id != data.market.central_agent) data.market.support_agents.push_back(s.agent_id);
    }
  }
  data.market.validate();
  return data;
}

ExperimentReport run_single_clearing(const ScenarioConfig& scenario) {
  const int T = scenario.market.lag_spec.window_length;
  const MarketData data = prepare_market(scenario, T);
  const auto schedule = scenario.reservations.resolve(data.market.support_agents, data.market.lag_spec.max_lag);
  std::vector<SweepResult> sweep;
  sweep.emplace_back(SweepPoint{"T", static_cast<double>(T)}, clear_market(data.market, data.series, schedule));
  return make_report(scenario, "clear", std::move(sweep));
}

ExperimentReport run_method_comparison(const ScenarioConfig& scenario) {
  const int T = scenario.market.lag_spec.window_length;
  const MarketData data = prepare_market(scenario, T);
  const auto schedule = scenario.reservations.resolve(data.market.support_agents, data.market.lag_spec.max_lag);

  MarketOutcome outcome = clear_market(data.market, data.series, schedule);
  const CoefficientVector ols_all = ols_fit(outcome.full_design, outcome.target);

  std::map<FeatureKey, double> truth;
  if (const auto* spec = std::get_if<SyntheticSpec>(&scenario.source)) {
    truth = synthetic_truth(*spec, data.market.central_agent);
  }

  ExperimentReport report;
  for (Eigen::Index j = 0; j < outcome.full_design.cols(); ++j) {
    CoefficientRow row;
    row.column = outcome.full_design.column_map[static_cast<std::size_t>(j)];
    if (scenario.synthetic()) {
      const auto it = row.column ? truth.find(*row.column) : truth.end();
      row.truth = it == truth.end() ? 0.0 : it->second;
    }
    if (!row.column) {
      row.ols_self = outcome.baseline_beta[0];
    } else if (const auto own = outcome.own_design.column_of(*row.column)) {
      row.ols_self = outcome.baseline_beta[*own];
    }
    row.ols_all = ols_all[j];
    row.lasso_all = outcome.market_beta[j];
    report.coefficients.push_back(std::move(row));
  }

  std::vector<SweepResult> sweep;
  sweep.emplace_back(SweepPoint{"T", static_cast<double>(T)}, std::move(outcome));
  auto coefficients = std::move(report.coefficients);
  report = make_report(scenario, "compare-methods", std::move(sweep));
  report.coefficients = std::move(coefficients);
  return report;
}

ExperimentReport run_t_sweep(const ScenarioConfig& scenario, std::span<const int> t_grid) {
  if (t_grid.empty()) throw InputError("sweep-t: empty T grid");
  const int t_max = *std::max_element(t_grid.begin(), t_grid.end());
  MarketData data = prepare_market(scenario, t_max);
  const auto schedule = scenario.reservations.resolve(data.market.support_agents, data.market.lag_spec.max_lag);

  std::vector<SweepResult> sweep;
  for (int T : t_grid) {
    MarketConfig config = data.market;
    config.lag_spec.window_length = T;
    sweep.emplace_back(SweepPoint{"T", static_cast<double>(T)}, clear_market(config, data.series, schedule));
  }
  return make_report(scenario, "sweep-t", std::move(sweep));
}

ExperimentReport run_u_sweep(const ScenarioConfig& scenario, std::span<const double> u_grid, bool uniform) {
  if (u_grid.empty()) throw InputError("sweep-u: empty u grid");
  const MarketData data = prepare_market(scenario, scenario.market.lag_spec.window_length);
  const int D = data.market.lag_spec.max_lag;
  const auto base = scenario.reservations.resolve(data.market.support_agents, D);

  std::vector<SweepResult> sweep;
  for (double u : u_grid) {
    ReservationSchedule schedule;
    if (uniform) {
      schedule = ReservationSchedule::uniform(data.market.support_agents, D, u);
    } else {
      for (const auto& [feature, base_u] : base.entries()) schedule.set(feature, base_u * u);
    }
    sweep.emplace_back(SweepPoint{uniform ? "u" : "u_scale", u}, clear_market(data.market, data.series, schedule));
  }
  return make_report(scenario, "sweep-u", std::move(sweep));
}

ExperimentReport run_two_agent_grid(const ScenarioConfig& scenario, const TwoAgentGrid& grid) {
  if (grid.u_grid_a.empty() || grid.u_grid_b.empty()) throw InputError("grid-2: empty grid");
  const MarketData data = prepare_market(scenario, scenario.market.lag_spec.window_length);
  const auto& support = data.market.support_agents;
  for (const auto* agent : {&grid.agent_a, &grid.agent_b}) {
    if (std::find(support.begin(), support.end(), *agent) == support.end()) {
      throw InputError("grid-2: " + *agent + " is not a support agent");
    }
  }
  const int D = data.market.lag_spec.max_lag;

  std::vector<SweepResult> sweep;
  for (double ua : grid.u_grid_a) {
    for (double ub : grid.u_grid_b) {
      auto schedule = ReservationSchedule::uniform(support, D, grid.others_u);
      for (int lag = 1; lag <= D; ++lag) {
        schedule.set({grid.agent_a, lag}, ua);
        schedule.set({grid.agent_b, lag}, ub);
      }
      SweepPoint point{"u_" + grid.agent_b + "@u_" + grid.agent_a + "=" + format_number(ua), ub};
      sweep.emplace_back(std::move(point), clear_market(data.market, data.series, schedule));
    }
  }

  ExperimentReport report = make_report(scenario, "grid-2", std::move(sweep));

  // Cell (i, k) sits at index i * |grid_b| + k.
  const std::size_t na = grid.u_grid_a.size();
  const std::size_t nb = grid.u_grid_b.size();
  auto pay = [&](std::size_t i, std::size_t k, const std::string& agent) {
    return report.sweep[i * nb + k].second.payment_to(agent);
  };
  std::size_t pairs = 0;
  std::size_t monotone = 0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t k = 0; k + 1 < nb; ++k, ++pairs) {
      monotone += pay(i, k + 1, grid.agent_a) <= pay(i, k, grid.agent_a);
    }
  }
  for (std::size_t k = 0; k < nb; ++k) {
    for (std::size_t i = 0; i + 1 < na; ++i, ++pairs) {
      monotone += pay(i + 1, k, grid.agent_b) <= pay(i, k, grid.agent_b);
    }
  }
  if (pairs > 0) report.summary.cross_monotonicity = static_cast<double>(monotone) / static_cast<double>(pairs);
  return report;
}

void write_coefficient_table(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "agent,lag,truth,ols_self,ols_all,lasso_all\n";
  for (const auto& row : report.coefficients) {
    if (row.column) {
      out << row.column->agent << ',' << row.column->lag;
    } else {
      out << "intercept,0";
    }
    out << ',' << optional_number(row.truth) << ',' << optional_number(row.ols_self) << ','
        << format_number(row.ols_all) << ',' << format_number(row.lasso_all) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_per_step_table(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "sweep_param,sweep_value,agent,T,payment,payment_per_step,mse_reduction,buyer_gain_per_step\n";
  for (const auto& [point, outcome] : report.sweep) {
    const double T = outcome.window_length();
    std::vector<std::string> agents;
    for (const auto& p : outcome.payments) {
      if (std::find(agents.begin(), agents.end(), p.agent_id) == agents.end()) agents.push_back(p.agent_id);
    }
    const std::string prefix = point.param + ',' + format_number(point.value) + ',';
    for (const auto& agent : agents) {
      const double paid = outcome.payment_to(agent);
      out << prefix << agent << ',' << outcome.window_length() << ',' << format_number(paid) << ','
          << format_number(paid / T) << ",,\n";
    }
    const double reduction = outcome.baseline_loss.mse - outcome.market_loss.mse;
    const double total = outcome.total_payment();
    out << prefix << "buyer," << outcome.window_length() << ',' << format_number(total) << ','
        << format_number(total / T) << ',' << format_number(reduction) << ',' << format_number(reduction - total / T)
        << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_summary_json(const ExperimentReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["scenario"] = report.scenario_id;
  doc["kind"] = report.kind;
  doc["clearings"] = report.summary.clearings;
  doc["viability_rate"] = report.summary.viability_rate;
  doc["mean_buyer_gain"] = report.summary.mean_buyer_gain;
  if (report.summary.cross_monotonicity) doc["cross_monotonicity"] = *report.summary.cross_monotonicity;
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lassomarket
