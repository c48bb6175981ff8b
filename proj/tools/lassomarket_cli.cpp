// lassomarket: command-line harness for synthetic and CSV-backed market experiments.
//
// Exit codes: 0 ok, 2 bad input or config, 3 solver did not converge,
// 4 a clearing broke buyer viability (a solver defect).

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lassomarket/lassomarket.hpp"

namespace lm = lassomarket;
namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitViability = 4;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> max_lag;
  std::optional<int> window;
  std::optional<double> tolerance;
  std::optional<int> max_iterations;
};

lm::ScenarioConfig load(const Overrides& o) {
  lm::ScenarioConfig s = o.config.empty() ? lm::default_scenario() : lm::load_scenario(o.config);
  if (o.seed) s.seed = *o.seed;
  if (o.out) s.output_dir = *o.out;
  if (o.max_lag) s.market.lag_spec.max_lag = *o.max_lag;
  if (o.window) s.market.lag_spec.window_length = *o.window;
  if (o.tolerance) s.market.solver.tolerance = *o.tolerance;
  if (o.max_iterations) s.market.solver.max_iterations = *o.max_iterations;
  s.finalize();
  s.validate();
  return s;
}

fs::path output_dir(const lm::ScenarioConfig& s) {
  std::error_code ec;
  fs::create_directories(s.output_dir, ec);
  if (ec) throw lm::IoError("cannot create output directory " + s.output_dir.string() + ": " + ec.message());
  return s.output_dir;
}

void write_report(const lm::ExperimentReport& report, const fs::path& dir) {
  lm::write_outcome_table(report.sweep, dir / "outcomes.csv");
  lm::write_per_step_table(report, dir / "per_step.csv");
  lm::write_summary_json(report, dir / "summary.json");
  if (!report.coefficients.empty()) lm::write_coefficient_table(report, dir / "coefficients.csv");
  std::cout << report.kind << ": " << report.summary.clearings << " clearing(s), viability rate "
            << report.summary.viability_rate << ", mean buyer gain " << report.summary.mean_buyer_gain;
  if (report.summary.cross_monotonicity) std::cout << ", cross monotonicity " << *report.summary.cross_monotonicity;
  std::cout << "\nwrote " << dir.string() << '\n';
}

void run_simulate(const lm::ScenarioConfig& s) {
  if (!s.synthetic()) throw lm::InputError("simulate needs a synthetic source");
  const auto& spec = std::get<lm::SyntheticSpec>(s.source);
  const auto series = lm::generate_synthetic(spec, static_cast<std::size_t>(s.market.lag_spec.window_length),
                                             static_cast<std::size_t>(s.market.lag_spec.max_lag));
  lm::ZonalDataset ds;
  const auto first = series.front().first_hour();
  for (std::size_t k = 0; k < series.front().values.size(); ++k) {
    ds.hours.push_back(first + static_cast<std::int64_t>(k));
  }
  for (const auto& a : series) {
    ds.zones.push_back(a.agent_id);
    ds.values.push_back(a.values);
  }
  const auto path = output_dir(s) / "synthetic.csv";
  lm::write_dataset_csv(ds, path);
  std::cout << "simulate: " << ds.zones.size() << " agents x " << ds.size() << " hours\nwrote " << path.string()
            << '\n';
}

void run_ingest(const lm::ScenarioConfig& s, const std::string& input, const std::string& normalization) {
  lm::CsvSource src;
  if (const auto* csv = std::get_if<lm::CsvSource>(&s.source)) src = *csv;
  if (!input.empty()) src.path = input;
  if (!normalization.empty()) src.normalization = lm::parse_normalization(normalization);
  if (src.path.empty()) {
    throw lm::InputError("ingest needs an input CSV (positional argument or csv source in --config)");
  }
  const auto result = lm::ingest_csv(src.path, src.schema, src.normalization);
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
  const auto path = output_dir(s) / "ingested.csv";
  lm::write_dataset_csv(result.dataset, path);
  std::cout << "ingest: " << result.report.rows_read << " rows read, " << result.report.rows_dropped
            << " dropped, " << result.dataset.zones.size() << " zones\nwrote " << path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted-lasso data market experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "Scenario JSON file (defaults to the built-in synthetic scenario)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Random seed for synthetic data");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--max-lag", o.max_lag, "Maximum lag D")->check(CLI::Range(1, 10000));
  app.add_option("--window", o.window, "Training window length T in hours")->check(CLI::Range(1, 100000000));
  app.add_option("--tolerance", o.tolerance, "Solver convergence tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iterations", o.max_iterations, "Solver sweep limit")->check(CLI::Range(1, 100000000));

  auto* simulate = app.add_subcommand("simulate", "Generate the synthetic market to synthetic.csv");
  auto* clear = app.add_subcommand("clear", "Clear one market");
  auto* compare = app.add_subcommand("compare-methods", "Tabulate OLS-self, OLS-all and lasso coefficients");

  auto* sweep_u = app.add_subcommand("sweep-u", "Clear once per reservation level");
  std::vector<double> u_grid;
  bool scale = false;
  sweep_u->add_option("--u-grid", u_grid, "Reservation levels (default: sweeps.u_grid)")->delimiter(',');
  sweep_u->add_flag("--scale", scale, "Multiply the scenario schedule instead of setting a uniform u");

  auto* sweep_t = app.add_subcommand("sweep-t", "Clear once per training window length");
  std::vector<int> t_grid;
  sweep_t->add_option("--t-grid", t_grid, "Window lengths (default: sweeps.t_grid)")->delimiter(',');

  auto* grid2 = app.add_subcommand("grid-2", "Vary two sellers' reservations on a grid");
  std::string agent_a, agent_b;
  std::vector<double> grid_a, grid_b;
  std::optional<double> others_u;
  grid2->add_option("--agent-a", agent_a, "First seller");
  grid2->add_option("--agent-b", agent_b, "Second seller");
  grid2->add_option("--u-grid-a", grid_a, "Reservations for the first seller")->delimiter(',');
  grid2->add_option("--u-grid-b", grid_b, "Reservations for the second seller")->delimiter(',');
  grid2->add_option("--others-u", others_u, "Reservation held by every other seller");

  auto* ingest = app.add_subcommand("ingest", "Clean a zonal CSV into ingested.csv");
  std::string input, normalization;
  ingest->add_option("input", input, "Zonal CSV (default: the csv source in --config)");
  ingest->add_option("--normalization", normalization, "none or per-zone-max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    const lm::ScenarioConfig s = load(o);
    if (simulate->parsed()) {
      run_simulate(s);
    } else if (ingest->parsed()) {
      run_ingest(s, input, normalization);
    } else if (clear->parsed()) {
      write_report(lm::run_single_clearing(s), output_dir(s));
    } else if (compare->parsed()) {
      write_report(lm::run_method_comparison(s), output_dir(s));
    } else if (sweep_u->parsed()) {
      if (u_grid.empty()) u_grid = s.u_grid;
      if (u_grid.empty()) throw lm::InputError("sweep-u: give --u-grid or sweeps.u_grid in the config");
      auto checked = s;
      checked.u_grid = u_grid;
      checked.validate();
      write_report(lm::run_u_sweep(s, u_grid, s.uniform_sweep && !scale), output_dir(s));
    } else if (sweep_t->parsed()) {
      if (t_grid.empty()) t_grid = s.t_grid;
      if (t_grid.empty()) throw lm::InputError("sweep-t: give --t-grid or sweeps.t_grid in the config");
      auto checked = s;
      checked.t_grid = t_grid;
      checked.validate();
      write_report(lm::run_t_sweep(s, t_grid), output_dir(s));
    } else if (grid2->parsed()) {
      lm::TwoAgentGrid g = s.grid2.value_or(lm::TwoAgentGrid{});
      if (!agent_a.empty()) g.agent_a = agent_a;
      if (!agent_b.empty()) g.agent_b = agent_b;
      if (!grid_a.empty()) g.u_grid_a = grid_a;
      if (!grid_b.empty()) g.u_grid_b = grid_b;
      if (others_u) g.others_u = *others_u;
      auto checked = s;
      checked.grid2 = g;
      checked.validate();
      write_report(lm::run_two_agent_grid(s, g), output_dir(s));
    }
  } catch (const lm::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (delta " << e.achieved_delta() << " after " << e.sweeps()
              << " sweeps)\n";
    return kExitConvergence;
  } catch (const lm::ViabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitViability;
  } catch (const lm::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const lm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
