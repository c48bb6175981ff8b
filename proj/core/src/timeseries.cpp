#include "lassomarket/timeseries.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lassomarket/errors.hpp"

namespace lassomarket {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

void check_stationary(double phi, const char* what) {
  if (!std::isfinite(phi) || std::abs(phi) >= 1.0) {
    std::ostringstream msg;
    msg << what << ": |phi| must be < 1 for a stationary process, got " << phi;
    throw InputError(msg.str());
  }
}

void check_noise(double noise_std, const char* what) {
  if (!std::isfinite(noise_std) || noise_std < 0.0) {
    throw InputError(std::string(what) + ": noise_std must be finite and nonnegative");
  }
}

}  // namespace

double AgentSeries::at_hour(std::int64_t hour) const {
  const std::int64_t idx = hour - first_hour();
  if (idx < 0 || idx >= static_cast<std::int64_t>(values.size())) {
    throw InputError("series " + agent_id + " has no sample at hour " + std::to_string(hour));
  }
  return values[static_cast<std::size_t>(idx)];
}

void LagSpec::validate() const {
  if (max_lag < 1) throw InputError("max_lag must be at least 1");
  if (window_length < 1) throw InputError("window_length must be at least 1");
}

DesignMatrix build_lag_matrix(std::span<const AgentSeries> series, const LagSpec& spec, bool include_intercept) {
  spec.validate();
  if (series.empty()) throw InputError("build_lag_matrix: no series given");

  const int D = spec.max_lag;
  const int T = spec.window_length;
  const std::int64_t start = series.front().start_time;
  std::set<std::string> ids;
  for (const auto& s : series) {
    if (!ids.insert(s.agent_id).second) throw InputError("build_lag_matrix: duplicate agent " + s.agent_id);
    if (s.start_time != start) {
      throw InputError("build_lag_matrix: agent " + s.agent_id + " window starts at hour " +
                       std::to_string(s.start_time) + ", expected " + std::to_string(start));
    }
    // Rows need hours [start - D, start + T - 1].
    const std::int64_t need_first = start - D;
    const std::int64_t need_end = start + T - 1;
    if (s.first_hour() > need_first || s.end_hour() <= need_end) {
      std::ostringstream msg;
      msg << "build_lag_matrix: agent " << s.agent_id << " covers hours [" << s.first_hour() << ", "
          << s.end_hour() - 1 << "] but lags need [" << need_first << ", " << need_end << "]";
      if (s.first_hour() > need_first) msg << "; missing " << s.first_hour() - need_first << " hours of history";
      if (s.end_hour() <= need_end) msg << "; missing " << need_end - s.end_hour() + 1 << " window hours";
      throw InputError(msg.str());
    }
    for (double v : s.values) {
      if (!std::isfinite(v)) throw InputError("build_lag_matrix: non-finite value in series " + s.agent_id);
    }
  }

  const Eigen::Index offset = include_intercept ? 1 : 0;
  const Eigen::Index cols = offset + static_cast<Eigen::Index>(series.size()) * D;
  DesignMatrix design;
  design.values.resize(T, cols);
  design.column_map.reserve(static_cast<std::size_t>(cols));
  if (include_intercept) {
    design.values.col(0).setOnes();
    design.column_map.emplace_back(std::nullopt);
  }
  Eigen::Index col = offset;
  for (const auto& s : series) {
    for (int d = 1; d <= D; ++d, ++col) {
      const int lag = D - d + 1;
      for (int r = 0; r < T; ++r) design.values(r, col) = s.at_hour(start + r - lag);
      design.column_map.emplace_back(FeatureKey{s.agent_id, lag});
    }
  }
  return design;
}

Eigen::VectorXd window_target(const AgentSeries& series, int window_length) {
  if (window_length < 1 || series.window_capacity() < static_cast<std::size_t>(window_length)) {
    throw InputError("series " + series.agent_id + " has " + std::to_string(series.window_capacity()) +
                     " window samples, need " + std::to_string(window_length));
  }
  Eigen::VectorXd y(window_length);
  for (int t = 0; t < window_length; ++t) y[t] = series.values[series.history + static_cast<std::size_t>(t)];
  return y;
}

AgentSeries generate_ar1(double phi, double noise_std, std::size_t length, std::uint64_t seed) {
  check_stationary(phi, "generate_ar1");
  check_noise(noise_std, "generate_ar1");
  if (length < 1) throw InputError("generate_ar1: length must be at least 1");

  auto engine = make_engine(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  double x = 0.0;
  for (int i = 0; i < kBurnIn; ++i) x = phi * x + noise_std * noise(engine);

  AgentSeries out;
  out.values.resize(length);
  for (auto& v : out.values) {
    x = phi * x + noise_std * noise(engine);
    v = x;
  }
  return out;
}

AgentSeries generate_var_dependent(std::span<const AgentSeries> drivers, std::span<const double> cross_coefficients,
                                   double own_phi, double noise_std, std::uint64_t seed) {
  check_stationary(own_phi, "generate_var_dependent");
  check_noise(noise_std, "generate_var_dependent");
  if (drivers.size() != cross_coefficients.size()) {
    throw InputError("generate_var_dependent: " + std::to_string(cross_coefficients.size()) +
                     " cross coefficients for " + std::to_string(drivers.size()) + " drivers");
  }
  if (drivers.empty()) throw InputError("generate_var_dependent: at least one driver is required");
  const std::size_t n = drivers.front().values.size();
  for (const auto& d : drivers) {
    if (d.values.size() != n) throw InputError("generate_var_dependent: drivers differ in length");
  }
  if (n < 1) throw InputError("generate_var_dependent: drivers are empty");

  auto engine = make_engine(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  AgentSeries out;
  out.start_time = drivers.front().start_time;
  out.history = drivers.front().history;
  out.values.resize(n);
  out.values[0] = noise_std * noise(engine);
  for (std::size_t t = 1; t < n; ++t) {
    double v = own_phi * out.values[t - 1];
    for (std::size_t k = 0; k < drivers.size(); ++k) v += cross_coefficients[k] * drivers[k].values[t - 1];
    out.values[t] = v + noise_std * noise(engine);
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (n_independent < 1) throw InputError("synthetic: n_independent must be at least 1");
  const auto n = static_cast<std::size_t>(n_independent);
  if (ar_coefficients.size() != n) throw InputError("synthetic: need one ar_coefficient per independent agent");
  if (cross_coefficients.size() != n) throw InputError("synthetic: need one cross_coefficient per independent agent");
  if (noise_std.size() != n + 1) throw InputError("synthetic: need noise_std for P1 plus each independent agent");
  for (double phi : ar_coefficients) check_stationary(phi, "synthetic");
  check_stationary(own_phi, "synthetic");
  for (double c : cross_coefficients) {
    if (!std::isfinite(c)) throw InputError("synthetic: cross coefficients must be finite");
  }
  for (std::size_t k = 0; k < noise_std.size(); ++k) {
    // Independent agents need innovations or they are identically zero.
    if (k > 0 && !(noise_std[k] > 0.0)) throw InputError("synthetic: independent agents need noise_std > 0");
    check_noise(noise_std[k], "synthetic");
  }
}

std::vector<std::string> SyntheticSpec::agent_ids() const {
  std::vector<std::string> ids;
  for (int k = 0; k <= n_independent; ++k) ids.push_back("P" + std::to_string(k + 1));
  return ids;
}

std::vector<AgentSeries> generate_synthetic(const SyntheticSpec& spec, std::size_t window_length, std::size_t history) {
  spec.validate();
  const std::size_t length = history + window_length;
  if (length < 1) throw InputError("generate_synthetic: empty horizon");
  const auto ids = spec.agent_ids();

  // The whole system runs kBurnIn extra steps so P1 starts from its stationary regime too.
  const std::size_t raw_length = length + static_cast<std::size_t>(kBurnIn);
  std::vector<AgentSeries> drivers;
  for (int k = 0; k < spec.n_independent; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    drivers.push_back(generate_ar1(spec.ar_coefficients[kk], spec.noise_std[kk + 1], raw_length,
                                   splitmix64(spec.seed * 0x100000001B3ULL + kk + 1)));
  }
  AgentSeries p1 = generate_var_dependent(drivers, spec.cross_coefficients, spec.own_phi, spec.noise_std[0],
                                          splitmix64(spec.seed * 0x100000001B3ULL));

  std::vector<AgentSeries> all;
  all.push_back(std::move(p1));
  for (auto& d : drivers) all.push_back(std::move(d));
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto& s = all[k];
    s.agent_id = ids[k];
    s.values.erase(s.values.begin(), s.values.begin() + kBurnIn);
    s.history = history;
    s.start_time = static_cast<std::int64_t>(history);
  }
  return all;
}

std::map<FeatureKey, double> synthetic_truth(const SyntheticSpec& spec, const std::string& central) {
  const auto ids = spec.agent_ids();
  std::map<FeatureKey, double> truth;
  if (central == ids.front()) {
    if (spec.own_phi != 0.0) truth[{central, 1}] = spec.own_phi;
    for (int k = 0; k < spec.n_independent; ++k) {
      const double c = spec.cross_coefficients[static_cast<std::size_t>(k)];
      if (c != 0.0) truth[{ids[static_cast<std::size_t>(k) + 1], 1}] = c;
    }
    return truth;
  }
  for (int k = 0; k < spec.n_independent; ++k) {
    if (ids[static_cast<std::size_t>(k) + 1] == central) {
      const double phi = spec.ar_coefficients[static_cast<std::size_t>(k)];
      if (phi != 0.0) truth[{central, 1}] = phi;
      return truth;
    }
  }
  throw InputError("synthetic_truth: unknown agent " + central);
}

}  // namespace lassomarket
