#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lassomarket/regression.hpp"

namespace lassomarket {

/// Hourly series of one agent. `values[history]` is the sample at hour
/// `start_time`, the first hour of the training window; the `history`
/// samples before it exist only to feed lagged columns.
struct AgentSeries {
  std::string agent_id;
  std::vector<double> values;
  std::int64_t start_time = 0;
  std::size_t history = 0;

  /// Number of samples at or after `start_time`.
  std::size_t window_capacity() const noexcept { return values.size() > history ? values.size() - history : 0; }
  std::int64_t first_hour() const noexcept { return start_time - static_cast<std::int64_t>(history); }
  std::int64_t end_hour() const noexcept { return first_hour() + static_cast<std::int64_t>(values.size()); }
  double at_hour(std::int64_t hour) const;
};

struct LagSpec {
  int max_lag = 3;
  int window_length = 240;

  void validate() const;
};

/// Columns: optional intercept, then per agent (list order) `max_lag` columns
/// ordered oldest lag first, so block position d holds lag (max_lag - d + 1).
DesignMatrix build_lag_matrix(std::span<const AgentSeries> series, const LagSpec& spec, bool include_intercept = true);

/// Window values y_t, t = 1..T, of one series.
Eigen::VectorXd window_target(const AgentSeries& series, int window_length);

inline constexpr int kBurnIn = 200;

/// x_t = phi x_{t-1} + e_t, e_t ~ N(0, noise_std^2), after kBurnIn discarded steps.
AgentSeries generate_ar1(double phi, double noise_std, std::size_t length, std::uint64_t seed);

/// p_t = own_phi p_{t-1} + sum_k c_k d_{k,t-1} + e_t over the horizon of the drivers; p_0 = e_0.
AgentSeries generate_var_dependent(std::span<const AgentSeries> drivers, std::span<const double> cross_coefficients,
                                   double own_phi, double noise_std, std::uint64_t seed);

/// Synthetic market: one dependent agent ("P1") driven at lag 1 by
/// `n_independent` AR(1) agents ("P2", "P3", ...).
struct SyntheticSpec {
  int n_independent = 4;
  std::vector<double> ar_coefficients{0.5, 0.5, 0.5, 0.5};
  std::vector<double> cross_coefficients{0.4, 0.3, 0.2, 0.1};
  double own_phi = 0.2;
  /// Innovation std per agent; index 0 is P1, index k the k-th independent agent.
  std::vector<double> noise_std{0.3, 1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<std::string> agent_ids() const;
};

/// Generates all agents with `history` pre-window samples and `window_length`
/// window samples; the window starts at hour `history`.
std::vector<AgentSeries> generate_synthetic(const SyntheticSpec& spec, std::size_t window_length, std::size_t history);

/// Nonzero generating coefficients of `central`'s equation, keyed by feature.
std::map<FeatureKey, double> synthetic_truth(const SyntheticSpec& spec, const std::string& central);

}  // namespace lassomarket
