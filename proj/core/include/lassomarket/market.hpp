#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lassomarket/regression.hpp"
#include "lassomarket/timeseries.hpp"

namespace lassomarket {

/// Absolute slack allowed on the buyer-viability inequality, in loss units.
inline constexpr double kViabilityTolerance = 1e-6;

/// Sellers' reservation prices u per (agent, lag), in money per unit coefficient.
/// Features without an entry are offered at u = 0.
class ReservationSchedule {
 public:
  ReservationSchedule() = default;

  static ReservationSchedule uniform(std::span<const std::string> agents, int max_lag, double u);

  void set(const FeatureKey& feature, double u);
  double at(const FeatureKey& feature) const;
  const std::map<FeatureKey, double>& entries() const noexcept { return entries_; }

 private:
  std::map<FeatureKey, double> entries_;
};

struct MarketConfig {
  std::string central_agent;
  std::vector<std::string> support_agents;
  LagSpec lag_spec;
  SolverSettings solver;
  /// Money per unit of MSE. Only 1 is supported.
  double loss_scale = 1.0;

  void validate() const;
  /// Central agent first, then support agents in order.
  std::vector<std::string> market_agents() const;
};

struct PaymentRecord {
  std::string agent_id;
  int lag = 0;
  double coefficient = 0.0;
  double reservation = 0.0;
  /// |reservation * coefficient|, paid once for the whole training window.
  double amount = 0.0;
};

struct MarketOutcome {
  CoefficientVector baseline_beta;
  CoefficientVector market_beta;
  LossReport baseline_loss;
  LossReport market_loss;
  std::vector<PaymentRecord> payments;
  double buyer_net_gain = 0.0;
  bool viability = false;

  // Inputs kept so the viability inequality can be re-derived independently.
  DesignMatrix own_design;
  DesignMatrix full_design;
  Eigen::VectorXd target;
  PenaltyVector penalties;
  int solver_sweeps = 0;

  int window_length() const noexcept { return static_cast<int>(target.size()); }
  double total_payment() const noexcept;
  double payment_to(const std::string& agent) const noexcept;
};

struct ViabilityCheck {
  bool holds = false;
  /// Market MSE plus the sum of recorded payments.
  double market_side = 0.0;
  /// Own-features OLS MSE.
  double baseline_side = 0.0;
  /// market_side - baseline_side; positive means the buyer lost money.
  double gap = 0.0;

  std::string describe() const;
};

/// Zero for the intercept and the central agent's own columns, (T/2) u for support columns.
PenaltyVector penalties_from_reservations(const MarketConfig& config, const ReservationSchedule& reservations,
                                          const DesignMatrix& design);

/// Runs the own-data baseline and the weighted-lasso market, then settles payments.
/// Throws ConvergenceError from the solver and ViabilityError if the result
/// leaves the buyer worse off than the baseline.
MarketOutcome clear_market(const MarketConfig& config, std::span<const AgentSeries> all_series,
                           const ReservationSchedule& reservations);

/// Recomputes both sides of "market MSE + payments <= baseline MSE" from the
/// stored designs, target and coefficients rather than the cached losses.
ViabilityCheck verify_buyer_viability(const MarketOutcome& outcome, double tolerance = kViabilityTolerance);

}  // namespace lassomarket
