#include "lassomarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lassomarket/errors.hpp"

namespace lassomarket {

ReservationSchedule ReservationSchedule::uniform(std::span<const std::string> agents, int max_lag, double u) {
  ReservationSchedule schedule;
  for (const auto& agent : agents) {
    for (int lag = 1; lag <= max_lag; ++lag) schedule.set({agent, lag}, u);
  }
  return schedule;
}

void ReservationSchedule::set(const FeatureKey& feature, double u) {
  if (!std::isfinite(u) || u < 0.0) {
    throw InputError("reservation for (" + feature.agent + ", lag " + std::to_string(feature.lag) +
                     ") must be finite and nonnegative");
  }
  if (feature.lag < 1) throw InputError("reservation lag must be at least 1");
  entries_[feature] = u;
}

double ReservationSchedule::at(const FeatureKey& feature) const {
  const auto it = entries_.find(feature);
  return it == entries_.end() ? 0.0 : it->second;
}

void MarketConfig::validate() const {
  lag_spec.validate();
  solver.validate();
  if (central_agent.empty()) throw InputError("market: central agent not set");
  std::set<std::string> seen{central_agent};
  for (const auto& a : support_agents) {
    if (a == central_agent) throw InputError("market: central agent " + a + " listed as a support agent");
    if (!seen.insert(a).second) throw InputError("market: support agent " + a + " listed twice");
  }
  if (loss_scale != 1.0) throw InputError("market: only loss_scale = 1 is supported");
}

std::vector<std::string> MarketConfig::market_agents() const {
  std::vector<std::string> agents{central_agent};
  agents.insert(agents.end(), support_agents.begin(), support_agents.end());
  return agents;
}

double MarketOutcome::total_payment() const noexcept {
  double sum = 0.0;
  for (const auto& p : payments) sum += p.amount;
  return sum;
}

double MarketOutcome::payment_to(const std::string& agent) const noexcept {
  double sum = 0.0;
  for (const auto& p : payments) {
    if (p.agent_id == agent) sum += p.amount;
  }
  return sum;
}

std::string ViabilityCheck::describe() const {
  std::ostringstream msg;
  msg.precision(12);
  msg << "market MSE + payments = " << market_side << ", baseline MSE = " << baseline_side << ", gap = " << gap
      << (holds ? " (viable)" : " (VIOLATED)");
  return msg.str();
}

PenaltyVector penalties_from_reservations(const MarketConfig& config, const ReservationSchedule& reservations,
                                          const DesignMatrix& design) {
  design.validate();
  const double half_T = static_cast<double>(design.rows()) / 2.0;
  const std::set<std::string> support(config.support_agents.begin(), config.support_agents.end());

  for (const auto& [feature, u] : reservations.entries()) {
    if (feature.agent == config.central_agent) {
      if (u != 0.0) throw InputError("reservation set on the central agent's own feature (lag " +
                                     std::to_string(feature.lag) + ")");
      continue;
    }
    if (!design.column_of(feature)) {
      throw InputError("reservation for (" + feature.agent + ", lag " + std::to_string(feature.lag) +
                       ") has no matching design column");
    }
  }

  PenaltyVector penalties = PenaltyVector::Zero(design.cols());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const auto& key = design.column_map[static_cast<std::size_t>(j)];
    if (!key || key->agent == config.central_agent) continue;
    if (!support.contains(key->agent)) {
      throw InputError("design column for agent " + key->agent + " who is not a support agent");
    }
    penalties[j] = half_T * reservations.at(*key);
  }
  return penalties;
}

MarketOutcome clear_market(const MarketConfig& config, std::span<const AgentSeries> all_series,
                           const ReservationSchedule& reservations) {
  config.validate();

  auto find_series = [&](const std::string& id) -> const AgentSeries& {
    const auto it = std::find_if(all_series.begin(), all_series.end(),
                                 [&](const AgentSeries& s) { return s.agent_id == id; });
    if (it == all_series.end()) throw InputError("clear_market: no series for agent " + id);
    return *it;
  };

  std::vector<AgentSeries> market_series;
  for (const auto& id : config.market_agents()) market_series.push_back(find_series(id));

  MarketOutcome out;
  out.own_design = build_lag_matrix(std::span(market_series).first(1), config.lag_spec);
  out.full_design = build_lag_matrix(market_series, config.lag_spec);
  out.target = window_target(market_series.front(), config.lag_spec.window_length);
  out.penalties = penalties_from_reservations(config, reservations, out.full_design);

  out.baseline_beta = ols_fit(out.own_design, out.target);
  out.baseline_loss = lasso_loss(out.own_design, PenaltyVector::Zero(out.own_design.cols()), out.baseline_beta,
                                 out.target);

  LassoFit fit = weighted_lasso_fit(out.full_design, out.target, out.penalties, config.solver);
  out.solver_sweeps = fit.sweeps;
  out.market_beta = std::move(fit.coefficients);
  out.market_loss = lasso_loss(out.full_design, out.penalties, out.market_beta, out.target);

  for (Eigen::Index j = 0; j < out.full_design.cols(); ++j) {
    const auto& key = out.full_design.column_map[static_cast<std::size_t>(j)];
    if (!key || key->agent == config.central_agent) continue;
    PaymentRecord record;
    record.agent_id = key->agent;
    record.lag = key->lag;
    record.coefficient = out.market_beta[j];
    record.reservation = reservations.at(*key);
    record.amount = std::abs(record.reservation * record.coefficient);
    out.payments.push_back(std::move(record));
  }

  out.buyer_net_gain = out.baseline_loss.mse - out.market_loss.mse - out.total_payment();
  out.viability = out.market_loss.lasso_loss <= out.baseline_loss.mse + kViabilityTolerance;

  const ViabilityCheck check = verify_buyer_viability(out);
  if (!out.viability || !check.holds) {
    throw ViabilityError("clear_market: buyer viability violated for central agent " + config.central_agent + ": " +
                         check.describe());
  }
  return out;
}

ViabilityCheck verify_buyer_viability(const MarketOutcome& outcome, double tolerance) {
  ViabilityCheck check;
  double paid = 0.0;
  for (const auto& p : outcome.payments) paid += p.amount;
  check.market_side = mse(outcome.full_design, outcome.market_beta, outcome.target) + paid;
  check.baseline_side = mse(outcome.own_design, outcome.baseline_beta, outcome.target);
  check.gap = check.market_side - check.baseline_side;
  check.holds = check.gap <= tolerance;
  return check;
}

}  // namespace lassomarket
