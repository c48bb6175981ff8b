#include "lassomarket/regression.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "lassomarket/errors.hpp"

namespace lassomarket {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void check_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const char* where) {
  if (X.rows() != y.size()) {
    std::ostringstream msg;
    msg << where << ": design has " << X.rows() << " rows but target has " << y.size() << " entries";
    throw InputError(msg.str());
  }
  if (X.rows() < 1 || X.cols() < 1) {
    throw InputError(std::string(where) + ": design must have at least one row and one column");
  }
  if (!all_finite(X) || !y.allFinite()) {
    throw InputError(std::string(where) + ": non-finite value in design or target");
  }
}

void check_coefficients(const Eigen::MatrixXd& X, const CoefficientVector& beta, const char* where) {
  if (beta.size() != X.cols()) {
    std::ostringstream msg;
    msg << where << ": " << beta.size() << " coefficients for " << X.cols() << " columns";
    throw InputError(msg.str());
  }
}

void check_penalties(const Eigen::MatrixXd& X, const PenaltyVector& penalties, const char* where) {
  if (penalties.size() != X.cols()) {
    std::ostringstream msg;
    msg << where << ": " << penalties.size() << " penalties for " << X.cols() << " columns";
    throw InputError(msg.str());
  }
  if (!penalties.allFinite() || (penalties.array() < 0.0).any()) {
    throw InputError(std::string(where) + ": penalties must be finite and nonnegative");
  }
  if (penalties.size() > 0 && penalties[0] != 0.0) {
    throw InputError(std::string(where) + ": penalty on column 0 (intercept) must be zero");
  }
}

// Objective in lasso-loss units: (1/T)||r||^2 + (2/T) sum p_j |b_j|.
double objective_from_residual(const Eigen::VectorXd& residual, const PenaltyVector& penalties,
                               const CoefficientVector& beta) {
  const double T = static_cast<double>(residual.size());
  return residual.squaredNorm() / T + (2.0 / T) * (penalties.array() * beta.array().abs()).sum();
}

bool is_constant(const Eigen::VectorXd& col) { return col.size() == 0 || col.maxCoeff() == col.minCoeff(); }

struct ColumnPartition {
  std::vector<Eigen::Index> free;       // zero penalty, solved jointly
  std::vector<Eigen::Index> penalised;  // soft-thresholded one at a time
  std::vector<Eigen::Index> pinned;     // held at zero
};

ColumnPartition partition_columns(const Eigen::MatrixXd& X, const PenaltyVector& penalties) {
  ColumnPartition part;
  bool has_constant_free = false;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (penalties[j] == 0.0) {
      part.free.push_back(j);
      if (is_constant(X.col(j)) && X(0, j) != 0.0) has_constant_free = true;
    }
  }
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (penalties[j] == 0.0) continue;
    const bool zero_column = X.col(j).squaredNorm() == 0.0;
    // A penalised column collinear with an unpenalised constant carries no
    // information the intercept cannot absorb for free.
    if (zero_column || (has_constant_free && is_constant(X.col(j)))) {
      part.pinned.push_back(j);
    } else {
      part.penalised.push_back(j);
    }
  }
  return part;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(idx[k]);
  return out;
}

// Closed-form solve with the active set and signs fixed:
//   X_A' X_A b = X_A' y - q,  q_j = p_j sign(b_j).
// Written as b = pinv(X_A) (y - pinv(X_A)' q) to avoid forming the Gram matrix.
std::optional<CoefficientVector> refine_active_set(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                   const PenaltyVector& penalties, const CoefficientVector& beta,
                                                   const ColumnPartition& part) {
  std::vector<Eigen::Index> active = part.free;
  for (Eigen::Index j : part.penalised) {
    if (beta[j] != 0.0) active.push_back(j);
  }
  if (active.empty()) return std::nullopt;
  std::sort(active.begin(), active.end());

  const Eigen::MatrixXd XA = gather_columns(X, active);
  Eigen::VectorXd q(static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Eigen::Index j = active[k];
    q[static_cast<Eigen::Index>(k)] = penalties[j] * (beta[j] > 0.0 ? 1.0 : (beta[j] < 0.0 ? -1.0 : 0.0));
  }
  // pinv(X_A)' q is the minimum-norm w with X_A' w = q. Never form pinv itself:
  // Eigen builds it from a T x T identity.
  const Eigen::VectorXd w = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(XA.transpose()).solve(q);
  const Eigen::VectorXd bA = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(XA).solve(y - w);
  if (!bA.allFinite()) return std::nullopt;

  CoefficientVector candidate = CoefficientVector::Zero(X.cols());
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Eigen::Index j = active[k];
    const double v = bA[static_cast<Eigen::Index>(k)];
    if (penalties[j] > 0.0 && (v == 0.0 || (v > 0.0) != (beta[j] > 0.0))) return std::nullopt;
    candidate[j] = v;
  }

  const Eigen::VectorXd residual = y - X * candidate;
  for (Eigen::Index j : part.penalised) {
    if (candidate[j] != 0.0) continue;
    const double corr = std::abs(X.col(j).dot(residual));
    if (corr > penalties[j] * (1.0 + 1e-12) + 1e-12) return std::nullopt;
  }
  return candidate;
}

}  // namespace

std::optional<Eigen::Index> DesignMatrix::column_of(const FeatureKey& key) const {
  for (std::size_t j = 0; j < column_map.size(); ++j) {
    if (column_map[j] && *column_map[j] == key) return static_cast<Eigen::Index>(j);
  }
  return std::nullopt;
}

void DesignMatrix::validate() const {
  if (static_cast<Eigen::Index>(column_map.size()) != values.cols()) {
    throw InputError("design matrix: column map has " + std::to_string(column_map.size()) + " entries for " +
                     std::to_string(values.cols()) + " columns");
  }
  if (values.rows() < 1 || values.cols() < 1) throw InputError("design matrix: empty");
  std::set<FeatureKey> seen;
  for (std::size_t j = 0; j < column_map.size(); ++j) {
    const auto& key = column_map[j];
    if (!key) {
      if (j != 0) throw InputError("design matrix: intercept must be column 0");
      if ((values.col(0).array() != 1.0).any()) throw InputError("design matrix: intercept column is not all ones");
      continue;
    }
    if (!seen.insert(*key).second) {
      throw InputError("design matrix: duplicate column (" + key->agent + ", lag " + std::to_string(key->lag) + ")");
    }
  }
}

void SolverSettings::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw InputError("solver tolerance must be positive");
  if (max_iterations < 1) throw InputError("solver max_iterations must be at least 1");
}

double soft_threshold(double z, double gamma) noexcept {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

CoefficientVector ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_rows(X, y, "ols_fit");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  return cod.solve(y);
}

LassoFit weighted_lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltyVector& penalties,
                            const SolverSettings& settings) {
  check_rows(X, y, "weighted_lasso_fit");
  check_penalties(X, penalties, "weighted_lasso_fit");
  settings.validate();

  const ColumnPartition part = partition_columns(X, penalties);
  const Eigen::MatrixXd X_free = gather_columns(X, part.free);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> free_solver;
  if (!part.free.empty()) free_solver.compute(X_free);

  std::vector<double> col_sq(static_cast<std::size_t>(X.cols()), 0.0);
  for (Eigen::Index j : part.penalised) col_sq[static_cast<std::size_t>(j)] = X.col(j).squaredNorm();

  LassoFit fit;
  CoefficientVector beta = CoefficientVector::Zero(X.cols());
  Eigen::VectorXd residual(y.size());
  double delta = 0.0;

  for (int sweep = 1; sweep <= settings.max_iterations; ++sweep) {
    delta = 0.0;

    // Residual is rebuilt from scratch each sweep so rounding cannot accumulate.
    residual = y;
    for (Eigen::Index j : part.penalised) {
      if (beta[j] != 0.0) residual.noalias() -= beta[j] * X.col(j);
    }
    if (!part.free.empty()) {
      const Eigen::VectorXd block = free_solver.solve(residual);
      for (std::size_t k = 0; k < part.free.size(); ++k) {
        const Eigen::Index j = part.free[k];
        delta = std::max(delta, std::abs(block[static_cast<Eigen::Index>(k)] - beta[j]));
        beta[j] = block[static_cast<Eigen::Index>(k)];
      }
      residual.noalias() -= X_free * block;
    }

    for (Eigen::Index j : part.penalised) {
      const double old = beta[j];
      const double norm_sq = col_sq[static_cast<std::size_t>(j)];
      const double rho = X.col(j).dot(residual) + norm_sq * old;
      const double updated = soft_threshold(rho, penalties[j]) / norm_sq;
      if (updated != old) {
        residual.noalias() -= (updated - old) * X.col(j);
        beta[j] = updated;
        delta = std::max(delta, std::abs(updated - old));
      }
    }

    fit.objective_trace.push_back(objective_from_residual(residual, penalties, beta));
    fit.sweeps = sweep;
    if (delta < settings.tolerance) break;
  }
  fit.final_delta = delta;

  if (delta >= settings.tolerance) {
    std::ostringstream msg;
    msg << "weighted_lasso_fit: no convergence after " << fit.sweeps << " sweeps (last change " << delta
        << ", tolerance " << settings.tolerance << ")";
    throw ConvergenceError(msg.str(), beta, delta, fit.sweeps);
  }

  if (auto refined = refine_active_set(X, y, penalties, beta, part)) {
    const double cd_objective = objective_from_residual(y - X * beta, penalties, beta);
    const double new_objective = objective_from_residual(y - X * *refined, penalties, *refined);
    if (new_objective <= cd_objective + 1e-14 * std::max(1.0, std::abs(cd_objective))) {
      beta = *refined;
      fit.refined = true;
    }
  }

  fit.coefficients = std::move(beta);
  return fit;
}

double mse(const Eigen::MatrixXd& X, const CoefficientVector& beta, const Eigen::VectorXd& y) {
  check_rows(X, y, "mse");
  check_coefficients(X, beta, "mse");
  return (y - X * beta).squaredNorm() / static_cast<double>(y.size());
}

LossReport lasso_loss(const Eigen::MatrixXd& X, const PenaltyVector& penalties, const CoefficientVector& beta,
                      const Eigen::VectorXd& y) {
  check_penalties(X, penalties, "lasso_loss");
  LossReport report;
  report.mse = mse(X, beta, y);
  const double T = static_cast<double>(y.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) report.penalty_term += (2.0 / T) * penalties[j] * std::abs(beta[j]);
  report.lasso_loss = report.mse + report.penalty_term;
  return report;
}

}  // namespace lassomarket
