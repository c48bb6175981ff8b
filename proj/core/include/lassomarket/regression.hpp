#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lassomarket {

/// One lagged feature: the series of `agent` shifted back by `lag` hours.
struct FeatureKey {
  std::string agent;
  int lag = 0;

  auto operator<=>(const FeatureKey&) const = default;
};

/// Provenance of a design column; std::nullopt marks the intercept.
using ColumnKey = std::optional<FeatureKey>;

/// Regressor matrix together with the (agent, lag) origin of each column.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<ColumnKey> column_map;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
  bool has_intercept() const noexcept { return !column_map.empty() && !column_map.front().has_value(); }
  std::optional<Eigen::Index> column_of(const FeatureKey& key) const;

  /// Throws InputError if the column map and matrix disagree, a key repeats,
  /// or a declared intercept column is not all ones.
  void validate() const;
};

using CoefficientVector = Eigen::VectorXd;

/// Per-coefficient L1 weights, applied diagonally. Entry 0 (intercept) must be zero.
using PenaltyVector = Eigen::VectorXd;

struct LossReport {
  double mse = 0.0;
  double penalty_term = 0.0;
  double lasso_loss = 0.0;
};

struct SolverSettings {
  /// Convergence threshold on the largest absolute coefficient change in one sweep.
  double tolerance = 1e-8;
  /// Upper bound on full coordinate sweeps.
  int max_iterations = 10'000;

  void validate() const;
};

struct LassoFit {
  CoefficientVector coefficients;
  int sweeps = 0;
  double final_delta = 0.0;
  /// Objective value after each sweep, in the (1/T)-scaled lasso-loss units.
  std::vector<double> objective_trace;
  /// True when the active-set refinement replaced the coordinate-descent iterate.
  bool refined = false;
};

/// sign(z) * max(|z| - gamma, 0); exactly-at-threshold inputs map to 0.
double soft_threshold(double z, double gamma) noexcept;

/// Least squares; the minimum-norm solution when X has deficient column rank.
CoefficientVector ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
inline CoefficientVector ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y) { return ols_fit(X.values, y); }

/// Minimises (1/T)||y - X b||^2 + (2/T) sum_j penalties[j] |b_j|.
///
/// Zero-penalty columns form one block that is solved exactly (minimum norm) on
/// every sweep; penalised columns are updated one at a time by soft-thresholding.
/// After convergence the active set is re-solved in closed form and that solution
/// is kept when it is sign-consistent, satisfies the inactive-set conditions, and
/// does not raise the objective.
///
/// Throws InputError on bad shapes or penalties, ConvergenceError when
/// `settings.max_iterations` sweeps do not reach `settings.tolerance`.
LassoFit weighted_lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltyVector& penalties,
                            const SolverSettings& settings = {});
inline LassoFit weighted_lasso_fit(const DesignMatrix& X, const Eigen::VectorXd& y, const PenaltyVector& penalties,
                                   const SolverSettings& settings = {}) {
  return weighted_lasso_fit(X.values, y, penalties, settings);
}

/// (1/T) sum_t (y_t - X_t b)^2
double mse(const Eigen::MatrixXd& X, const CoefficientVector& beta, const Eigen::VectorXd& y);
inline double mse(const DesignMatrix& X, const CoefficientVector& beta, const Eigen::VectorXd& y) {
  return mse(X.values, beta, y);
}

LossReport lasso_loss(const Eigen::MatrixXd& X, const PenaltyVector& penalties, const CoefficientVector& beta,
                      const Eigen::VectorXd& y);
inline LossReport lasso_loss(const DesignMatrix& X, const PenaltyVector& penalties, const CoefficientVector& beta,
                             const Eigen::VectorXd& y) {
  return lasso_loss(X.values, penalties, beta, y);
}

}  // namespace lassomarket
