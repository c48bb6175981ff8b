#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lassomarket {

/// Malformed or inconsistent input (dimension mismatch, non-finite data, bad config).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Coordinate descent ran out of sweeps before the coefficient change fell below tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double achieved_delta, int sweeps)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        achieved_delta_(achieved_delta),
        sweeps_(sweeps) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double achieved_delta() const noexcept { return achieved_delta_; }
  int sweeps() const noexcept { return sweeps_; }

 private:
  Eigen::VectorXd last_iterate_;
  double achieved_delta_;
  int sweeps_;
};

/// A cleared market broke the buyer-viability inequality. Mathematically this cannot
/// happen for an exact optimum, so it always indicates a solver defect.
class ViabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lassomarket
