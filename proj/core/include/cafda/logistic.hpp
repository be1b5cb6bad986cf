#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cafda/features.hpp"

namespace cafda {

struct LogisticParams {
  double l2_penalty = 1.0;
  std::size_t max_iterations = 100;
  double tolerance = 1e-8;

  friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

/// Sum of binary cross-entropy over rows plus (l2/2)*||w||^2. The intercept
/// (last entry of `params`) is not penalised. Writes the analytic gradient
/// into `grad` when it is non-empty.
double logistic_objective(const FeatureMatrix& x, std::span<const double> y,
                          std::span<const double> params, double l2, std::span<double> grad);

class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(std::vector<double> coefficients, double intercept)
      : coefficients_(std::move(coefficients)), intercept_(intercept) {}

  /// Damped Newton iterations with backtracking; the recorded objective is
  /// non-increasing.
  static LogisticModel fit(const FeatureMatrix& x, std::span<const double> y,
                           const LogisticParams& params);

  double predict(std::span<const double> row) const;
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  double intercept() const noexcept { return intercept_; }
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

 private:
  std::vector<double> coefficients_;
  double intercept_ = 0.0;
  std::vector<double> loss_history_;
};

}  // namespace cafda
