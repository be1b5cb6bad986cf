#include "cafda/logistic.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace cafda {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear(std::span<const double> row, std::span<const double> params) {
  const std::size_t d = row.size();
  double z = params[d];
  for (std::size_t j = 0; j < d; ++j) z += params[j] * row[j];
  return z;
}

}  // namespace

double logistic_objective(const FeatureMatrix& x, std::span<const double> y,
                          std::span<const double> params, double l2, std::span<double> grad) {
  const std::size_t d = x.cols();
  if (params.size() != d + 1) throw DataError("logistic: parameter length must be n_features + 1");
  if (y.size() != x.rows()) throw DataError("logistic: target length does not match rows");
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double z = linear(row, params);
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    loss += softplus(z) - y[i] * z;
    if (want_grad) {
      const double r = sigmoid(z) - y[i];
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * row[j];
      grad[d] += r;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    loss += 0.5 * l2 * params[j] * params[j];
    if (want_grad) grad[j] += l2 * params[j];
  }
  return loss;
}

LogisticModel LogisticModel::fit(const FeatureMatrix& x, std::span<const double> y,
                                 const LogisticParams& params) {
  if (params.l2_penalty < 0) throw ConfigError("logistic: l2_penalty must be non-negative");
  const std::size_t d = x.cols();
  const std::size_t p = d + 1;
  std::vector<double> w(p, 0.0);
  std::vector<double> grad(p);
  std::vector<double> trial(p);

  LogisticModel model;
  double loss = logistic_objective(x, y, w, params.l2_penalty, grad);
  model.loss_history_.push_back(loss);

  for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto row = x.row(i);
      const double s = sigmoid(linear(row, w));
      const double weight = s * (1.0 - s);
      Eigen::VectorXd xi(static_cast<Eigen::Index>(p));
      for (std::size_t j = 0; j < d; ++j) xi(static_cast<Eigen::Index>(j)) = row[j];
      xi(static_cast<Eigen::Index>(d)) = 1.0;
      hessian.selfadjointView<Eigen::Lower>().rankUpdate(xi, weight);
    }
    hessian = hessian.selfadjointView<Eigen::Lower>();
    for (std::size_t j = 0; j < d; ++j) hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += params.l2_penalty;
    // Small ridge keeps the solve defined on separable or rank-deficient data.
    hessian.diagonal().array() += 1e-10;

    const Eigen::Map<const Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(p));
    if (g.norm() < params.tolerance) break;
    Eigen::VectorXd step = hessian.ldlt().solve(-g);
    double slope = g.dot(step);
    if (!(slope < 0) || !step.allFinite()) {
      step = -g;
      slope = -g.squaredNorm();
    }

    double t = 1.0;
    double next_loss = loss;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      for (std::size_t j = 0; j < p; ++j) trial[j] = w[j] + t * step(static_cast<Eigen::Index>(j));
      next_loss = logistic_objective(x, y, trial, params.l2_penalty, {});
      if (next_loss <= loss + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    w = trial;
    const double improvement = loss - next_loss;
    loss = logistic_objective(x, y, w, params.l2_penalty, grad);
    model.loss_history_.push_back(loss);
    if (improvement <= params.tolerance * (1.0 + std::abs(loss))) break;
  }

  model.coefficients_.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
  model.intercept_ = w[d];
  return model;
}

double LogisticModel::predict(std::span<const double> row) const {
  double z = intercept_;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) z += coefficients_[j] * row[j];
  return sigmoid(z);
}

}  // namespace cafda
