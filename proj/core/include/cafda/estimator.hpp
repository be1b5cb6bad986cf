#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cafda/datapool.hpp"
#include "cafda/forest.hpp"
#include "cafda/logistic.hpp"

namespace cafda {

enum class EstimatorKind { random_forest, logistic };

/// How a forest turns per-tree outputs into p1.
enum class ForestProbability {
  votes,      // mean of hard 0/1 tree votes
  leaf_mean,  // mean of leaf positive fractions
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::random_forest;
  ForestParams forest;
  ForestProbability probability = ForestProbability::votes;
  LogisticParams logistic;
  std::uint64_t seed = 0;

  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

/// p1 and dispersion for an ordered list of rows. Dispersion is the
/// population variance of the per-tree outputs (0 for logistic).
struct ProbabilityScores {
  std::vector<RowId> row_ids;
  std::vector<double> p1;
  std::vector<double> dispersion;
};

/// Trained p_hat(y=1|x). Immutable once built; share via shared_ptr.
class FittedEstimator {
 public:
  FittedEstimator(EstimatorConfig config, Forest forest, std::size_t trained_on_step);
  FittedEstimator(EstimatorConfig config, LogisticModel model, std::size_t n_features,
                  std::size_t trained_on_step);

  const EstimatorConfig& config() const noexcept { return config_; }
  std::size_t trained_on_step() const noexcept { return trained_on_step_; }
  std::size_t n_features() const noexcept { return n_features_; }

  double p1(std::span<const double> row) const;
  /// Hard 0/1 votes per tree (forest only).
  std::vector<int> tree_votes(std::span<const double> row) const;

  const Forest* forest() const noexcept { return std::get_if<Forest>(&model_); }
  const LogisticModel* logistic() const noexcept { return std::get_if<LogisticModel>(&model_); }

 private:
  std::pair<double, double> score(std::span<const double> row, std::vector<double>& scratch) const;
  friend ProbabilityScores predict_scores(const FittedEstimator&, const FeatureMatrix&,
                                          std::span<const RowId>);

  EstimatorConfig config_;
  std::variant<Forest, LogisticModel> model_;
  std::size_t n_features_ = 0;
  std::size_t trained_on_step_ = 0;
};

/// Fits on the labeled part of `pool`. Requires both classes present.
FittedEstimator fit(const PoolState& pool, const FeatureMatrix& features, const EstimatorConfig& config);

/// Fits on explicit rows/labels; `step` is stored as trained_on_step.
FittedEstimator fit_rows(const FeatureMatrix& features, std::span<const RowId> rows,
                         std::span<const Label> labels, const EstimatorConfig& config,
                         std::size_t step = 0);

ProbabilityScores predict_scores(const FittedEstimator& estimator, const FeatureMatrix& features,
                                 std::span<const RowId> rows);

struct CvResult {
  EstimatorConfig config;
  std::size_t index = 0;
  bool fallback = false;
  std::vector<double> mean_loss;  // per grid entry; empty on fallback
};

/// Mean cross-entropy of `p1` against `labels`, probabilities clipped to
/// [1e-6, 1 - 1e-6].
double mean_cross_entropy(std::span<const double> p1, std::span<const Label> labels);

/// Stratified k-fold selection on the labeled pool; lowest mean
/// validation cross-entropy wins, ties go to the earlier grid entry. Falls
/// back to grid[0] when either class has fewer than k labeled rows.
CvResult cv_select(const PoolState& pool, const FeatureMatrix& features,
                   std::span<const EstimatorConfig> grid, std::size_t k_folds, std::uint64_t seed);

/// trees in {50, 100} x min_leaf in {1, 5}, other settings taken from `base`.
std::vector<EstimatorConfig> default_cv_grid(const EstimatorConfig& base);

/// Refits lazily on the current labeled pool and caches the last fit and
/// its unlabeled scores, so strategies sharing a pool share one fit.
class EstimatorProvider {
 public:
  EstimatorProvider(const FeatureMatrix& features, EstimatorConfig config)
      : features_(&features), config_(std::move(config)) {}

  std::shared_ptr<const FittedEstimator> current(const PoolState& pool);
  const ProbabilityScores& unlabeled_scores(const PoolState& pool);

  const EstimatorConfig& config() const noexcept { return config_; }
  void set_config(EstimatorConfig config);
  const FeatureMatrix& features() const noexcept { return *features_; }
  std::size_t fit_count() const noexcept { return fit_count_; }

 private:
  const FeatureMatrix* features_;
  EstimatorConfig config_;
  std::optional<std::uint64_t> fitted_key_;
  std::shared_ptr<const FittedEstimator> fitted_;
  std::optional<std::uint64_t> scored_key_;
  ProbabilityScores scores_;
  std::size_t fit_count_ = 0;
};

/// Identity of a pool's labeled set (ids, labels, step).
std::uint64_t pool_fingerprint(const PoolState& pool);

std::string to_string(EstimatorKind kind);
std::string to_string(ForestProbability mode);
std::string to_string(FeaturesPerSplit rule);

}  // namespace cafda
