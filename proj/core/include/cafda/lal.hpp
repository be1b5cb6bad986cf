#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cafda/strategies.hpp"
#include "cafda/synthetic.hpp"

namespace cafda {

enum class LalMode { independent, iterative };

/// Width of a LAL feature row: 4 state features then 3 point features.
///   state: labeled-set size, labeled positive fraction, mean p1 over
///          unlabeled, mean dispersion over unlabeled
///   point: p1, dispersion, distance to the nearest labeled positive
inline constexpr std::size_t kLalFeatureCount = 7;

/// One LAL feature row per unlabeled row, aligned with `scores`.
FeatureMatrix lal_features(const PoolState& pool, const FeatureMatrix& features,
                           const ProbabilityScores& scores);

/// Monte Carlo budget and synthetic task family used to train the LAL
/// regressor offline.
struct LalGeneratorConfig {
  std::size_t simulations = 24;
  std::size_t candidates_per_state = 8;
  std::size_t task_size = 300;
  std::size_t dimension = 2;
  double min_positive_fraction = 0.05;
  double max_positive_fraction = 0.3;
  std::size_t min_initial_labeled = 10;
  std::size_t max_initial_labeled = 40;
  double validation_fraction = 0.3;
  std::size_t iterative_rounds = 2;  // iterative mode only
  std::size_t growth_steps = 6;      // iterative mode only
  EstimatorConfig inner;             // classifier refit inside each simulation
  ForestParams regressor;            // LAL regressor (regression forest)

  LalGeneratorConfig();
  friend bool operator==(const LalGeneratorConfig&, const LalGeneratorConfig&) = default;
};

struct LalTrainingSet {
  FeatureMatrix x;
  std::vector<double> improvement;

  std::size_t size() const noexcept { return improvement.size(); }
};

/// Validation cross-entropy before minus after adding `candidate` (with
/// its true label) to the labeled rows, each side a fresh fit of `inner`.
double loss_improvement(const FeatureMatrix& features, std::span<const Label> labels,
                        std::span<const RowId> labeled, std::span<const RowId> validation,
                        RowId candidate, const EstimatorConfig& inner);

LalTrainingSet build_lal_training_set(LalMode mode, const LalGeneratorConfig& config, std::uint64_t seed);

/// Regression forest mapping LAL features to expected loss improvement.
class LalRegressor {
 public:
  LalRegressor() = default;
  explicit LalRegressor(Forest forest) : forest_(std::move(forest)) {}

  static LalRegressor fit(const LalTrainingSet& data, const ForestParams& params, std::uint64_t seed);

  double predict(std::span<const double> row) const { return forest_.predict_mean(row); }
  std::vector<double> predict(const FeatureMatrix& rows) const;
  const Forest& forest() const noexcept { return forest_; }

 private:
  Forest forest_;
};

/// Anything that maps a LAL feature row to a predicted improvement; lets
/// tests plant a known scoring rule.
using LalScorer = std::function<double(std::span<const double>)>;

/// One-hot on the unlabeled row with the largest predicted improvement.
AdviceVector advise_lal(const LalScorer& scorer, const PoolState& pool, const FeatureMatrix& features,
                        const ProbabilityScores& scores);

class LalStrategy final : public Strategy {
 public:
  LalStrategy(LalMode mode, std::shared_ptr<const LalRegressor> regressor);
  AdviceVector advise(StrategyContext& ctx) override;

 private:
  std::shared_ptr<const LalRegressor> regressor_;
};

/// Process-wide cache so repeated runs with the same generator settings
/// train each regressor once. Thread-safe.
std::shared_ptr<const LalRegressor> cached_lal_regressor(LalMode mode, const LalGeneratorConfig& config,
                                                         std::uint64_t seed);

}  // namespace cafda
