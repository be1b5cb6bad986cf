#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cafda/advice.hpp"
#include "cafda/estimator.hpp"

namespace cafda {

enum class StrategyKind { base, base_refit, random, uncertainty, lal_independent, lal_iterative, albl };

std::string_view to_string(StrategyKind kind);
/// Accepts the roster names; "us" and "uncertainty" both map to uncertainty.
std::optional<StrategyKind> parse_strategy_kind(std::string_view name);
const std::vector<StrategyKind>& all_strategy_kinds();

// Pure advice rules. Scores must be aligned with pool.unlabeled().

AdviceVector advise_greedy(const ProbabilityScores& scores);
AdviceVector advise_greedy(const FittedEstimator& est, const PoolState& pool, const FeatureMatrix& features);
AdviceVector advise_random(const PoolState& pool);
/// One-hot on the row minimising |2 p1 - 1|.
AdviceVector advise_uncertainty(const ProbabilityScores& scores);
AdviceVector advise_uncertainty(const FittedEstimator& est, const PoolState& pool,
                                const FeatureMatrix& features);

/// What a strategy may look at: features, the pool (revealed labels only),
/// and the shared refit estimator. Hidden labels are never reachable.
struct StrategyContext {
  const FeatureMatrix& features;
  const PoolState& pool;
  EstimatorProvider& estimators;
};

/// Stateful query strategy H_t. The run engine calls initialize() once on
/// the initial pool, advise() when the strategy is asked for a query, and
/// observe() after every revealed label whether or not this strategy chose
/// the row.
class Strategy {
 public:
  explicit Strategy(StrategyKind kind) : kind_(kind) {}
  virtual ~Strategy() = default;
  Strategy(const Strategy&) = delete;
  Strategy& operator=(const Strategy&) = delete;

  StrategyKind kind() const noexcept { return kind_; }
  std::string name() const { return std::string(to_string(kind_)); }

  virtual void initialize(StrategyContext& ctx) { (void)ctx; }
  virtual AdviceVector advise(StrategyContext& ctx) = 0;
  virtual void observe(StrategyContext& ctx, RowId row, Label label) {
    (void)ctx, (void)row, (void)label;
  }
  /// Estimator whose argmax this strategy would exploit at the current pool.
  virtual std::shared_ptr<const FittedEstimator> estimator(StrategyContext& ctx);

 private:
  StrategyKind kind_;
};

/// Greedy on the estimator fitted once on the initial labeled set.
class BaseStrategy final : public Strategy {
 public:
  BaseStrategy() : Strategy(StrategyKind::base) {}
  void initialize(StrategyContext& ctx) override;
  AdviceVector advise(StrategyContext& ctx) override;
  std::shared_ptr<const FittedEstimator> estimator(StrategyContext& ctx) override;

 private:
  std::shared_ptr<const FittedEstimator> frozen_;
  std::vector<double> p1_by_row_;
};

/// Greedy on an estimator refit on D_l^t every step.
class BaseRefitStrategy final : public Strategy {
 public:
  BaseRefitStrategy() : Strategy(StrategyKind::base_refit) {}
  AdviceVector advise(StrategyContext& ctx) override;
};

class RandomStrategy final : public Strategy {
 public:
  RandomStrategy() : Strategy(StrategyKind::random) {}
  AdviceVector advise(StrategyContext& ctx) override;
};

class UncertaintyStrategy final : public Strategy {
 public:
  UncertaintyStrategy() : Strategy(StrategyKind::uncertainty) {}
  AdviceVector advise(StrategyContext& ctx) override;
};

}  // namespace cafda
