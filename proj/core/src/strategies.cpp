#include "cafda/strategies.hpp"

#include <array>
#include <cmath>

namespace cafda {
namespace {

constexpr std::array<std::pair<StrategyKind, std::string_view>, 7> kNames{{
    {StrategyKind::base, "base"},
    {StrategyKind::base_refit, "base_refit"},
    {StrategyKind::random, "random"},
    {StrategyKind::uncertainty, "us"},
    {StrategyKind::lal_independent, "lal_independent"},
    {StrategyKind::lal_iterative, "lal_iterative"},
    {StrategyKind::albl, "albl"},
}};

void check_aligned(const ProbabilityScores& scores) {
  if (scores.row_ids.empty()) throw StateError("strategy asked to advise on an empty pool");
  if (scores.p1.size() != scores.row_ids.size()) throw StateError("scores not aligned with rows");
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& [k, n] : kNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view name) {
  if (name == "uncertainty") return StrategyKind::uncertainty;
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const std::vector<StrategyKind>& all_strategy_kinds() {
  static const std::vector<StrategyKind> kinds = [] {
    std::vector<StrategyKind> v;
    for (const auto& entry : kNames) v.push_back(entry.first);
    return v;
  }();
  return kinds;
}

AdviceVector advise_greedy(const ProbabilityScores& scores) {
  check_aligned(scores);
  return AdviceVector::one_hot(scores.row_ids, argmax_first(scores.p1));
}

AdviceVector advise_greedy(const FittedEstimator& est, const PoolState& pool, const FeatureMatrix& features) {
  return advise_greedy(predict_scores(est, features, pool.unlabeled()));
}

AdviceVector advise_random(const PoolState& pool) { return AdviceVector::uniform(pool.unlabeled()); }

AdviceVector advise_uncertainty(const ProbabilityScores& scores) {
  check_aligned(scores);
  std::vector<double> certainty_gap(scores.p1.size());
  for (std::size_t i = 0; i < scores.p1.size(); ++i) certainty_gap[i] = -std::abs(2.0 * scores.p1[i] - 1.0);
  return AdviceVector::one_hot(scores.row_ids, argmax_first(certainty_gap));
}

AdviceVector advise_uncertainty(const FittedEstimator& est, const PoolState& pool,
                                const FeatureMatrix& features) {
  return advise_uncertainty(predict_scores(est, features, pool.unlabeled()));
}

std::shared_ptr<const FittedEstimator> Strategy::estimator(StrategyContext& ctx) {
  return ctx.estimators.current(ctx.pool);
}

void BaseStrategy::initialize(StrategyContext& ctx) {
  frozen_ = ctx.estimators.current(ctx.pool);
  const auto scores = predict_scores(*frozen_, ctx.features, ctx.pool.unlabeled());
  p1_by_row_.assign(ctx.pool.total_rows(), 0.0);
  for (std::size_t i = 0; i < scores.row_ids.size(); ++i) p1_by_row_[scores.row_ids[i]] = scores.p1[i];
}

AdviceVector BaseStrategy::advise(StrategyContext& ctx) {
  if (!frozen_) initialize(ctx);
  const auto rows = ctx.pool.unlabeled();
  if (rows.empty()) throw StateError("strategy asked to advise on an empty pool");
  std::vector<double> p1(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) p1[i] = p1_by_row_[rows[i]];
  return AdviceVector::one_hot(rows, argmax_first(p1));
}

std::shared_ptr<const FittedEstimator> BaseStrategy::estimator(StrategyContext& ctx) {
  if (!frozen_) initialize(ctx);
  return frozen_;
}

AdviceVector BaseRefitStrategy::advise(StrategyContext& ctx) {
  return advise_greedy(ctx.estimators.unlabeled_scores(ctx.pool));
}

AdviceVector RandomStrategy::advise(StrategyContext& ctx) { return advise_random(ctx.pool); }

AdviceVector UncertaintyStrategy::advise(StrategyContext& ctx) {
  return advise_uncertainty(ctx.estimators.unlabeled_scores(ctx.pool));
}

}  // namespace cafda
