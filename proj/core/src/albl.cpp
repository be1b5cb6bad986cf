#include "cafda/albl.hpp"

#include <algorithm>
#include <cmath>

namespace cafda {

AlblState AlblState::initial(std::size_t arms, std::size_t horizon, double delta) {
  if (arms == 0) throw ConfigError("ALBL: empty arm pool");
  AlblState s;
  s.log_weights.assign(arms, 0.0);
  s.horizon = std::max<std::size_t>(horizon, 1);
  s.delta = delta;
  return s;
}

std::vector<double> AlblState::arm_probabilities() const {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> p(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(log_weights[k] - top);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

AdviceVector mix_advice(std::span<const AdviceVector> arm_advice, std::span<const double> arm_probs) {
  if (arm_advice.empty()) throw ConfigError("ALBL: empty arm pool");
  if (arm_advice.size() != arm_probs.size()) throw StateError("ALBL: arm weights and advice differ in count");
  AdviceVector mix;
  mix.row_ids = arm_advice.front().row_ids;
  mix.probs.assign(mix.row_ids.size(), 0.0);
  for (std::size_t k = 0; k < arm_advice.size(); ++k) {
    if (arm_advice[k].row_ids != mix.row_ids) throw StateError("ALBL: arm advice covers different rows");
    for (std::size_t i = 0; i < mix.probs.size(); ++i) mix.probs[i] += arm_probs[k] * arm_advice[k].probs[i];
  }
  return mix;
}

double importance_weighted_accuracy(std::span<const AlblQuery> history, std::span<const Label> predictions) {
  if (history.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (predictions[i] == history[i].label) total += history[i].weight;
  }
  return total / static_cast<double>(history.size());
}

std::pair<AdviceVector, AlblState> advise_albl(AlblState state, std::vector<AdviceVector> arm_advice) {
  const auto probs = state.arm_probabilities();
  auto mix = mix_advice(arm_advice, probs);
  state.last_arm_advice = std::move(arm_advice);
  state.last_mixture = mix;
  state.pool_size_at_advice = mix.size();
  return {std::move(mix), std::move(state)};
}

AlblState update_albl(AlblState state, RowId row, double reward) {
  const double q = state.last_mixture.prob_of(row);
  if (!(q > 0.0)) return state;

  // EXP4.P with the unlabeled pool as the action set and arms as experts.
  const auto n_experts = static_cast<double>(state.log_weights.size());
  const auto n_actions = static_cast<double>(std::max<std::size_t>(state.pool_size_at_advice, 1));
  const auto horizon = static_cast<double>(state.horizon);
  const double rate = std::sqrt(std::log(n_experts) / (n_actions * horizon));
  const double bonus = std::sqrt(std::log(n_experts / state.delta) / (n_actions * horizon));

  const auto& mix = state.last_mixture;
  for (std::size_t k = 0; k < state.log_weights.size(); ++k) {
    const auto& advice = state.last_arm_advice[k];
    const double reward_estimate = advice.prob_of(row) * reward / q;
    double variance_bound = 0.0;
    for (std::size_t i = 0; i < advice.size(); ++i) {
      if (advice.probs[i] > 0.0) variance_bound += advice.probs[i] / mix.probs[i];
    }
    state.log_weights[k] += 0.5 * rate * (reward_estimate + variance_bound * bonus);
  }
  state.last_mixture = {};
  state.last_arm_advice.clear();
  return state;
}

AlblStrategy::AlblStrategy(AlblConfig config) : Strategy(StrategyKind::albl), config_(std::move(config)) {
  if (config_.arms.empty()) throw ConfigError("ALBL: empty arm pool");
  for (auto kind : config_.arms) {
    switch (kind) {
      case StrategyKind::uncertainty: arms_.push_back(std::make_unique<UncertaintyStrategy>()); break;
      case StrategyKind::random: arms_.push_back(std::make_unique<RandomStrategy>()); break;
      case StrategyKind::base_refit: arms_.push_back(std::make_unique<BaseRefitStrategy>()); break;
      case StrategyKind::base: arms_.push_back(std::make_unique<BaseStrategy>()); break;
      default:
        throw ConfigError("ALBL: unsupported arm '" + std::string(to_string(kind)) + "'");
    }
  }
  state_ = AlblState::initial(arms_.size(), config_.horizon, config_.delta);
}

void AlblStrategy::initialize(StrategyContext& ctx) {
  for (auto& arm : arms_) arm->initialize(ctx);
  state_ = AlblState::initial(arms_.size(), config_.horizon, config_.delta);
}

AdviceVector AlblStrategy::advise(StrategyContext& ctx) {
  std::vector<AdviceVector> advice;
  advice.reserve(arms_.size());
  for (auto& arm : arms_) advice.push_back(arm->advise(ctx));
  auto [mix, next] = advise_albl(std::move(state_), std::move(advice));
  state_ = std::move(next);
  advised_since_update_ = true;
  return mix;
}

void AlblStrategy::observe(StrategyContext& ctx, RowId row, Label label) {
  for (auto& arm : arms_) arm->observe(ctx, row, label);
  if (!advised_since_update_) return;
  advised_since_update_ = false;

  const double q = state_.last_mixture.prob_of(row);
  if (!(q > 0.0)) {
    state_.last_mixture = {};
    state_.last_arm_advice.clear();
    return;
  }
  state_.history.push_back({row, label, 1.0 / (static_cast<double>(state_.pool_size_at_advice) * q)});

  const auto classifier = ctx.estimators.current(ctx.pool);
  std::vector<Label> predictions;
  predictions.reserve(state_.history.size());
  for (const auto& h : state_.history) {
    predictions.push_back(classifier->p1(ctx.features.row(h.row)) >= 0.5 ? 1 : 0);
  }
  const double reward = std::clamp(importance_weighted_accuracy(state_.history, predictions), 0.0, 1.0);
  state_ = update_albl(std::move(state_), row, reward);
}

}  // namespace cafda
