#include "cafda/cafda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cafda {

void CafdaConfig::validate() const {
  if (!(k0 > 0.0 && k0 < 1.0)) throw ConfigError("cafda.k0 must lie in (0,1)");
  if (!(k1 > 1.0)) throw ConfigError("cafda.k1 must be greater than 1");
  if (!(p_min > 0.0 && p_min < p_max && p_max <= 1.0)) {
    throw ConfigError("cafda bounds must satisfy 0 < p_min < p_max <= 1");
  }
}

void WeightVector::validate() const {
  if (values.empty()) throw StateError("weight vector is empty");
  double sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw StateError("weight vector has a non-positive entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw StateError("weight vector does not sum to 1");
}

WeightVector init_weights(std::size_t k) {
  if (k == 0) throw ConfigError("CAFDA needs at least one expert strategy");
  return WeightVector{std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

std::size_t pick_strategy(const WeightVector& w, double u) { return inverse_cdf(w.values, u); }

std::size_t pick_strategy(const WeightVector& w, Rng& rng) { return pick_strategy(w, rng.uniform()); }

RowId sample_query(const AdviceVector& advice, double u) {
  if (advice.row_ids.empty()) throw StateError("sample_query: empty advice");
  return advice.row_ids[inverse_cdf(advice.probs, u)];
}

RowId sample_query(const AdviceVector& advice, Rng& rng) { return sample_query(advice, rng.uniform()); }

std::vector<double> update_weights_unnormalized(const WeightVector& w, std::size_t chosen, double reward,
                                                const CafdaConfig& config) {
  if (chosen >= w.size()) {
    throw StateError("update_weights: strategy index " + std::to_string(chosen) + " out of range");
  }
  std::vector<double> next = w.values;
  if (reward > 0.0) {
    next[chosen] = std::min(config.k1 * next[chosen], config.p_max);
  } else {
    next[chosen] = std::max(config.k0 * next[chosen], config.p_min);
  }
  for (std::size_t j = 0; j < next.size(); ++j) {
    if (j != chosen) next[j] = std::max(std::min(next[j], config.p_max), config.p_min);
  }
  return next;
}

WeightVector update_weights(const WeightVector& w, std::size_t chosen, double reward, const CafdaConfig& config) {
  auto next = update_weights_unnormalized(w, chosen, reward, config);
  // Holds inductively: weights start in (0,1] and every step clamps.
  for (double v : next) {
    if (v < config.p_min || v > config.p_max) {
      throw StateError("update_weights: pre-normalisation weight left [p_min, p_max]");
    }
  }
  const double total = std::accumulate(next.begin(), next.end(), 0.0);
  for (auto& v : next) v /= total;
  return WeightVector{std::move(next)};
}

CafdaMixer::CafdaMixer(std::vector<std::unique_ptr<Strategy>> experts, CafdaConfig config, std::uint64_t seed)
    : experts_(std::move(experts)),
      config_(config),
      weights_(init_weights(experts_.size())),
      pick_rng_(derive_seed(seed, "cafda_pick")) {
  config_.validate();
}

void CafdaMixer::initialize(StrategyContext& ctx) {
  for (auto& e : experts_) e->initialize(ctx);
}

CafdaMixer::Choice CafdaMixer::choose(StrategyContext& ctx) {
  Choice c;
  c.expert = pick_strategy(weights_, pick_rng_);
  c.advice = experts_[c.expert]->advise(ctx);
  return c;
}

void CafdaMixer::update(std::size_t expert, double reward) {
  weights_ = update_weights(weights_, expert, reward, config_);
}

void CafdaMixer::observe(StrategyContext& ctx, RowId row, Label label) {
  for (auto& e : experts_) e->observe(ctx, row, label);
}

}  // namespace cafda
