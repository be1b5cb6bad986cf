#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cafda/rng.hpp"
#include "cafda/strategies.hpp"

namespace cafda {

/// Multiplicative step sizes and clamp bounds of the weight update.
struct CafdaConfig {
  double k0 = 0.8;
  double k1 = 1.2;
  double p_min = 0.001;
  double p_max = 0.95;

  /// Throws ConfigError unless 0 < k0 < 1 < k1 and 0 < p_min < p_max <= 1.
  void validate() const;
  friend bool operator==(const CafdaConfig&, const CafdaConfig&) = default;
};

/// Probability of picking each expert strategy.
struct WeightVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  /// Throws StateError unless entries are > 0 and sum to 1 within 1e-9.
  void validate() const;
};

WeightVector init_weights(std::size_t k);

/// Inverse-CDF draw over cumulative weights in index order.
std::size_t pick_strategy(const WeightVector& w, double u);
std::size_t pick_strategy(const WeightVector& w, Rng& rng);

RowId sample_query(const AdviceVector& advice, double u);
RowId sample_query(const AdviceVector& advice, Rng& rng);

/// Chosen index first (r > 0: min(k1 w_i, p_max), else max(k0 w_i, p_min)),
/// then every other index clamped to [p_min, p_max]. Not yet normalised.
std::vector<double> update_weights_unnormalized(const WeightVector& w, std::size_t chosen, double reward,
                                                const CafdaConfig& config);

/// update_weights_unnormalized followed by w / sum(w).
WeightVector update_weights(const WeightVector& w, std::size_t chosen, double reward, const CafdaConfig& config);

/// Expert pool plus weight vector. The run engine asks it for a choice,
/// queries the oracle, then calls update().
class CafdaMixer {
 public:
  CafdaMixer(std::vector<std::unique_ptr<Strategy>> experts, CafdaConfig config, std::uint64_t seed);

  struct Choice {
    std::size_t expert = 0;
    AdviceVector advice;
  };

  void initialize(StrategyContext& ctx);
  Choice choose(StrategyContext& ctx);
  /// Weight update for the expert that proposed the answered query.
  void update(std::size_t expert, double reward);
  void observe(StrategyContext& ctx, RowId row, Label label);

  const WeightVector& weights() const noexcept { return weights_; }
  const CafdaConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return experts_.size(); }
  Strategy& expert(std::size_t i) { return *experts_.at(i); }

 private:
  std::vector<std::unique_ptr<Strategy>> experts_;
  CafdaConfig config_;
  WeightVector weights_;
  Rng pick_rng_;
};

}  // namespace cafda
