#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cafda/strategies.hpp"

namespace cafda {

struct AlblConfig {
  std::vector<StrategyKind> arms{StrategyKind::uncertainty, StrategyKind::random};
  double delta = 0.1;
  std::size_t horizon = 100;

  friend bool operator==(const AlblConfig&, const AlblConfig&) = default;
};

/// One ALBL query: the row, its revealed label and its importance weight
/// 1 / (|D_u| q), where q was the row's probability under ALBL's mixture.
struct AlblQuery {
  RowId row = 0;
  Label label = 0;
  double weight = 1.0;
};

/// EXP4.P state over the arm strategies.
struct AlblState {
  std::vector<double> log_weights;
  std::vector<AlblQuery> history;
  std::vector<AdviceVector> last_arm_advice;
  AdviceVector last_mixture;
  std::size_t pool_size_at_advice = 0;
  std::size_t horizon = 100;
  double delta = 0.1;

  static AlblState initial(std::size_t arms, std::size_t horizon, double delta);
  std::vector<double> arm_probabilities() const;
};

/// Weighted sum of arm advice vectors. All advice must cover the same rows.
AdviceVector mix_advice(std::span<const AdviceVector> arm_advice, std::span<const double> arm_probs);

/// (1/n) sum_i w_i [prediction_i == label_i]; unbiased for pool accuracy
/// when w_i = 1 / (|D_u| q_i).
double importance_weighted_accuracy(std::span<const AlblQuery> history,
                                    std::span<const Label> predictions);

/// Mixes the arm advice under the current expert weights and remembers it
/// for the next update.
std::pair<AdviceVector, AlblState> advise_albl(AlblState state, std::vector<AdviceVector> arm_advice);

/// EXP4.P weight step after `row` was labeled; `reward` in [0,1].
AlblState update_albl(AlblState state, RowId row, double reward);

class AlblStrategy final : public Strategy {
 public:
  explicit AlblStrategy(AlblConfig config);
  void initialize(StrategyContext& ctx) override;
  AdviceVector advise(StrategyContext& ctx) override;
  void observe(StrategyContext& ctx, RowId row, Label label) override;

  const AlblState& state() const noexcept { return state_; }

 private:
  AlblConfig config_;
  std::vector<std::unique_ptr<Strategy>> arms_;
  AlblState state_;
  bool advised_since_update_ = false;
};

}  // namespace cafda
