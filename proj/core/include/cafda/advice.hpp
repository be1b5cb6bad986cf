#pragma once

#include <span>
#include <vector>

#include "cafda/features.hpp"

namespace cafda {

/// A strategy's query distribution over the current unlabeled pool.
/// row_ids are ascending and mirror PoolState::unlabeled().
struct AdviceVector {
  std::vector<RowId> row_ids;
  std::vector<double> probs;

  static AdviceVector one_hot(std::span<const RowId> rows, std::size_t index);
  static AdviceVector uniform(std::span<const RowId> rows);

  std::size_t size() const noexcept { return row_ids.size(); }
  bool is_one_hot() const noexcept;
  /// Probability assigned to `row`, 0 when the row is absent.
  double prob_of(RowId row) const noexcept;
  /// Throws StateError unless probs >= 0 and sum to 1 within 1e-9.
  void validate() const;
};

/// First index of the maximum; with ascending row ids that is the lowest
/// row_id among ties.
std::size_t argmax_first(std::span<const double> values);

/// Index i with cumulative(probs)[i-1] <= u < cumulative(probs)[i].
/// Falls back to the last index with positive mass when rounding leaves
/// u beyond the final cumulative value.
std::size_t inverse_cdf(std::span<const double> probs, double u);

}  // namespace cafda
