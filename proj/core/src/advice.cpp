#include "cafda/advice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cafda {

AdviceVector AdviceVector::one_hot(std::span<const RowId> rows, std::size_t index) {
  if (rows.empty()) throw StateError("advice over an empty pool");
  AdviceVector a;
  a.row_ids.assign(rows.begin(), rows.end());
  a.probs.assign(rows.size(), 0.0);
  a.probs.at(index) = 1.0;
  return a;
}

AdviceVector AdviceVector::uniform(std::span<const RowId> rows) {
  if (rows.empty()) throw StateError("advice over an empty pool");
  AdviceVector a;
  a.row_ids.assign(rows.begin(), rows.end());
  a.probs.assign(rows.size(), 1.0 / static_cast<double>(rows.size()));
  return a;
}

bool AdviceVector::is_one_hot() const noexcept {
  return std::count(probs.begin(), probs.end(), 1.0) == 1 &&
         std::count(probs.begin(), probs.end(), 0.0) == static_cast<std::ptrdiff_t>(probs.size()) - 1;
}

double AdviceVector::prob_of(RowId row) const noexcept {
  const auto it = std::lower_bound(row_ids.begin(), row_ids.end(), row);
  if (it == row_ids.end() || *it != row) return 0.0;
  return probs[static_cast<std::size_t>(it - row_ids.begin())];
}

void AdviceVector::validate() const {
  if (row_ids.empty()) throw StateError("advice vector is empty");
  if (row_ids.size() != probs.size()) throw StateError("advice vector: rows and probs differ in length");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw StateError("advice vector: negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw StateError("advice vector: probabilities do not sum to 1");
}

std::size_t argmax_first(std::span<const double> values) {
  if (values.empty()) throw StateError("argmax over an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t inverse_cdf(std::span<const double> probs, double u) {
  if (probs.empty()) throw StateError("sampling from an empty distribution");
  double cumulative = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    cumulative += probs[i];
    if (probs[i] > 0.0 && u < cumulative) return i;
  }
  if (last_positive == probs.size()) throw StateError("sampling from a distribution with no mass");
  return last_positive;
}

}  // namespace cafda
