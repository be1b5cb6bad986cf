#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cafda/features.hpp"

namespace cafda {

/// Summary counts of a loaded dataset. `dimension` counts every CSV column
/// including the label (the convention of the published dataset tables);
/// `n_features` is what estimators see.
struct DatasetDescriptor {
  std::string name;
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::size_t dimension = 0;
  std::size_t n_positives = 0;
  double anomaly_proportion = 0.0;
};

/// Ground-truth labels. Only oracle and harness code gets a reference to
/// this; strategies see FeatureMatrix and PoolState, which carries revealed
/// labels only.
class HiddenLabels {
 public:
  HiddenLabels() = default;
  explicit HiddenLabels(std::vector<Label> labels);

  Label at(RowId row) const;
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t count_positive() const noexcept { return positives_; }
  std::span<const Label> raw() const noexcept { return labels_; }

 private:
  std::vector<Label> labels_;
  std::size_t positives_ = 0;
};

struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  FeatureMatrix features;
  HiddenLabels labels;

  DatasetDescriptor descriptor() const;
  std::optional<std::size_t> feature_index(std::string_view column) const;
};

/// Reads the canonical CSV layout: header row, one 0/1 label column, every
/// other column numeric. Row order defines RowId.
Dataset load_dataset(const std::filesystem::path& path, std::string_view label_column);

/// Writes the canonical CSV layout back out (label column last).
void write_dataset(const Dataset& data, const std::filesystem::path& path,
                   std::string_view label_column);

struct SplitConfig {
  double init_fraction = 0.01;
  std::optional<std::size_t> subsample_size;
  std::uint64_t seed = 0;
  std::size_t min_positives = 1;
  std::size_t min_negatives = 1;
  std::size_t max_retries = 200;

  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

/// Evolving partition of the active rows into labeled (D_l^t) and
/// unlabeled (D_u^t). Immutable: reveal() returns a new snapshot.
class PoolState {
 public:
  enum class Status : std::uint8_t { inactive, unlabeled, negative, positive };

  PoolState() = default;

  /// Builds a pool over `total_rows` dataset rows. Rows in neither list are
  /// outside the active set.
  static PoolState from_partition(std::size_t total_rows, std::vector<RowId> unlabeled,
                                  std::vector<std::pair<RowId, Label>> labeled);

  /// Labeled row ids, initial rows first (ascending), then in query order.
  std::span<const RowId> labeled() const noexcept { return labeled_; }
  std::span<const Label> labeled_labels() const noexcept { return labeled_labels_; }
  /// Unlabeled row ids in ascending order.
  std::span<const RowId> unlabeled() const noexcept { return unlabeled_; }

  /// 1-based index of the next query; equals 1 before any query.
  std::size_t step() const noexcept { return step_; }
  std::size_t total_rows() const noexcept { return status_.size(); }
  std::size_t active_size() const noexcept { return labeled_.size() + unlabeled_.size(); }
  std::size_t labeled_positives() const noexcept { return labeled_positives_; }

  Status status(RowId row) const;
  bool is_unlabeled(RowId row) const { return status(row) == Status::unlabeled; }

  /// Moves `row` from unlabeled to labeled with the given label.
  PoolState reveal(RowId row, Label label) const;

  friend bool operator==(const PoolState&, const PoolState&) = default;

 private:
  std::vector<Status> status_;
  std::vector<RowId> labeled_;
  std::vector<Label> labeled_labels_;
  std::vector<RowId> unlabeled_;
  std::size_t labeled_positives_ = 0;
  std::size_t step_ = 1;
};

/// Optional uniform subsample, then a uniform labeled draw of
/// floor(init_fraction * N_active) rows, redrawn until the class minima hold.
PoolState initial_split(const HiddenLabels& labels, const SplitConfig& config);

/// Reveals the hidden label of `row` and returns the updated pool.
std::pair<PoolState, Label> apply_query(const PoolState& pool, RowId row,
                                        const HiddenLabels& labels);

/// Fraction of positives among still-unlabeled rows. Harness-only.
double unlabeled_prevalence(const PoolState& pool, const HiddenLabels& labels);

}  // namespace cafda
