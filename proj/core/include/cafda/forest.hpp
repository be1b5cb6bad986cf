#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cafda/features.hpp"

namespace cafda {

enum class FeaturesPerSplit { sqrt, log2, all, fixed };

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 1;
  FeaturesPerSplit features_per_split = FeaturesPerSplit::sqrt;
  std::size_t fixed_features = 1;  // used when features_per_split == fixed
  bool bootstrap = true;
  std::size_t n_threads = 1;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;

  std::size_t features_to_try(std::size_t n_features) const;
};

/// CART tree minimising squared error. On 0/1 targets the squared-error
/// split criterion ranks splits exactly like Gini impurity, so the same
/// builder serves classification (leaf = positive fraction) and regression
/// (leaf = mean target).
class RegressionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  RegressionTree() = default;

  /// Single-leaf tree predicting `value` everywhere.
  static RegressionTree constant(double value);

  /// Grows a tree on the rows listed in `sample` (duplicates allowed, as
  /// produced by bootstrapping).
  static RegressionTree grow(const FeatureMatrix& x, std::span<const double> y,
                             std::span<const std::uint32_t> sample, const ForestParams& params,
                             std::uint64_t seed);

  double predict(std::span<const double> row) const;
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
  friend class TreeBuilder;
};

/// Bagged ensemble of RegressionTree. Tree i is grown from a seed derived
/// from (seed, i), so results do not depend on thread scheduling.
class Forest {
 public:
  Forest() = default;
  explicit Forest(std::vector<RegressionTree> trees, std::size_t n_features)
      : trees_(std::move(trees)), n_features_(n_features) {}

  static Forest fit(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params,
                    std::uint64_t seed);

  std::size_t size() const noexcept { return trees_.size(); }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  /// Raw per-tree outputs for one row.
  void tree_outputs(std::span<const double> row, std::span<double> out) const;
  double predict_mean(std::span<const double> row) const;

 private:
  std::vector<RegressionTree> trees_;
  std::size_t n_features_ = 0;
};

}  // namespace cafda
