#include "cafda/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "cafda/rng.hpp"

namespace cafda {

std::size_t ForestParams::features_to_try(std::size_t n_features) const {
  std::size_t k = n_features;
  switch (features_per_split) {
    case FeaturesPerSplit::sqrt:
      k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
      break;
    case FeaturesPerSplit::log2:
      k = static_cast<std::size_t>(std::log2(static_cast<double>(std::max<std::size_t>(n_features, 1))));
      break;
    case FeaturesPerSplit::all:
      k = n_features;
      break;
    case FeaturesPerSplit::fixed:
      k = fixed_features;
      break;
  }
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_features, 1));
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params,
              std::uint64_t seed)
      : x_(x), y_(y), params_(params), rng_(seed), mtry_(params.features_to_try(x.cols())) {
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), 0U);
  }

  RegressionTree build(std::vector<std::uint32_t> sample) {
    sample_ = std::move(sample);
    grow(0, sample_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes_.size());
    tree_.nodes_.emplace_back();

    const std::size_t n = end - begin;
    double sum = 0.0;
    double lo = y_[sample_[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[sample_[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    tree_.nodes_[id].value = sum / static_cast<double>(n);

    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (depth_reached || n < 2 * params_.min_leaf || lo == hi) return id;

    const Split split = best_split(begin, end, sum);
    if (split.feature < 0) return id;

    const auto mid_it = std::partition(
        sample_.begin() + static_cast<std::ptrdiff_t>(begin),
        sample_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t r) { return x_(r, static_cast<std::size_t>(split.feature)) <= split.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - sample_.begin());

    const auto left = grow(begin, mid, depth + 1);
    const auto right = grow(mid, end, depth + 1);
    auto& node = tree_.nodes_[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end, double total) {
    const std::size_t n = end - begin;
    const double parent = total * total / static_cast<double>(n);
    Split best;
    best.score = parent;

    rng_.shuffle(std::span<std::uint32_t>(features_));
    std::size_t visited = 0;
    for (std::uint32_t f : features_) {
      if (visited >= mtry_ && best.feature >= 0) break;
      ++visited;

      pairs_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = sample_[i];
        pairs_.emplace_back(x_(r, f), y_[r]);
      }
      std::sort(pairs_.begin(), pairs_.end());
      if (pairs_.front().first == pairs_.back().first) continue;

      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += pairs_[i].second;
        if (pairs_[i].first == pairs_[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(nl) +
                             right_sum * right_sum / static_cast<double>(nr);
        if (score > best.score + 1e-12 * std::max(1.0, std::abs(parent))) {
          double threshold = 0.5 * (pairs_[i].first + pairs_[i + 1].first);
          if (!(threshold < pairs_[i + 1].first)) threshold = pairs_[i].first;
          best = {static_cast<std::int32_t>(f), threshold, score};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  const ForestParams& params_;
  Rng rng_;
  std::size_t mtry_;
  std::vector<std::uint32_t> features_;
  std::vector<std::uint32_t> sample_;
  std::vector<std::pair<double, double>> pairs_;
  RegressionTree tree_;
};

RegressionTree RegressionTree::constant(double value) {
  RegressionTree t;
  t.nodes_.push_back(Node{-1, 0.0, -1, -1, value});
  return t;
}

RegressionTree RegressionTree::grow(const FeatureMatrix& x, std::span<const double> y,
                                    std::span<const std::uint32_t> sample, const ForestParams& params,
                                    std::uint64_t seed) {
  if (sample.empty()) throw StateError("cannot grow a tree on an empty sample");
  TreeBuilder builder(x, y, params, seed);
  return builder.build({sample.begin(), sample.end()});
}

double RegressionTree::predict(std::span<const double> row) const {
  std::int32_t id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& node = nodes_[id];
    id = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes_[id].feature >= 0) {
      stack.emplace_back(nodes_[id].left, d + 1);
      stack.emplace_back(nodes_[id].right, d + 1);
    }
  }
  return deepest;
}

Forest Forest::fit(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params,
                   std::uint64_t seed) {
  if (params.n_trees == 0) throw ConfigError("forest needs at least one tree");
  if (y.size() != x.rows()) throw DataError("forest fit: target length does not match rows");
  if (x.rows() == 0) throw StateError("forest fit: no training rows");

  std::vector<RegressionTree> trees(params.n_trees);
  auto grow_one = [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(seed, t);
    std::vector<std::uint32_t> sample(x.rows());
    if (params.bootstrap) {
      Rng rng(derive_seed(tree_seed, "bootstrap"));
      for (auto& s : sample) s = static_cast<std::uint32_t>(rng.index(x.rows()));
    } else {
      std::iota(sample.begin(), sample.end(), 0U);
    }
    trees[t] = RegressionTree::grow(x, y, sample, params, derive_seed(tree_seed, "split"));
  };

  const std::size_t workers = std::clamp<std::size_t>(params.n_threads, 1, params.n_trees);
  if (workers == 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) grow_one(t);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.n_trees; t += workers) grow_one(t);
      });
    }
  }
  return Forest(std::move(trees), x.cols());
}

void Forest::tree_outputs(std::span<const double> row, std::span<double> out) const {
  for (std::size_t t = 0; t < trees_.size(); ++t) out[t] = trees_[t].predict(row);
}

double Forest::predict_mean(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(row);
  return sum / static_cast<double>(trees_.size());
}

}  // namespace cafda
