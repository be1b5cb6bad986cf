#include "cafda/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cafda/rng.hpp"

namespace cafda {

FittedEstimator::FittedEstimator(EstimatorConfig config, Forest forest, std::size_t trained_on_step)
    : config_(std::move(config)),
      n_features_(forest.n_features()),
      trained_on_step_(trained_on_step) {
  model_ = std::move(forest);
}

FittedEstimator::FittedEstimator(EstimatorConfig config, LogisticModel model, std::size_t n_features,
                                 std::size_t trained_on_step)
    : config_(std::move(config)),
      model_(std::move(model)),
      n_features_(n_features),
      trained_on_step_(trained_on_step) {}

std::pair<double, double> FittedEstimator::score(std::span<const double> row,
                                                 std::vector<double>& scratch) const {
  if (row.size() != n_features_) throw DataError("estimator: feature dimension mismatch");
  if (const auto* lr = logistic()) return {lr->predict(row), 0.0};

  const auto& f = std::get<Forest>(model_);
  scratch.resize(f.size());
  f.tree_outputs(row, scratch);
  const auto n = static_cast<double>(f.size());
  if (config_.probability == ForestProbability::votes) {
    std::size_t votes = 0;
    for (double v : scratch) votes += v > 0.5 ? 1 : 0;
    const double p = static_cast<double>(votes) / n;
    return {p, p * (1.0 - p)};
  }
  double mean = 0.0;
  for (double v : scratch) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : scratch) var += (v - mean) * (v - mean);
  return {std::clamp(mean, 0.0, 1.0), var / n};
}

double FittedEstimator::p1(std::span<const double> row) const {
  std::vector<double> scratch;
  return score(row, scratch).first;
}

std::vector<int> FittedEstimator::tree_votes(std::span<const double> row) const {
  const auto* f = forest();
  if (!f) throw StateError("tree_votes: estimator is not a forest");
  if (row.size() != n_features_) throw DataError("estimator: feature dimension mismatch");
  std::vector<double> out(f->size());
  f->tree_outputs(row, out);
  std::vector<int> votes(out.size());
  std::transform(out.begin(), out.end(), votes.begin(), [](double v) { return v > 0.5 ? 1 : 0; });
  return votes;
}

FittedEstimator fit_rows(const FeatureMatrix& features, std::span<const RowId> rows,
                         std::span<const Label> labels, const EstimatorConfig& config, std::size_t step) {
  if (rows.size() != labels.size()) throw DataError("fit: rows and labels differ in length");
  std::size_t pos = 0;
  for (Label y : labels) pos += y;
  if (pos == 0 || pos == labels.size()) throw StateError("fit: labeled pool contains a single class");

  const FeatureMatrix x = features.select(rows);
  std::vector<double> y(labels.begin(), labels.end());
  if (config.kind == EstimatorKind::logistic) {
    return FittedEstimator(config, LogisticModel::fit(x, y, config.logistic), features.cols(), step);
  }
  return FittedEstimator(config, Forest::fit(x, y, config.forest, config.seed), step);
}

FittedEstimator fit(const PoolState& pool, const FeatureMatrix& features, const EstimatorConfig& config) {
  return fit_rows(features, pool.labeled(), pool.labeled_labels(), config, pool.step());
}

ProbabilityScores predict_scores(const FittedEstimator& estimator, const FeatureMatrix& features,
                                 std::span<const RowId> rows) {
  if (features.cols() != estimator.n_features()) throw DataError("estimator: feature dimension mismatch");
  ProbabilityScores out;
  out.row_ids.assign(rows.begin(), rows.end());
  out.p1.resize(rows.size());
  out.dispersion.resize(rows.size());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [p, d] = estimator.score(features.row(rows[i]), scratch);
    out.p1[i] = p;
    out.dispersion[i] = d;
  }
  return out;
}

double mean_cross_entropy(std::span<const double> p1, std::span<const Label> labels) {
  constexpr double eps = 1e-6;
  double total = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double p = std::clamp(p1[i], eps, 1.0 - eps);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return p1.empty() ? 0.0 : total / static_cast<double>(p1.size());
}

CvResult cv_select(const PoolState& pool, const FeatureMatrix& features,
                   std::span<const EstimatorConfig> grid, std::size_t k_folds, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("cv_select: empty grid");
  if (k_folds < 2) throw ConfigError("cv_select: k_folds must be at least 2");

  CvResult result;
  result.config = grid.front();
  if (grid.size() == 1) return result;

  std::vector<RowId> pos, neg;
  const auto ids = pool.labeled();
  const auto ys = pool.labeled_labels();
  for (std::size_t i = 0; i < ids.size(); ++i) (ys[i] ? pos : neg).push_back(ids[i]);
  if (pos.size() < k_folds || neg.size() < k_folds) {
    result.fallback = true;
    return result;
  }

  Rng rng(derive_seed(seed, "cv_folds"));
  rng.shuffle(std::span<RowId>(pos));
  rng.shuffle(std::span<RowId>(neg));
  std::vector<std::vector<std::pair<RowId, Label>>> folds(k_folds);
  for (std::size_t i = 0; i < pos.size(); ++i) folds[i % k_folds].emplace_back(pos[i], 1);
  for (std::size_t i = 0; i < neg.size(); ++i) folds[i % k_folds].emplace_back(neg[i], 0);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (std::size_t k = 0; k < k_folds; ++k) {
      std::vector<RowId> train_rows, test_rows;
      std::vector<Label> train_labels, test_labels;
      for (std::size_t j = 0; j < k_folds; ++j) {
        for (auto [r, y] : folds[j]) {
          (j == k ? test_rows : train_rows).push_back(r);
          (j == k ? test_labels : train_labels).push_back(y);
        }
      }
      const auto est = fit_rows(features, train_rows, train_labels, grid[g]);
      const auto scores = predict_scores(est, features, test_rows);
      total += mean_cross_entropy(scores.p1, test_labels);
    }
    const double mean = total / static_cast<double>(k_folds);
    result.mean_loss.push_back(mean);
    if (mean < best) {
      best = mean;
      result.index = g;
      result.config = grid[g];
    }
  }
  return result;
}

std::vector<EstimatorConfig> default_cv_grid(const EstimatorConfig& base) {
  std::vector<EstimatorConfig> grid;
  for (std::size_t trees : {50, 100}) {
    for (std::size_t leaf : {1, 5}) {
      EstimatorConfig c = base;
      c.kind = EstimatorKind::random_forest;
      c.forest.n_trees = trees;
      c.forest.min_leaf = leaf;
      grid.push_back(c);
    }
  }
  return grid;
}

std::uint64_t pool_fingerprint(const PoolState& pool) {
  std::uint64_t h = mix_seed(pool.step());
  const auto ids = pool.labeled();
  const auto ys = pool.labeled_labels();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    h = mix_seed(h ^ (static_cast<std::uint64_t>(ids[i]) << 1 | ys[i]));
  }
  return mix_seed(h ^ pool.unlabeled().size());
}

std::shared_ptr<const FittedEstimator> EstimatorProvider::current(const PoolState& pool) {
  const auto key = pool_fingerprint(pool);
  if (!fitted_ || fitted_key_ != key) {
    fitted_ = std::make_shared<const FittedEstimator>(fit(pool, *features_, config_));
    fitted_key_ = key;
    ++fit_count_;
  }
  return fitted_;
}

const ProbabilityScores& EstimatorProvider::unlabeled_scores(const PoolState& pool) {
  const auto key = pool_fingerprint(pool);
  if (scored_key_ != key) {
    scores_ = predict_scores(*current(pool), *features_, pool.unlabeled());
    scored_key_ = key;
  }
  return scores_;
}

void EstimatorProvider::set_config(EstimatorConfig config) {
  config_ = std::move(config);
  fitted_.reset();
  fitted_key_.reset();
  scored_key_.reset();
}

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::logistic ? "logistic" : "random_forest";
}

std::string to_string(ForestProbability mode) {
  return mode == ForestProbability::votes ? "votes" : "leaf_mean";
}

std::string to_string(FeaturesPerSplit rule) {
  switch (rule) {
    case FeaturesPerSplit::sqrt: return "sqrt";
    case FeaturesPerSplit::log2: return "log2";
    case FeaturesPerSplit::all: return "all";
    case FeaturesPerSplit::fixed: return "fixed";
  }
  return "sqrt";
}

}  // namespace cafda
