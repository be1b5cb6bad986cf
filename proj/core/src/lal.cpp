#include "cafda/lal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <tuple>

#include "cafda/rng.hpp"

namespace cafda {

LalGeneratorConfig::LalGeneratorConfig() {
  inner.kind = EstimatorKind::random_forest;
  inner.forest.n_trees = 20;
  inner.forest.min_leaf = 3;
  inner.probability = ForestProbability::leaf_mean;
  regressor.n_trees = 50;
  regressor.min_leaf = 5;
  regressor.features_per_split = FeaturesPerSplit::fixed;
  regressor.fixed_features = 3;
}

FeatureMatrix lal_features(const PoolState& pool, const FeatureMatrix& features,
                           const ProbabilityScores& scores) {
  const std::size_t n = scores.row_ids.size();
  FeatureMatrix out(n, kLalFeatureCount);
  if (n == 0) return out;

  const auto labeled = pool.labeled();
  const auto labels = pool.labeled_labels();
  const double n_labeled = static_cast<double>(labeled.size());
  const double pos_fraction = labeled.empty() ? 0.0 : static_cast<double>(pool.labeled_positives()) / n_labeled;
  const double mean_p1 = std::accumulate(scores.p1.begin(), scores.p1.end(), 0.0) / static_cast<double>(n);
  const double mean_disp =
      std::accumulate(scores.dispersion.begin(), scores.dispersion.end(), 0.0) / static_cast<double>(n);

  std::vector<RowId> positives;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (labels[i]) positives.push_back(labeled[i]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(scores.row_ids[i]);
    // -1 when no positive has been labeled yet.
    double nearest = -1.0;
    if (!positives.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (RowId p : positives) {
        const auto y = features.row(p);
        double d2 = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) d2 += (x[j] - y[j]) * (x[j] - y[j]);
        best = std::min(best, d2);
      }
      nearest = std::sqrt(best);
    }
    auto row = out.row(i);
    row[0] = n_labeled;
    row[1] = pos_fraction;
    row[2] = mean_p1;
    row[3] = mean_disp;
    row[4] = scores.p1[i];
    row[5] = scores.dispersion[i];
    row[6] = nearest;
  }
  return out;
}

namespace {

double validation_loss(const FeatureMatrix& features, std::span<const Label> labels,
                       std::span<const RowId> labeled, std::span<const RowId> validation,
                       const EstimatorConfig& inner) {
  std::vector<Label> y;
  y.reserve(labeled.size());
  for (RowId r : labeled) y.push_back(labels[r]);
  const auto est = fit_rows(features, labeled, y, inner);
  const auto scores = predict_scores(est, features, validation);
  std::vector<Label> yv;
  yv.reserve(validation.size());
  for (RowId r : validation) yv.push_back(labels[r]);
  return mean_cross_entropy(scores.p1, yv);
}

struct SimTask {
  Dataset data;
  std::vector<RowId> validation;
  std::vector<RowId> pool;  // candidate rows (not validation)
};

SimTask make_task(const LalGeneratorConfig& config, Rng& rng) {
  SyntheticTaskConfig tc;
  tc.n_samples = config.task_size;
  tc.dimension = config.dimension;
  tc.positive_fraction = config.min_positive_fraction +
                         (config.max_positive_fraction - config.min_positive_fraction) * rng.uniform();
  tc.n_clusters = 1 + static_cast<std::size_t>(rng.index(3));
  tc.cluster_radius = 1.5 + 2.0 * rng.uniform();
  tc.cluster_spread = 0.3 + 0.7 * rng.uniform();
  tc.seed = rng.next();

  SimTask task{make_synthetic(tc), {}, {}};
  const auto positives = task.data.labels.count_positive();
  if (positives < 2 || positives + 2 > task.data.labels.size()) {
    throw DataError("LAL generator: synthetic task is degenerate (needs both classes)");
  }
  std::vector<RowId> order(config.task_size);
  std::iota(order.begin(), order.end(), RowId{0});
  rng.shuffle(std::span<RowId>(order));
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.validation_fraction * static_cast<double>(config.task_size)));
  task.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  task.pool.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(task.validation.begin(), task.validation.end());
  return task;
}

// Random labeled subset of the task pool containing both classes.
std::vector<RowId> initial_labeled(const SimTask& task, const LalGeneratorConfig& config, Rng& rng) {
  const auto lo = std::min(config.min_initial_labeled, task.pool.size() - 1);
  const auto hi = std::clamp(config.max_initial_labeled, lo, task.pool.size() - 1);
  const auto labels = task.data.labels.raw();
  std::vector<RowId> order = task.pool;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const std::size_t m = std::max<std::size_t>(2, lo + static_cast<std::size_t>(rng.index(hi - lo + 1)));
    rng.shuffle(std::span<RowId>(order));
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m; ++i) pos += labels[order[i]];
    if (pos > 0 && pos < m) return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m)};
  }
  throw DataError("LAL generator: could not draw a two-class labeled subset");
}

PoolState task_pool(const SimTask& task, std::span<const RowId> labeled) {
  std::vector<char> is_labeled(task.data.labels.size(), 0);
  for (RowId r : labeled) is_labeled[r] = 1;
  std::vector<RowId> unlabeled;
  for (RowId r : task.pool) {
    if (!is_labeled[r]) unlabeled.push_back(r);
  }
  std::vector<std::pair<RowId, Label>> lab;
  for (RowId r : labeled) lab.emplace_back(r, task.data.labels.at(r));
  return PoolState::from_partition(task.data.labels.size(), std::move(unlabeled), std::move(lab));
}

// Appends `candidates_per_state` (features, improvement) rows measured at
// the state described by `labeled`.
void record_state(const SimTask& task, std::span<const RowId> labeled, const LalGeneratorConfig& config,
                  Rng& rng, LalTrainingSet& out) {
  const auto pool = task_pool(task, labeled);
  if (pool.unlabeled().empty()) return;
  const auto labels = task.data.labels.raw();
  std::vector<Label> y;
  for (RowId r : labeled) y.push_back(labels[r]);
  const auto est = fit_rows(task.data.features, labeled, y, config.inner);
  const auto scores = predict_scores(est, task.data.features, pool.unlabeled());
  const auto feats = lal_features(pool, task.data.features, scores);
  const double before = mean_cross_entropy(predict_scores(est, task.data.features, task.validation).p1,
                                           [&] {
                                             std::vector<Label> yv;
                                             for (RowId r : task.validation) yv.push_back(labels[r]);
                                             return yv;
                                           }());

  std::vector<RowId> extended(labeled.begin(), labeled.end());
  extended.push_back(0);
  for (std::size_t c = 0; c < config.candidates_per_state; ++c) {
    const auto j = static_cast<std::size_t>(rng.index(scores.row_ids.size()));
    extended.back() = scores.row_ids[j];
    const double after = validation_loss(task.data.features, labels, extended, task.validation, config.inner);
    const double gain = before - after;
    if (!std::isfinite(gain)) continue;
    out.x.append_row(feats.row(j));
    out.improvement.push_back(gain);
  }
}

}  // namespace

double loss_improvement(const FeatureMatrix& features, std::span<const Label> labels,
                        std::span<const RowId> labeled, std::span<const RowId> validation,
                        RowId candidate, const EstimatorConfig& inner) {
  const double before = validation_loss(features, labels, labeled, validation, inner);
  std::vector<RowId> extended(labeled.begin(), labeled.end());
  extended.push_back(candidate);
  const double after = validation_loss(features, labels, extended, validation, inner);
  return before - after;
}

LalTrainingSet build_lal_training_set(LalMode mode, const LalGeneratorConfig& config, std::uint64_t seed) {
  if (config.simulations == 0 || config.candidates_per_state == 0) {
    throw ConfigError("LAL generator: simulation budget is zero");
  }
  if (!(config.min_positive_fraction > 0.0) || config.max_positive_fraction < config.min_positive_fraction ||
      config.max_positive_fraction >= 1.0) {
    throw DataError("LAL generator: positive fraction range yields single-class tasks");
  }
  Rng rng(derive_seed(seed, mode == LalMode::independent ? "lal_independent" : "lal_iterative"));
  LalTrainingSet out;
  out.x = FeatureMatrix(0, kLalFeatureCount);

  if (mode == LalMode::independent) {
    for (std::size_t s = 0; s < config.simulations; ++s) {
      const auto task = make_task(config, rng);
      const auto labeled = initial_labeled(task, config, rng);
      record_state(task, labeled, config, rng, out);
    }
    return out;
  }

  // Iterative: round 0 is independent; later rounds grow each simulated
  // labeled set with the regressor trained so far and record at every
  // state it visits, so training states resemble deployment states.
  const std::size_t rounds = std::max<std::size_t>(1, config.iterative_rounds);
  const std::size_t per_round = std::max<std::size_t>(1, config.simulations / rounds);
  for (std::size_t s = 0; s < per_round; ++s) {
    const auto task = make_task(config, rng);
    record_state(task, initial_labeled(task, config, rng), config, rng, out);
  }
  for (std::size_t round = 1; round < rounds; ++round) {
    const auto regressor = LalRegressor::fit(out, config.regressor, derive_seed(seed, round));
    for (std::size_t s = 0; s < per_round; ++s) {
      const auto task = make_task(config, rng);
      auto labeled = initial_labeled(task, config, rng);
      const auto labels = task.data.labels.raw();
      for (std::size_t g = 0; g < config.growth_steps; ++g) {
        record_state(task, labeled, config, rng, out);
        const auto pool = task_pool(task, labeled);
        if (pool.unlabeled().empty()) break;
        std::vector<Label> y;
        for (RowId r : labeled) y.push_back(labels[r]);
        const auto est = fit_rows(task.data.features, labeled, y, config.inner);
        const auto scores = predict_scores(est, task.data.features, pool.unlabeled());
        const auto predicted = regressor.predict(lal_features(pool, task.data.features, scores));
        labeled.push_back(scores.row_ids[argmax_first(predicted)]);
      }
    }
  }
  return out;
}

LalRegressor LalRegressor::fit(const LalTrainingSet& data, const ForestParams& params, std::uint64_t seed) {
  if (data.size() == 0) throw StateError("LAL regressor: empty training set");
  return LalRegressor(Forest::fit(data.x, data.improvement, params, seed));
}

std::vector<double> LalRegressor::predict(const FeatureMatrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = forest_.predict_mean(rows.row(i));
  return out;
}

AdviceVector advise_lal(const LalScorer& scorer, const PoolState& pool, const FeatureMatrix& features,
                        const ProbabilityScores& scores) {
  if (!scorer) throw StateError("LAL strategy has no regressor");
  if (scores.row_ids.empty()) throw StateError("strategy asked to advise on an empty pool");
  const auto feats = lal_features(pool, features, scores);
  std::vector<double> predicted(feats.rows());
  for (std::size_t i = 0; i < feats.rows(); ++i) predicted[i] = scorer(feats.row(i));
  return AdviceVector::one_hot(scores.row_ids, argmax_first(predicted));
}

LalStrategy::LalStrategy(LalMode mode, std::shared_ptr<const LalRegressor> regressor)
    : Strategy(mode == LalMode::independent ? StrategyKind::lal_independent : StrategyKind::lal_iterative),
      regressor_(std::move(regressor)) {
  if (!regressor_) throw StateError("LAL strategy has no regressor");
}

AdviceVector LalStrategy::advise(StrategyContext& ctx) {
  const auto& scores = ctx.estimators.unlabeled_scores(ctx.pool);
  const auto* reg = regressor_.get();
  return advise_lal([reg](std::span<const double> row) { return reg->predict(row); }, ctx.pool, ctx.features,
                    scores);
}

std::shared_ptr<const LalRegressor> cached_lal_regressor(LalMode mode, const LalGeneratorConfig& config,
                                                         std::uint64_t seed) {
  struct Entry {
    LalMode mode;
    LalGeneratorConfig config;
    std::uint64_t seed;
    std::shared_ptr<const LalRegressor> regressor;
  };
  static std::mutex mutex;
  static std::vector<Entry> cache;

  std::lock_guard lock(mutex);
  for (const auto& e : cache) {
    if (e.mode == mode && e.seed == seed && e.config == config) return e.regressor;
  }
  const auto data = build_lal_training_set(mode, config, seed);
  auto regressor = std::make_shared<const LalRegressor>(
      LalRegressor::fit(data, config.regressor, derive_seed(seed, "lal_regressor")));
  cache.push_back({mode, config, seed, regressor});
  return regressor;
}

}  // namespace cafda
