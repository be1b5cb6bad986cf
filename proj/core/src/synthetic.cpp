#include "cafda/synthetic.hpp"

#include <cmath>
#include <numeric>

#include "cafda/rng.hpp"

namespace cafda {

Dataset make_synthetic(const SyntheticTaskConfig& config) {
  if (config.n_samples == 0 || config.dimension == 0) throw ConfigError("synthetic task: empty shape");
  if (!(config.positive_fraction >= 0.0 && config.positive_fraction <= 1.0)) {
    throw ConfigError("synthetic task: positive_fraction must lie in [0,1]");
  }
  Rng rng(derive_seed(config.seed, "synthetic"));
  const std::size_t d = config.dimension;
  const auto n_pos = static_cast<std::size_t>(
      std::llround(config.positive_fraction * static_cast<double>(config.n_samples)));
  const std::size_t clusters = std::max<std::size_t>(1, config.n_clusters);

  // Cluster centres: random directions scaled to the shell radius.
  std::vector<std::vector<double>> centres(clusters, std::vector<double>(d));
  for (auto& c : centres) {
    double norm = 0.0;
    for (auto& v : c) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : c) v = v / norm * config.cluster_radius;
  }

  std::vector<double> values(config.n_samples * d);
  std::vector<Label> labels(config.n_samples, 0);
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    if (i < n_pos) {
      const auto& c = centres[i % clusters];
      for (std::size_t j = 0; j < d; ++j) values[i * d + j] = c[j] + config.cluster_spread * rng.normal();
      labels[i] = 1;
    } else {
      for (std::size_t j = 0; j < d; ++j) values[i * d + j] = rng.normal();
    }
  }

  std::vector<std::size_t> perm(config.n_samples);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<double> shuffled(values.size());
  std::vector<Label> shuffled_labels(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(perm[i] * d), d,
                shuffled.begin() + static_cast<std::ptrdiff_t>(i * d));
    shuffled_labels[i] = labels[perm[i]];
  }

  Dataset data;
  data.name = "synthetic";
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("x" + std::to_string(j));
  data.features = FeatureMatrix(config.n_samples, d, std::move(shuffled));
  data.labels = HiddenLabels(std::move(shuffled_labels));
  return data;
}

}  // namespace cafda
