#pragma once

#include <cstddef>
#include <cstdint>

#include "cafda/datapool.hpp"

namespace cafda {

/// Imbalanced binary task: negatives from a standard normal, positives in
/// tight Gaussian clusters whose centres sit on a shell around the origin.
struct SyntheticTaskConfig {
  std::size_t n_samples = 5000;
  double positive_fraction = 0.05;
  std::size_t dimension = 2;
  std::size_t n_clusters = 4;
  double cluster_radius = 3.0;
  double cluster_spread = 0.35;
  std::uint64_t seed = 0;
};

/// Exactly round(n_samples * positive_fraction) positives, rows shuffled.
Dataset make_synthetic(const SyntheticTaskConfig& config);

}  // namespace cafda
