#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "cafda/harness.hpp"
#include "cafda/synthetic.hpp"

namespace cafda::testing {

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cafda_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::shared_ptr<const Dataset> synthetic(std::size_t n, double fraction, std::uint64_t seed,
                                                std::size_t dimension = 2) {
  SyntheticTaskConfig c;
  c.n_samples = n;
  c.positive_fraction = fraction;
  c.dimension = dimension;
  c.seed = seed;
  return std::make_shared<const Dataset>(make_synthetic(c));
}

/// Small, fast settings for runs inside unit tests.
inline RunConfig fast_run_config(std::string strategy, std::size_t horizon, std::uint64_t seed = 1) {
  RunConfig c;
  c.strategy = std::move(strategy);
  c.horizon = horizon;
  c.switch_step = horizon / 2;
  c.seed = seed;
  c.split.init_fraction = 0.05;
  c.estimator.forest.n_trees = 15;
  c.lal.simulations = 6;
  c.lal.candidates_per_state = 4;
  c.lal.task_size = 150;
  c.lal.iterative_rounds = 2;
  c.lal.growth_steps = 3;
  c.lal.inner.forest.n_trees = 8;
  c.lal.regressor.n_trees = 10;
  return c;
}

}  // namespace cafda::testing
