#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cafda/harness.hpp"

namespace cafda {

/// Everything a `run` invocation needs: the per-run settings plus the
/// roster of policies and the number of seeded replications.
struct ExperimentConfig {
  RunConfig run;
  std::vector<std::string> strategies{"base",  "base_refit",      "random",        "us",
                                      "lal_independent", "lal_iterative", "albl", "cafda"};
  std::size_t replications = 10;
  std::string output_dir;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Sets one dotted key. Throws ConfigError naming the key when it is
/// unknown or the value does not parse.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
/// Later lines override earlier ones.
void apply_config_text(ExperimentConfig& config, std::string_view text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Applies `key=value` strings (command-line overrides).
void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides);

/// Every key with its effective value, one per line, in a fixed order.
/// Parsing the dump yields an identical configuration.
std::string dump_config(const ExperimentConfig& config);
std::string dump_run_config(const RunConfig& config);

/// Sorted list of accepted keys.
const std::vector<std::string>& known_config_keys();

/// Throws ConfigError on values that are individually valid but
/// inconsistent (unknown strategy names, switch_step >= horizon, ...).
void validate(const ExperimentConfig& config);
void validate(const RunConfig& config);

}  // namespace cafda
