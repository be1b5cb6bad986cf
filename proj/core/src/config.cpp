#include "cafda/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cafda/csv.hpp"

namespace cafda {
namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "' (expected " +
                    std::string(expected) + ")");
}

std::size_t to_count(std::string_view key, std::string_view value) {
  value = csv::trim(value);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "non-negative integer");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  value = csv::trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "non-negative integer");
  return out;
}

double to_real(std::string_view key, std::string_view value) {
  const auto v = csv::parse_double(value);
  if (!v) bad_value(key, value, "number");
  return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
  value = csv::trim(value);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true/false");
}

std::vector<std::string> to_list(std::string_view value) {
  std::vector<std::string> out;
  for (const auto& item : csv::split_line(value)) {
    const auto t = csv::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

std::vector<StrategyKind> to_kinds(std::string_view key, std::string_view value) {
  std::vector<StrategyKind> kinds;
  for (const auto& name : to_list(value)) {
    const auto k = parse_strategy_kind(name);
    if (!k) bad_value(key, name, "strategy name");
    kinds.push_back(*k);
  }
  return kinds;
}

std::string kinds_text(const std::vector<StrategyKind>& kinds) {
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(to_string(k));
  return join(names);
}

std::string num(double v) { return csv::format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(std::uint64_t v, int) { return std::to_string(v); }

struct Setting {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool run_level = true;
};

using Registry = std::vector<std::pair<std::string, Setting>>;

const Registry& registry() {
  static const Registry reg = [] {
    Registry r;
    auto add = [&r](std::string key, auto set, auto get, bool run_level = true) {
      r.emplace_back(std::move(key), Setting{set, get, run_level});
    };
    using E = ExperimentConfig;
    using K = std::string_view;

    add("dataset.path", [](E& c, K, K v) { c.run.dataset_path = std::string(csv::trim(v)); },
        [](const E& c) { return c.run.dataset_path; });
    add("dataset.label_column", [](E& c, K, K v) { c.run.label_column = std::string(csv::trim(v)); },
        [](const E& c) { return c.run.label_column; });

    add("split.init_fraction", [](E& c, K k, K v) { c.run.split.init_fraction = to_real(k, v); },
        [](const E& c) { return num(c.run.split.init_fraction); });
    add("split.subsample_size",
        [](E& c, K k, K v) {
          const auto n = to_count(k, v);
          c.run.split.subsample_size = n ? std::optional<std::size_t>(n) : std::nullopt;
        },
        [](const E& c) { return num(c.run.split.subsample_size.value_or(0)); });
    add("split.seed", [](E& c, K k, K v) { c.run.split.seed = to_u64(k, v); },
        [](const E& c) { return num(c.run.split.seed, 0); });
    add("split.min_positives", [](E& c, K k, K v) { c.run.split.min_positives = to_count(k, v); },
        [](const E& c) { return num(c.run.split.min_positives); });
    add("split.min_negatives", [](E& c, K k, K v) { c.run.split.min_negatives = to_count(k, v); },
        [](const E& c) { return num(c.run.split.min_negatives); });
    add("split.max_retries", [](E& c, K k, K v) { c.run.split.max_retries = to_count(k, v); },
        [](const E& c) { return num(c.run.split.max_retries); });

    add("estimator.kind",
        [](E& c, K k, K v) {
          v = csv::trim(v);
          if (v == "random_forest") c.run.estimator.kind = EstimatorKind::random_forest;
          else if (v == "logistic") c.run.estimator.kind = EstimatorKind::logistic;
          else bad_value(k, v, "random_forest|logistic");
        },
        [](const E& c) { return to_string(c.run.estimator.kind); });
    add("estimator.n_trees", [](E& c, K k, K v) { c.run.estimator.forest.n_trees = to_count(k, v); },
        [](const E& c) { return num(c.run.estimator.forest.n_trees); });
    add("estimator.max_depth",
        [](E& c, K k, K v) {
          const auto n = to_count(k, v);
          c.run.estimator.forest.max_depth = n ? std::optional<std::size_t>(n) : std::nullopt;
        },
        [](const E& c) { return num(c.run.estimator.forest.max_depth.value_or(0)); });
    add("estimator.min_leaf", [](E& c, K k, K v) { c.run.estimator.forest.min_leaf = to_count(k, v); },
        [](const E& c) { return num(c.run.estimator.forest.min_leaf); });
    add("estimator.features_per_split",
        [](E& c, K k, K v) {
          v = csv::trim(v);
          auto& f = c.run.estimator.forest;
          if (v == "sqrt") f.features_per_split = FeaturesPerSplit::sqrt;
          else if (v == "log2") f.features_per_split = FeaturesPerSplit::log2;
          else if (v == "all") f.features_per_split = FeaturesPerSplit::all;
          else {
            f.features_per_split = FeaturesPerSplit::fixed;
            f.fixed_features = to_count(k, v);
            if (f.fixed_features == 0) bad_value(k, v, "sqrt|log2|all|positive integer");
          }
        },
        [](const E& c) {
          const auto& f = c.run.estimator.forest;
          return f.features_per_split == FeaturesPerSplit::fixed ? num(f.fixed_features)
                                                                  : to_string(f.features_per_split);
        });
    add("estimator.bootstrap", [](E& c, K k, K v) { c.run.estimator.forest.bootstrap = to_bool(k, v); },
        [](const E& c) { return std::string(c.run.estimator.forest.bootstrap ? "true" : "false"); });
    add("estimator.threads", [](E& c, K k, K v) { c.run.estimator.forest.n_threads = to_count(k, v); },
        [](const E& c) { return num(c.run.estimator.forest.n_threads); });
    add("estimator.probability",
        [](E& c, K k, K v) {
          v = csv::trim(v);
          if (v == "votes") c.run.estimator.probability = ForestProbability::votes;
          else if (v == "leaf_mean") c.run.estimator.probability = ForestProbability::leaf_mean;
          else bad_value(k, v, "votes|leaf_mean");
        },
        [](const E& c) { return to_string(c.run.estimator.probability); });
    add("estimator.l2_penalty", [](E& c, K k, K v) { c.run.estimator.logistic.l2_penalty = to_real(k, v); },
        [](const E& c) { return num(c.run.estimator.logistic.l2_penalty); });
    add("estimator.max_iterations",
        [](E& c, K k, K v) { c.run.estimator.logistic.max_iterations = to_count(k, v); },
        [](const E& c) { return num(c.run.estimator.logistic.max_iterations); });
    add("estimator.tolerance", [](E& c, K k, K v) { c.run.estimator.logistic.tolerance = to_real(k, v); },
        [](const E& c) { return num(c.run.estimator.logistic.tolerance); });
    add("estimator.seed", [](E& c, K k, K v) { c.run.estimator.seed = to_u64(k, v); },
        [](const E& c) { return num(c.run.estimator.seed, 0); });
    add("estimator.cv", [](E& c, K k, K v) { c.run.cv = to_bool(k, v); },
        [](const E& c) { return std::string(c.run.cv ? "true" : "false"); });
    add("estimator.cv_folds", [](E& c, K k, K v) { c.run.cv_folds = to_count(k, v); },
        [](const E& c) { return num(c.run.cv_folds); });

    add("strategy", [](E& c, K, K v) { c.run.strategy = std::string(csv::trim(v)); },
        [](const E& c) { return c.run.strategy; });
    add("strategies", [](E& c, K, K v) { c.strategies = to_list(v); }, [](const E& c) { return join(c.strategies); },
        false);

    add("cafda.k0", [](E& c, K k, K v) { c.run.cafda.k0 = to_real(k, v); },
        [](const E& c) { return num(c.run.cafda.k0); });
    add("cafda.k1", [](E& c, K k, K v) { c.run.cafda.k1 = to_real(k, v); },
        [](const E& c) { return num(c.run.cafda.k1); });
    add("cafda.p_min", [](E& c, K k, K v) { c.run.cafda.p_min = to_real(k, v); },
        [](const E& c) { return num(c.run.cafda.p_min); });
    add("cafda.p_max", [](E& c, K k, K v) { c.run.cafda.p_max = to_real(k, v); },
        [](const E& c) { return num(c.run.cafda.p_max); });
    add("cafda.experts", [](E& c, K k, K v) { c.run.experts = to_kinds(k, v); },
        [](const E& c) { return kinds_text(c.run.experts); });

    add("albl.arms", [](E& c, K k, K v) { c.run.albl.arms = to_kinds(k, v); },
        [](const E& c) { return kinds_text(c.run.albl.arms); });
    add("albl.delta", [](E& c, K k, K v) { c.run.albl.delta = to_real(k, v); },
        [](const E& c) { return num(c.run.albl.delta); });

    add("lal.seed", [](E& c, K k, K v) { c.run.lal_seed = to_u64(k, v); },
        [](const E& c) { return num(c.run.lal_seed, 0); });
    add("lal.simulations", [](E& c, K k, K v) { c.run.lal.simulations = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.simulations); });
    add("lal.candidates", [](E& c, K k, K v) { c.run.lal.candidates_per_state = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.candidates_per_state); });
    add("lal.task_size", [](E& c, K k, K v) { c.run.lal.task_size = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.task_size); });
    add("lal.dimension", [](E& c, K k, K v) { c.run.lal.dimension = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.dimension); });
    add("lal.min_positive_fraction", [](E& c, K k, K v) { c.run.lal.min_positive_fraction = to_real(k, v); },
        [](const E& c) { return num(c.run.lal.min_positive_fraction); });
    add("lal.max_positive_fraction", [](E& c, K k, K v) { c.run.lal.max_positive_fraction = to_real(k, v); },
        [](const E& c) { return num(c.run.lal.max_positive_fraction); });
    add("lal.min_initial_labeled", [](E& c, K k, K v) { c.run.lal.min_initial_labeled = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.min_initial_labeled); });
    add("lal.max_initial_labeled", [](E& c, K k, K v) { c.run.lal.max_initial_labeled = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.max_initial_labeled); });
    add("lal.validation_fraction", [](E& c, K k, K v) { c.run.lal.validation_fraction = to_real(k, v); },
        [](const E& c) { return num(c.run.lal.validation_fraction); });
    add("lal.iterative_rounds", [](E& c, K k, K v) { c.run.lal.iterative_rounds = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.iterative_rounds); });
    add("lal.growth_steps", [](E& c, K k, K v) { c.run.lal.growth_steps = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.growth_steps); });
    add("lal.inner_trees", [](E& c, K k, K v) { c.run.lal.inner.forest.n_trees = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.inner.forest.n_trees); });
    add("lal.regressor_trees", [](E& c, K k, K v) { c.run.lal.regressor.n_trees = to_count(k, v); },
        [](const E& c) { return num(c.run.lal.regressor.n_trees); });

    add("scenario",
        [](E& c, K k, K v) {
          const auto s = to_count(k, v);
          if (s != 1 && s != 2) bad_value(k, v, "1 or 2");
          c.run.scenario = static_cast<int>(s);
        },
        [](const E& c) { return std::to_string(c.run.scenario); });
    add("horizon", [](E& c, K k, K v) { c.run.horizon = to_count(k, v); },
        [](const E& c) { return num(c.run.horizon); });
    add("switch_step", [](E& c, K k, K v) { c.run.switch_step = to_count(k, v); },
        [](const E& c) { return num(c.run.switch_step); });
    add("post_switch",
        [](E& c, K k, K v) {
          v = csv::trim(v);
          if (v == "frozen") c.run.post_switch = PostSwitchPolicy::frozen;
          else if (v == "refit") c.run.post_switch = PostSwitchPolicy::refit;
          else bad_value(k, v, "frozen|refit");
        },
        [](const E& c) { return std::string(c.run.post_switch == PostSwitchPolicy::frozen ? "frozen" : "refit"); });

    add("reward.kind",
        [](E& c, K k, K v) {
          v = csv::trim(v);
          if (v == "unitary") c.run.reward.kind = RewardKind::unitary;
          else if (v == "monetary") c.run.reward.kind = RewardKind::monetary;
          else bad_value(k, v, "unitary|monetary");
        },
        [](const E& c) { return std::string(c.run.reward.kind == RewardKind::unitary ? "unitary" : "monetary"); });
    add("reward.amount_column", [](E& c, K, K v) { c.run.reward.amount_column = std::string(csv::trim(v)); },
        [](const E& c) { return c.run.reward.amount_column; });

    add("seed", [](E& c, K k, K v) { c.run.seed = to_u64(k, v); }, [](const E& c) { return num(c.run.seed, 0); });
    add("replications", [](E& c, K k, K v) { c.replications = to_count(k, v); },
        [](const E& c) { return num(c.replications); }, false);
    add("output_dir", [](E& c, K, K v) { c.output_dir = std::string(csv::trim(v)); },
        [](const E& c) { return c.output_dir; }, false);
    return r;
  }();
  return reg;
}

const Setting* find_setting(std::string_view key) {
  for (const auto& [k, s] : registry()) {
    if (k == key) return &s;
  }
  return nullptr;
}

}  // namespace

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = csv::trim(key);
  const auto* s = find_setting(key);
  if (!s) throw ConfigError("unknown config key '" + std::string(key) + "'");
  s->set(config, key, value);
}

void apply_config_text(ExperimentConfig& config, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(config, body.substr(0, eq), body.substr(eq + 1));
  }
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config;
  apply_config_text(config, buffer.str());
  return config;
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    apply_setting(config, std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
  }
}

std::string dump_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [k, s] : registry()) out += k + "=" + s.get(config) + "\n";
  return out;
}

std::string dump_run_config(const RunConfig& config) {
  ExperimentConfig wrapper;
  wrapper.run = config;
  std::string out;
  for (const auto& [k, s] : registry()) {
    if (s.run_level) out += k + "=" + s.get(wrapper) + "\n";
  }
  return out;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : registry()) k.push_back(entry.first);
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

void validate(const RunConfig& config) {
  if (config.strategy == kCafdaPolicy) {
    config.cafda.validate();
    if (config.experts.empty()) throw ConfigError("cafda.experts is empty");
  } else if (!parse_strategy_kind(config.strategy)) {
    throw ConfigError("unknown strategy '" + config.strategy + "'");
  }
  if (config.scenario == 2 && config.switch_step >= config.horizon) {
    throw ConfigError("scenario 2 requires switch_step < horizon");
  }
  if (config.scenario != 1 && config.scenario != 2) throw ConfigError("scenario must be 1 or 2");
  if (config.estimator.forest.n_trees == 0) throw ConfigError("estimator.n_trees must be at least 1");
  if (config.estimator.logistic.l2_penalty < 0) throw ConfigError("estimator.l2_penalty must be non-negative");
  if (!(config.split.init_fraction > 0.0 && config.split.init_fraction < 1.0)) {
    throw ConfigError("split.init_fraction must lie in (0,1)");
  }
  if (config.reward.kind == RewardKind::monetary && config.reward.amount_column.empty()) {
    throw ConfigError("reward.kind=monetary needs reward.amount_column");
  }
  if (config.albl.arms.empty()) throw ConfigError("albl.arms is empty");
}

void validate(const ExperimentConfig& config) {
  if (config.strategies.empty()) throw ConfigError("strategies is empty");
  for (const auto& s : config.strategies) {
    RunConfig run = config.run;
    run.strategy = s;
    validate(run);
  }
  if (config.replications == 0) throw ConfigError("replications must be at least 1");
}

}  // namespace cafda
