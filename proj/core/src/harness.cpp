#include "cafda/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "cafda/config.hpp"
#include "cafda/csv.hpp"

namespace cafda {
namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

double compute_reward(Label label, const RewardSpec& spec, const Dataset& data, RowId row) {
  if (label > 1) throw DataError("label outside {0,1}");
  if (spec.kind == RewardKind::unitary) return label == 1 ? 1.0 : 0.0;

  const auto column = data.feature_index(spec.amount_column);
  if (!column) throw ConfigError("monetary reward: amount column '" + spec.amount_column + "' not in dataset");
  if (label != 1) return 0.0;
  const double amount = data.features(row, *column);
  if (amount < 0.0) throw DataError("monetary reward: negative amount on row " + std::to_string(row));
  return amount;
}

SplitConfig effective_split_config(const RunConfig& config) {
  SplitConfig split = config.split;
  split.seed = derive_seed(config.seed, config.split.seed);
  return split;
}

EstimatorConfig effective_estimator_config(const RunConfig& config) {
  EstimatorConfig est = config.estimator;
  est.seed = derive_seed(config.seed ^ 0x5eedULL, config.estimator.seed);
  return est;
}

std::string step_to_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["strategy"] = r.strategy;
  j["row_id"] = r.row_id;
  j["label"] = static_cast<int>(r.label);
  j["reward"] = r.reward;
  j["cum_reward"] = r.cum_reward;
  // A single-expert mixture always has weight [1]; it carries no information.
  if (r.weights.size() >= 2) j["weights"] = r.weights;
  return j.dump();
}

std::string step_log_jsonl(std::span<const StepRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += step_to_json(r);
    out += '\n';
  }
  return out;
}

StepRecord step_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  StepRecord r;
  r.t = j.at("t").get<std::size_t>();
  r.strategy = j.at("strategy").get<std::string>();
  r.row_id = j.at("row_id").get<RowId>();
  r.label = static_cast<Label>(j.at("label").get<int>());
  r.reward = j.at("reward").get<double>();
  r.cum_reward = j.at("cum_reward").get<double>();
  if (j.contains("weights")) r.weights = j.at("weights").get<std::vector<double>>();
  return r;
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const RunConfig& config) {
  switch (kind) {
    case StrategyKind::base: return std::make_unique<BaseStrategy>();
    case StrategyKind::base_refit: return std::make_unique<BaseRefitStrategy>();
    case StrategyKind::random: return std::make_unique<RandomStrategy>();
    case StrategyKind::uncertainty: return std::make_unique<UncertaintyStrategy>();
    case StrategyKind::lal_independent:
      return std::make_unique<LalStrategy>(LalMode::independent,
                                           cached_lal_regressor(LalMode::independent, config.lal, config.lal_seed));
    case StrategyKind::lal_iterative:
      return std::make_unique<LalStrategy>(LalMode::iterative,
                                           cached_lal_regressor(LalMode::iterative, config.lal, config.lal_seed));
    case StrategyKind::albl: {
      AlblConfig albl = config.albl;
      albl.horizon = config.horizon;
      return std::make_unique<AlblStrategy>(albl);
    }
  }
  throw ConfigError("unknown strategy kind");
}

RunEngine::RunEngine(std::shared_ptr<const Dataset> data, RunConfig config)
    : data_(std::move(data)),
      config_(std::move(config)),
      estimators_(data_->features, effective_estimator_config(config_)),
      query_rng_(derive_seed(config_.seed, "query")) {
  validate(config_);
  pool_ = initial_split(data_->labels, effective_split_config(config_));
  setup();
}

RunEngine::RunEngine(std::shared_ptr<const Dataset> data, RunConfig config, PoolState initial)
    : data_(std::move(data)),
      config_(std::move(config)),
      pool_(std::move(initial)),
      estimators_(data_->features, effective_estimator_config(config_)),
      query_rng_(derive_seed(config_.seed, "query")) {
  validate(config_);
  if (pool_.total_rows() != data_->labels.size()) throw StateError("pool does not match dataset size");
  setup();
}

RunEngine::~RunEngine() = default;

void RunEngine::setup() {
  started_ = now_seconds();
  initial_unlabeled_ = pool_.unlabeled().size();
  if (config_.reward.kind == RewardKind::monetary && !data_->feature_index(config_.reward.amount_column)) {
    throw ConfigError("monetary reward: amount column '" + config_.reward.amount_column + "' not in dataset");
  }

  if (config_.cv) {
    const auto grid = default_cv_grid(estimators_.config());
    cv_ = cv_select(pool_, data_->features, grid, config_.cv_folds, estimators_.config().seed);
    estimators_.set_config(cv_->config);
  }

  StrategyContext ctx{data_->features, pool_, estimators_};
  if (config_.strategy == kCafdaPolicy) {
    std::vector<std::unique_ptr<Strategy>> experts;
    for (auto kind : config_.experts) experts.push_back(make_strategy(kind, config_));
    mixer_ = std::make_unique<CafdaMixer>(std::move(experts), config_.cafda, config_.seed);
    mixer_->initialize(ctx);
  } else {
    solo_ = make_strategy(*parse_strategy_kind(config_.strategy), config_);
    solo_->initialize(ctx);
  }
}

bool RunEngine::finished() const noexcept {
  return records_.size() >= config_.horizon || pool_.unlabeled().empty();
}

bool RunEngine::truncated() const noexcept {
  return records_.size() < config_.horizon && pool_.unlabeled().empty();
}

bool RunEngine::exploiting() const noexcept {
  return config_.scenario == 2 && records_.size() >= config_.switch_step;
}

void RunEngine::enter_exploitation(StrategyContext& ctx) {
  const bool keeps_initial_fit = solo_ && solo_->kind() == StrategyKind::base;
  if (keeps_initial_fit) {
    switch_estimator_ = solo_->estimator(ctx);
  } else if (config_.post_switch == PostSwitchPolicy::frozen) {
    switch_estimator_ = estimators_.current(pool_);
  } else {
    switch_estimator_ = estimators_.current(pool_);
    return;  // refit mode scores the live pool every step
  }
  const auto scores = predict_scores(*switch_estimator_, data_->features, pool_.unlabeled());
  switch_p1_by_row_.assign(pool_.total_rows(), 0.0);
  for (std::size_t i = 0; i < scores.row_ids.size(); ++i) switch_p1_by_row_[scores.row_ids[i]] = scores.p1[i];
}

const RunEngine::Proposal& RunEngine::propose() {
  if (pending_) return *pending_;
  if (finished()) throw StateError("run is finished; no further queries");

  StrategyContext ctx{data_->features, pool_, estimators_};
  Proposal p;
  p.t = records_.size() + 1;

  if (exploiting()) {
    const bool refit = config_.post_switch == PostSwitchPolicy::refit &&
                       !(solo_ && solo_->kind() == StrategyKind::base);
    if (!switch_estimator_ || refit) enter_exploitation(ctx);
    const auto rows = pool_.unlabeled();
    std::size_t best = 0;
    if (refit) {
      best = argmax_first(estimators_.unlabeled_scores(pool_).p1);
    } else {
      std::vector<double> p1(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) p1[i] = switch_p1_by_row_[rows[i]];
      best = argmax_first(p1);
    }
    p.row_id = rows[best];
    p.strategy_index = -1;
    p.strategy = "exploit";
  } else {
    AdviceVector advice;
    if (mixer_) {
      auto choice = mixer_->choose(ctx);
      p.strategy_index = static_cast<int>(choice.expert);
      p.strategy = mixer_->expert(choice.expert).name();
      advice = std::move(choice.advice);
    } else {
      advice = solo_->advise(ctx);
      p.strategy_index = 0;
      p.strategy = solo_->name();
    }
    p.row_id = sample_query(advice, query_rng_);
  }
  pending_ = std::move(p);
  return *pending_;
}

double RunEngine::pending_p1() {
  if (!pending_) throw StateError("no pending query");
  const auto row = data_->features.row(pending_->row_id);
  StrategyContext ctx{data_->features, pool_, estimators_};
  if (pending_->strategy_index < 0) {
    return config_.post_switch == PostSwitchPolicy::refit && !(solo_ && solo_->kind() == StrategyKind::base)
               ? estimators_.current(pool_)->p1(row)
               : switch_estimator_->p1(row);
  }
  Strategy& s = mixer_ ? mixer_->expert(static_cast<std::size_t>(pending_->strategy_index)) : *solo_;
  return s.estimator(ctx)->p1(row);
}

const StepRecord& RunEngine::answer(Label label) {
  if (!pending_) throw StateError("no pending query to answer");
  if (label > 1) throw DataError("label outside {0,1}");
  const Proposal p = *pending_;

  StepRecord rec;
  rec.t = p.t;
  rec.strategy_index = p.strategy_index;
  rec.strategy = p.strategy;
  rec.row_id = p.row_id;
  rec.label = label;
  rec.reward = compute_reward(label, config_.reward, *data_, p.row_id);

  pool_ = pool_.reveal(p.row_id, label);
  cum_reward_ += rec.reward;
  rec.cum_reward = cum_reward_;
  pending_.reset();

  if (p.strategy_index >= 0) {
    StrategyContext ctx{data_->features, pool_, estimators_};
    if (mixer_) {
      mixer_->update(static_cast<std::size_t>(p.strategy_index), rec.reward);
      rec.weights = mixer_->weights().values;
      mixer_->observe(ctx, p.row_id, label);
    } else {
      solo_->observe(ctx, p.row_id, label);
    }
  }
  records_.push_back(std::move(rec));
  return records_.back();
}

void RunEngine::run(Oracle& oracle) {
  while (!finished()) {
    const auto& p = propose();
    answer(oracle.label(p.row_id));
  }
}

RunResult RunEngine::result() const {
  RunResult r;
  r.policy = config_.strategy;
  r.config_digest = config_digest(config_);
  r.records = records_;
  const auto labeled = pool_.labeled();
  r.final_labeled.assign(labeled.begin(), labeled.end());
  r.truncated = truncated();
  r.wall_seconds = now_seconds() - started_;
  r.cv = cv_;
  return r;
}

std::string config_digest(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(dump_run_config(config))));
  return buf;
}

RunResult run_scenario(std::shared_ptr<const Dataset> data, const RunConfig& config) {
  RunEngine engine(data, config);
  SimulatedOracle oracle(data->labels);
  engine.run(oracle);
  return engine.result();
}

RunResult run_scenario1(std::shared_ptr<const Dataset> data, const RunConfig& config) {
  if (config.scenario != 1) throw ConfigError("run_scenario1 needs scenario=1");
  return run_scenario(std::move(data), config);
}

RunResult run_scenario2(std::shared_ptr<const Dataset> data, const RunConfig& config) {
  if (config.scenario != 2) throw ConfigError("run_scenario2 needs scenario=2");
  return run_scenario(std::move(data), config);
}

RunResult run_scenario(const RunConfig& config) {
  auto data = std::make_shared<const Dataset>(load_dataset(config.dataset_path, config.label_column));
  return run_scenario(data, config);
}

std::vector<CurvePoint> CurveTable::curve(std::string_view strategy) const {
  std::vector<CurvePoint> out;
  for (const auto& p : rows) {
    if (p.strategy == strategy) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return out;
}

std::vector<std::string> CurveTable::strategies() const {
  std::vector<std::string> out;
  for (const auto& p : rows) {
    if (std::find(out.begin(), out.end(), p.strategy) == out.end()) out.push_back(p.strategy);
  }
  return out;
}

std::vector<CurvePoint> aggregate_runs(std::string_view strategy, std::span<const RunResult> runs) {
  if (runs.empty()) throw StateError("aggregate: no runs");
  const std::size_t horizon = runs.front().records.size();
  for (const auto& r : runs) {
    if (r.records.size() != horizon) throw StateError("aggregate: mismatched horizons across runs");
  }
  std::vector<CurvePoint> out;
  out.reserve(horizon);
  const auto n = static_cast<double>(runs.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    CurvePoint p;
    p.strategy = std::string(strategy);
    p.t = t + 1;
    p.min = p.max = runs.front().records[t].cum_reward;
    double sum = 0.0;
    for (const auto& r : runs) {
      const double v = r.records[t].cum_reward;
      sum += v;
      p.min = std::min(p.min, v);
      p.max = std::max(p.max, v);
    }
    p.mean = sum / n;
    if (runs.size() > 1) {
      double ss = 0.0;
      for (const auto& r : runs) ss += (r.records[t].cum_reward - p.mean) * (r.records[t].cum_reward - p.mean);
      p.sd = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(p);
  }
  return out;
}

std::vector<RunResult> run_replications(std::shared_ptr<const Dataset> data, const RunConfig& config,
                                        std::span<const std::uint64_t> seeds, std::size_t threads) {
  if (seeds.empty()) throw ConfigError("replications need at least one seed");
  std::vector<RunResult> results(seeds.size());
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, seeds.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        RunConfig c = config;
        c.seed = seeds[i];
        results[i] = run_scenario(data, c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

CurveTable aggregate_replications(std::shared_ptr<const Dataset> data, const RunConfig& config,
                                  std::span<const std::uint64_t> seeds, std::size_t threads) {
  const auto runs = run_replications(std::move(data), config, seeds, threads);
  CurveTable table;
  table.rows = aggregate_runs(config.strategy, runs);
  return table;
}

void export_curves(const CurveTable& table, const std::filesystem::path& path) {
  if (table.rows.empty()) throw StateError("export_curves: empty table");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write curve file: " + path.string());
  out << "strategy,t,mean_cum_reward,sd,min,max\n";
  for (const auto& p : table.rows) {
    out << p.strategy << ',' << p.t << ',' << csv::format_double(p.mean) << ',' << csv::format_double(p.sd) << ','
        << csv::format_double(p.min) << ',' << csv::format_double(p.max) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

CurveTable read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read curve file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "strategy,t,mean_cum_reward,sd,min,max") {
    throw DataError("curve file has an unexpected header: " + path.string());
  }
  CurveTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split_line(line);
    if (cells.size() != 6) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 6 columns");
    CurvePoint p;
    p.strategy = cells[0];
    const auto t = csv::parse_double(cells[1]);
    const auto mean = csv::parse_double(cells[2]);
    const auto sd = csv::parse_double(cells[3]);
    const auto lo = csv::parse_double(cells[4]);
    const auto hi = csv::parse_double(cells[5]);
    if (!t || !mean || !sd || !lo || !hi) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    p.t = static_cast<std::size_t>(*t);
    p.mean = *mean;
    p.sd = *sd;
    p.min = *lo;
    p.max = *hi;
    table.rows.push_back(p);
  }
  return table;
}

void write_step_log(std::span<const StepRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write step log: " + path.string());
  out << step_log_jsonl(records);
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace cafda
