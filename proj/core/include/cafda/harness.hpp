#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cafda/albl.hpp"
#include "cafda/cafda.hpp"
#include "cafda/datapool.hpp"
#include "cafda/estimator.hpp"
#include "cafda/lal.hpp"
#include "cafda/strategies.hpp"

namespace cafda {

enum class RewardKind { unitary, monetary };

struct RewardSpec {
  RewardKind kind = RewardKind::unitary;
  std::string amount_column;  // monetary only; names a feature column

  friend bool operator==(const RewardSpec&, const RewardSpec&) = default;
};

/// Reward for revealing `label` on `row`: querying a row counts as
/// predicting it fraudulent, so the reward is earned iff the label is 1.
double compute_reward(Label label, const RewardSpec& spec, const Dataset& data, RowId row);

/// Exploitation estimator used after the scenario-2 switch.
enum class PostSwitchPolicy {
  frozen,  // the classifier in effect at the switch, never refit
  refit,   // refit every step (base keeps its initial fit)
};

inline constexpr std::string_view kCafdaPolicy = "cafda";

struct RunConfig {
  std::string dataset_path;
  std::string label_column = "label";
  SplitConfig split;
  EstimatorConfig estimator;
  bool cv = false;
  std::size_t cv_folds = 5;
  std::string strategy = std::string(kCafdaPolicy);  // "cafda" or a strategy name
  CafdaConfig cafda;
  std::vector<StrategyKind> experts{StrategyKind::base, StrategyKind::base_refit, StrategyKind::random,
                                    StrategyKind::lal_independent, StrategyKind::lal_iterative};
  AlblConfig albl;
  LalGeneratorConfig lal;
  std::uint64_t lal_seed = 0;
  int scenario = 1;
  std::size_t horizon = 100;
  std::size_t switch_step = 100;
  PostSwitchPolicy post_switch = PostSwitchPolicy::frozen;
  RewardSpec reward;
  std::uint64_t seed = 0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Split settings actually used by a run: the split seed is mixed with the
/// run seed.
SplitConfig effective_split_config(const RunConfig& config);
/// Estimator settings actually used by a run (seed mixed with run seed).
EstimatorConfig effective_estimator_config(const RunConfig& config);

struct StepRecord {
  std::size_t t = 0;
  int strategy_index = 0;  // expert index for CAFDA, -1 after the scenario-2 switch
  std::string strategy;
  RowId row_id = 0;
  Label label = 0;
  double reward = 0.0;
  double cum_reward = 0.0;
  std::vector<double> weights;  // CAFDA only, after the update

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// One JSON object per line: t, strategy, row_id, label, reward,
/// cum_reward and, for CAFDA with two or more experts, weights.
std::string step_to_json(const StepRecord& record);
std::string step_log_jsonl(std::span<const StepRecord> records);
StepRecord step_from_json(std::string_view line);

struct RunResult {
  std::string policy;
  std::string config_digest;
  std::vector<StepRecord> records;
  std::vector<RowId> final_labeled;
  bool truncated = false;
  double wall_seconds = 0.0;
  std::optional<CvResult> cv;
};

/// Source of labels for queried rows.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Label label(RowId row) = 0;
};

/// Answers from the dataset's hidden labels.
class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(const HiddenLabels& labels) : labels_(&labels) {}
  Label label(RowId row) override { return labels_->at(row); }

 private:
  const HiddenLabels* labels_;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const RunConfig& config);

/// Step-wise driver of one run: propose a row, receive its label, update
/// pool, weights and strategies. Simulated runs and interactive sessions
/// both go through this class.
class RunEngine {
 public:
  struct Proposal {
    std::size_t t = 0;
    RowId row_id = 0;
    int strategy_index = 0;
    std::string strategy;
  };

  /// Draws the initial split from the run configuration.
  RunEngine(std::shared_ptr<const Dataset> data, RunConfig config);
  /// Starts from an explicit pool.
  RunEngine(std::shared_ptr<const Dataset> data, RunConfig config, PoolState initial);
  ~RunEngine();
  RunEngine(const RunEngine&) = delete;
  RunEngine& operator=(const RunEngine&) = delete;

  /// True when the horizon is reached or the pool is empty.
  bool finished() const noexcept;
  /// True when the pool ran dry before the horizon.
  bool truncated() const noexcept;

  /// Picks the next query; repeated calls return the same pending proposal.
  const Proposal& propose();
  const std::optional<Proposal>& pending() const noexcept { return pending_; }
  /// p_hat(y=1|x) of the pending row under the proposing policy's estimator.
  double pending_p1();

  /// Applies the label for the pending row (one full algorithm step).
  const StepRecord& answer(Label label);

  /// Runs to completion against `oracle`.
  void run(Oracle& oracle);

  RunResult result() const;

  const RunConfig& config() const noexcept { return config_; }
  const Dataset& data() const noexcept { return *data_; }
  const PoolState& pool() const noexcept { return pool_; }
  const std::vector<StepRecord>& records() const noexcept { return records_; }
  double cum_reward() const noexcept { return cum_reward_; }
  std::size_t initial_unlabeled() const noexcept { return initial_unlabeled_; }
  const CafdaMixer* mixer() const noexcept { return mixer_.get(); }
  Strategy* solo() const noexcept { return solo_.get(); }
  const std::optional<CvResult>& cv() const noexcept { return cv_; }
  /// Estimator in effect after the scenario-2 switch (null before it).
  std::shared_ptr<const FittedEstimator> switch_estimator() const noexcept { return switch_estimator_; }
  EstimatorProvider& estimators() noexcept { return estimators_; }

 private:
  void setup();
  bool exploiting() const noexcept;
  void enter_exploitation(StrategyContext& ctx);

  std::shared_ptr<const Dataset> data_;
  RunConfig config_;
  PoolState pool_;
  EstimatorProvider estimators_;
  std::unique_ptr<Strategy> solo_;
  std::unique_ptr<CafdaMixer> mixer_;
  Rng query_rng_;
  std::optional<Proposal> pending_;
  std::vector<StepRecord> records_;
  double cum_reward_ = 0.0;
  std::size_t initial_unlabeled_ = 0;
  std::optional<CvResult> cv_;
  std::shared_ptr<const FittedEstimator> switch_estimator_;
  std::vector<double> switch_p1_by_row_;
  double started_ = 0.0;
};

/// Stable digest of the effective configuration.
std::string config_digest(const RunConfig& config);

RunResult run_scenario1(std::shared_ptr<const Dataset> data, const RunConfig& config);
RunResult run_scenario2(std::shared_ptr<const Dataset> data, const RunConfig& config);
/// Loads config.dataset_path and dispatches on config.scenario.
RunResult run_scenario(const RunConfig& config);
RunResult run_scenario(std::shared_ptr<const Dataset> data, const RunConfig& config);

struct CurvePoint {
  std::string strategy;
  std::size_t t = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct CurveTable {
  std::vector<CurvePoint> rows;

  /// Points of one strategy in t order.
  std::vector<CurvePoint> curve(std::string_view strategy) const;
  std::vector<std::string> strategies() const;
  friend bool operator==(const CurveTable&, const CurveTable&) = default;
};

/// Per-step mean, sample sd (0 for a single run), min and max of the
/// cumulative reward. All runs must share one horizon.
std::vector<CurvePoint> aggregate_runs(std::string_view strategy, std::span<const RunResult> runs);

/// Runs `config` once per seed (in parallel, isolated state).
std::vector<RunResult> run_replications(std::shared_ptr<const Dataset> data, const RunConfig& config,
                                        std::span<const std::uint64_t> seeds, std::size_t threads = 0);

CurveTable aggregate_replications(std::shared_ptr<const Dataset> data, const RunConfig& config,
                                  std::span<const std::uint64_t> seeds, std::size_t threads = 0);

/// CSV with header strategy,t,mean_cum_reward,sd,min,max.
void export_curves(const CurveTable& table, const std::filesystem::path& path);
CurveTable read_curves(const std::filesystem::path& path);
void write_step_log(std::span<const StepRecord> records, const std::filesystem::path& path);

}  // namespace cafda
