#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "cafda/errors.hpp"
#include "cafda/harness.hpp"
#include "support.hpp"

namespace cafda {
namespace {

using testing::fast_run_config;
using testing::synthetic;
using testing::TempDir;

std::vector<RowId> queried_rows(const RunResult& r) {
  std::vector<RowId> rows;
  for (const auto& s : r.records) rows.push_back(s.row_id);
  return rows;
}

void expect_run_invariants(const RunResult& r, const Dataset& data) {
  std::set<RowId> seen;
  double cum = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& s = r.records[i];
    EXPECT_EQ(s.t, i + 1);
    EXPECT_TRUE(seen.insert(s.row_id).second) << "row " << s.row_id << " queried twice";
    EXPECT_EQ(s.label, data.labels.at(s.row_id));
    cum += s.reward;
    EXPECT_DOUBLE_EQ(s.cum_reward, cum);
    EXPECT_GE(s.cum_reward, prev);
    prev = s.cum_reward;
  }
  EXPECT_LE(cum, static_cast<double>(data.labels.count_positive()));
}

TEST(Reward, Unitary) {
  const auto data = synthetic(10, 0.2, 1);
  EXPECT_EQ(compute_reward(1, RewardSpec{}, *data, 0), 1.0);
  EXPECT_EQ(compute_reward(0, RewardSpec{}, *data, 0), 0.0);
}

TEST(Reward, Monetary) {
  Dataset d;
  d.feature_names = {"v1", "amount"};
  d.features = FeatureMatrix(2, 2, {0.3, 250.0, 0.1, 12.0});
  d.labels = HiddenLabels({1, 0});
  const RewardSpec spec{RewardKind::monetary, "amount"};
  EXPECT_EQ(compute_reward(1, spec, d, 0), 250.0);
  EXPECT_EQ(compute_reward(0, spec, d, 1), 0.0);
  EXPECT_THROW(compute_reward(1, RewardSpec{RewardKind::monetary, "Amount"}, d, 0), ConfigError);
}

TEST(StepLog, JsonRoundTripAndWeightsOnlyForMixtures) {
  StepRecord r{3, 1, "base_refit", 42, 1, 1.0, 2.0, {0.25, 0.75}};
  const auto line = step_to_json(r);
  EXPECT_EQ(line, R"({"t":3,"strategy":"base_refit","row_id":42,"label":1,"reward":1.0,"cum_reward":2.0,"weights":[0.25,0.75]})");
  auto back = step_from_json(line);
  back.strategy_index = r.strategy_index;
  EXPECT_EQ(back, r);
  r.weights = {1.0};
  EXPECT_EQ(step_to_json(r).find("weights"), std::string::npos);
}

TEST(Scenario1, RandomExhaustionCollectsEveryPositive) {
  const auto data = synthetic(120, 0.1, 3);
  auto c = fast_run_config("random", 1000);
  RunEngine engine(data, c);
  SimulatedOracle oracle(data->labels);
  const auto initial = engine.initial_unlabeled();
  engine.run(oracle);
  const auto r = engine.result();
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.records.size(), initial);
  const auto init_pos = data->labels.count_positive() - [&] {
    std::size_t p = 0;
    for (const auto& s : r.records) p += s.label;
    return data->labels.count_positive() - p;
  }();
  EXPECT_DOUBLE_EQ(r.records.back().cum_reward, static_cast<double>(init_pos));
  expect_run_invariants(r, *data);
}

TEST(Scenario1, BaseFirstQueryIsFrozenArgmax) {
  const auto data = synthetic(400, 0.1, 5);
  auto c = fast_run_config("base", 5);
  RunEngine engine(data, c);
  const auto first = engine.propose();
  auto est = engine.solo()->estimator(*std::make_unique<StrategyContext>(
      StrategyContext{data->features, engine.pool(), engine.estimators()}));
  const auto s = predict_scores(*est, data->features, engine.pool().unlabeled());
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.p1.size(); ++i) {
    if (s.p1[i] > s.p1[best]) best = i;
  }
  EXPECT_EQ(first.row_id, s.row_ids[best]);
  EXPECT_EQ(engine.answer(data->labels.at(first.row_id)).reward, 1.0) << "separable task: top row is a fraud";
}

TEST(Scenario1, SameSeedSameLogDifferentSeedDifferentLog) {
  const auto data = synthetic(300, 0.1, 7);
  for (std::string strategy : {"random", "base_refit", "albl", "cafda"}) {
    auto c = fast_run_config(strategy, 15, 3);
    const auto a = step_log_jsonl(run_scenario(data, c).records);
    const auto b = step_log_jsonl(run_scenario(data, c).records);
    EXPECT_EQ(a, b) << strategy;
    c.seed = 4;
    if (strategy != "base_refit") EXPECT_NE(a, step_log_jsonl(run_scenario(data, c).records)) << strategy;
  }
}

TEST(Scenario1, AllStrategiesSatisfyRunInvariants) {
  const auto data = synthetic(250, 0.08, 9);
  std::vector<std::string> names{"cafda"};
  for (auto k : all_strategy_kinds()) names.emplace_back(to_string(k));
  for (const auto& n : names) {
    const auto r = run_scenario(data, fast_run_config(n, 20));
    EXPECT_EQ(r.records.size(), 20u) << n;
    EXPECT_FALSE(r.truncated);
    expect_run_invariants(r, *data);
    EXPECT_EQ(r.final_labeled.size(), 250u * 5 / 100 + 20u) << n;
  }
}

TEST(Scenario1, CafdaRecordsWeights) {
  const auto data = synthetic(250, 0.08, 9);
  const auto r = run_scenario(data, fast_run_config("cafda", 10));
  for (const auto& s : r.records) {
    ASSERT_EQ(s.weights.size(), 5u);
    EXPECT_NEAR(std::accumulate(s.weights.begin(), s.weights.end(), 0.0), 1.0, 1e-9);
    EXPECT_GE(s.strategy_index, 0);
  }
}

TEST(Scenario1, SingleExpertMixtureMatchesSolo) {
  const auto data = synthetic(300, 0.1, 2);
  for (auto kind : {StrategyKind::base_refit, StrategyKind::random}) {
    auto solo = fast_run_config(std::string(to_string(kind)), 25, 6);
    auto mix = solo;
    mix.strategy = "cafda";
    mix.experts = {kind};
    EXPECT_EQ(step_log_jsonl(run_scenario(data, solo).records), step_log_jsonl(run_scenario(data, mix).records));
  }
}

TEST(Scenario1, LabelLeakCanary) {
  // Permute hidden labels of rows the run never queries; decisions made
  // before the first permuted row is touched must not change.
  const auto data = synthetic(300, 0.1, 11);
  const auto c = fast_run_config("base_refit", 30, 2);
  const auto ref = run_scenario(data, c);
  std::set<RowId> queried(ref.final_labeled.begin(), ref.final_labeled.end());
  std::vector<RowId> untouched;
  for (RowId r = 0; r < 300; ++r) {
    if (!queried.count(r)) untouched.push_back(r);
  }
  std::vector<Label> labels(data->labels.raw().begin(), data->labels.raw().end());
  Rng rng(3);
  for (std::size_t i = untouched.size(); i > 1; --i) {
    std::swap(labels[untouched[i - 1]], labels[untouched[rng.index(i)]]);
  }
  auto canary = std::make_shared<Dataset>(*data);
  canary->labels = HiddenLabels(labels);
  const auto other = run_scenario(canary, c);
  EXPECT_EQ(queried_rows(ref), queried_rows(other));
}

TEST(Scenario2, PostSwitchQueriesArgmaxOfFrozenEstimator) {
  const auto data = synthetic(400, 0.1, 4);
  auto c = fast_run_config("random", 40);
  c.scenario = 2;
  c.switch_step = 20;
  RunEngine engine(data, c);
  SimulatedOracle oracle(data->labels);
  std::shared_ptr<const FittedEstimator> frozen;
  while (!engine.finished()) {
    const auto p = engine.propose();
    if (p.t > c.switch_step) {
      if (!frozen) frozen = engine.switch_estimator();
      EXPECT_EQ(engine.switch_estimator().get(), frozen.get());
      EXPECT_EQ(p.strategy, "exploit");
      const auto s = predict_scores(*frozen, data->features, engine.pool().unlabeled());
      std::size_t best = 0;
      for (std::size_t i = 1; i < s.p1.size(); ++i) {
        if (s.p1[i] > s.p1[best]) best = i;
      }
      EXPECT_EQ(p.row_id, s.row_ids[best]) << "t=" << p.t;
    } else {
      EXPECT_EQ(p.strategy, "random");
    }
    engine.answer(oracle.label(p.row_id));
  }
  ASSERT_TRUE(frozen);
  EXPECT_EQ(frozen->trained_on_step(), c.switch_step + 1);
}

TEST(Scenario2, RefitPolicyUsesLiveEstimator) {
  const auto data = synthetic(400, 0.1, 4);
  auto c = fast_run_config("us", 30);
  c.scenario = 2;
  c.switch_step = 10;
  c.post_switch = PostSwitchPolicy::refit;
  RunEngine engine(data, c);
  SimulatedOracle oracle(data->labels);
  while (!engine.finished()) {
    const auto p = engine.propose();
    if (p.t > c.switch_step) {
      const auto& s = engine.estimators().unlabeled_scores(engine.pool());
      EXPECT_EQ(p.row_id, s.row_ids[argmax_first(s.p1)]);
    }
    engine.answer(oracle.label(p.row_id));
  }
}

TEST(Scenario2, SwitchAtZeroIsPureExploitation) {
  const auto data = synthetic(300, 0.1, 8);
  auto base = fast_run_config("base", 20);
  auto s2 = base;
  s2.scenario = 2;
  s2.switch_step = 0;
  s2.strategy = "random";
  s2.post_switch = PostSwitchPolicy::refit;
  auto refit = base;
  refit.strategy = "base_refit";
  EXPECT_EQ(queried_rows(run_scenario(data, s2)), queried_rows(run_scenario(data, refit)));

  s2.strategy = "base";
  s2.post_switch = PostSwitchPolicy::frozen;
  EXPECT_EQ(queried_rows(run_scenario(data, s2)), queried_rows(run_scenario(data, base)));
}

// Planted 1-D task: a band of unlabeled negatives sits on the logistic
// decision boundary, so uncertainty sampling earns nothing before the
// switch and exploitation earns on every step after it.
TEST(Scenario2, SlopeChangesAtSwitch) {
  Dataset d;
  d.name = "planted";
  d.feature_names = {"x"};
  d.features = FeatureMatrix(0, 1);
  std::vector<Label> y;
  std::vector<RowId> unlabeled;
  std::vector<std::pair<RowId, Label>> labeled;
  auto add = [&](double x, Label l, bool is_labeled) {
    const auto id = static_cast<RowId>(y.size());
    d.features.append_row(std::span<const double>(&x, 1));
    y.push_back(l);
    if (is_labeled) {
      labeled.emplace_back(id, l);
    } else {
      unlabeled.push_back(id);
    }
  };
  for (int i = 0; i < 10; ++i) add(-3.0 - 0.1 * i, 0, true);
  for (int i = 0; i < 10; ++i) add(3.0 + 0.1 * i, 1, true);
  for (int i = 0; i < 8; ++i) add(0.01 * (i - 4), 0, false);  // the boundary band
  for (int i = 0; i < 40; ++i) add(-3.0 - 0.05 * i, 0, false);
  for (int i = 0; i < 20; ++i) add(3.0 + 0.05 * i, 1, false);
  d.labels = HiddenLabels(y);
  auto data = std::make_shared<const Dataset>(std::move(d));

  auto c = fast_run_config("us", 16);
  c.scenario = 2;
  c.switch_step = 5;
  c.estimator.kind = EstimatorKind::logistic;
  c.estimator.logistic.l2_penalty = 1.0;
  RunEngine engine(data, c, PoolState::from_partition(y.size(), unlabeled, labeled));
  SimulatedOracle oracle(data->labels);
  engine.run(oracle);
  const auto& rec = engine.records();
  EXPECT_EQ(rec[c.switch_step - 1].cum_reward, 0.0);
  for (std::size_t t = c.switch_step; t < rec.size(); ++t) EXPECT_EQ(rec[t].reward, 1.0);
}

TEST(Engine, ProposeIsIdempotentAndAnswerNeedsPending) {
  const auto data = synthetic(200, 0.1, 1);
  RunEngine engine(data, fast_run_config("random", 5));
  EXPECT_THROW(engine.answer(1), StateError);
  const auto a = engine.propose();
  const auto b = engine.propose();
  EXPECT_EQ(a.row_id, b.row_id);
  EXPECT_EQ(a.t, 1u);
  EXPECT_THROW(engine.answer(2), DataError);
  engine.answer(0);
  EXPECT_EQ(engine.records().size(), 1u);
  EXPECT_FALSE(engine.pending());
}

TEST(Aggregate, SingleRunIsItsOwnMean) {
  const auto data = synthetic(200, 0.1, 1);
  const auto r = run_scenario(data, fast_run_config("random", 10));
  const auto pts = aggregate_runs("random", std::span(&r, 1));
  ASSERT_EQ(pts.size(), 10u);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(pts[t].mean, r.records[t].cum_reward);
    EXPECT_EQ(pts[t].sd, 0.0);
  }
}

TEST(Aggregate, IdenticalRunsHaveZeroSpread) {
  RunResult r;
  r.records = {StepRecord{.t = 1, .cum_reward = 1}, StepRecord{.t = 2, .cum_reward = 2}};
  const std::vector<RunResult> runs{r, r};
  const auto pts = aggregate_runs("x", runs);
  EXPECT_EQ(pts[0].mean, 1.0);
  EXPECT_EQ(pts[1].mean, 2.0);
  EXPECT_EQ(pts[0].sd, 0.0);
  EXPECT_EQ(pts[1].sd, 0.0);
}

TEST(Aggregate, SampleStandardDeviation) {
  RunResult a, b;
  a.records = {StepRecord{.t = 1, .cum_reward = 1}};
  b.records = {StepRecord{.t = 1, .cum_reward = 3}};
  const auto pts = aggregate_runs("x", std::vector<RunResult>{a, b});
  EXPECT_EQ(pts[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(pts[0].sd, std::sqrt(2.0));
  EXPECT_EQ(pts[0].min, 1.0);
  EXPECT_EQ(pts[0].max, 3.0);
}

TEST(Aggregate, MismatchedHorizonsAreAnError) {
  RunResult a, b;
  a.records = {StepRecord{.t = 1}};
  b.records = {StepRecord{.t = 1}, StepRecord{.t = 2}};
  EXPECT_THROW(aggregate_runs("x", std::vector<RunResult>{a, b}), StateError);
  EXPECT_THROW(aggregate_runs("x", std::vector<RunResult>{}), StateError);
}

TEST(Aggregate, ParallelReplicationsMatchSequential) {
  const auto data = synthetic(200, 0.1, 1);
  const auto c = fast_run_config("cafda", 8);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto par = run_replications(data, c, seeds, 3);
  const auto seq = run_replications(data, c, seeds, 1);
  for (std::size_t i = 0; i < seeds.size(); ++i) EXPECT_EQ(par[i].records, seq[i].records);
  EXPECT_THROW(run_replications(data, c, std::span<const std::uint64_t>{}, 1), ConfigError);
}

// Hypergeometric oracle: E[positives in T draws] = T * K / N.
TEST(Aggregate, RandomMeanMatchesHypergeometric) {
  const auto data = synthetic(1010, 0.05, 2);
  auto c = fast_run_config("random", 100);
  c.split.init_fraction = 0.01;
  std::vector<std::uint64_t> seeds(20);
  std::iota(seeds.begin(), seeds.end(), 100);
  const auto runs = run_replications(data, c, seeds, 1);
  double expected = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    RunConfig rc = c;
    rc.seed = seeds[i];
    const auto pool = initial_split(data->labels, effective_split_config(rc));
    expected += 100.0 * unlabeled_prevalence(pool, data->labels);
  }
  expected /= static_cast<double>(runs.size());
  const auto pts = aggregate_runs("random", runs);
  const double se = pts.back().sd / std::sqrt(20.0);
  EXPECT_NEAR(pts.back().mean, expected, 3 * se);
}

TEST(Curves, ExportFormatAndRoundTrip) {
  TempDir dir;
  CurveTable table;
  for (std::string s : {"a", "b"}) {
    for (std::size_t t = 1; t <= 3; ++t) table.rows.push_back({s, t, 0.1 * t, 0.5, 0.0, 1.0 / 3.0});
  }
  export_curves(table, dir / "c.csv");
  const auto text = testing::read_text(dir / "c.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "strategy,t,mean_cum_reward,sd,min,max");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  EXPECT_EQ(read_curves(dir / "c.csv"), table);
  EXPECT_EQ(table.strategies(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(table.curve("b").size(), 3u);
}

TEST(Curves, Errors) {
  TempDir dir;
  EXPECT_THROW(export_curves(CurveTable{}, dir / "x.csv"), StateError);
  CurveTable t;
  t.rows.push_back({"a", 1, 1, 0, 1, 1});
  EXPECT_THROW(export_curves(t, dir / "missing" / "x.csv"), DataError);
  testing::write_text(dir / "bad.csv", "strategy,t\n");
  EXPECT_THROW(read_curves(dir / "bad.csv"), DataError);
}

TEST(Curves, StepLogFile) {
  TempDir dir;
  const auto data = synthetic(200, 0.1, 1);
  const auto r = run_scenario(data, fast_run_config("random", 5));
  write_step_log(r.records, dir / "log.jsonl");
  EXPECT_EQ(testing::read_text(dir / "log.jsonl"), step_log_jsonl(r.records));
}

TEST(RunResult, DigestTracksConfig) {
  auto c = fast_run_config("random", 5);
  const auto d = config_digest(c);
  EXPECT_EQ(d.size(), 16u);
  EXPECT_EQ(d, config_digest(c));
  c.seed = 99;
  EXPECT_NE(d, config_digest(c));
}

}  // namespace
}  // namespace cafda
