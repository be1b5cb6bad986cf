#include <gtest/gtest.h>

#include <algorithm>

#include "cafda/config.hpp"
#include "cafda/errors.hpp"
#include "support.hpp"

namespace cafda {
namespace {

TEST(Config, DefaultsMatchDocumentedValues) {
  const ExperimentConfig c;
  EXPECT_EQ(c.run.cafda.k0, 0.8);
  EXPECT_EQ(c.run.cafda.k1, 1.2);
  EXPECT_EQ(c.run.cafda.p_min, 0.001);
  EXPECT_EQ(c.run.cafda.p_max, 0.95);
  EXPECT_EQ(c.run.split.init_fraction, 0.01);
  EXPECT_EQ(c.run.switch_step, 100u);
  EXPECT_EQ(c.run.estimator.forest.n_trees, 100u);
  EXPECT_EQ(c.run.experts.size(), 5u);
  EXPECT_EQ(c.strategies.size(), 8u);
  EXPECT_EQ(c.replications, 10u);
}

TEST(Config, ParsesKeyValueText) {
  ExperimentConfig c;
  apply_config_text(c, R"(# comment
dataset.path = data/x.csv
cafda.k0=0.7   # trailing comment
split.subsample_size=10000
estimator.max_depth=12
estimator.features_per_split=log2
cafda.experts=base,random
strategies=us,cafda
scenario=2
horizon=300
switch_step=100
post_switch=refit
reward.kind=monetary
reward.amount_column=Amount

seed=7
)");
  EXPECT_EQ(c.run.dataset_path, "data/x.csv");
  EXPECT_EQ(c.run.cafda.k0, 0.7);
  EXPECT_EQ(c.run.split.subsample_size, 10000u);
  EXPECT_EQ(c.run.estimator.forest.max_depth, 12u);
  EXPECT_EQ(c.run.estimator.forest.features_per_split, FeaturesPerSplit::log2);
  EXPECT_EQ(c.run.experts, (std::vector<StrategyKind>{StrategyKind::base, StrategyKind::random}));
  EXPECT_EQ(c.strategies, (std::vector<std::string>{"us", "cafda"}));
  EXPECT_EQ(c.run.scenario, 2);
  EXPECT_EQ(c.run.post_switch, PostSwitchPolicy::refit);
  EXPECT_EQ(c.run.reward.kind, RewardKind::monetary);
  EXPECT_EQ(c.run.seed, 7u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, DumpRoundTrips) {
  ExperimentConfig c;
  apply_overrides(c, {"cafda.k1=1.37", "estimator.kind=logistic", "estimator.l2_penalty=0.25",
                      "lal.simulations=5", "albl.arms=us,base_refit", "split.subsample_size=500",
                      "estimator.features_per_split=3", "output_dir=runs/a b"});
  const auto text = dump_config(c);
  ExperimentConfig back;
  apply_config_text(back, text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(dump_config(back), text);
}

TEST(Config, DumpCoversEveryKnownKey) {
  const auto text = dump_config(ExperimentConfig{});
  for (const auto& k : known_config_keys()) EXPECT_NE(text.find(k + "="), std::string::npos) << k;
  const auto& keys = known_config_keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
}

TEST(Config, UnknownKeyIsNamed) {
  ExperimentConfig c;
  try {
    apply_overrides(c, {"cafda.k2=1"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cafda.k2"), std::string::npos);
  }
  EXPECT_THROW(apply_overrides(c, {"no_equals_sign"}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {"horizon=ten"}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {"cafda.experts=base,magic"}), ConfigError);
}

TEST(Config, OverridesWinOverFile) {
  testing::TempDir dir;
  testing::write_text(dir / "a.cfg", "seed=3\nhorizon=50\n");
  auto c = load_config_file(dir / "a.cfg");
  apply_overrides(c, {"seed=9"});
  EXPECT_EQ(c.run.seed, 9u);
  EXPECT_EQ(c.run.horizon, 50u);
  EXPECT_THROW(load_config_file(dir / "missing.cfg"), ConfigError);
}

TEST(Config, ValidationCatchesInconsistencies) {
  auto bad = [](std::vector<std::string> o) {
    ExperimentConfig c;
    apply_overrides(c, o);
    return c;
  };
  EXPECT_THROW(validate(bad({"scenario=2", "horizon=100", "switch_step=100"})), ConfigError);
  EXPECT_THROW(validate(bad({"scenario=3"})), ConfigError);
  EXPECT_THROW(validate(bad({"strategies=random,foo"})), ConfigError);
  EXPECT_THROW(validate(bad({"cafda.k0=1.5"})), ConfigError);
  EXPECT_THROW(validate(bad({"split.init_fraction=0"})), ConfigError);
  EXPECT_THROW(validate(bad({"estimator.n_trees=0"})), ConfigError);
  EXPECT_THROW(validate(bad({"reward.kind=monetary"})), ConfigError);
  EXPECT_THROW(validate(bad({"replications=0"})), ConfigError);
  EXPECT_NO_THROW(validate(bad({"scenario=2", "horizon=101", "switch_step=100"})));
}

TEST(Config, RunDumpOmitsExperimentKeys) {
  const auto text = dump_run_config(RunConfig{});
  EXPECT_EQ(text.find("replications="), std::string::npos);
  EXPECT_EQ(text.find("strategies="), std::string::npos);
  EXPECT_NE(text.find("cafda.k0="), std::string::npos);
}

}  // namespace
}  // namespace cafda

#ifdef CAFDA_CONFIG_DIR
TEST(ShippedConfigs, AllParse) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(CAFDA_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW({
      const auto c = cafda::load_config_file(entry.path());
      EXPECT_GT(c.run.horizon, 0u);
    });
    ++n;
  }
  EXPECT_EQ(n, 7u);
}
#endif
