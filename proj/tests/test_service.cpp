#include <gtest/gtest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>

#include "cafda/config.hpp"
#include "cafda/service.hpp"
#include "support.hpp"

namespace cafda {
namespace {

using json = nlohmann::json;

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data = testing::synthetic(300, 0.1, 21);
    write_dataset(*data, dir / "pool.csv", "label");
    config = testing::fast_run_config("cafda", 12, 5);
    config.dataset_path = (dir / "pool.csv").string();
  }

  std::string create_body(const RunConfig& c, std::string oracle = "human") const {
    return json{{"config_text", dump_run_config(c)}, {"oracle", oracle}}.dump();
  }

  static std::string created_id(const ApiResponse& r) { return json::parse(r.body).at("session_id"); }

  testing::TempDir dir;
  std::shared_ptr<const Dataset> data;
  RunConfig config;
};

TEST_F(ServiceTest, CreateValidatesInput) {
  SessionManager m;
  const auto ok = m.create_session(create_body(config));
  EXPECT_EQ(ok.status, 201) << ok.body;
  const auto second = m.create_session(create_body(config));
  EXPECT_NE(created_id(ok), created_id(second));

  auto missing = config;
  missing.dataset_path = (dir / "nope.csv").string();
  EXPECT_EQ(m.create_session(create_body(missing)).status, 422);
  EXPECT_EQ(m.create_session(R"({"config": {"cafda.k9": 1}})").status, 400);
  EXPECT_EQ(m.create_session("{not json").status, 400);
  EXPECT_EQ(m.create_session(R"({"oracle": "robot"})").status, 400);
  const auto keyed = m.create_session(
      json{{"config", {{"dataset.path", config.dataset_path}, {"horizon", 5}, {"strategy", "random"}}}}.dump());
  EXPECT_EQ(keyed.status, 201) << keyed.body;
}

TEST_F(ServiceTest, NextIsIdempotentAndLabelAdvances) {
  SessionManager m;
  const auto id = created_id(m.create_session(create_body(config)));

  const auto fresh = json::parse(m.state(id).body);
  EXPECT_EQ(fresh["t"], 0);
  EXPECT_EQ(fresh["cum_reward"], 0.0);

  const auto a = m.next(id), b = m.next(id);
  EXPECT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  const auto q = json::parse(a.body);
  EXPECT_EQ(q["t"], 1);
  EXPECT_EQ(q["features"].size(), 2u);
  EXPECT_GE(q["p1"].get<double>(), 0.0);
  EXPECT_LE(q["p1"].get<double>(), 1.0);

  const RowId row = q["row_id"];
  EXPECT_EQ(m.post_label(id, json{{"row_id", row + 1}, {"label", 1}}.dump()).status, 409);
  EXPECT_EQ(m.post_label(id, json{{"row_id", row}, {"label", 2}}.dump()).status, 422);
  EXPECT_EQ(m.post_label(id, json{{"row_id", row}}.dump()).status, 422) << "human mode needs a label";
  EXPECT_EQ(json::parse(m.state(id).body)["t"], 0) << "rejected labels change nothing";

  const auto r = m.post_label(id, json{{"row_id", row}, {"label", 1}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto body = json::parse(r.body);
  EXPECT_EQ(body["reward"], 1.0);
  EXPECT_EQ(body["cum_reward"], 1.0);
  EXPECT_EQ(body["weights"].size(), 5u);
  EXPECT_EQ(m.post_label(id, json{{"row_id", row}, {"label", 1}}.dump()).status, 409) << "no double labeling";

  const auto q2 = json::parse(m.next(id).body);
  EXPECT_EQ(q2["t"], 2);
  EXPECT_NE(q2["row_id"], row);
  const auto r2 = json::parse(m.post_label(id, json{{"row_id", q2["row_id"]}, {"label", 0}}.dump()).body);
  EXPECT_EQ(r2["reward"], 0.0);
  EXPECT_EQ(r2["cum_reward"], 1.0);

  const auto st = json::parse(m.state(id).body);
  EXPECT_EQ(st["t"], 2);
  EXPECT_EQ(st["weights_history"].size(), 2u);
  EXPECT_EQ(st["rewards"], json::array({1.0, 0.0}));
  EXPECT_EQ(st["pool"]["labeled"], 300 * 5 / 100 + 2);
}

TEST_F(ServiceTest, ExhaustedSessionAnswers410) {
  SessionManager m;
  auto c = config;
  c.strategy = "random";
  c.horizon = 3;
  const auto id = created_id(m.create_session(create_body(c, "replay")));
  for (int i = 0; i < 3; ++i) {
    const auto q = json::parse(m.next(id).body);
    ASSERT_EQ(m.post_label(id, json{{"row_id", q["row_id"]}}.dump()).status, 200);
  }
  const auto done = m.next(id);
  EXPECT_EQ(done.status, 410);
  EXPECT_EQ(json::parse(done.body)["t"], 3);
}

TEST_F(ServiceTest, UnknownSessionIs404) {
  SessionManager m;
  EXPECT_EQ(m.next("s999").status, 404);
  EXPECT_EQ(m.state("s999").status, 404);
  EXPECT_EQ(m.log("s999").status, 404);
  EXPECT_EQ(m.post_label("s999", "{}").status, 404);
}

TEST_F(ServiceTest, ReplaySessionReproducesSimulatedRun) {
  SessionManager m;
  const auto id = created_id(m.create_session(create_body(config, "replay")));
  for (;;) {
    const auto n = m.next(id);
    if (n.status == 410) break;
    ASSERT_EQ(n.status, 200);
    const auto q = json::parse(n.body);
    ASSERT_EQ(m.post_label(id, json{{"row_id", q["row_id"]}}.dump()).status, 200);
  }
  auto loaded = std::make_shared<const Dataset>(load_dataset(config.dataset_path, "label"));
  EXPECT_EQ(m.log(id).body, step_log_jsonl(run_scenario(loaded, config).records));
}

TEST_F(ServiceTest, SessionsSurviveRestart) {
  std::string id, before;
  {
    SessionManager m(dir / "sessions");
    id = created_id(m.create_session(create_body(config)));
    for (int i = 0; i < 4; ++i) {
      const auto q = json::parse(m.next(id).body);
      m.post_label(id, json{{"row_id", q["row_id"]}, {"label", i % 2}}.dump());
    }
    before = m.log(id).body;
  }
  SessionManager restored(dir / "sessions");
  EXPECT_EQ(restored.restored(), 1u);
  EXPECT_EQ(restored.log(id).body, before);
  EXPECT_EQ(json::parse(restored.next(id).body)["t"], 5);
  const auto fresh = created_id(restored.create_session(create_body(config)));
  EXPECT_NE(fresh, id);
}

TEST_F(ServiceTest, HttpRoundTrip) {
  SessionManager m;
  OracleServer server(m);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.serve(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);

  auto created = cli.Post("/api/sessions", create_body(config, "replay"), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = json::parse(created->body)["session_id"];
  auto next = cli.Get("/api/sessions/" + id + "/next");
  ASSERT_TRUE(next);
  EXPECT_EQ(next->status, 200);
  const auto q = json::parse(next->body);
  auto labeled = cli.Post("/api/sessions/" + id + "/label", json{{"row_id", q["row_id"]}}.dump(), "application/json");
  ASSERT_TRUE(labeled);
  EXPECT_EQ(labeled->status, 200);
  auto state = cli.Get("/api/sessions/" + id + "/state");
  EXPECT_EQ(json::parse(state->body)["t"], 1);
  auto log = cli.Get("/api/sessions/" + id + "/log");
  EXPECT_EQ(log->status, 200);
  EXPECT_EQ(std::count(log->body.begin(), log->body.end(), '\n'), 1);
  EXPECT_EQ(cli.Get("/api/sessions/nope/state")->status, 404);

  server.stop();
  t.join();
}

}  // namespace
}  // namespace cafda
