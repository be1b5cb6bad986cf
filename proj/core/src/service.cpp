#include "cafda/service.hpp"

#include <cstdio>
#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cafda/config.hpp"
#include "cafda/errors.hpp"

namespace cafda {

using json = nlohmann::ordered_json;

namespace {

ApiResponse reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

ApiResponse error_reply(int status, std::string_view message) {
  return reply(status, json{{"error", std::string(message)}});
}

std::string setting_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ',';
      out += setting_text(e);
    }
    return out;
  }
  return v.dump();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(OracleMode m) { return m == OracleMode::human ? "human" : "replay"; }

std::optional<OracleMode> parse_oracle_mode(std::string_view name) {
  if (name == "human") return OracleMode::human;
  if (name == "replay") return OracleMode::replay;
  return std::nullopt;
}

struct SessionManager::Session {
  std::string id;
  OracleMode mode = OracleMode::human;
  std::shared_ptr<const Dataset> data;
  std::unique_ptr<RunEngine> engine;
  std::optional<std::filesystem::path> log_path;
  std::mutex mutex;

  void append(const StepRecord& r) {
    if (!log_path) return;
    std::ofstream out(*log_path, std::ios::binary | std::ios::app);
    out << step_to_json(r) << '\n';
    out.flush();
    if (!out) throw StateError("session log write failed: " + log_path->string());
  }
};

SessionManager::SessionManager(std::optional<std::filesystem::path> sessions_dir) : dir_(std::move(sessions_dir)) {
  if (dir_) {
    std::filesystem::create_directories(*dir_);
    restore();
  }
}

SessionManager::~SessionManager() = default;

std::size_t SessionManager::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(std::string_view id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<const Dataset> SessionManager::dataset(const std::string& path, const std::string& label_column) {
  {
    std::lock_guard lock(mutex_);
    const auto it = datasets_.find({path, label_column});
    if (it != datasets_.end()) return it->second;
  }
  auto data = std::make_shared<const Dataset>(load_dataset(path, label_column));
  std::lock_guard lock(mutex_);
  return datasets_.try_emplace({path, label_column}, std::move(data)).first->second;
}

std::shared_ptr<SessionManager::Session> SessionManager::open(const std::string& id, const RunConfig& config,
                                                              OracleMode mode) {
  auto s = std::make_shared<Session>();
  s->id = id;
  s->mode = mode;
  s->data = dataset(config.dataset_path, config.label_column);
  s->engine = std::make_unique<RunEngine>(s->data, config);
  return s;
}

void SessionManager::restore() {
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "session.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const auto meta = nlohmann::json::parse(read_file(d / "session.json"));
    const auto id = meta.at("id").get<std::string>();
    ExperimentConfig cfg;
    apply_config_text(cfg, meta.at("config").get<std::string>());
    const auto mode = parse_oracle_mode(meta.at("oracle").get<std::string>()).value_or(OracleMode::human);
    auto s = open(id, cfg.run, mode);

    std::ifstream in(d / "steps.jsonl", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      StepRecord r;
      try {
        r = step_from_json(line);
      } catch (const nlohmann::json::exception&) {
        break;  // torn final write
      }
      const auto& p = s->engine->propose();
      if (p.row_id != r.row_id) throw StateError("session " + id + ": log diverges from replay at t=" +
                                                 std::to_string(r.t));
      s->engine->answer(r.label);
    }
    s->log_path = d / "steps.jsonl";
    // Rewrite so a torn tail does not survive the next append.
    std::ofstream(*s->log_path, std::ios::binary | std::ios::trunc) << step_log_jsonl(s->engine->records());

    std::lock_guard lock(mutex_);
    sessions_[id] = s;
    if (id.size() > 1) next_id_ = std::max(next_id_, std::stoul(id.substr(1)) + 1);
    ++restored_;
  }
}

ApiResponse SessionManager::create_session(std::string_view body) {
  nlohmann::json req;
  try {
    req = body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object()) return error_reply(400, "request body must be a JSON object");

  OracleMode mode = OracleMode::human;
  ExperimentConfig cfg;
  try {
    if (req.contains("oracle")) {
      const auto m = parse_oracle_mode(req["oracle"].get<std::string>());
      if (!m) return error_reply(400, "oracle must be 'human' or 'replay'");
      mode = *m;
    }
    if (req.contains("config_text")) apply_config_text(cfg, req["config_text"].get<std::string>());
    if (req.contains("config")) {
      for (const auto& [k, v] : req["config"].items()) apply_setting(cfg, k, setting_text(v));
    }
    validate(cfg.run);
  } catch (const ConfigError& e) {
    return error_reply(400, e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, e.what());
  }

  std::string id;
  {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%06zu", next_id_++);
    id = buf;
  }

  std::shared_ptr<Session> s;
  try {
    s = open(id, cfg.run, mode);
  } catch (const ConfigError& e) {
    return error_reply(400, e.what());
  } catch (const Error& e) {
    return error_reply(422, e.what());
  }

  if (dir_) {
    const auto d = *dir_ / id;
    std::filesystem::create_directories(d);
    json meta{{"id", id}, {"oracle", std::string(to_string(mode))}, {"config", dump_run_config(cfg.run)}};
    std::ofstream(d / "session.json", std::ios::binary) << meta.dump(2) << '\n';
    std::ofstream(d / "steps.jsonl", std::ios::binary | std::ios::trunc);
    s->log_path = d / "steps.jsonl";
  }

  const auto& pool = s->engine->pool();
  json out{{"session_id", id},
           {"oracle", std::string(to_string(mode))},
           {"strategy", s->engine->config().strategy},
           {"horizon", s->engine->config().horizon},
           {"labeled", pool.labeled().size()},
           {"unlabeled", pool.unlabeled().size()}};
  std::lock_guard lock(mutex_);
  sessions_[id] = s;
  return reply(201, out);
}

namespace {

json summary(const RunEngine& e) {
  return json{{"status", "finished"},
              {"t", e.records().size()},
              {"cum_reward", e.cum_reward()},
              {"truncated", e.truncated()},
              {"unlabeled", e.pool().unlabeled().size()}};
}

}  // namespace

ApiResponse SessionManager::next(std::string_view id) {
  auto s = find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mutex);
  auto& e = *s->engine;
  if (!e.pending() && e.finished()) return reply(410, summary(e));
  try {
    const auto p = e.propose();
    json features = json::object();
    const auto row = s->data->features.row(p.row_id);
    for (std::size_t c = 0; c < row.size(); ++c) features[s->data->feature_names[c]] = row[c];
    return reply(200, json{{"t", p.t},
                           {"row_id", p.row_id},
                           {"strategy", p.strategy},
                           {"p1", e.pending_p1()},
                           {"features", features}});
  } catch (const Error& err) {
    return error_reply(500, err.what());
  }
}

ApiResponse SessionManager::post_label(std::string_view id, std::string_view body) {
  auto s = find(id);
  if (!s) return error_reply(404, "unknown session");
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("row_id") || !req["row_id"].is_number_integer()) {
    return error_reply(400, "body needs an integer row_id");
  }

  std::lock_guard lock(s->mutex);
  auto& e = *s->engine;
  const auto& pending = e.pending();
  if (!pending) return error_reply(409, e.finished() ? "session finished" : "no pending query; call next first");
  if (req["row_id"].get<long long>() != static_cast<long long>(pending->row_id)) {
    return error_reply(409, "row_id does not match the pending query (" + std::to_string(pending->row_id) + ")");
  }

  Label label = 0;
  if (!req.contains("label") || req["label"].is_null()) {
    if (s->mode != OracleMode::replay) return error_reply(422, "label is required");
    label = s->data->labels.at(pending->row_id);
  } else {
    const auto& l = req["label"];
    if (!l.is_number_integer() || (l.get<long long>() != 0 && l.get<long long>() != 1)) {
      return error_reply(422, "label must be 0 or 1");
    }
    label = static_cast<Label>(l.get<int>());
  }

  try {
    const auto& rec = e.answer(label);
    s->append(rec);
    json out{{"t", rec.t}, {"row_id", rec.row_id}, {"label", static_cast<int>(rec.label)},
             {"reward", rec.reward}, {"cum_reward", rec.cum_reward}};
    if (!rec.weights.empty()) out["weights"] = rec.weights;
    out["finished"] = e.finished();
    return reply(200, out);
  } catch (const Error& err) {
    return error_reply(500, err.what());
  }
}

ApiResponse SessionManager::state(std::string_view id) {
  auto s = find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mutex);
  const auto& e = *s->engine;
  json rewards = json::array();
  json cum = json::array();
  json weights = json::array();
  json strategies = json::array();
  for (const auto& r : e.records()) {
    rewards.push_back(r.reward);
    cum.push_back(r.cum_reward);
    strategies.push_back(r.strategy);
    if (!r.weights.empty()) weights.push_back(r.weights);
  }
  json experts = json::array();
  if (const auto* m = e.mixer()) {
    for (auto k : e.config().experts) experts.push_back(std::string(to_string(k)));
    (void)m;
  }
  const auto& pool = e.pool();
  return reply(200, json{{"session_id", s->id},
                         {"strategy", e.config().strategy},
                         {"experts", experts},
                         {"t", e.records().size()},
                         {"horizon", e.config().horizon},
                         {"cum_reward", e.cum_reward()},
                         {"rewards", rewards},
                         {"cum_rewards", cum},
                         {"strategies", strategies},
                         {"weights_history", weights},
                         {"pool", {{"active", pool.active_size()},
                                   {"labeled", pool.labeled().size()},
                                   {"unlabeled", pool.unlabeled().size()},
                                   {"labeled_positives", pool.labeled_positives()}}},
                         {"pending", e.pending().has_value()},
                         {"finished", e.finished()},
                         {"truncated", e.truncated()}});
}

ApiResponse SessionManager::log(std::string_view id) {
  auto s = find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mutex);
  return {200, step_log_jsonl(s->engine->records()), "application/x-ndjson"};
}

struct OracleServer::Impl {
  SessionManager& sessions;
  httplib::Server server;
  explicit Impl(SessionManager& s) : sessions(s) {}
};

OracleServer::OracleServer(SessionManager& sessions, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(sessions)) {
  auto& srv = impl_->server;
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto* mgr = &impl_->sessions;
  srv.Post("/api/sessions", [mgr, send](const httplib::Request& req, httplib::Response& res) {
    send(res, mgr->create_session(req.body));
  });
  srv.Get(R"(/api/sessions/([^/]+)/next)", [mgr, send](const httplib::Request& req, httplib::Response& res) {
    send(res, mgr->next(req.matches[1].str()));
  });
  srv.Post(R"(/api/sessions/([^/]+)/label)", [mgr, send](const httplib::Request& req, httplib::Response& res) {
    send(res, mgr->post_label(req.matches[1].str(), req.body));
  });
  srv.Get(R"(/api/sessions/([^/]+)/state)", [mgr, send](const httplib::Request& req, httplib::Response& res) {
    send(res, mgr->state(req.matches[1].str()));
  });
  srv.Get(R"(/api/sessions/([^/]+)/log)", [mgr, send](const httplib::Request& req, httplib::Response& res) {
    send(res, mgr->log(req.matches[1].str()));
  });
  if (static_dir && std::filesystem::is_directory(*static_dir)) srv.set_mount_point("/", static_dir->string());
}

OracleServer::~OracleServer() = default;

int OracleServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw StateError("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw StateError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void OracleServer::serve() { impl_->server.listen_after_bind(); }

void OracleServer::stop() { impl_->server.stop(); }

}  // namespace cafda
