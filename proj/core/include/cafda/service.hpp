#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "cafda/harness.hpp"

namespace cafda {

/// Who answers a session's queries.
enum class OracleMode {
  human,   // labels come from the request body and are trusted as ground truth
  replay,  // an omitted label is filled from the dataset's hidden labels
};

std::string_view to_string(OracleMode m);
std::optional<OracleMode> parse_oracle_mode(std::string_view name);

/// Transport-neutral reply.
struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Interactive run sessions. Each session owns a RunEngine; requests on one
/// session are serialized, different sessions proceed concurrently.
/// With a sessions directory every session keeps `config.cfg` and an
/// append-only `steps.jsonl`; a new manager over the same directory replays
/// them.
class SessionManager {
 public:
  explicit SessionManager(std::optional<std::filesystem::path> sessions_dir = std::nullopt);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Body: {"config": {key: value, ...}, "config_text": "...", "oracle": "human"|"replay"}.
  ApiResponse create_session(std::string_view body);
  ApiResponse next(std::string_view id);
  /// Body: {"row_id": n, "label": 0|1}. The label may be omitted in replay mode.
  ApiResponse post_label(std::string_view id, std::string_view body);
  ApiResponse state(std::string_view id);
  ApiResponse log(std::string_view id);

  std::size_t size() const;
  /// Sessions restored from disk at construction.
  std::size_t restored() const noexcept { return restored_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(std::string_view id) const;
  std::shared_ptr<const Dataset> dataset(const std::string& path, const std::string& label_column);
  std::shared_ptr<Session> open(const std::string& id, const RunConfig& config, OracleMode mode);
  void restore();

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const Dataset>> datasets_;
  std::size_t next_id_ = 1;
  std::size_t restored_ = 0;
};

/// HTTP front end over a SessionManager; `static_dir` is served at "/".
class OracleServer {
 public:
  OracleServer(SessionManager& sessions, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~OracleServer();
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cafda
