#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimr/cli/config.h"

namespace httplib {
class Server;
}

namespace rimr::cli {

// Live trainee sessions: the trainee writes counselor turns, the service answers
// with simulated client turns. Turn handling is serialized per session.
class SessionService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  SessionService(RunConfig config, std::vector<FivePProfile> profiles, Clock clock = std::chrono::steady_clock::now);

  nlohmann::json health() const;
  nlohmann::json list_profiles() const;
  // body: {"profile_id": str} or {"profile": {...}}, optional "trainer_mode": bool.
  nlohmann::json create_session(const nlohmann::json& body);
  // body: {"text": str}, optional "include_trace": bool (needs trainer mode).
  nlohmann::json post_turn(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json get_session(const std::string& session_id, bool include_traces);

  // Drops sessions idle longer than the configured timeout; returns how many.
  std::size_t expire_idle();
  std::size_t session_count() const;

 private:
  struct Session {
    std::mutex mu;
    Transcript transcript;
    std::unique_ptr<sim::ModelBackend> client;
    std::unique_ptr<sim::ModelBackend> moderator;
    bool trainer_mode = false;
    bool terminated = false;
    std::optional<Termination> reason;
    int client_turns = 0;
    std::chrono::steady_clock::time_point last_active;
  };

  std::shared_ptr<Session> find(const std::string& session_id);
  nlohmann::json session_json(Session& s, bool include_traces) const;

  RunConfig config_;
  BackendFactory factory_;
  std::vector<FivePProfile> profiles_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

// {"error": {"code", "message"}} and the HTTP status for an error code.
nlohmann::json error_payload(ErrorCode code, const std::string& message);
int http_status(ErrorCode code);

// Routes: GET /health, GET /profiles, POST /sessions, POST /sessions/{id}/turns,
// GET /sessions/{id}, GET /sessions/{id}/export. "?trace=1" opts into traces.
void install_routes(httplib::Server& server, SessionService& service);

}  // namespace rimr::cli
