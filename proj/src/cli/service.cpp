#include "rimr/cli/service.h"

#include <cstdio>

#include "httplib.h"
#include "rimr/serialize.h"
#include "rimr/util/text.h"

namespace rimr::cli {

using nlohmann::json;

SessionService::SessionService(RunConfig config, std::vector<FivePProfile> profiles, Clock clock)
    : config_(std::move(config)), factory_(config_), profiles_(std::move(profiles)), clock_(std::move(clock)) {}

json SessionService::health() const {
  return json{{"status", "ok"}, {"sessions", session_count()}, {"max_turns", config_.limits.max_turns}};
}

json SessionService::list_profiles() const {
  json list = json::array();
  for (const auto& p : profiles_) list.push_back(to_json(p));
  return json{{"profiles", list}};
}

json SessionService::create_session(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kParseFailure, "request body must be an object");
  FivePProfile profile;
  if (auto it = body.find("profile"); it != body.end()) {
    profile = validate_profile(*it);
  } else if (auto id = body.find("profile_id"); id != body.end() && id->is_string()) {
    auto match = std::find_if(profiles_.begin(), profiles_.end(),
                              [&](const FivePProfile& p) { return p.profile_id == id->get<std::string>(); });
    if (match == profiles_.end()) throw Error(ErrorCode::kInvalidValue, "unknown profile_id '" + id->get<std::string>() + "'");
    profile = *match;
  } else {
    throw Error(ErrorCode::kMissingField, "need 'profile_id' or 'profile'");
  }
  const bool trainer_mode = body.value("trainer_mode", false);

  auto s = std::make_shared<Session>();
  s->client = factory_.client(profile);
  s->moderator = factory_.moderator(0);  // stub sessions end only by the trainee or the turn cap
  s->trainer_mode = trainer_mode;
  s->transcript.profile = std::move(profile);
  s->transcript.termination = Termination::kSourceComplete;

  std::string id;
  {
    std::lock_guard lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s-%06llu", static_cast<unsigned long long>(next_id_++));
    id = buf;
    s->transcript.session_id = id;
    s->last_active = clock_();
    sessions_[id] = s;
  }
  expire_idle();
  return json{{"session_id", id},
              {"status", "active"},
              {"trainer_mode", trainer_mode},
              {"max_turns", config_.limits.max_turns},
              {"profile", to_json(s->transcript.profile)}};
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& session_id) {
  expire_idle();
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kSessionNotFound, "no session '" + session_id + "'");
  it->second->last_active = clock_();
  return it->second;
}

namespace {

json reason_json(const std::optional<Termination>& reason) {
  return reason ? json(std::string(termination_code(*reason))) : json(nullptr);
}

}  // namespace

json SessionService::post_turn(const std::string& session_id, const json& body) {
  auto s = find(session_id);
  if (!body.is_object()) throw Error(ErrorCode::kParseFailure, "request body must be an object");
  auto text_it = body.find("text");
  if (text_it == body.end() || !text_it->is_string() || text::trim(text_it->get<std::string>()).empty()) {
    throw Error(ErrorCode::kInvalidValue, "'text' must be a non-blank string");
  }
  const bool show_trace = s->trainer_mode || body.value("include_trace", false);

  std::lock_guard lock(s->mu);
  if (s->terminated) {
    throw Error(ErrorCode::kSessionTerminated,
                "session '" + session_id + "' ended: " + std::string(termination_code(*s->reason)));
  }
  Transcript& t = s->transcript;
  const std::size_t cap = static_cast<std::size_t>(config_.limits.max_turns);
  auto finish = [&](Termination reason) {
    s->terminated = true;
    s->reason = reason;
    t.termination = reason;
  };
  json response{{"session_id", session_id}, {"reply", nullptr}, {"label", nullptr}, {"terminated", false},
                {"reason", nullptr}};
  if (t.conversational_turn_count() >= cap) {
    finish(Termination::kTurnCapReached);
  } else {
    const int next_index = t.turns.empty() ? 0 : t.turns.back().turn_index + 1;
    t.turns.push_back({Speaker::kCounselor, std::string(text::trim(text_it->get<std::string>())), next_index});
    if (t.conversational_turn_count() >= cap) {
      finish(Termination::kTurnCapReached);
    } else {
      sim::SessionOptions opts{config_.limits, config_.sampling};
      const std::size_t rollback = t.turns.size() - 1;
      const int client_turns = s->client_turns;
      try {
        Turn client = sim::generate_client_turn(t.profile, t.turns, next_index + 1, *s->client, opts);
        t.turns.push_back(client);
        ++s->client_turns;
        response["turn_index"] = client.turn_index;
        response["reply"] = client.text;
        response["label"] = std::string(label_code(*client.label));
        response["parse_failed"] = client.parse_failed;
        if (show_trace && client.trace) response["trace"] = to_json(*client.trace);
        if (t.conversational_turn_count() >= cap) {
          finish(Termination::kTurnCapReached);
        } else if (s->client_turns % config_.limits.moderator_every == 0) {
          auto outcome = sim::consult_moderator(t, next_index + 2, *s->moderator, opts);
          t.turns.push_back(std::move(outcome.turn));
          if (outcome.terminate) finish(Termination::kModeratorTerminate);
        }
      } catch (const BackendError&) {
        // The trainee may resend the same turn.
        t.turns.resize(rollback);
        s->client_turns = client_turns;
        throw;
      }
    }
  }
  response["terminated"] = s->terminated;
  response["reason"] = reason_json(s->reason);
  return response;
}

json SessionService::session_json(Session& s, bool include_traces) const {
  return json{{"session_id", s.transcript.session_id},
              {"status", s.terminated ? "terminated" : "active"},
              {"reason", reason_json(s.reason)},
              {"trainer_mode", s.trainer_mode},
              {"transcript", include_traces ? to_json(s.transcript) : to_json_without_traces(s.transcript)}};
}

json SessionService::get_session(const std::string& session_id, bool include_traces) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return session_json(*s, include_traces);
}

std::size_t SessionService::expire_idle() {
  const auto now = clock_();
  const auto limit = std::chrono::seconds(config_.idle_timeout_s);
  std::lock_guard lock(mu_);
  return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_active > limit; });
}

std::size_t SessionService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

json error_payload(ErrorCode code, const std::string& message) {
  return json{{"error", {{"code", std::string(error_code_name(code))}, {"message", message}}}};
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSessionNotFound: return 404;
    case ErrorCode::kSessionTerminated: return 409;
    case ErrorCode::kBackendFailure: return 502;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    send(res, 200, fn());
  } catch (const Error& e) {
    send(res, http_status(e.code()), error_payload(e.code(), e.what()));
  } catch (const json::exception& e) {
    send(res, 400, error_payload(ErrorCode::kParseFailure, e.what()));
  } catch (const std::exception& e) {
    send(res, 500, json{{"error", {{"code", "Internal"}, {"message", e.what()}}}});
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseFailure, std::string("request body: ") + e.what());
  }
}

bool wants_trace(const httplib::Request& req) {
  return req.has_param("trace") && req.get_param_value("trace") != "0";
}

}  // namespace

void install_routes(httplib::Server& server, SessionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.health(); });
  });
  server.Get("/profiles", [&](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.list_profiles(); });
  });
  server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.create_session(parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/turns)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.post_turn(req.matches[1], parse_body(req)); });
  });
  server.Get(R"(/sessions/([^/]+)/export)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.get_session(req.matches[1], wants_trace(req))["transcript"]; });
  });
  server.Get(R"(/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.get_session(req.matches[1], wants_trace(req)); });
  });
}

}  // namespace rimr::cli
