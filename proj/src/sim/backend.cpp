#include "rimr/sim/backend.h"

#include <thread>

#include "httplib.h"
#include "rimr/reasoning_format.h"

namespace rimr::sim {

using nlohmann::json;

void validate_sampling(const SamplingConfig& s) {
  if (!(s.temperature >= 0.0)) throw Error(ErrorCode::kInvalidValue, "temperature must be >= 0");
  if (!(s.top_p > 0.0 && s.top_p <= 1.0)) throw Error(ErrorCode::kInvalidValue, "top_p must be in (0, 1]");
  if (s.top_k < 0) throw Error(ErrorCode::kInvalidValue, "top_k must be >= 0");
  if (s.max_tokens < 1) throw Error(ErrorCode::kInvalidValue, "max_tokens must be >= 1");
}

json to_json(const SamplingConfig& s) {
  return {{"temperature", s.temperature}, {"top_p", s.top_p}, {"top_k", s.top_k}, {"max_tokens", s.max_tokens}};
}

SamplingConfig sampling_from_json(const json& j) {
  SamplingConfig s;
  try {
    s.temperature = j.value("temperature", s.temperature);
    s.top_p = j.value("top_p", s.top_p);
    s.top_k = j.value("top_k", s.top_k);
    s.max_tokens = j.value("max_tokens", s.max_tokens);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseFailure, std::string("sampling config: ") + e.what());
  }
  validate_sampling(s);
  return s;
}

// ---- scripted ---------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> outputs, bool cycle)
    : outputs_(std::move(outputs)), cycle_(cycle) {}

std::string ScriptedBackend::generate(const std::string& role_prompt, const std::vector<ChatMessage>&,
                                      const SamplingConfig&) {
  std::lock_guard lock(mu_);
  prompts_.push_back(role_prompt);
  if (outputs_.empty() || (!cycle_ && next_ >= outputs_.size())) throw BackendError("scripted backend exhausted");
  return outputs_[next_++ % outputs_.size()];
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return prompts_.size();
}

std::vector<std::string> ScriptedBackend::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

// ---- replay -----------------------------------------------------------------

std::string render_gold_client_output(const Turn& turn) {
  if (!turn.label) throw Error(ErrorCode::kPrecondition, "gold client turn " + std::to_string(turn.turn_index) + " is unlabeled");
  if (turn.trace && turn.trace->decided_label == *turn.label) return render_client_output(*turn.trace, turn.text);
  ReasoningTrace trace{"Replayed from the labeled session.", "Replayed from the labeled session.",
                       compose_reaction_decision(*turn.label, turn.rationale.value_or("")), *turn.label};
  return render_client_output(trace, turn.text);
}

ReplayBackend::ReplayBackend(Transcript gold) {
  for (const Turn& t : gold.turns) {
    if (t.speaker == Speaker::kClient) outputs_.push_back(render_gold_client_output(t));
  }
}

std::string ReplayBackend::generate(const std::string&, const std::vector<ChatMessage>& messages,
                                    const SamplingConfig&) {
  std::size_t k = 0;
  for (const ChatMessage& m : messages) k += m.role == "assistant" ? 1 : 0;
  if (k >= outputs_.size()) throw BackendError("replay backend has no client turn " + std::to_string(k));
  return outputs_[k];
}

// ---- remote -----------------------------------------------------------------

json request_body(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                  const SamplingConfig& sampling) {
  json msgs = json::array();
  for (const ChatMessage& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"role_prompt", role_prompt}, {"messages", msgs}, {"sampling", to_json(sampling)}};
}

RemoteChatBackend::RemoteChatBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw Error(ErrorCode::kInvalidValue, "remote backend needs a base URL");
  if (config_.retries < 0) throw Error(ErrorCode::kInvalidValue, "retries must be >= 0");
}

std::string RemoteChatBackend::generate(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                                        const SamplingConfig& sampling) {
  const std::string body = request_body(role_prompt, messages, sampling).dump();
  httplib::Client cli(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  if (!config_.auth_token.empty()) cli.set_bearer_token_auth(config_.auth_token);

  std::string last_error;
  auto backoff = config_.backoff;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = cli.Post(config_.path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status < 500 && res->status != 408 && res->status != 429) break;  // not retryable
      continue;
    }
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      last_error = "response is not {\"text\": string}";
      continue;
    }
    return j["text"].get<std::string>();
  }
  throw BackendError(config_.base_url + config_.path + ": " + last_error);
}

}  // namespace rimr::sim
