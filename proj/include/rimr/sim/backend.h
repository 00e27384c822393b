#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimr/domain.h"

namespace rimr::sim {

struct SamplingConfig {
  double temperature = 0.7;
  double top_p = 0.8;
  int top_k = 20;
  int max_tokens = 1024;

  bool operator==(const SamplingConfig&) const = default;
};

// Throws Error(kInvalidValue).
void validate_sampling(const SamplingConfig& sampling);
nlohmann::json to_json(const SamplingConfig& sampling);
SamplingConfig sampling_from_json(const nlohmann::json& j);

// Chat history from the generating role's point of view: its own past turns are
// "assistant", the other party's are "user".
struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Throws BackendError when the model cannot produce output.
  virtual std::string generate(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                               const SamplingConfig& sampling) = 0;
};

// Returns canned outputs in order; throws BackendError once exhausted unless
// constructed cycling. Thread-safe.
class ScriptedBackend : public ModelBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> outputs, bool cycle = false);
  static ScriptedBackend constant(std::string output) { return ScriptedBackend({std::move(output)}, true); }

  std::string generate(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                       const SamplingConfig& sampling) override;

  std::size_t calls() const;
  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> outputs_;
  bool cycle_;
  std::size_t next_ = 0;
  std::vector<std::string> prompts_;
};

// Wraps a callable; handy for stubs that look at the message history.
class FunctionBackend : public ModelBackend {
 public:
  using Fn = std::function<std::string(const std::string&, const std::vector<ChatMessage>&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string generate(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                       const SamplingConfig&) override {
    return fn_(role_prompt, messages);
  }

 private:
  Fn fn_;
};

// Client backend that answers with the gold client turns of a labeled session.
// The k-th gold client turn is returned when the history holds k assistant
// messages, so one instance can serve any number of sessions concurrently.
class ReplayBackend : public ModelBackend {
 public:
  explicit ReplayBackend(Transcript gold);
  std::string generate(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                       const SamplingConfig& sampling) override;

 private:
  std::vector<std::string> outputs_;
};

// Canonical client output for a labeled gold turn (synthesizes a trace when absent).
std::string render_gold_client_output(const Turn& turn);

struct RemoteConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string path = "/v1/generate";
  std::string auth_token;  // sent as a Bearer token, never logged
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff{250};
};

// POST {role_prompt, messages, sampling} -> {text}. Retries with exponential
// backoff, then throws BackendError.
class RemoteChatBackend : public ModelBackend {
 public:
  explicit RemoteChatBackend(RemoteConfig config);
  std::string generate(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                       const SamplingConfig& sampling) override;

 private:
  RemoteConfig config_;
};

nlohmann::json request_body(const std::string& role_prompt, const std::vector<ChatMessage>& messages,
                            const SamplingConfig& sampling);

}  // namespace rimr::sim
