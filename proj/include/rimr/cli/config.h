#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "rimr/dataset/pipeline.h"
#include "rimr/sim/harness.h"
#include "rimr/training/rewards.h"

namespace rimr::cli {

enum class BackendKind { kStub, kRemote };

struct Endpoints {
  std::string counselor_url;
  std::string client_url;
  std::string moderator_url;
  std::string annotation_url;
  std::string path = "/v1/generate";
  int timeout_ms = 30000;
  int retries = 2;
};

struct RunConfig {
  BackendKind backend = BackendKind::kStub;
  Endpoints endpoints;
  std::string auth_token;  // environment only; never serialized
  sim::SamplingConfig sampling;
  sim::SessionLimits limits;
  training::NormalizationScope normalization_scope = training::NormalizationScope::kPerStepIndex;
  std::uint64_t seed = 0;
  int workers = 1;
  int repeats = 1;
  int max_followup_turns = 3;
  int stub_moderator_turns = 6;  // stub moderator terminates on this consultation
  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  int idle_timeout_s = 1800;
  std::string profiles_path;  // empty: built-in fixture profiles
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// Config file values over defaults, then environment overrides:
// RIMR_BACKEND, RIMR_COUNSELOR_URL, RIMR_CLIENT_URL, RIMR_MODERATOR_URL,
// RIMR_ANNOTATION_URL, RIMR_AUTH_TOKEN, RIMR_SEED. Throws Error(kInvalidValue /
// kParseFailure) on bad values; an "auth_token" key in a file is rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = process_env);
void apply_env(RunConfig& config, const EnvLookup& env);
void validate_run_config(const RunConfig& config);

// Serialized config for artifact headers; the credential is left out.
nlohmann::json to_json(const RunConfig& config);

// First JSONL line of every artifact: {"rimr_artifact": {kind, seed, config}}.
nlohmann::json artifact_header(const std::string& kind, const RunConfig& config);
bool is_artifact_header(const nlohmann::json& record);
// "# kind=... seed=..." first line for tab-separated artifacts.
std::string tsv_header(const std::string& kind, const RunConfig& config);

// JSONL records without the artifact header line.
std::vector<nlohmann::json> read_records(const std::filesystem::path& path);

// Backends described by the config.
class BackendFactory {
 public:
  explicit BackendFactory(RunConfig config);
  std::unique_ptr<sim::ModelBackend> counselor() const;
  std::unique_ptr<sim::ModelBackend> client(const FivePProfile& profile) const;
  // Stub moderators terminate on their stub_moderator_turns-th consultation;
  // pass 0 for one that always continues.
  std::unique_ptr<sim::ModelBackend> moderator(int stub_turns) const;
  std::unique_ptr<dataset::AnnotationBackend> annotator() const;
  const RunConfig& config() const { return config_; }

 private:
  std::unique_ptr<sim::ModelBackend> remote(const std::string& url, const char* role) const;
  RunConfig config_;
};

// Profiles of the corpus built from the fixture sessions with the rule-based annotator.
std::vector<FivePProfile> fixture_profiles();

}  // namespace rimr::cli
