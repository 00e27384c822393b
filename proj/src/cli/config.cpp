#include "rimr/cli/config.h"

#include <cctype>
#include <cstdlib>
#include <set>

#include "rimr/serialize.h"

namespace rimr::cli {

using nlohmann::json;

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

namespace {

BackendKind parse_backend(const std::string& s) {
  if (s == "stub") return BackendKind::kStub;
  if (s == "remote") return BackendKind::kRemote;
  throw Error(ErrorCode::kInvalidValue, "backend must be 'stub' or 'remote', got '" + s + "'");
}

std::string backend_code(BackendKind k) { return k == BackendKind::kStub ? "stub" : "remote"; }

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::kInvalidValue, "unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

std::uint64_t parse_seed(const std::string& s) {
  try {
    if (s.empty() || !std::isdigit(static_cast<unsigned char>(s.front()))) throw std::invalid_argument(s);
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidValue, "seed must be a non-negative integer, got '" + s + "'");
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParseFailure, "config must be an object");
  if (j.contains("auth_token")) {
    throw Error(ErrorCode::kInvalidValue, "auth_token is read from RIMR_AUTH_TOKEN, not the config file");
  }
  reject_unknown(j,
                 {"backend", "endpoints", "sampling", "limits", "normalization_scope", "seed", "workers", "repeats",
                  "max_followup_turns", "stub_moderator_turns", "serve"},
                 "");
  RunConfig c;
  try {
    if (j.contains("backend")) c.backend = parse_backend(j["backend"].get<std::string>());
    if (j.contains("endpoints")) {
      const json& e = j["endpoints"];
      reject_unknown(e, {"counselor_url", "client_url", "moderator_url", "annotation_url", "path", "timeout_ms", "retries"},
                     "endpoints.");
      read(e, "counselor_url", c.endpoints.counselor_url);
      read(e, "client_url", c.endpoints.client_url);
      read(e, "moderator_url", c.endpoints.moderator_url);
      read(e, "annotation_url", c.endpoints.annotation_url);
      read(e, "path", c.endpoints.path);
      read(e, "timeout_ms", c.endpoints.timeout_ms);
      read(e, "retries", c.endpoints.retries);
    }
    if (j.contains("sampling")) c.sampling = sim::sampling_from_json(j["sampling"]);
    if (j.contains("limits")) {
      reject_unknown(j["limits"], {"max_turns", "moderator_every"}, "limits.");
      read(j["limits"], "max_turns", c.limits.max_turns);
      read(j["limits"], "moderator_every", c.limits.moderator_every);
    }
    if (j.contains("normalization_scope")) {
      const auto code = j["normalization_scope"].get<std::string>();
      auto scope = training::parse_normalization_scope(code);
      if (!scope) throw Error(ErrorCode::kInvalidValue, "unknown normalization_scope '" + code + "'");
      c.normalization_scope = *scope;
    }
    read(j, "seed", c.seed);
    read(j, "workers", c.workers);
    read(j, "repeats", c.repeats);
    read(j, "max_followup_turns", c.max_followup_turns);
    read(j, "stub_moderator_turns", c.stub_moderator_turns);
    if (j.contains("serve")) {
      const json& s = j["serve"];
      reject_unknown(s, {"host", "port", "idle_timeout_s", "profiles_path"}, "serve.");
      read(s, "host", c.host);
      read(s, "port", c.port);
      read(s, "idle_timeout_s", c.idle_timeout_s);
      read(s, "profiles_path", c.profiles_path);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseFailure, std::string("config: ") + e.what());
  }
  return c;
}

void apply_env(RunConfig& c, const EnvLookup& env) {
  if (auto v = env("RIMR_BACKEND")) c.backend = parse_backend(*v);
  if (auto v = env("RIMR_COUNSELOR_URL")) c.endpoints.counselor_url = *v;
  if (auto v = env("RIMR_CLIENT_URL")) c.endpoints.client_url = *v;
  if (auto v = env("RIMR_MODERATOR_URL")) c.endpoints.moderator_url = *v;
  if (auto v = env("RIMR_ANNOTATION_URL")) c.endpoints.annotation_url = *v;
  if (auto v = env("RIMR_AUTH_TOKEN")) c.auth_token = *v;
  if (auto v = env("RIMR_SEED")) c.seed = parse_seed(*v);
}

void validate_run_config(const RunConfig& c) {
  sim::validate_limits(c.limits);
  sim::validate_sampling(c.sampling);
  if (c.workers < 1) throw Error(ErrorCode::kInvalidValue, "workers must be >= 1");
  if (c.repeats < 1) throw Error(ErrorCode::kInvalidValue, "repeats must be >= 1");
  if (c.max_followup_turns < 0 || c.max_followup_turns > 3) {
    throw Error(ErrorCode::kInvalidValue, "max_followup_turns must be in [0, 3]");
  }
  if (c.stub_moderator_turns < 0) throw Error(ErrorCode::kInvalidValue, "stub_moderator_turns must be >= 0");
  if (c.idle_timeout_s < 1) throw Error(ErrorCode::kInvalidValue, "idle_timeout_s must be >= 1");
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kInvalidValue, "port out of range");
  if (c.endpoints.retries < 0 || c.endpoints.timeout_ms < 1) {
    throw Error(ErrorCode::kInvalidValue, "endpoint retries must be >= 0 and timeout_ms >= 1");
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  RunConfig c;
  if (path) {
    json j;
    try {
      j = json::parse(read_text_file(*path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseFailure, path->string() + ": " + e.what());
    }
    c = config_from_json(j);
  }
  apply_env(c, env);
  validate_run_config(c);
  return c;
}

json to_json(const RunConfig& c) {
  return json{{"backend", backend_code(c.backend)},
              {"endpoints",
               {{"counselor_url", c.endpoints.counselor_url},
                {"client_url", c.endpoints.client_url},
                {"moderator_url", c.endpoints.moderator_url},
                {"annotation_url", c.endpoints.annotation_url},
                {"path", c.endpoints.path},
                {"timeout_ms", c.endpoints.timeout_ms},
                {"retries", c.endpoints.retries}}},
              {"sampling", sim::to_json(c.sampling)},
              {"limits", {{"max_turns", c.limits.max_turns}, {"moderator_every", c.limits.moderator_every}}},
              {"normalization_scope", std::string(training::normalization_scope_code(c.normalization_scope))},
              {"seed", c.seed},
              {"workers", c.workers},
              {"repeats", c.repeats},
              {"max_followup_turns", c.max_followup_turns},
              {"stub_moderator_turns", c.stub_moderator_turns},
              {"serve",
               {{"host", c.host},
                {"port", c.port},
                {"idle_timeout_s", c.idle_timeout_s},
                {"profiles_path", c.profiles_path}}}};
}

json artifact_header(const std::string& kind, const RunConfig& config) {
  return json{{"rimr_artifact", {{"kind", kind}, {"seed", config.seed}, {"config", to_json(config)}}}};
}

bool is_artifact_header(const json& record) { return record.is_object() && record.contains("rimr_artifact"); }

std::string tsv_header(const std::string& kind, const RunConfig& config) {
  return "# kind=" + kind + " seed=" + std::to_string(config.seed) + " backend=" + backend_code(config.backend) + "\n";
}

std::vector<json> read_records(const std::filesystem::path& path) {
  auto records = jsonl::read_file(path);
  if (!records.empty() && is_artifact_header(records.front())) records.erase(records.begin());
  return records;
}

BackendFactory::BackendFactory(RunConfig config) : config_(std::move(config)) {}

std::unique_ptr<sim::ModelBackend> BackendFactory::remote(const std::string& url, const char* role) const {
  if (url.empty()) throw Error(ErrorCode::kInvalidValue, std::string("remote backend needs a ") + role + " URL");
  sim::RemoteConfig rc;
  rc.base_url = url;
  rc.path = config_.endpoints.path;
  rc.auth_token = config_.auth_token;
  rc.timeout = std::chrono::milliseconds(config_.endpoints.timeout_ms);
  rc.retries = config_.endpoints.retries;
  return std::make_unique<sim::RemoteChatBackend>(rc);
}

std::unique_ptr<sim::ModelBackend> BackendFactory::counselor() const {
  if (config_.backend == BackendKind::kStub) return sim::make_stub_counselor();
  return remote(config_.endpoints.counselor_url, "counselor");
}

std::unique_ptr<sim::ModelBackend> BackendFactory::client(const FivePProfile& profile) const {
  if (config_.backend == BackendKind::kStub) return sim::make_stub_client(profile);
  return remote(config_.endpoints.client_url, "client");
}

std::unique_ptr<sim::ModelBackend> BackendFactory::moderator(int stub_turns) const {
  if (config_.backend == BackendKind::kRemote) return remote(config_.endpoints.moderator_url, "moderator");
  if (stub_turns <= 0) {
    return std::make_unique<sim::FunctionBackend>(
        [](const std::string&, const std::vector<sim::ChatMessage>&) { return std::string("[CONTINUE]"); });
  }
  return sim::make_stub_moderator(stub_turns);
}

std::unique_ptr<dataset::AnnotationBackend> BackendFactory::annotator() const {
  if (config_.backend == BackendKind::kStub) return std::make_unique<dataset::RuleBasedAnnotationBackend>();
  std::shared_ptr<sim::ModelBackend> model = remote(config_.endpoints.annotation_url, "annotation");
  return std::make_unique<dataset::ChatAnnotationBackend>(model, config_.sampling);
}

std::vector<FivePProfile> fixture_profiles() {
  dataset::RuleBasedAnnotationBackend backend;
  auto result = dataset::build_corpus(dataset::make_fixture_sessions(), backend, {});
  std::vector<FivePProfile> out;
  for (const auto& t : result.corpus) out.push_back(t.profile);
  return out;
}

}  // namespace rimr::cli
