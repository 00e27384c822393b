#include "rimr/training/fixtures.h"

#include <random>

#include "rimr/serialize.h"

namespace rimr::training {

using nlohmann::json;

namespace {

std::vector<int> int_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw Error(ErrorCode::kParseFailure, std::string("field '") + key + "' must be an integer list");
  }
  std::vector<int> out;
  for (const json& v : *it) {
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::kParseFailure, std::string("field '") + key + "' must hold integers");
    }
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

json to_json(const ScoredGroup& group) {
  json outputs = json::array();
  for (const SampledOutput& o : group.outputs) {
    outputs.push_back({{"tokens", o.tokens},
                       {"step_ends", o.step_end_indices},
                       {"scores", rimr::to_json(o.raw_scores)}});
  }
  return {{"context_id", group.context_id}, {"context", group.context}, {"outputs", outputs}};
}

ScoredGroup scored_group_from_json(const json& j) {
  ScoredGroup g;
  if (!j.is_object() || !j.contains("context_id") || !j["context_id"].is_string()) {
    throw Error(ErrorCode::kParseFailure, "scored group needs a string 'context_id'");
  }
  g.context_id = j["context_id"].get<std::string>();
  g.context = int_list(j, "context");
  if (!j.contains("outputs") || !j["outputs"].is_array()) {
    throw Error(ErrorCode::kParseFailure, "group '" + g.context_id + "' needs an 'outputs' list");
  }
  for (const json& o : j["outputs"]) {
    SampledOutput out;
    out.tokens = int_list(o, "tokens");
    auto ends = int_list(o, "step_ends");
    if (ends.size() != kStepCount) {
      throw Error(ErrorCode::kParseFailure, "group '" + g.context_id + "': step_ends needs 4 entries");
    }
    std::copy(ends.begin(), ends.end(), out.step_end_indices.begin());
    if (!o.contains("scores")) throw Error(ErrorCode::kParseFailure, "output without 'scores'");
    out.raw_scores = rubric_scores_from_json(o["scores"]);
    g.outputs.push_back(std::move(out));
  }
  return g;
}

std::vector<ScoredGroup> read_scored_groups(const std::filesystem::path& path) {
  std::vector<ScoredGroup> out;
  for (const json& j : jsonl::read_file(path)) out.push_back(scored_group_from_json(j));
  return out;
}

void write_scored_groups(const std::filesystem::path& path, const std::vector<ScoredGroup>& groups) {
  std::vector<json> records;
  for (const auto& g : groups) records.push_back(to_json(g));
  jsonl::write_file(path, records);
}

json to_json(const SftExample& example) {
  return {{"context", example.context}, {"target", example.target}};
}

SftExample sft_example_from_json(const json& j) {
  return {int_list(j, "context"), int_list(j, "target")};
}

std::vector<SftExample> read_sft_examples(const std::filesystem::path& path) {
  std::vector<SftExample> out;
  for (const json& j : jsonl::read_file(path)) out.push_back(sft_example_from_json(j));
  return out;
}

void write_sft_examples(const std::filesystem::path& path, const std::vector<SftExample>& examples) {
  std::vector<json> records;
  for (const auto& e : examples) records.push_back(to_json(e));
  jsonl::write_file(path, records);
}

json to_json(const ToyPolicy& policy) {
  return {{"vocab_size", policy.vocab_size()},
          {"context_order", policy.context_order()},
          {"params", std::vector<double>(policy.params().begin(), policy.params().end())}};
}

ToyPolicy policy_from_json(const json& j) {
  try {
    return ToyPolicy(j.at("vocab_size").get<int>(), j.at("context_order").get<int>(),
                     j.at("params").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseFailure, std::string("policy file: ") + e.what());
  }
}

ToyPolicy load_policy(const std::filesystem::path& path) {
  try {
    return policy_from_json(json::parse(read_text_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseFailure, path.string() + ": " + e.what());
  }
}

void save_policy(const std::filesystem::path& path, const ToyPolicy& policy) {
  write_text_file(path, to_json(policy).dump() + "\n");
}

std::vector<ScoredGroup> make_directional_corpus(std::uint64_t seed, int group_count, int vocab_size,
                                                 int seq_len) {
  if (seq_len < 4 || vocab_size < 2) throw Error(ErrorCode::kInvalidValue, "directional corpus too small");
  std::mt19937_64 rng(seed);
  const int half = vocab_size / 2;
  std::uniform_int_distribution<int> any(0, vocab_size - 1);
  std::uniform_int_distribution<int> low_half(0, half - 1);
  std::uniform_int_distribution<int> high_half(half, vocab_size - 1);
  const int q = seq_len / 4;
  const StepIndices ends = {q - 1, 2 * q - 1, 3 * q - 1, seq_len - 1};

  std::vector<ScoredGroup> groups;
  for (int g = 0; g < group_count; ++g) {
    ScoredGroup group;
    group.context_id = "dir-" + std::to_string(g);
    for (int c = 0; c < 4; ++c) group.context.push_back(any(rng));
    SampledOutput good;
    SampledOutput bad;
    for (int t = 0; t < seq_len; ++t) {
      good.tokens.push_back(low_half(rng));
      bad.tokens.push_back(high_half(rng));
    }
    good.step_end_indices = ends;
    bad.step_end_indices = ends;
    good.raw_scores = {5.0, 5.0, 5.0, 5.0, 5.0};
    bad.raw_scores = {0.0, 0.0, 0.0, 0.0, 0.0};
    group.outputs = {std::move(good), std::move(bad)};
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<SftExample> make_sft_corpus(std::uint64_t seed, int example_count, int vocab_size, int seq_len) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> any(0, vocab_size - 1);
  std::vector<SftExample> out;
  for (int i = 0; i < example_count; ++i) {
    SftExample e;
    for (int c = 0; c < 2; ++c) e.context.push_back(any(rng));
    for (int t = 0; t < seq_len; ++t) e.target.push_back(any(rng));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rimr::training
