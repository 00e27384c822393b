#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "rimr/training/objectives.h"

namespace rimr::training {

// Scored-group record:
// {"context_id": str, "context": [int], "outputs": [{"tokens": [int],
//  "step_ends": [int x4], "scores": {<rubric fields>}}]}
nlohmann::json to_json(const ScoredGroup& group);
ScoredGroup scored_group_from_json(const nlohmann::json& j);
std::vector<ScoredGroup> read_scored_groups(const std::filesystem::path& path);
void write_scored_groups(const std::filesystem::path& path, const std::vector<ScoredGroup>& groups);

// SFT record: {"context": [int], "target": [int]}
nlohmann::json to_json(const SftExample& example);
SftExample sft_example_from_json(const nlohmann::json& j);
std::vector<SftExample> read_sft_examples(const std::filesystem::path& path);
void write_sft_examples(const std::filesystem::path& path, const std::vector<SftExample>& examples);

// Policy file: {"vocab_size": V, "context_order": n, "params": [double]}
nlohmann::json to_json(const ToyPolicy& policy);
ToyPolicy policy_from_json(const nlohmann::json& j);
ToyPolicy load_policy(const std::filesystem::path& path);
void save_policy(const std::filesystem::path& path, const ToyPolicy& policy);

// Groups of two outputs over vocab V: a high output drawn from the lower half of
// the vocabulary scored 5 on every rubric, and a low output drawn from the upper
// half scored 0 on every rubric. Step ends at 3, 7, 11, 15 for seq_len 16.
std::vector<ScoredGroup> make_directional_corpus(std::uint64_t seed, int group_count, int vocab_size,
                                                 int seq_len);

// Random targets over V tokens; a uniform policy scores ln V per token on them.
std::vector<SftExample> make_sft_corpus(std::uint64_t seed, int example_count, int vocab_size, int seq_len);

}  // namespace rimr::training
