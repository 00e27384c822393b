#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimr/domain.h"

// Canonical JSON identities for the domain types. Corpus, transcript and
// service payloads are all built from these.
namespace rimr {

nlohmann::json to_json(const FivePProfile& profile);
nlohmann::json to_json(const ReasoningTrace& trace);
nlohmann::json to_json(const Turn& turn);
nlohmann::json to_json(const Transcript& transcript);
nlohmann::json to_json(const RubricScores& scores);

// from_json functions throw Error(kParseFailure) naming the offending field.
ReasoningTrace trace_from_json(const nlohmann::json& j);
Turn turn_from_json(const nlohmann::json& j);
Transcript transcript_from_json(const nlohmann::json& j);
RubricScores rubric_scores_from_json(const nlohmann::json& j);

// Same record without reasoning traces (trainee-facing views).
nlohmann::json to_json_without_traces(const Transcript& transcript);

namespace jsonl {

// One compact JSON value per line. Lines that are blank are skipped on read.
std::vector<nlohmann::json> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);
void append_line(const std::filesystem::path& path, const nlohmann::json& record);

}  // namespace jsonl

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rimr
