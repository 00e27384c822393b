#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rimr::assets {

// Returns the named asset (path relative to assets/, e.g. "prompts/client.v1.txt").
// When RIMR_ASSET_DIR is set and contains the file, that copy wins so prompt
// wording can be edited without rebuilding. Throws Error(kIo) for unknown names.
std::string load(std::string_view name);

std::vector<std::string> embedded_names();

inline constexpr std::string_view kClientPrompt = "prompts/client.v1.txt";
inline constexpr std::string_view kModeratorPrompt = "prompts/moderator.v1.txt";
inline constexpr std::string_view kCounselorPrompt = "prompts/counselor.v1.txt";
inline constexpr std::string_view kProfileExtractionPrompt = "prompts/profile_extraction.v1.txt";
inline constexpr std::string_view kProfileJudgePrompt = "prompts/profile_judge.v1.txt";
inline constexpr std::string_view kRewritePrompt = "prompts/rewrite.v1.txt";
inline constexpr std::string_view kAnnotatePrompt = "prompts/annotate.v1.txt";
inline constexpr std::string_view kTaxonomy = "taxonomy.v1.txt";
inline constexpr std::string_view kTriggerPatterns = "trigger_patterns.v1.json";
inline constexpr std::string_view kProfileLexicon = "profile_lexicon.v1.json";

}  // namespace rimr::assets
