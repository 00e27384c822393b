#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rimr/domain.h"

namespace rimr {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kCounselorOpener = "Hello, what would you like to talk about today?";

struct ClientPromptContext {
  FivePProfile profile;
  std::vector<Turn> history;
  std::string counselor_utterance;
  std::string taxonomy_text;
};

// Uses the shipped taxonomy asset. Throws Error(kPrecondition) if the context is invalid.
ClientPromptContext make_client_prompt_context(FivePProfile profile, std::vector<Turn> history,
                                               std::string counselor_utterance);
void validate_client_prompt_context(const ClientPromptContext& ctx);

std::string taxonomy_text();

// "Counselor: ...\nClient: ..." over non-moderator turns, chronological.
std::string format_conversation(const std::vector<Turn>& turns);

std::string render_client_prompt(const ClientPromptContext& ctx);
std::string render_counselor_prompt();
// Precondition: transcript has at least one turn.
std::string render_moderator_prompt(const Transcript& transcript, int max_turns = 50);

struct ParsedClientOutput {
  ReasoningTrace trace;
  std::string reply;

  bool operator==(const ParsedClientOutput&) const = default;
};

// Throws ClientOutputError with kMissingThinkBlock, kMissingStep (step() = 1..3),
// kUnknownLabel or kEmptyReply. Never throws anything else.
ParsedClientOutput parse_client_output(std::string_view raw);

// First label name occurring in `text` (case-insensitive), if any.
std::optional<ReactionLabel> find_label_name(std::string_view text);

// Canonical wire form: think block with numbered step headers, reply on the following line.
std::string render_client_output(const ReasoningTrace& trace, std::string_view reply);

// Reaction-decision text that always leads with the label name.
std::string compose_reaction_decision(ReactionLabel label, std::string_view behavior);

enum class ModeratorDecision { kContinue, kTerminate };

// Case-insensitive scan for "[CONTINUE]" / "[TERMINATE]". Throws Error(kNoDecision)
// or Error(kAmbiguousDecision).
ModeratorDecision parse_moderator_decision(std::string_view raw);
std::string_view moderator_token(ModeratorDecision decision);

}  // namespace rimr
