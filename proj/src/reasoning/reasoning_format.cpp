#include "rimr/reasoning_format.h"

#include <array>
#include <utility>

#include "rimr/assets.h"
#include "rimr/serialize.h"
#include "rimr/util/template.h"
#include "rimr/util/text.h"

namespace rimr {

namespace {

constexpr std::array<std::string_view, 3> kStepNames = {"Profile Reflection", "Situation Awareness",
                                                        "Reaction Decision"};

struct LabelAlias {
  std::string_view name;
  ReactionLabel label;
};

// Longer aliases first so a match at the same offset prefers the full name.
constexpr std::array<LabelAlias, 10> kLabelAliases = {{
    {"Controlling Resistance", ReactionLabel::kControllingResistance},
    {"Emotional Resistance", ReactionLabel::kEmotionalResistance},
    {"Defensive Resistance", ReactionLabel::kDefensiveResistance},
    {"Avoidant Resistance", ReactionLabel::kAvoidantResistance},
    {"Compliant Resistance", ReactionLabel::kCompliantResistance},
    {"Non-resistant Reaction", ReactionLabel::kNonResistant},
    {"Facilitative Reaction", ReactionLabel::kFacilitative},
    {"Non-resistance", ReactionLabel::kNonResistant},
    {"Non-resistant", ReactionLabel::kNonResistant},
    {"Facilitative", ReactionLabel::kFacilitative},
}};

bool is_decoration(char c) { return c == '*' || c == '#' || c == '-' || c == '_' || c == '>'; }

std::string_view skip_spaces(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::string_view skip_decoration(std::string_view s) {
  s = skip_spaces(s);
  while (!s.empty() && is_decoration(s.front())) s = skip_spaces(s.substr(1));
  return s;
}

// Recognizes "1. Profile Reflection:", "**Step 2 - Situation Awareness**", "reaction decision：".
// Returns the 1-based step number and the text after the header, or 0.
std::pair<int, std::string_view> match_step_header(std::string_view line) {
  std::string_view s = skip_decoration(line);
  if (text::istarts_with(s, "step")) s = skip_spaces(s.substr(4));
  std::size_t digits = 0;
  while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
  if (digits > 0) {
    s.remove_prefix(digits);
    if (!s.empty() && (s.front() == '.' || s.front() == ')' || s.front() == ':')) s.remove_prefix(1);
  }
  s = skip_decoration(s);
  for (std::size_t k = 0; k < kStepNames.size(); ++k) {
    if (!text::istarts_with(s, kStepNames[k])) continue;
    std::string_view rest = s.substr(kStepNames[k].size());
    rest = skip_decoration(rest);
    if (!rest.empty() && rest.front() == ':') {
      rest.remove_prefix(1);
    } else if (rest.substr(0, 3) == "\xEF\xBC\x9A") {  // full-width colon
      rest.remove_prefix(3);
    }
    rest = skip_decoration(rest);
    return {static_cast<int>(k) + 1, rest};
  }
  return {0, {}};
}

std::string join_trimmed(const std::vector<std::string_view>& lines) {
  std::string out;
  for (std::string_view l : lines) {
    if (!out.empty()) out += '\n';
    out.append(l);
  }
  return std::string(text::trim(out));
}

}  // namespace

std::string taxonomy_text() { return assets::load(assets::kTaxonomy); }

void validate_client_prompt_context(const ClientPromptContext& ctx) {
  if (text::is_blank(ctx.counselor_utterance)) {
    throw Error(ErrorCode::kPrecondition, "counselor utterance is blank");
  }
  for (ReactionLabel label : kAllLabels) {
    std::string_view name = label_display_name(label);
    std::size_t first = text::ifind(ctx.taxonomy_text, name);
    if (first == std::string_view::npos ||
        text::ifind(ctx.taxonomy_text, name, first + name.size()) != std::string_view::npos) {
      throw Error(ErrorCode::kPrecondition,
                  "taxonomy must name '" + std::string(name) + "' exactly once");
    }
  }
}

ClientPromptContext make_client_prompt_context(FivePProfile profile, std::vector<Turn> history,
                                               std::string counselor_utterance) {
  ClientPromptContext ctx{std::move(profile), std::move(history), std::move(counselor_utterance),
                          taxonomy_text()};
  validate_client_prompt_context(ctx);
  return ctx;
}

std::string format_conversation(const std::vector<Turn>& turns) {
  std::string out;
  for (const Turn& t : turns) {
    if (t.speaker == Speaker::kModerator) continue;
    out += t.speaker == Speaker::kCounselor ? "Counselor: " : "Client: ";
    out += t.text;
    out += '\n';
  }
  return out;
}

std::string render_client_prompt(const ClientPromptContext& ctx) {
  validate_client_prompt_context(ctx);
  std::string history_block;
  std::string conversation = format_conversation(ctx.history);
  if (!conversation.empty()) history_block = "\nConversation history:\n" + conversation;
  return render_template(assets::load(assets::kClientPrompt),
                         {{"profile_json", to_json(ctx.profile).dump(2)},
                          {"taxonomy", std::string(text::trim(ctx.taxonomy_text))},
                          {"history_block", history_block},
                          {"counselor_utterance", ctx.counselor_utterance}});
}

std::string render_counselor_prompt() {
  return render_template(assets::load(assets::kCounselorPrompt),
                         {{"opener", std::string(kCounselorOpener)}});
}

std::string render_moderator_prompt(const Transcript& transcript, int max_turns) {
  if (transcript.turns.empty()) {
    throw Error(ErrorCode::kPrecondition, "moderator prompt needs a non-empty transcript");
  }
  std::string history;
  int n = 0;
  for (const Turn& t : transcript.turns) {
    if (t.speaker == Speaker::kModerator) continue;
    ++n;
    history += "[" + std::to_string(n) + "] ";
    history += t.speaker == Speaker::kCounselor ? "Counselor: " : "Client: ";
    history += t.text;
    history += '\n';
  }
  return render_template(assets::load(assets::kModeratorPrompt),
                         {{"max_turns", std::to_string(max_turns)},
                          {"turn_count", std::to_string(n)},
                          {"history", history}});
}

std::optional<ReactionLabel> find_label_name(std::string_view text) {
  std::optional<ReactionLabel> best;
  std::size_t best_pos = std::string_view::npos;
  for (const LabelAlias& alias : kLabelAliases) {
    std::size_t pos = text::ifind(text, alias.name);
    if (pos < best_pos) {
      best_pos = pos;
      best = alias.label;
    }
  }
  return best;
}

ParsedClientOutput parse_client_output(std::string_view raw) {
  std::size_t open = raw.find(kThinkOpen);
  if (open == std::string_view::npos) {
    throw ClientOutputError(ErrorCode::kMissingThinkBlock, "no <think> tag");
  }
  std::size_t body_start = open + kThinkOpen.size();
  std::size_t close = raw.find(kThinkClose, body_start);
  if (close == std::string_view::npos) {
    throw ClientOutputError(ErrorCode::kMissingThinkBlock, "no </think> tag");
  }
  std::string_view body = raw.substr(body_start, close - body_start);

  std::array<std::vector<std::string_view>, 3> sections;
  int current = 0;  // step being collected, 0 = before step 1
  for (std::string_view line : text::split_lines(body)) {
    auto [step, rest] = match_step_header(line);
    if (step == current + 1) {
      current = step;
      sections[static_cast<std::size_t>(current - 1)].push_back(rest);
    } else if (current > 0) {
      sections[static_cast<std::size_t>(current - 1)].push_back(line);
    }
  }

  std::array<std::string, 3> steps;
  for (std::size_t k = 0; k < 3; ++k) {
    steps[k] = join_trimmed(sections[k]);
    if (steps[k].empty()) {
      throw ClientOutputError(ErrorCode::kMissingStep,
                              "missing step " + std::to_string(k + 1) + " (" +
                                  std::string(kStepNames[k]) + ")",
                              static_cast<int>(k) + 1);
    }
  }

  auto label = find_label_name(steps[2]);
  if (!label) {
    throw ClientOutputError(ErrorCode::kUnknownLabel, "reaction decision names no known label");
  }

  std::string reply(text::trim(raw.substr(close + kThinkClose.size())));
  if (reply.empty()) throw ClientOutputError(ErrorCode::kEmptyReply, "no reply after </think>");

  return {ReasoningTrace{std::move(steps[0]), std::move(steps[1]), std::move(steps[2]), *label},
          std::move(reply)};
}

std::string render_client_output(const ReasoningTrace& trace, std::string_view reply) {
  std::string out(kThinkOpen);
  out += "\n1. Profile Reflection: " + trace.profile_reflection;
  out += "\n2. Situation Awareness: " + trace.situation_awareness;
  out += "\n3. Reaction Decision: " + trace.reaction_decision;
  out += "\n";
  out += kThinkClose;
  out += "\n";
  out += reply;
  return out;
}

std::string compose_reaction_decision(ReactionLabel label, std::string_view behavior) {
  std::string out(label_display_name(label));
  std::string_view b = text::trim(behavior);
  if (!b.empty()) {
    out += ". ";
    out += b;
  }
  return out;
}

ModeratorDecision parse_moderator_decision(std::string_view raw) {
  bool has_continue = text::icontains(raw, "[continue]");
  bool has_terminate = text::icontains(raw, "[terminate]");
  if (has_continue && has_terminate) {
    throw Error(ErrorCode::kAmbiguousDecision, "both [CONTINUE] and [TERMINATE] present");
  }
  if (has_continue) return ModeratorDecision::kContinue;
  if (has_terminate) return ModeratorDecision::kTerminate;
  throw Error(ErrorCode::kNoDecision, "no [CONTINUE] or [TERMINATE] token");
}

std::string_view moderator_token(ModeratorDecision decision) {
  return decision == ModeratorDecision::kContinue ? "[CONTINUE]" : "[TERMINATE]";
}

}  // namespace rimr
