#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rimr/error.h"

namespace rimr {

inline constexpr std::size_t kMaxKeywordLength = 200;

// Counseling themes used to balance the corpus.
enum class Topic {
  kEmotion,
  kInterpersonal,
  kAcademicCareer,
  kPersonalGrowth,
};

inline constexpr std::array<Topic, 4> kAllTopics = {Topic::kEmotion, Topic::kInterpersonal,
                                                    Topic::kAcademicCareer, Topic::kPersonalGrowth};

std::string_view topic_code(Topic topic);
std::optional<Topic> parse_topic(std::string_view code);

enum class FactorKind {
  kPresenting,
  kPredisposing,
  kPrecipitating,
  kPerpetuating,
  kProtective,
};

inline constexpr std::array<FactorKind, 5> kAllFactorKinds = {
    FactorKind::kPresenting, FactorKind::kPredisposing, FactorKind::kPrecipitating,
    FactorKind::kPerpetuating, FactorKind::kProtective};

std::string_view factor_field_name(FactorKind kind);    // "presenting_problems", ...
std::string_view factor_display_name(FactorKind kind);  // "Presenting Problems", ...

struct FivePProfile {
  std::string profile_id;
  Topic topic = Topic::kEmotion;
  std::vector<std::string> presenting_problems;
  std::vector<std::string> predisposing_factors;
  std::vector<std::string> precipitating_factors;
  std::vector<std::string> perpetuating_factors;
  std::vector<std::string> protective_factors;

  const std::vector<std::string>& factors(FactorKind kind) const;
  std::vector<std::string>& factors(FactorKind kind);

  bool operator==(const FivePProfile&) const = default;
};

struct ProfileViolation {
  ErrorCode code;
  std::string field;
  std::string detail;
};

class ProfileValidationError : public Error {
 public:
  explicit ProfileValidationError(std::vector<ProfileViolation> violations);
  const std::vector<ProfileViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<ProfileViolation> violations_;
};

// Checks every invariant of an already-typed profile; empty result means valid.
std::vector<ProfileViolation> profile_violations(const FivePProfile& profile);

// Builds a profile from an untyped record. Throws ProfileValidationError naming every violation.
FivePProfile validate_profile(const nlohmann::json& candidate);

enum class ReactionLabel {
  kControllingResistance,
  kEmotionalResistance,
  kDefensiveResistance,
  kAvoidantResistance,
  kCompliantResistance,
  kNonResistant,
  kFacilitative,
};

inline constexpr std::size_t kLabelCount = 7;
inline constexpr std::array<ReactionLabel, kLabelCount> kAllLabels = {
    ReactionLabel::kControllingResistance, ReactionLabel::kEmotionalResistance,
    ReactionLabel::kDefensiveResistance,   ReactionLabel::kAvoidantResistance,
    ReactionLabel::kCompliantResistance,   ReactionLabel::kNonResistant,
    ReactionLabel::kFacilitative};

constexpr bool is_resistance(ReactionLabel label) {
  switch (label) {
    case ReactionLabel::kControllingResistance:
    case ReactionLabel::kEmotionalResistance:
    case ReactionLabel::kDefensiveResistance:
    case ReactionLabel::kAvoidantResistance:
    case ReactionLabel::kCompliantResistance:
      return true;
    case ReactionLabel::kNonResistant:
    case ReactionLabel::kFacilitative:
      return false;
  }
  return false;
}

constexpr bool is_cooperative(ReactionLabel label) { return !is_resistance(label); }

constexpr std::size_t label_index(ReactionLabel label) { return static_cast<std::size_t>(label); }

std::string_view label_code(ReactionLabel label);          // wire form, e.g. "defensive_resistance"
std::string_view label_display_name(ReactionLabel label);  // prompt form, e.g. "Defensive Resistance"
std::optional<ReactionLabel> parse_label_code(std::string_view code);

// Resistance types as recognized at trigger time.
enum class TriggerKind {
  kControlling,
  kEmotional,
  kDefensive,
  kAvoidant,
  kCompliant,
};

inline constexpr std::array<TriggerKind, 5> kAllTriggerKinds = {
    TriggerKind::kControlling, TriggerKind::kEmotional, TriggerKind::kDefensive,
    TriggerKind::kAvoidant, TriggerKind::kCompliant};

struct HighRiskFeature {
  FactorKind factor;
  std::string pattern;
};

struct TriggerKindInfo {
  TriggerKind kind;
  ReactionLabel label;
  std::string typical_trigger_description;
  std::string targeted_problem_description;
  std::vector<HighRiskFeature> high_risk_profile_features;
};

const TriggerKindInfo& trigger_kind_info(TriggerKind kind);
std::string_view trigger_kind_code(TriggerKind kind);
std::optional<TriggerKind> parse_trigger_kind(std::string_view code);
ReactionLabel trigger_label(TriggerKind kind);

struct ReasoningTrace {
  std::string profile_reflection;
  std::string situation_awareness;
  std::string reaction_decision;
  ReactionLabel decided_label = ReactionLabel::kNonResistant;

  bool operator==(const ReasoningTrace&) const = default;
};

enum class Speaker { kCounselor, kClient, kModerator };

std::string_view speaker_code(Speaker speaker);
std::optional<Speaker> parse_speaker(std::string_view code);

struct Turn {
  Speaker speaker = Speaker::kCounselor;
  std::string text;
  int turn_index = 0;
  std::optional<ReactionLabel> label;
  std::optional<std::string> rationale;
  std::optional<ReasoningTrace> trace;
  // Set when the client output could not be parsed and was recorded raw.
  bool parse_failed = false;

  bool operator==(const Turn&) const = default;
};

enum class Termination {
  kModeratorTerminate,
  kTurnCapReached,
  kBackendFailure,
  // The session ended because its source material ran out (corpus sessions, replays).
  kSourceComplete,
};

std::string_view termination_code(Termination termination);
std::optional<Termination> parse_termination(std::string_view code);

struct Transcript {
  std::string session_id;
  FivePProfile profile;
  std::vector<Turn> turns;
  Termination termination = Termination::kSourceComplete;

  // Counselor and client turns; moderator turns are out-of-band.
  std::size_t conversational_turn_count() const;
  std::size_t client_turn_count() const;

  bool operator==(const Transcript&) const = default;
};

struct RubricScores {
  double think_step1_score = 0.0;
  double think_step2_score = 0.0;
  double think_step3_score = 0.0;
  double reply_score = 0.0;
  double consistency_score = 0.0;

  std::array<double, 5> as_array() const {
    return {think_step1_score, think_step2_score, think_step3_score, reply_score,
            consistency_score};
  }

  bool operator==(const RubricScores&) const = default;
};

// Throws Error(kValidationFailure) on the first broken invariant.
void validate_turn(const Turn& turn);
void validate_transcript(const Transcript& transcript);
void validate_rubric_scores(const RubricScores& scores);

// True when the non-moderator turns alternate Counselor/Client starting with Counselor.
bool alternates_from_counselor(const std::vector<Turn>& turns);

}  // namespace rimr
