#include "rimr/domain.h"

#include <algorithm>
#include <utility>

#include "rimr/util/text.h"

namespace rimr {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kEmptyFactorList: return "EmptyFactorList";
    case ErrorCode::kOversizeKeyword: return "OversizeKeyword";
    case ErrorCode::kInvalidValue: return "InvalidValue";
    case ErrorCode::kMissingThinkBlock: return "MissingThinkBlock";
    case ErrorCode::kMissingStep: return "MissingStep";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyReply: return "EmptyReply";
    case ErrorCode::kNoDecision: return "NoDecision";
    case ErrorCode::kAmbiguousDecision: return "AmbiguousDecision";
    case ErrorCode::kPrecondition: return "PreconditionViolation";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kNonMonotoneIndices: return "NonMonotoneIndices";
    case ErrorCode::kIndexMismatch: return "IndexMismatch";
    case ErrorCode::kTokenOutOfVocab: return "TokenOutOfVocab";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kParseFailure: return "ParseFailure";
    case ErrorCode::kValidationFailure: return "ValidationFailure";
    case ErrorCode::kStructureMismatch: return "StructureMismatch";
    case ErrorCode::kNoClientTurns: return "NoClientTurns";
    case ErrorCode::kTooFewUtterances: return "TooFewUtterances";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kSessionTerminated: return "SessionTerminated";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

std::string_view topic_code(Topic topic) {
  switch (topic) {
    case Topic::kEmotion: return "emotion";
    case Topic::kInterpersonal: return "interpersonal";
    case Topic::kAcademicCareer: return "academic_career";
    case Topic::kPersonalGrowth: return "personal_growth";
  }
  return "emotion";
}

std::optional<Topic> parse_topic(std::string_view code) {
  for (Topic t : kAllTopics) {
    if (topic_code(t) == code) return t;
  }
  return std::nullopt;
}

std::string_view factor_field_name(FactorKind kind) {
  switch (kind) {
    case FactorKind::kPresenting: return "presenting_problems";
    case FactorKind::kPredisposing: return "predisposing_factors";
    case FactorKind::kPrecipitating: return "precipitating_factors";
    case FactorKind::kPerpetuating: return "perpetuating_factors";
    case FactorKind::kProtective: return "protective_factors";
  }
  return "";
}

std::string_view factor_display_name(FactorKind kind) {
  switch (kind) {
    case FactorKind::kPresenting: return "Presenting Problems";
    case FactorKind::kPredisposing: return "Predisposing Factors";
    case FactorKind::kPrecipitating: return "Precipitating Factors";
    case FactorKind::kPerpetuating: return "Perpetuating Factors";
    case FactorKind::kProtective: return "Protective Factors";
  }
  return "";
}

const std::vector<std::string>& FivePProfile::factors(FactorKind kind) const {
  switch (kind) {
    case FactorKind::kPresenting: return presenting_problems;
    case FactorKind::kPredisposing: return predisposing_factors;
    case FactorKind::kPrecipitating: return precipitating_factors;
    case FactorKind::kPerpetuating: return perpetuating_factors;
    case FactorKind::kProtective: return protective_factors;
  }
  return presenting_problems;
}

std::vector<std::string>& FivePProfile::factors(FactorKind kind) {
  return const_cast<std::vector<std::string>&>(std::as_const(*this).factors(kind));
}

namespace {

std::string join_violations(const std::vector<ProfileViolation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += std::string(error_code_name(v.code)) + "(" + v.field + ")";
    if (!v.detail.empty()) out += " " + v.detail;
  }
  return out;
}

void check_factor_list(const std::vector<std::string>& list, FactorKind kind,
                       std::vector<ProfileViolation>& out) {
  const std::string field(factor_field_name(kind));
  if (list.empty() && kind != FactorKind::kProtective) {
    out.push_back({ErrorCode::kEmptyFactorList, field, "at least one keyword required"});
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (text::is_blank(list[i])) {
      out.push_back({ErrorCode::kInvalidValue, field, "keyword " + std::to_string(i) + " is blank"});
    } else if (list[i].size() > kMaxKeywordLength) {
      out.push_back({ErrorCode::kOversizeKeyword, field,
                     "keyword " + std::to_string(i) + " has " + std::to_string(list[i].size()) +
                         " characters"});
    }
  }
}

}  // namespace

ProfileValidationError::ProfileValidationError(std::vector<ProfileViolation> violations)
    : Error(violations.empty() ? ErrorCode::kValidationFailure : violations.front().code,
            join_violations(violations)),
      violations_(std::move(violations)) {}

std::vector<ProfileViolation> profile_violations(const FivePProfile& profile) {
  std::vector<ProfileViolation> out;
  if (text::is_blank(profile.profile_id)) {
    out.push_back({ErrorCode::kMissingField, "profile_id", "blank"});
  }
  for (FactorKind kind : kAllFactorKinds) check_factor_list(profile.factors(kind), kind, out);
  return out;
}

FivePProfile validate_profile(const nlohmann::json& candidate) {
  std::vector<ProfileViolation> violations;
  FivePProfile profile;
  if (!candidate.is_object()) {
    throw ProfileValidationError({{ErrorCode::kInvalidValue, "<record>", "not an object"}});
  }

  if (auto it = candidate.find("profile_id"); it == candidate.end()) {
    violations.push_back({ErrorCode::kMissingField, "profile_id", ""});
  } else if (!it->is_string() || text::is_blank(it->get<std::string>())) {
    violations.push_back({ErrorCode::kInvalidValue, "profile_id", "must be a non-blank string"});
  } else {
    profile.profile_id = it->get<std::string>();
  }

  if (auto it = candidate.find("topic"); it == candidate.end()) {
    violations.push_back({ErrorCode::kMissingField, "topic", ""});
  } else if (!it->is_string() || !parse_topic(it->get<std::string>())) {
    violations.push_back({ErrorCode::kInvalidValue, "topic", "unknown topic tag"});
  } else {
    profile.topic = *parse_topic(it->get<std::string>());
  }

  for (FactorKind kind : kAllFactorKinds) {
    const std::string field(factor_field_name(kind));
    auto it = candidate.find(field);
    if (it == candidate.end()) {
      violations.push_back({ErrorCode::kMissingField, field, ""});
      continue;
    }
    if (!it->is_array() ||
        !std::all_of(it->begin(), it->end(), [](const auto& v) { return v.is_string(); })) {
      violations.push_back({ErrorCode::kInvalidValue, field, "must be a list of strings"});
      continue;
    }
    auto& list = profile.factors(kind);
    for (const auto& v : *it) list.push_back(v.get<std::string>());
    check_factor_list(list, kind, violations);
  }

  if (!violations.empty()) throw ProfileValidationError(std::move(violations));
  return profile;
}

std::string_view label_code(ReactionLabel label) {
  switch (label) {
    case ReactionLabel::kControllingResistance: return "controlling_resistance";
    case ReactionLabel::kEmotionalResistance: return "emotional_resistance";
    case ReactionLabel::kDefensiveResistance: return "defensive_resistance";
    case ReactionLabel::kAvoidantResistance: return "avoidant_resistance";
    case ReactionLabel::kCompliantResistance: return "compliant_resistance";
    case ReactionLabel::kNonResistant: return "non_resistant";
    case ReactionLabel::kFacilitative: return "facilitative";
  }
  return "";
}

std::string_view label_display_name(ReactionLabel label) {
  switch (label) {
    case ReactionLabel::kControllingResistance: return "Controlling Resistance";
    case ReactionLabel::kEmotionalResistance: return "Emotional Resistance";
    case ReactionLabel::kDefensiveResistance: return "Defensive Resistance";
    case ReactionLabel::kAvoidantResistance: return "Avoidant Resistance";
    case ReactionLabel::kCompliantResistance: return "Compliant Resistance";
    case ReactionLabel::kNonResistant: return "Non-resistant Reaction";
    case ReactionLabel::kFacilitative: return "Facilitative Reaction";
  }
  return "";
}

std::optional<ReactionLabel> parse_label_code(std::string_view code) {
  for (ReactionLabel l : kAllLabels) {
    if (label_code(l) == code) return l;
  }
  return std::nullopt;
}

namespace {

const std::array<TriggerKindInfo, 5>& trigger_table() {
  static const std::array<TriggerKindInfo, 5> table = {{
      {TriggerKind::kControlling,
       ReactionLabel::kControllingResistance,
       "Direct advice, reframing attempts, or agenda-setting by the counselor that challenges the "
       "client's autonomy or preferred narrative.",
       "Autonomy, agency, and perceived self-coherence.",
       {{FactorKind::kPredisposing, "need for control"},
        {FactorKind::kPredisposing, "rigid belief"},
        {FactorKind::kPerpetuating, "interpersonal dominance"}}},
      {TriggerKind::kEmotional,
       ReactionLabel::kEmotionalResistance,
       "Emotion-focused prompts or interpretations that surface intense affect without sufficient "
       "stabilization or safety cues.",
       "Affect regulation, emotional tolerance, and vulnerability defenses.",
       {{FactorKind::kPrecipitating, "relational loss"},
        {FactorKind::kPrecipitating, "trauma"},
        {FactorKind::kPerpetuating, "poor emotion regulation"}}},
      {TriggerKind::kDefensive,
       ReactionLabel::kDefensiveResistance,
       "Meta-level questioning of the counselor's methods, competence, or therapeutic intent.",
       "Threatened self-image and externalized anxiety.",
       {{FactorKind::kPredisposing, "prior negative counseling"},
        {FactorKind::kPerpetuating, "mistrust of authority"}}},
      {TriggerKind::kAvoidant,
       ReactionLabel::kAvoidantResistance,
       "Exploratory questions targeting core conflicts, personal responsibility, or emotionally "
       "salient themes.",
       "Cognitive avoidance and attentional disengagement.",
       {{FactorKind::kPredisposing, "avoidance coping"},
        {FactorKind::kPerpetuating, "distraction"}}},
      {TriggerKind::kCompliant,
       ReactionLabel::kCompliantResistance,
       "Open-ended or reflective prompts that invite deeper exploration beyond surface-level "
       "agreement.",
       "Superficial compliance masking emotional disengagement.",
       {{FactorKind::kPredisposing, "fear of interpersonal conflict"},
        {FactorKind::kPredisposing, "fear of rejection"},
        {FactorKind::kPerpetuating, "over-adaptation"}}},
  }};
  return table;
}

}  // namespace

const TriggerKindInfo& trigger_kind_info(TriggerKind kind) {
  return trigger_table()[static_cast<std::size_t>(kind)];
}

std::string_view trigger_kind_code(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::kControlling: return "controlling";
    case TriggerKind::kEmotional: return "emotional";
    case TriggerKind::kDefensive: return "defensive";
    case TriggerKind::kAvoidant: return "avoidant";
    case TriggerKind::kCompliant: return "compliant";
  }
  return "";
}

std::optional<TriggerKind> parse_trigger_kind(std::string_view code) {
  for (TriggerKind k : kAllTriggerKinds) {
    if (trigger_kind_code(k) == code) return k;
  }
  return std::nullopt;
}

ReactionLabel trigger_label(TriggerKind kind) { return trigger_kind_info(kind).label; }

std::string_view speaker_code(Speaker speaker) {
  switch (speaker) {
    case Speaker::kCounselor: return "counselor";
    case Speaker::kClient: return "client";
    case Speaker::kModerator: return "moderator";
  }
  return "";
}

std::optional<Speaker> parse_speaker(std::string_view code) {
  for (Speaker s : {Speaker::kCounselor, Speaker::kClient, Speaker::kModerator}) {
    if (speaker_code(s) == code) return s;
  }
  return std::nullopt;
}

std::string_view termination_code(Termination termination) {
  switch (termination) {
    case Termination::kModeratorTerminate: return "moderator_terminate";
    case Termination::kTurnCapReached: return "turn_cap_reached";
    case Termination::kBackendFailure: return "backend_failure";
    case Termination::kSourceComplete: return "source_complete";
  }
  return "";
}

std::optional<Termination> parse_termination(std::string_view code) {
  for (Termination t : {Termination::kModeratorTerminate, Termination::kTurnCapReached,
                        Termination::kBackendFailure, Termination::kSourceComplete}) {
    if (termination_code(t) == code) return t;
  }
  return std::nullopt;
}

std::size_t Transcript::conversational_turn_count() const {
  return static_cast<std::size_t>(std::count_if(
      turns.begin(), turns.end(), [](const Turn& t) { return t.speaker != Speaker::kModerator; }));
}

std::size_t Transcript::client_turn_count() const {
  return static_cast<std::size_t>(std::count_if(
      turns.begin(), turns.end(), [](const Turn& t) { return t.speaker == Speaker::kClient; }));
}

void validate_turn(const Turn& turn) {
  if (turn.turn_index < 0) {
    throw Error(ErrorCode::kValidationFailure, "negative turn_index");
  }
  if (turn.label && turn.speaker != Speaker::kClient) {
    throw Error(ErrorCode::kValidationFailure,
                "turn " + std::to_string(turn.turn_index) + ": label on a non-client turn");
  }
  if (turn.trace) {
    if (!turn.label) {
      throw Error(ErrorCode::kValidationFailure,
                  "turn " + std::to_string(turn.turn_index) + ": trace without label");
    }
    if (turn.trace->decided_label != *turn.label) {
      throw Error(ErrorCode::kValidationFailure,
                  "turn " + std::to_string(turn.turn_index) + ": trace label disagrees with turn label");
    }
  }
}

bool alternates_from_counselor(const std::vector<Turn>& turns) {
  Speaker expected = Speaker::kCounselor;
  for (const Turn& t : turns) {
    if (t.speaker == Speaker::kModerator) continue;
    if (t.speaker != expected) return false;
    expected = expected == Speaker::kCounselor ? Speaker::kClient : Speaker::kCounselor;
  }
  return true;
}

void validate_transcript(const Transcript& transcript) {
  int previous = -1;
  for (const Turn& t : transcript.turns) {
    validate_turn(t);
    if (t.turn_index <= previous) {
      throw Error(ErrorCode::kValidationFailure,
                  "turn_index not strictly increasing at " + std::to_string(t.turn_index));
    }
    previous = t.turn_index;
  }
  if (!alternates_from_counselor(transcript.turns)) {
    throw Error(ErrorCode::kValidationFailure,
                "session " + transcript.session_id + ": speakers do not alternate counselor/client");
  }
}

void validate_rubric_scores(const RubricScores& scores) {
  for (double s : scores.as_array()) {
    if (!(s >= 0.0 && s <= 5.0)) {
      throw Error(ErrorCode::kOutOfRange, "rubric score " + std::to_string(s) + " outside [0, 5]");
    }
  }
}

}  // namespace rimr
