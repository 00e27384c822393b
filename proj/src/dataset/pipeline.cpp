#include "rimr/dataset/pipeline.h"

#include <algorithm>
#include <sstream>

#include "rimr/assets.h"
#include "rimr/reasoning_format.h"
#include "rimr/serialize.h"
#include "rimr/util/parallel.h"
#include "rimr/util/template.h"
#include "rimr/util/text.h"

namespace rimr::dataset {

using nlohmann::json;

// ---- source sessions ------------------------------------------------------

json to_json(const SourceSession& session) {
  json turns = json::array();
  for (const Turn& t : session.turns) turns.push_back(rimr::to_json(t));
  return {{"session_id", session.session_id}, {"topic", std::string(topic_code(session.topic))}, {"turns", turns}};
}

SourceSession source_session_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParseFailure, "session record must be an object");
  SourceSession s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    auto topic = parse_topic(j.at("topic").get<std::string>());
    if (!topic) throw Error(ErrorCode::kParseFailure, "session " + s.session_id + ": unknown topic");
    s.topic = *topic;
    for (const json& t : j.at("turns")) s.turns.push_back(turn_from_json(t));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseFailure, std::string("session record: ") + e.what());
  }
  if (!alternates_from_counselor(s.turns)) {
    throw Error(ErrorCode::kParseFailure, "session " + s.session_id + ": turns must alternate from the counselor");
  }
  return s;
}

std::vector<SourceSession> read_sessions(const std::filesystem::path& path) {
  std::vector<SourceSession> out;
  for (const json& j : jsonl::read_file(path)) out.push_back(source_session_from_json(j));
  return out;
}

void write_sessions(const std::filesystem::path& path, const std::vector<SourceSession>& sessions) {
  std::vector<json> records;
  for (const auto& s : sessions) records.push_back(to_json(s));
  jsonl::write_file(path, records);
}

// ---- trigger patterns -----------------------------------------------------

namespace {

using Clauses = std::vector<std::vector<std::string>>;

const std::map<TriggerKind, Clauses>& trigger_patterns() {
  static const std::map<TriggerKind, Clauses> patterns = [] {
    std::map<TriggerKind, Clauses> out;
    json j = json::parse(assets::load(assets::kTriggerPatterns));
    for (auto& [code, clauses] : j.at("kinds").items()) {
      auto kind = parse_trigger_kind(code);
      if (!kind) throw Error(ErrorCode::kParseFailure, "trigger patterns: unknown kind " + code);
      out[*kind] = clauses.get<Clauses>();
    }
    for (TriggerKind k : kAllTriggerKinds) {
      if (out[k].empty()) throw Error(ErrorCode::kParseFailure, "trigger patterns: no clauses for a kind");
    }
    return out;
  }();
  return patterns;
}

const Turn* next_conversational(const std::vector<Turn>& turns, std::size_t after) {
  for (std::size_t i = after + 1; i < turns.size(); ++i) {
    if (turns[i].speaker != Speaker::kModerator) return &turns[i];
  }
  return nullptr;
}

std::string conversation_text(const std::vector<Turn>& turns, bool client_only) {
  std::string out;
  for (const Turn& t : turns) {
    if (t.speaker == Speaker::kModerator) continue;
    if (client_only && t.speaker != Speaker::kClient) continue;
    out += t.text;
    out += '\n';
  }
  return out;
}

}  // namespace

std::vector<TriggerSpan> detect_triggers(const SourceSession& session, const FivePProfile& profile) {
  std::vector<TriggerSpan> spans;
  for (const Turn& turn : session.turns) {
    if (turn.speaker != Speaker::kCounselor) continue;
    for (TriggerKind kind : kAllTriggerKinds) {
      const Clauses& clauses = trigger_patterns().at(kind);
      std::size_t matched = 0;
      for (const auto& alternatives : clauses) {
        if (std::any_of(alternatives.begin(), alternatives.end(),
                        [&](const std::string& p) { return text::icontains(turn.text, p); })) {
          ++matched;
        }
      }
      if (matched == 0) continue;

      std::vector<std::string> features;
      for (const HighRiskFeature& f : trigger_kind_info(kind).high_risk_profile_features) {
        for (const std::string& kw : profile.factors(f.factor)) {
          if (text::icontains(kw, f.pattern) && std::find(features.begin(), features.end(), kw) == features.end()) {
            features.push_back(kw);
          }
        }
      }
      if (features.empty()) continue;
      spans.push_back({turn.turn_index, kind, std::move(features),
                       static_cast<double>(matched) / static_cast<double>(clauses.size())});
    }
  }
  return spans;
}

std::optional<TriggerSpan> select_trigger(const std::vector<TriggerSpan>& spans) {
  const TriggerSpan* best = nullptr;
  for (const TriggerSpan& s : spans) {
    if (!best || s.confidence > best->confidence ||
        (s.confidence == best->confidence && s.counselor_turn_index < best->counselor_turn_index)) {
      best = &s;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

RewritePlan make_rewrite_plan(const SourceSession& session, const TriggerSpan& trigger, int max_followup_turns) {
  if (max_followup_turns < 0 || max_followup_turns > kRewriteWindowFollowups) {
    throw Error(ErrorCode::kPrecondition, "max_followup_turns must be in [0, 3]");
  }
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    if (session.turns[i].turn_index != trigger.counselor_turn_index) continue;
    if (session.turns[i].speaker != Speaker::kCounselor) break;
    const Turn* target = next_conversational(session.turns, i);
    if (!target || target->speaker != Speaker::kClient) break;
    return {trigger, target->turn_index, trigger_label(trigger.kind), max_followup_turns};
  }
  throw Error(ErrorCode::kPrecondition, "trigger turn " + std::to_string(trigger.counselor_turn_index) +
                                            " is not a counselor turn followed by a client turn");
}

// ---- reply formats --------------------------------------------------------

std::string format_indexed_conversation(const std::vector<Turn>& turns) {
  std::string out;
  for (const Turn& t : turns) {
    if (t.speaker == Speaker::kModerator) continue;
    out += "[" + std::to_string(t.turn_index) + "] ";
    out += t.speaker == Speaker::kCounselor ? "Counselor: " : "Client: ";
    out += t.text;
    out += '\n';
  }
  return out;
}

std::string render_profile_reply(const FivePProfile& profile) {
  std::string out;
  for (FactorKind kind : kAllFactorKinds) {
    out += factor_display_name(kind);
    out += ": ";
    const auto& list = profile.factors(kind);
    if (list.empty()) out += "none";
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i) out += "; ";
      out += list[i];
    }
    out += '\n';
  }
  return out;
}

namespace {

// Splits "key: value" allowing markdown bullets and a full-width colon.
std::optional<std::pair<std::string, std::string>> key_value(std::string_view line) {
  line = text::trim(line);
  while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '#')) line.remove_prefix(1);
  std::size_t colon = line.find(':');
  std::size_t sep = 1;
  if (std::size_t wide = line.find("\xEF\xBC\x9A"); wide != std::string_view::npos && wide < colon) {
    colon = wide;
    sep = 3;
  }
  if (colon == std::string_view::npos) return std::nullopt;
  std::string key = text::to_lower(text::trim(line.substr(0, colon)));
  std::erase(key, '*');
  return std::pair{std::string(text::trim(key)), std::string(text::trim(line.substr(colon + sep)))};
}

}  // namespace

FivePProfile parse_profile_reply(std::string_view reply, const std::string& profile_id, Topic topic) {
  FivePProfile profile;
  profile.profile_id = profile_id;
  profile.topic = topic;
  std::map<FactorKind, bool> seen;
  for (std::string_view line : text::split_lines(reply)) {
    auto kv = key_value(line);
    if (!kv) continue;
    for (FactorKind kind : kAllFactorKinds) {
      if (kv->first != text::to_lower(factor_display_name(kind)) || seen[kind]) continue;
      seen[kind] = true;
      for (const std::string& raw : text::split(kv->second, ';')) {
        std::string kw(text::trim(raw));
        const std::string lower = text::to_lower(kw);
        if (kw.empty() || lower == "none" || lower == "n/a") continue;
        profile.factors(kind).push_back(std::move(kw));
      }
    }
  }
  for (FactorKind kind : kAllFactorKinds) {
    if (!seen[kind]) {
      throw Error(ErrorCode::kParseFailure,
                  "profile reply has no '" + std::string(factor_display_name(kind)) + "' line");
    }
  }
  auto violations = profile_violations(profile);
  if (!violations.empty()) {
    std::string msg = "extracted profile invalid:";
    for (const auto& v : violations) msg += " " + v.field + " (" + std::string(error_code_name(v.code)) + ")";
    throw Error(ErrorCode::kValidationFailure, msg);
  }
  return profile;
}

QualityJudgement parse_judge_reply(std::string_view reply) {
  std::optional<bool> coverage;
  std::optional<bool> faithfulness;
  for (std::string_view line : text::split_lines(reply)) {
    auto kv = key_value(line);
    if (!kv) continue;
    const std::string v = text::to_lower(kv->second);
    std::optional<bool> value;
    if (v.starts_with("yes") || v.starts_with("true")) value = true;
    if (v.starts_with("no") || v.starts_with("false")) value = false;
    if (!value) continue;
    if (kv->first == "coverage") coverage = value;
    if (kv->first == "faithfulness") faithfulness = value;
  }
  if (!coverage || !faithfulness) {
    throw Error(ErrorCode::kParseFailure, "judge reply needs 'coverage' and 'faithfulness' yes/no lines");
  }
  return {*coverage, *faithfulness};
}

std::vector<Turn> apply_annotation_reply(std::string_view reply, const std::vector<Turn>& turns) {
  const std::size_t open = reply.find('{');
  const std::size_t close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(ErrorCode::kParseFailure, "annotation reply holds no JSON object");
  }
  json j = json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("turns") || !j["turns"].is_array()) {
    throw Error(ErrorCode::kParseFailure, "annotation reply must be {\"turns\": [...]}");
  }

  std::vector<Turn> out = turns;
  for (const json& e : j["turns"]) {
    if (!e.is_object() || !e.contains("turn_index") || !e["turn_index"].is_number_integer()) {
      throw Error(ErrorCode::kParseFailure, "annotation entry without integer turn_index");
    }
    const int index = e["turn_index"].get<int>();
    auto it = std::find_if(out.begin(), out.end(), [&](const Turn& t) { return t.turn_index == index; });
    if (it == out.end() || it->speaker != Speaker::kClient) {
      throw Error(ErrorCode::kParseFailure, "annotation names turn " + std::to_string(index) + ", not a client turn");
    }
    if (!e.contains("label") || !e["label"].is_string()) {
      throw Error(ErrorCode::kParseFailure, "annotation for turn " + std::to_string(index) + " has no label");
    }
    const std::string raw_label = e["label"].get<std::string>();
    auto label = parse_label_code(raw_label);
    if (!label) label = find_label_name(raw_label);
    if (!label) throw Error(ErrorCode::kParseFailure, "unknown label '" + raw_label + "'");
    if (e.contains("text")) {
      if (!e["text"].is_string() || text::is_blank(e["text"].get<std::string>())) {
        throw Error(ErrorCode::kParseFailure, "annotation for turn " + std::to_string(index) + " has blank text");
      }
      it->text = e["text"].get<std::string>();
    }
    it->label = *label;
    it->rationale = e.contains("rationale") && e["rationale"].is_string()
                        ? std::optional<std::string>(e["rationale"].get<std::string>())
                        : std::nullopt;
  }
  return out;
}

// ---- backends -------------------------------------------------------------

namespace {

std::string_view canned_resistance(ReactionLabel label) {
  switch (label) {
    case ReactionLabel::kControllingResistance:
      return "No, I already know what the real issue is, and that is not it. Let's talk about what I came here for.";
    case ReactionLabel::kEmotionalResistance:
      return "I can't do this. Everything is falling apart and talking about it only makes it worse!";
    case ReactionLabel::kDefensiveResistance:
      return "Honestly, I doubt this kind of thing works. I have tried counseling before and it did nothing.";
    case ReactionLabel::kAvoidantResistance:
      return "Anyway, that is not really important. Did I mention how hectic the last few weeks have been?";
    case ReactionLabel::kCompliantResistance:
      return "Yeah, sure. I guess that makes sense.";
    default:
      return "";
  }
}

std::string_view canned_followup(ReactionLabel label) {
  switch (label) {
    case ReactionLabel::kControllingResistance: return "I would rather decide for myself what we focus on.";
    case ReactionLabel::kEmotionalResistance: return "Sorry. It is just too much right now.";
    case ReactionLabel::kDefensiveResistance: return "I just don't see how this is supposed to help me.";
    case ReactionLabel::kAvoidantResistance: return "Can we talk about something else for a bit?";
    case ReactionLabel::kCompliantResistance: return "Okay. Whatever you think is best.";
    default: return "";
  }
}

bool sounds_engaged(std::string_view utterance) {
  for (std::string_view cue : {"i want", "i would like", "i'd like", "that helps", "that makes sense", "i realize"}) {
    if (text::icontains(utterance, cue)) return true;
  }
  return false;
}

json annotation_entry(const Turn& t, const std::string& text_value, ReactionLabel label, std::string rationale) {
  return {{"turn_index", t.turn_index},
          {"text", text_value},
          {"label", std::string(label_code(label))},
          {"rationale", std::move(rationale)}};
}

json cooperative_entry(const Turn& t) {
  const bool engaged = sounds_engaged(t.text);
  return annotation_entry(t, t.text, engaged ? ReactionLabel::kFacilitative : ReactionLabel::kNonResistant,
                          engaged ? "engages with the topic and signals willingness to explore"
                                  : "answers cooperatively without taking the initiative");
}

}  // namespace

RuleBasedAnnotationBackend::RuleBasedAnnotationBackend() {
  json j = json::parse(assets::load(assets::kProfileLexicon));
  for (FactorKind kind : kAllFactorKinds) {
    lexicon_[kind] = j.at(std::string(factor_field_name(kind))).get<std::vector<std::string>>();
  }
}

std::string RuleBasedAnnotationBackend::complete(const AnnotationRequest& request) {
  if (!request.session) throw BackendError("rule-based annotator needs the structured session");
  const SourceSession& session = *request.session;

  switch (request.task) {
    case AnnotationTask::kExtractProfile: {
      const std::string said = conversation_text(session.turns, true);
      FivePProfile p;
      for (FactorKind kind : kAllFactorKinds) {
        for (const std::string& kw : lexicon_.at(kind)) {
          if (text::icontains(said, kw)) p.factors(kind).push_back(kw);
        }
      }
      return render_profile_reply(p);
    }
    case AnnotationTask::kJudgeProfile: {
      if (!request.profile) throw BackendError("judge request without profile");
      const std::string all = conversation_text(session.turns, false);
      const FivePProfile& p = *request.profile;
      const bool coverage = std::all_of(p.presenting_problems.begin(), p.presenting_problems.end(),
                                        [&](const std::string& kw) { return text::icontains(all, kw); });
      bool faithful = true;
      for (FactorKind kind : kAllFactorKinds) {
        for (const std::string& kw : p.factors(kind)) faithful = faithful && text::icontains(all, kw);
      }
      return std::string("coverage: ") + (coverage ? "yes" : "no") + "\nfaithfulness: " + (faithful ? "yes" : "no") +
             "\n";
    }
    case AnnotationTask::kRewrite: {
      if (!request.plan) throw BackendError("rewrite request without plan");
      const RewritePlan& plan = *request.plan;
      json entries = json::array();
      int followup = -1;  // -1 before target, 0 at target, k for the k-th later client turn
      for (const Turn& t : session.turns) {
        if (t.speaker != Speaker::kClient) continue;
        if (t.turn_index == plan.target_client_turn_index) followup = 0;
        const ReactionLabel r = plan.resistance_type;
        if (followup == 0) {
          entries.push_back(annotation_entry(t, std::string(canned_resistance(r)), r,
                                             "reacts to the counselor's intervention, which presses on " +
                                                 plan.trigger.matched_profile_features.front()));
        } else if (followup == 1 && followup <= plan.max_followup_turns) {
          entries.push_back(annotation_entry(t, std::string(canned_followup(r)), r, "resistance carries over"));
        } else if (followup > 1 && followup <= plan.max_followup_turns) {
          entries.push_back(annotation_entry(t, "(after a pause) " + t.text, ReactionLabel::kNonResistant,
                                             "settles back into cooperation after the resistant moment"));
        } else {
          entries.push_back(cooperative_entry(t));
        }
        if (followup >= 0) ++followup;
      }
      return json{{"turns", entries}}.dump();
    }
    case AnnotationTask::kAnnotate: {
      json entries = json::array();
      for (const Turn& t : session.turns) {
        if (t.speaker == Speaker::kClient) entries.push_back(cooperative_entry(t));
      }
      return json{{"turns", entries}}.dump();
    }
  }
  throw BackendError("unknown annotation task");
}

ScriptedAnnotationBackend::ScriptedAnnotationBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

std::string ScriptedAnnotationBackend::complete(const AnnotationRequest&) {
  std::lock_guard lock(mu_);
  if (next_ >= replies_.size()) throw BackendError("scripted annotator exhausted");
  return replies_[next_++];
}

ChatAnnotationBackend::ChatAnnotationBackend(std::shared_ptr<sim::ModelBackend> model, sim::SamplingConfig sampling)
    : model_(std::move(model)), sampling_(sampling) {}

std::string ChatAnnotationBackend::complete(const AnnotationRequest& request) {
  return model_->generate(request.prompt, {}, sampling_);
}

// ---- operations -----------------------------------------------------------

FivePProfile extract_profile(const SourceSession& session, AnnotationBackend& backend) {
  if (session.turns.size() < 2) throw Error(ErrorCode::kPrecondition, "profile extraction needs >= 2 turns");
  AnnotationRequest req;
  req.task = AnnotationTask::kExtractProfile;
  req.prompt = render_template(assets::load(assets::kProfileExtractionPrompt),
                               {{"conversation", format_conversation(session.turns)}});
  req.session = &session;
  return parse_profile_reply(backend.complete(req), session.session_id, session.topic);
}

QualityJudgement judge_profile_quality(const FivePProfile& profile, const SourceSession& session,
                                       AnnotationBackend& backend) {
  AnnotationRequest req;
  req.task = AnnotationTask::kJudgeProfile;
  req.prompt = render_template(assets::load(assets::kProfileJudgePrompt),
                               {{"profile_json", rimr::to_json(profile).dump(2)},
                                {"conversation", format_conversation(session.turns)}});
  req.session = &session;
  req.profile = &profile;
  return parse_judge_reply(backend.complete(req));
}

Transcript rewrite_session(const SourceSession& session, const FivePProfile& profile, const RewritePlan& plan,
                           AnnotationBackend& backend) {
  AnnotationRequest req;
  req.task = AnnotationTask::kRewrite;
  req.prompt = render_template(
      assets::load(assets::kRewritePrompt),
      {{"profile_json", rimr::to_json(profile).dump(2)},
       {"taxonomy", std::string(text::trim(taxonomy_text()))},
       {"trigger_turn_index", std::to_string(plan.trigger.counselor_turn_index)},
       {"trigger_description", trigger_kind_info(plan.trigger.kind).typical_trigger_description},
       {"target_turn_index", std::to_string(plan.target_client_turn_index)},
       {"resistance_type", std::string(label_display_name(plan.resistance_type))},
       {"max_followup_turns", std::to_string(plan.max_followup_turns)},
       {"conversation", format_indexed_conversation(session.turns)}});
  req.session = &session;
  req.profile = &profile;
  req.plan = &plan;
  return {session.session_id, profile, apply_annotation_reply(backend.complete(req), session.turns),
          Termination::kSourceComplete};
}

Transcript annotate_session(const SourceSession& session, const FivePProfile& profile, AnnotationBackend& backend) {
  AnnotationRequest req;
  req.task = AnnotationTask::kAnnotate;
  req.prompt = render_template(assets::load(assets::kAnnotatePrompt),
                               {{"profile_json", rimr::to_json(profile).dump(2)},
                                {"taxonomy", std::string(text::trim(taxonomy_text()))},
                                {"conversation", format_indexed_conversation(session.turns)}});
  req.session = &session;
  req.profile = &profile;
  return {session.session_id, profile, apply_annotation_reply(backend.complete(req), session.turns),
          Termination::kSourceComplete};
}

// ---- validation -----------------------------------------------------------

std::string_view violation_code(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kModifiedBeyondWindow: return "modified_beyond_window";
    case ViolationKind::kMultipleEpisodes: return "multiple_episodes";
    case ViolationKind::kCounselorTextChanged: return "counselor_text_changed";
    case ViolationKind::kUnlabeledClientTurn: return "unlabeled_client_turn";
  }
  return "";
}

std::size_t resistance_episode_count(const std::vector<Turn>& turns) {
  std::size_t episodes = 0;
  bool in_run = false;
  for (const Turn& t : turns) {
    if (t.speaker != Speaker::kClient) continue;
    const bool resistant = t.label && is_resistance(*t.label);
    if (resistant && !in_run) ++episodes;
    in_run = resistant;
  }
  return episodes;
}

std::vector<RewriteViolation> validate_rewrite(const std::vector<Turn>& original, const std::vector<Turn>& rewritten) {
  if (original.size() != rewritten.size()) {
    throw Error(ErrorCode::kStructureMismatch, "turn counts differ: " + std::to_string(original.size()) + " vs " +
                                                   std::to_string(rewritten.size()));
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i].speaker != rewritten[i].speaker) {
      throw Error(ErrorCode::kStructureMismatch, "speaker differs at position " + std::to_string(i));
    }
  }

  std::vector<RewriteViolation> out;
  int client_ordinal = -1;
  int window_start = -1;
  std::vector<std::pair<int, int>> changed_clients;  // (ordinal, turn_index)
  for (std::size_t i = 0; i < original.size(); ++i) {
    const Turn& a = original[i];
    const Turn& b = rewritten[i];
    if (a.speaker == Speaker::kCounselor && a.text != b.text) {
      out.push_back({ViolationKind::kCounselorTextChanged, b.turn_index, "counselor text differs"});
    }
    if (a.speaker != Speaker::kClient) continue;
    ++client_ordinal;
    if (!b.label) out.push_back({ViolationKind::kUnlabeledClientTurn, b.turn_index, "client turn has no label"});
    if (a.text != b.text) {
      if (window_start < 0) window_start = client_ordinal;
      changed_clients.push_back({client_ordinal, b.turn_index});
    }
  }
  for (auto [ordinal, index] : changed_clients) {
    if (ordinal > window_start + kRewriteWindowFollowups) {
      out.push_back({ViolationKind::kModifiedBeyondWindow, index,
                     "client turn " + std::to_string(ordinal - window_start) + " after the first change"});
    }
  }
  if (std::size_t episodes = resistance_episode_count(rewritten); episodes > 1) {
    out.push_back({ViolationKind::kMultipleEpisodes, -1, std::to_string(episodes) + " resistance episodes"});
  }
  return out;
}

// ---- corpus ---------------------------------------------------------------

namespace {

struct SessionOutcome {
  std::optional<Transcript> transcript;
  std::optional<SessionFailure> failure;
  bool dropped = false;
};

std::string describe(const std::vector<RewriteViolation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += std::string(violation_code(v.kind));
    if (v.turn_index >= 0) out += " at turn " + std::to_string(v.turn_index);
  }
  return out;
}

SessionOutcome process_session(const SourceSession& session, AnnotationBackend& backend, const CorpusConfig& config) {
  std::string stage = "extract";
  try {
    FivePProfile profile = extract_profile(session, backend);
    stage = "judge";
    if (!judge_profile_quality(profile, session, backend).keep()) return {std::nullopt, std::nullopt, true};

    Transcript out;
    auto trigger = select_trigger(detect_triggers(session, profile));
    if (trigger) {
      stage = "rewrite";
      RewritePlan plan = make_rewrite_plan(session, *trigger, config.max_followup_turns);
      out = rewrite_session(session, profile, plan, backend);
      stage = "validate";
      auto target = std::find_if(out.turns.begin(), out.turns.end(),
                                 [&](const Turn& t) { return t.turn_index == plan.target_client_turn_index; });
      if (target == out.turns.end() || !target->label || !is_resistance(*target->label)) {
        throw Error(ErrorCode::kValidationFailure, "rewrite left the target turn without a resistance label");
      }
    } else {
      stage = "annotate";
      out = annotate_session(session, profile, backend);
      stage = "validate";
      for (std::size_t i = 0; i < out.turns.size(); ++i) {
        if (out.turns[i].text != session.turns[i].text) {
          throw Error(ErrorCode::kValidationFailure, "annotation changed the text of turn " +
                                                         std::to_string(out.turns[i].turn_index));
        }
      }
    }
    if (auto violations = validate_rewrite(session.turns, out.turns); !violations.empty()) {
      throw Error(ErrorCode::kValidationFailure, describe(violations));
    }
    validate_transcript(out);
    return {std::move(out), std::nullopt, false};
  } catch (const Error& e) {
    return {std::nullopt, SessionFailure{session.session_id, stage, e.code(), e.what()}, false};
  }
}

}  // namespace

CorpusResult build_corpus(const std::vector<SourceSession>& sessions, AnnotationBackend& backend,
                          const CorpusConfig& config) {
  if (sessions.empty()) throw Error(ErrorCode::kEmptyInput, "no sessions to build a corpus from");
  auto outcomes = parallel_map(sessions.size(), config.workers,
                               [&](std::size_t i) { return process_session(sessions[i], backend, config); });

  CorpusResult result;
  CorpusStats& stats = result.stats;
  stats.input_count = sessions.size();
  for (ReactionLabel l : kAllLabels) stats.label_counts[l] = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    SessionOutcome& o = outcomes[i];
    if (o.dropped) {
      ++stats.dropped_count;
      stats.dropped_sessions.push_back(sessions[i].session_id);
      continue;
    }
    if (o.failure) {
      stats.failures.push_back(std::move(*o.failure));
      continue;
    }
    const Transcript& t = *o.transcript;
    ++stats.session_count;
    ++stats.topic_counts[t.profile.topic];
    if (resistance_episode_count(t.turns) > 0) ++stats.resistance_session_count;
    for (const Turn& turn : t.turns) {
      if (turn.speaker == Speaker::kClient && turn.label) ++stats.label_counts[*turn.label];
    }
    result.corpus.push_back(std::move(*o.transcript));
  }
  return result;
}

std::string format_stats(const CorpusStats& stats) {
  std::ostringstream out;
  out << "input_sessions\t" << stats.input_count << "\n";
  out << "sessions\t" << stats.session_count << "\n";
  out << "resistance_sessions\t" << stats.resistance_session_count << "\n";
  out << "dropped_profiles\t" << stats.dropped_count << "\n";
  out << "failed_sessions\t" << stats.failures.size() << "\n";
  for (const auto& [label, n] : stats.label_counts) out << "label." << label_code(label) << "\t" << n << "\n";
  for (const auto& [topic, n] : stats.topic_counts) out << "topic." << topic_code(topic) << "\t" << n << "\n";
  for (const auto& f : stats.failures) out << "failure." << f.session_id << "\t" << f.stage << ": " << f.message << "\n";
  return out.str();
}

json stats_to_json(const CorpusStats& stats) {
  json labels = json::object();
  for (const auto& [label, n] : stats.label_counts) labels[std::string(label_code(label))] = n;
  json topics = json::object();
  for (const auto& [topic, n] : stats.topic_counts) topics[std::string(topic_code(topic))] = n;
  json failures = json::array();
  for (const auto& f : stats.failures) {
    failures.push_back({{"session_id", f.session_id},
                        {"stage", f.stage},
                        {"code", std::string(error_code_name(f.code))},
                        {"message", f.message}});
  }
  return {{"input_sessions", stats.input_count},
          {"sessions", stats.session_count},
          {"resistance_sessions", stats.resistance_session_count},
          {"dropped_profiles", stats.dropped_count},
          {"dropped_sessions", stats.dropped_sessions},
          {"label_counts", labels},
          {"topic_counts", topics},
          {"failures", failures}};
}

}  // namespace rimr::dataset
