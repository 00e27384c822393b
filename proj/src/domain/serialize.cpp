#include "rimr/serialize.h"

#include <fstream>
#include <sstream>

namespace rimr {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::kParseFailure, what);
}

const json& require(const json& j, const char* key) {
  if (!j.is_object()) parse_fail(std::string("expected object containing '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) parse_fail(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) parse_fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

ReactionLabel label_from(const json& v, const char* key) {
  if (!v.is_string()) parse_fail(std::string("field '") + key + "' must be a string");
  auto label = parse_label_code(v.get<std::string>());
  if (!label) parse_fail("unknown reaction label '" + v.get<std::string>() + "'");
  return *label;
}

double require_number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) parse_fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

json to_json(const FivePProfile& profile) {
  json j;
  j["profile_id"] = profile.profile_id;
  j["topic"] = std::string(topic_code(profile.topic));
  for (FactorKind kind : kAllFactorKinds) {
    j[std::string(factor_field_name(kind))] = profile.factors(kind);
  }
  return j;
}

json to_json(const ReasoningTrace& trace) {
  return json{{"profile_reflection", trace.profile_reflection},
              {"situation_awareness", trace.situation_awareness},
              {"reaction_decision", trace.reaction_decision},
              {"decided_label", std::string(label_code(trace.decided_label))}};
}

json to_json(const Turn& turn) {
  json j;
  j["turn_index"] = turn.turn_index;
  j["speaker"] = std::string(speaker_code(turn.speaker));
  j["text"] = turn.text;
  if (turn.label) j["label"] = std::string(label_code(*turn.label));
  if (turn.rationale) j["rationale"] = *turn.rationale;
  if (turn.trace) j["trace"] = to_json(*turn.trace);
  if (turn.parse_failed) j["parse_failed"] = true;
  return j;
}

json to_json(const Transcript& transcript) {
  json turns = json::array();
  for (const Turn& t : transcript.turns) turns.push_back(to_json(t));
  return json{{"session_id", transcript.session_id},
              {"profile", to_json(transcript.profile)},
              {"termination", std::string(termination_code(transcript.termination))},
              {"turns", std::move(turns)}};
}

json to_json_without_traces(const Transcript& transcript) {
  json j = to_json(transcript);
  for (json& t : j["turns"]) t.erase("trace");
  return j;
}

json to_json(const RubricScores& scores) {
  return json{{"think_step1_score", scores.think_step1_score},
              {"think_step2_score", scores.think_step2_score},
              {"think_step3_score", scores.think_step3_score},
              {"reply_score", scores.reply_score},
              {"consistency_score", scores.consistency_score}};
}

ReasoningTrace trace_from_json(const json& j) {
  ReasoningTrace trace;
  trace.profile_reflection = require_string(j, "profile_reflection");
  trace.situation_awareness = require_string(j, "situation_awareness");
  trace.reaction_decision = require_string(j, "reaction_decision");
  trace.decided_label = label_from(require(j, "decided_label"), "decided_label");
  return trace;
}

Turn turn_from_json(const json& j) {
  Turn turn;
  const json& index = require(j, "turn_index");
  if (!index.is_number_integer()) parse_fail("field 'turn_index' must be an integer");
  turn.turn_index = index.get<int>();
  auto speaker = parse_speaker(require_string(j, "speaker"));
  if (!speaker) parse_fail("unknown speaker in turn " + std::to_string(turn.turn_index));
  turn.speaker = *speaker;
  turn.text = require_string(j, "text");
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) turn.label = label_from(*it, "label");
  if (auto it = j.find("rationale"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) parse_fail("field 'rationale' must be a string");
    turn.rationale = it->get<std::string>();
  }
  if (auto it = j.find("trace"); it != j.end() && !it->is_null()) turn.trace = trace_from_json(*it);
  if (auto it = j.find("parse_failed"); it != j.end()) turn.parse_failed = it->get<bool>();
  return turn;
}

Transcript transcript_from_json(const json& j) {
  Transcript t;
  t.session_id = require_string(j, "session_id");
  try {
    t.profile = validate_profile(require(j, "profile"));
  } catch (const ProfileValidationError& e) {
    parse_fail("session " + t.session_id + ": invalid profile: " + e.what());
  }
  auto termination = parse_termination(require_string(j, "termination"));
  if (!termination) parse_fail("session " + t.session_id + ": unknown termination");
  t.termination = *termination;
  const json& turns = require(j, "turns");
  if (!turns.is_array()) parse_fail("field 'turns' must be an array");
  for (const json& turn : turns) t.turns.push_back(turn_from_json(turn));
  try {
    validate_transcript(t);
  } catch (const Error& e) {
    parse_fail(e.what());
  }
  return t;
}

RubricScores rubric_scores_from_json(const json& j) {
  RubricScores s;
  s.think_step1_score = require_number(j, "think_step1_score");
  s.think_step2_score = require_number(j, "think_step2_score");
  s.think_step3_score = require_number(j, "think_step3_score");
  s.reply_score = require_number(j, "reply_score");
  s.consistency_score = require_number(j, "consistency_score");
  validate_rubric_scores(s);
  return s;
}

namespace jsonl {

std::vector<json> read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseFailure,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_file(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ostringstream out;
  for (const json& r : records) out << r.dump() << '\n';
  write_text_file(path, out.str());
}

void append_line(const std::filesystem::path& path, const json& record) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
}

}  // namespace jsonl

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
}

}  // namespace rimr
