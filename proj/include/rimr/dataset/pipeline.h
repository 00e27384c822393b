#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimr/domain.h"
#include "rimr/sim/backend.h"

namespace rimr::dataset {

// An unannotated counseling session: alternating counselor/client turns.
struct SourceSession {
  std::string session_id;
  Topic topic = Topic::kEmotion;
  std::vector<Turn> turns;

  bool operator==(const SourceSession&) const = default;
};

// Record: {"session_id", "topic", "turns": [turn records]}
nlohmann::json to_json(const SourceSession& session);
SourceSession source_session_from_json(const nlohmann::json& j);
std::vector<SourceSession> read_sessions(const std::filesystem::path& path);
void write_sessions(const std::filesystem::path& path, const std::vector<SourceSession>& sessions);

struct TriggerSpan {
  int counselor_turn_index = 0;
  TriggerKind kind = TriggerKind::kControlling;
  std::vector<std::string> matched_profile_features;
  double confidence = 0.0;

  bool operator==(const TriggerSpan&) const = default;
};

struct RewritePlan {
  TriggerSpan trigger;
  int target_client_turn_index = 0;
  ReactionLabel resistance_type = ReactionLabel::kDefensiveResistance;
  int max_followup_turns = 3;
};

// Plan for the client turn right after the trigger. Throws Error(kPrecondition)
// when that turn is not a client turn or max_followup_turns is outside [0, 3].
RewritePlan make_rewrite_plan(const SourceSession& session, const TriggerSpan& trigger, int max_followup_turns);

enum class AnnotationTask { kExtractProfile, kJudgeProfile, kRewrite, kAnnotate };

struct AnnotationRequest {
  AnnotationTask task = AnnotationTask::kAnnotate;
  std::string prompt;
  const SourceSession* session = nullptr;
  const FivePProfile* profile = nullptr;
  const RewritePlan* plan = nullptr;
};

class AnnotationBackend {
 public:
  virtual ~AnnotationBackend() = default;
  // Throws BackendError.
  virtual std::string complete(const AnnotationRequest& request) = 0;
};

// Deterministic offline annotator: lexicon-based extraction, substring judging,
// canned rewrites and cooperative annotation. Thread-safe (stateless).
class RuleBasedAnnotationBackend : public AnnotationBackend {
 public:
  RuleBasedAnnotationBackend();
  std::string complete(const AnnotationRequest& request) override;

 private:
  std::map<FactorKind, std::vector<std::string>> lexicon_;
};

class ScriptedAnnotationBackend : public AnnotationBackend {
 public:
  explicit ScriptedAnnotationBackend(std::vector<std::string> replies);
  std::string complete(const AnnotationRequest& request) override;

 private:
  std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

// Sends the rendered prompt as the role prompt of a chat model.
class ChatAnnotationBackend : public AnnotationBackend {
 public:
  ChatAnnotationBackend(std::shared_ptr<sim::ModelBackend> model, sim::SamplingConfig sampling);
  std::string complete(const AnnotationRequest& request) override;

 private:
  std::shared_ptr<sim::ModelBackend> model_;
  sim::SamplingConfig sampling_;
};

// "[i] Counselor: ..." lines, one per turn.
std::string format_indexed_conversation(const std::vector<Turn>& turns);

// "Presenting Problems: a; b" lines -> profile. Throws Error(kParseFailure) when
// a field line is missing, Error(kValidationFailure) when the profile is invalid.
FivePProfile parse_profile_reply(std::string_view reply, const std::string& profile_id, Topic topic);
std::string render_profile_reply(const FivePProfile& profile);

struct QualityJudgement {
  bool coverage = false;
  bool faithfulness = false;
  bool keep() const { return coverage && faithfulness; }
};
QualityJudgement parse_judge_reply(std::string_view reply);

// {"turns": [{turn_index, text, label, rationale}]}; prose around the object is
// ignored. Client turns absent from the reply keep their text and stay unlabeled.
std::vector<Turn> apply_annotation_reply(std::string_view reply, const std::vector<Turn>& turns);

FivePProfile extract_profile(const SourceSession& session, AnnotationBackend& backend);
QualityJudgement judge_profile_quality(const FivePProfile& profile, const SourceSession& session,
                                       AnnotationBackend& backend);

// Joint lexical + profile-feature matches, ordered by counselor turn then kind.
std::vector<TriggerSpan> detect_triggers(const SourceSession& session, const FivePProfile& profile);
// Highest confidence, ties to the earliest turn.
std::optional<TriggerSpan> select_trigger(const std::vector<TriggerSpan>& spans);

Transcript rewrite_session(const SourceSession& session, const FivePProfile& profile, const RewritePlan& plan,
                           AnnotationBackend& backend);
Transcript annotate_session(const SourceSession& session, const FivePProfile& profile,
                            AnnotationBackend& backend);

enum class ViolationKind { kModifiedBeyondWindow, kMultipleEpisodes, kCounselorTextChanged, kUnlabeledClientTurn };
std::string_view violation_code(ViolationKind kind);

struct RewriteViolation {
  ViolationKind kind;
  int turn_index;
  std::string detail;
};

inline constexpr int kRewriteWindowFollowups = 3;

// Empty result means the rewrite is acceptable. The window starts at the first
// changed client turn and covers it plus the next 3 client turns. Throws
// Error(kStructureMismatch) when turn counts or speakers differ.
std::vector<RewriteViolation> validate_rewrite(const std::vector<Turn>& original, const std::vector<Turn>& rewritten);

// Maximal runs of resistance-labeled client turns (moderator turns skipped).
std::size_t resistance_episode_count(const std::vector<Turn>& turns);

struct CorpusConfig {
  int max_followup_turns = 3;
  int workers = 1;
};

struct SessionFailure {
  std::string session_id;
  std::string stage;  // extract, judge, rewrite, annotate, validate
  ErrorCode code = ErrorCode::kValidationFailure;
  std::string message;
};

struct CorpusStats {
  std::size_t input_count = 0;
  std::size_t session_count = 0;
  std::size_t resistance_session_count = 0;
  std::size_t dropped_count = 0;  // failed the profile quality judge
  std::map<ReactionLabel, std::size_t> label_counts;
  std::map<Topic, std::size_t> topic_counts;
  std::vector<SessionFailure> failures;
  std::vector<std::string> dropped_sessions;
};

struct CorpusResult {
  std::vector<Transcript> corpus;
  CorpusStats stats;
};

CorpusResult build_corpus(const std::vector<SourceSession>& sessions, AnnotationBackend& backend,
                          const CorpusConfig& config);

// Tab-separated "key\tvalue" table.
std::string format_stats(const CorpusStats& stats);
nlohmann::json stats_to_json(const CorpusStats& stats);

// Ten synthetic sessions; the first seven carry a planted trigger (all five
// kinds appear), the last three carry none.
std::vector<SourceSession> make_fixture_sessions();
inline constexpr std::size_t kFixturePlantedTriggers = 7;

}  // namespace rimr::dataset
