#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rimr/sim/backend.h"

namespace rimr::sim {

struct SessionLimits {
  int max_turns = 50;       // conversational turns, counselor and client
  int moderator_every = 1;  // consult the moderator after every n-th client turn
};
void validate_limits(const SessionLimits& limits);

struct SessionOptions {
  SessionLimits limits;
  SamplingConfig sampling;
  int client_retries = 2;
  int moderator_retries = 2;
};

// Counselor opens with the fixed opener; client turns are parsed into trace,
// label and reply; the moderator is consulted after client turns and stored as
// out-of-band turns. A BackendError ends the session with BackendFailure.
Transcript run_session(const std::string& session_id, const FivePProfile& profile, ModelBackend& counselor,
                       ModelBackend& client, ModelBackend& moderator, const SessionOptions& options = {});

// One client turn answering history.back(), a counselor turn. Unparseable
// output after the retries is recorded raw, labeled NonResistant and flagged.
Turn generate_client_turn(const FivePProfile& profile, const std::vector<Turn>& history, int turn_index,
                          ModelBackend& client, const SessionOptions& options);

struct ModeratorOutcome {
  Turn turn;  // out-of-band moderator turn to record
  bool terminate = false;
};

// Unparseable verdicts after the retries count as Continue, flagged on the turn.
ModeratorOutcome consult_moderator(const Transcript& transcript, int turn_index, ModelBackend& moderator,
                                   const SessionOptions& options);

struct AlignedLabel {
  int turn_index = 0;
  ReactionLabel gold = ReactionLabel::kNonResistant;
  std::optional<ReactionLabel> predicted;  // empty when the session ended early
  bool flagged = false;                    // client output failed to parse

  bool operator==(const AlignedLabel&) const = default;
};

struct ReplayResult {
  Transcript transcript;
  std::vector<AlignedLabel> alignment;
};

// Counselor turns are copied verbatim from the labeled session; only client
// turns are generated. Precondition: every gold client turn is labeled.
ReplayResult run_replay(const Transcript& gold, ModelBackend& client, const SessionOptions& options = {});

// Client-side message history for the next client turn.
std::vector<ChatMessage> client_messages(const std::vector<Turn>& turns, const std::string& counselor_utterance);
std::vector<ChatMessage> counselor_messages(const std::vector<Turn>& turns);

struct BatchFailure {
  std::string session_id;
  std::string profile_id;
  int repeat = 0;
  std::string message;
  std::optional<Transcript> partial;
};

struct BatchResult {
  std::vector<Transcript> transcripts;  // successes, profile order x repeat index
  std::vector<BatchFailure> failures;
};

using SessionRunner = std::function<Transcript(const FivePProfile& profile, int repeat, const std::string& session_id)>;

std::string batch_session_id(const FivePProfile& profile, int repeat);

// Runs |profiles| x repeats sessions on up to `concurrency` threads. Sessions
// that throw or end with BackendFailure are reported as failures.
BatchResult batch_run(const std::vector<FivePProfile>& profiles, int repeats, const SessionRunner& runner,
                      int concurrency);

// Append-only JSONL transcript log, safe to share between sessions.
class TranscriptJournal {
 public:
  explicit TranscriptJournal(std::filesystem::path path);
  void append(const Transcript& transcript);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

// Offline stand-ins used by the CLI and tests.
// Counselor: cycles through canned follow-up questions.
std::unique_ptr<ModelBackend> make_stub_counselor();
// Client: resistant when the latest counselor utterance is a trigger for the
// profile, otherwise cooperative; always emits canonical output.
std::unique_ptr<ModelBackend> make_stub_client(const FivePProfile& profile);
// Moderator: continues until its n-th consultation, then terminates. One per session.
std::unique_ptr<ModelBackend> make_stub_moderator(int client_turns);

}  // namespace rimr::sim
