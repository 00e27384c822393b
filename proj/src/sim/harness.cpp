#include "rimr/sim/harness.h"

#include <atomic>

#include "rimr/dataset/pipeline.h"
#include "rimr/reasoning_format.h"
#include "rimr/serialize.h"
#include "rimr/util/parallel.h"
#include "rimr/util/text.h"

namespace rimr::sim {

void validate_limits(const SessionLimits& limits) {
  if (limits.max_turns < 1) throw Error(ErrorCode::kInvalidValue, "max_turns must be >= 1");
  if (limits.moderator_every < 1) throw Error(ErrorCode::kInvalidValue, "moderator_every must be >= 1");
}

std::vector<ChatMessage> client_messages(const std::vector<Turn>& turns, const std::string& counselor_utterance) {
  std::vector<ChatMessage> out;
  for (const Turn& t : turns) {
    if (t.speaker == Speaker::kModerator) continue;
    out.push_back({t.speaker == Speaker::kClient ? "assistant" : "user", t.text});
  }
  out.push_back({"user", counselor_utterance});
  return out;
}

std::vector<ChatMessage> counselor_messages(const std::vector<Turn>& turns) {
  std::vector<ChatMessage> out;
  for (const Turn& t : turns) {
    if (t.speaker == Speaker::kModerator) continue;
    out.push_back({t.speaker == Speaker::kCounselor ? "assistant" : "user", t.text});
  }
  return out;
}

Turn generate_client_turn(const FivePProfile& profile, const std::vector<Turn>& history, int turn_index,
                          ModelBackend& client, const SessionOptions& options) {
  const std::string& utterance = history.back().text;
  std::vector<Turn> prior(history.begin(), history.end() - 1);
  const std::string prompt = render_client_prompt(make_client_prompt_context(profile, prior, utterance));
  const auto messages = client_messages(prior, utterance);

  std::string raw;
  for (int attempt = 0; attempt <= options.client_retries; ++attempt) {
    raw = client.generate(prompt, messages, options.sampling);
    try {
      ParsedClientOutput parsed = parse_client_output(raw);
      Turn t{Speaker::kClient, std::move(parsed.reply), turn_index};
      t.label = parsed.trace.decided_label;
      t.trace = std::move(parsed.trace);
      return t;
    } catch (const ClientOutputError&) {
    }
  }
  Turn t{Speaker::kClient, std::string(text::trim(raw)), turn_index};
  t.label = ReactionLabel::kNonResistant;
  t.parse_failed = true;
  return t;
}

ModeratorOutcome consult_moderator(const Transcript& transcript, int turn_index, ModelBackend& moderator,
                                   const SessionOptions& options) {
  const std::string prompt = render_moderator_prompt(transcript, options.limits.max_turns);
  std::string raw;
  for (int attempt = 0; attempt <= options.moderator_retries; ++attempt) {
    raw = moderator.generate(prompt, {}, options.sampling);
    try {
      ModeratorDecision d = parse_moderator_decision(raw);
      return {Turn{Speaker::kModerator, std::string(moderator_token(d)), turn_index},
              d == ModeratorDecision::kTerminate};
    } catch (const Error&) {
    }
  }
  Turn t{Speaker::kModerator, std::string(text::trim(raw)), turn_index};
  t.parse_failed = true;
  return {t, false};
}

Transcript run_session(const std::string& session_id, const FivePProfile& profile, ModelBackend& counselor,
                       ModelBackend& client, ModelBackend& moderator, const SessionOptions& options) {
  validate_limits(options.limits);
  validate_sampling(options.sampling);
  Transcript t{session_id, profile, {}, Termination::kTurnCapReached};
  int next_index = 0;
  const auto cap_reached = [&] {
    return t.conversational_turn_count() >= static_cast<std::size_t>(options.limits.max_turns);
  };

  try {
    t.turns.push_back({Speaker::kCounselor, std::string(kCounselorOpener), next_index++});
    int client_turns = 0;
    while (!cap_reached()) {
      t.turns.push_back(generate_client_turn(profile, t.turns, next_index++, client, options));
      if (cap_reached()) break;

      if (++client_turns % options.limits.moderator_every == 0) {
        auto outcome = consult_moderator(t, next_index++, moderator, options);
        t.turns.push_back(std::move(outcome.turn));
        if (outcome.terminate) {
          t.termination = Termination::kModeratorTerminate;
          return t;
        }
      }

      std::string reply = counselor.generate(render_counselor_prompt(), counselor_messages(t.turns), options.sampling);
      t.turns.push_back({Speaker::kCounselor, std::string(text::trim(reply)), next_index++});
    }
    t.termination = Termination::kTurnCapReached;
  } catch (const BackendError&) {
    t.termination = Termination::kBackendFailure;
  }
  return t;
}

ReplayResult run_replay(const Transcript& gold, ModelBackend& client, const SessionOptions& options) {
  validate_sampling(options.sampling);
  for (const Turn& g : gold.turns) {
    if (g.speaker == Speaker::kClient && !g.label) {
      throw Error(ErrorCode::kPrecondition, "gold turn " + std::to_string(g.turn_index) + " is unlabeled");
    }
  }

  ReplayResult result;
  Transcript& t = result.transcript;
  t.session_id = gold.session_id;
  t.profile = gold.profile;
  t.termination = Termination::kSourceComplete;
  bool failed = false;
  for (const Turn& g : gold.turns) {
    if (g.speaker == Speaker::kModerator) continue;
    if (g.speaker == Speaker::kCounselor) {
      if (!failed) t.turns.push_back({Speaker::kCounselor, g.text, g.turn_index});
      continue;
    }
    AlignedLabel a{g.turn_index, *g.label, std::nullopt, false};
    if (!failed) {
      if (t.turns.empty() || t.turns.back().speaker != Speaker::kCounselor) {
        throw Error(ErrorCode::kPrecondition, "gold client turn " + std::to_string(g.turn_index) +
                                                  " does not follow a counselor turn");
      }
      try {
        Turn c = generate_client_turn(gold.profile, t.turns, g.turn_index, client, options);
        a.predicted = c.label;
        a.flagged = c.parse_failed;
        t.turns.push_back(std::move(c));
      } catch (const BackendError&) {
        failed = true;
        t.termination = Termination::kBackendFailure;
      }
    }
    result.alignment.push_back(a);
  }
  return result;
}

std::string batch_session_id(const FivePProfile& profile, int repeat) {
  return profile.profile_id + "-r" + std::to_string(repeat);
}

BatchResult batch_run(const std::vector<FivePProfile>& profiles, int repeats, const SessionRunner& runner,
                      int concurrency) {
  if (repeats < 1) throw Error(ErrorCode::kPrecondition, "repeats must be >= 1");
  const std::size_t r = static_cast<std::size_t>(repeats);

  struct Outcome {
    std::optional<Transcript> transcript;
    std::optional<BatchFailure> failure;
  };
  auto outcomes = parallel_map(profiles.size() * r, concurrency, [&](std::size_t i) {
    const FivePProfile& p = profiles[i / r];
    const int repeat = static_cast<int>(i % r);
    const std::string id = batch_session_id(p, repeat);
    try {
      Transcript t = runner(p, repeat, id);
      if (t.termination == Termination::kBackendFailure) {
        return Outcome{std::nullopt, BatchFailure{id, p.profile_id, repeat, "backend failure", std::move(t)}};
      }
      return Outcome{std::move(t), std::nullopt};
    } catch (const std::exception& e) {
      return Outcome{std::nullopt, BatchFailure{id, p.profile_id, repeat, e.what(), std::nullopt}};
    }
  });

  BatchResult result;
  for (Outcome& o : outcomes) {
    if (o.transcript) result.transcripts.push_back(std::move(*o.transcript));
    if (o.failure) result.failures.push_back(std::move(*o.failure));
  }
  return result;
}

TranscriptJournal::TranscriptJournal(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void TranscriptJournal::append(const Transcript& transcript) {
  std::lock_guard lock(mu_);
  jsonl::append_line(path_, to_json(transcript));
}

// ---- stubs --------------------------------------------------------------------

namespace {

constexpr std::string_view kStubQuestions[] = {
    "Can you tell me more about what has been going on?",
    "How do you feel when that happens?",
    "I think you should try writing your worries down each night.",
    "What role did you play in how things turned out?",
    "This exercise might help: a short breathing routine before bed.",
    "What would you like to be different a month from now?",
};

std::string_view stub_resistant_reply(ReactionLabel label) {
  switch (label) {
    case ReactionLabel::kControllingResistance: return "I already know what works for me, thanks.";
    case ReactionLabel::kEmotionalResistance: return "I can't talk about this, it is all too much!";
    case ReactionLabel::kDefensiveResistance: return "I'm not convinced this kind of thing helps anyone.";
    case ReactionLabel::kAvoidantResistance: return "Anyway, did I tell you about my weekend?";
    case ReactionLabel::kCompliantResistance: return "Sure. Yeah. I guess.";
    default: return "Okay.";
  }
}

}  // namespace

std::unique_ptr<ModelBackend> make_stub_counselor() {
  return std::make_unique<FunctionBackend>([](const std::string&, const std::vector<ChatMessage>& messages) {
    std::size_t own = 0;
    for (const auto& m : messages) own += m.role == "assistant" ? 1 : 0;
    return std::string(kStubQuestions[(own - 1 + std::size(kStubQuestions)) % std::size(kStubQuestions)]);
  });
}

std::unique_ptr<ModelBackend> make_stub_client(const FivePProfile& profile) {
  return std::make_unique<FunctionBackend>([profile](const std::string&, const std::vector<ChatMessage>& messages) {
    const std::string utterance = messages.empty() ? std::string() : messages.back().content;
    dataset::SourceSession probe{"probe", profile.topic, {{Speaker::kCounselor, utterance, 0}}};
    auto trigger = dataset::select_trigger(dataset::detect_triggers(probe, profile));
    std::string features;
    for (FactorKind k : kAllFactorKinds) {
      for (const auto& kw : profile.factors(k)) features += (features.empty() ? "" : ", ") + kw;
    }
    if (trigger) {
      const ReactionLabel label = trigger_label(trigger->kind);
      ReasoningTrace trace{"My profile carries " + trigger->matched_profile_features.front() + ".",
                           "The counselor's last remark presses on that directly.",
                           compose_reaction_decision(label, "Push back on the counselor."), label};
      return render_client_output(trace, stub_resistant_reply(label));
    }
    ReasoningTrace trace{"Relevant factors: " + features + ".", "The question feels safe enough to answer.",
                         compose_reaction_decision(ReactionLabel::kNonResistant, "Answer plainly."),
                         ReactionLabel::kNonResistant};
    return render_client_output(trace, "It has been a hard few weeks, honestly.");
  });
}

std::unique_ptr<ModelBackend> make_stub_moderator(int client_turns) {
  auto calls = std::make_shared<std::atomic<int>>(0);
  return std::make_unique<FunctionBackend>([calls, client_turns](const std::string&, const std::vector<ChatMessage>&) {
    return std::string(++*calls >= client_turns ? "[TERMINATE]" : "[CONTINUE]");
  });
}

}  // namespace rimr::sim
