#include <gtest/gtest.h>

#include "httplib.h"
#include "rimr/dataset/pipeline.h"
#include "rimr/reasoning_format.h"
#include "rimr/serialize.h"
#include "rimr/sim/harness.h"

namespace rimr::sim {
namespace {

using nlohmann::json;

FivePProfile profile(std::string id = "p1") {
  FivePProfile p;
  p.profile_id = std::move(id);
  p.topic = Topic::kEmotion;
  p.presenting_problems = {"low mood"};
  p.predisposing_factors = {"fear of rejection"};
  p.precipitating_factors = {"breakup"};
  p.perpetuating_factors = {"rumination"};
  return p;
}

std::string client_output(ReactionLabel label, std::string reply) {
  return render_client_output({"reflect", "aware", compose_reaction_decision(label, "do it"), label}, reply);
}

TEST(RunSession, ThreeExchangesThenTerminate) {
  ScriptedBackend counselor({"How long has this been going on?", "What helps?"});
  ScriptedBackend client({client_output(ReactionLabel::kNonResistant, "A while."),
                          client_output(ReactionLabel::kCompliantResistance, "Sure, I guess."),
                          client_output(ReactionLabel::kFacilitative, "Talking to friends, actually.")});
  ScriptedBackend moderator({"[CONTINUE]", "[CONTINUE]", "[TERMINATE]"});
  Transcript t = run_session("s1", profile(), counselor, client, moderator);
  EXPECT_EQ(t.termination, Termination::kModeratorTerminate);
  EXPECT_EQ(t.conversational_turn_count(), 6u);
  EXPECT_EQ(t.turns.front().text, kCounselorOpener);
  EXPECT_NO_THROW(validate_transcript(t));
  std::vector<ReactionLabel> labels;
  for (const Turn& turn : t.turns) {
    if (turn.speaker == Speaker::kClient) {
      labels.push_back(*turn.label);
      ASSERT_TRUE(turn.trace);
      EXPECT_EQ(turn.trace->decided_label, *turn.label);
    }
  }
  EXPECT_EQ(labels, (std::vector<ReactionLabel>{ReactionLabel::kNonResistant, ReactionLabel::kCompliantResistance,
                                                ReactionLabel::kFacilitative}));
  EXPECT_EQ(t.turns.back().speaker, Speaker::kModerator);
  EXPECT_EQ(t.turns.back().text, "[TERMINATE]");
}

TEST(RunSession, PerpetualContinueStopsAtFiftyTurns) {
  auto counselor = ScriptedBackend::constant("Go on.");
  auto client = ScriptedBackend::constant(client_output(ReactionLabel::kNonResistant, "Okay."));
  auto moderator = ScriptedBackend::constant("[CONTINUE]");
  Transcript t = run_session("s", profile(), counselor, client, moderator);
  EXPECT_EQ(t.termination, Termination::kTurnCapReached);
  EXPECT_EQ(t.conversational_turn_count(), 50u);
  EXPECT_TRUE(alternates_from_counselor(t.turns));
  EXPECT_EQ(moderator.calls(), 24u);  // not consulted after the capping 25th client turn
}

TEST(RunSession, OddCapEndsOnCounselorTurn) {
  auto counselor = ScriptedBackend::constant("Go on.");
  auto client = ScriptedBackend::constant(client_output(ReactionLabel::kNonResistant, "Okay."));
  auto moderator = ScriptedBackend::constant("[continue]");
  SessionOptions opts;
  opts.limits.max_turns = 5;
  Transcript t = run_session("s", profile(), counselor, client, moderator, opts);
  EXPECT_EQ(t.conversational_turn_count(), 5u);
  EXPECT_EQ(t.turns.back().speaker, Speaker::kCounselor);
}

TEST(RunSession, MalformedClientOutputIsFlaggedAfterRetries) {
  ScriptedBackend counselor({});
  ScriptedBackend client({"no think block", "still nothing", "<think>broken"});
  ScriptedBackend moderator({"[TERMINATE]"});
  Transcript t = run_session("s", profile(), counselor, client, moderator);
  EXPECT_EQ(client.calls(), 3u);
  const Turn& c = t.turns[1];
  EXPECT_TRUE(c.parse_failed);
  EXPECT_EQ(c.label, ReactionLabel::kNonResistant);
  EXPECT_EQ(c.text, "<think>broken");
  EXPECT_FALSE(c.trace.has_value());
  EXPECT_EQ(t.termination, Termination::kModeratorTerminate);
}

TEST(RunSession, RetrySucceedsWithoutFlag) {
  ScriptedBackend counselor({});
  ScriptedBackend client({"oops", client_output(ReactionLabel::kEmotionalResistance, "Leave me alone!")});
  ScriptedBackend moderator({"[TERMINATE]"});
  Transcript t = run_session("s", profile(), counselor, client, moderator);
  EXPECT_FALSE(t.turns[1].parse_failed);
  EXPECT_EQ(t.turns[1].label, ReactionLabel::kEmotionalResistance);
}

TEST(RunSession, UnparseableModeratorFallsBackToContinue) {
  ScriptedBackend counselor({"Next?"});
  auto client = ScriptedBackend::constant(client_output(ReactionLabel::kNonResistant, "Fine."));
  ScriptedBackend moderator({"hmm", "unsure", "??", "[TERMINATE]"});
  Transcript t = run_session("s", profile(), counselor, client, moderator);
  EXPECT_EQ(t.turns[2].speaker, Speaker::kModerator);
  EXPECT_TRUE(t.turns[2].parse_failed);
  EXPECT_EQ(t.termination, Termination::kModeratorTerminate);
  EXPECT_EQ(t.conversational_turn_count(), 4u);
}

TEST(RunSession, BackendFailureKeepsPartialTranscript) {
  ScriptedBackend counselor({});  // exhausted at the first counselor generation
  auto client = ScriptedBackend::constant(client_output(ReactionLabel::kNonResistant, "Fine."));
  auto moderator = ScriptedBackend::constant("[CONTINUE]");
  Transcript t = run_session("s", profile(), counselor, client, moderator);
  EXPECT_EQ(t.termination, Termination::kBackendFailure);
  EXPECT_EQ(t.conversational_turn_count(), 2u);
}

TEST(RunSession, ModeratorEveryOtherClientTurn) {
  auto counselor = ScriptedBackend::constant("Go on.");
  auto client = ScriptedBackend::constant(client_output(ReactionLabel::kNonResistant, "Okay."));
  auto moderator = ScriptedBackend::constant("[CONTINUE]");
  SessionOptions opts;
  opts.limits = {10, 2};
  run_session("s", profile(), counselor, client, moderator, opts);
  EXPECT_EQ(moderator.calls(), 2u);  // after client turns 2 and 4
}

TEST(RunSession, ClientSeesHistoryAndUtterance) {
  ScriptedBackend counselor({"Tell me about your week."});
  ScriptedBackend client({client_output(ReactionLabel::kNonResistant, "Rough start."),
                          client_output(ReactionLabel::kNonResistant, "Busy.")});
  ScriptedBackend moderator({"[CONTINUE]", "[TERMINATE]"});
  run_session("s", profile(), counselor, client, moderator);
  auto prompts = client.prompts();
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_EQ(prompts[0].find("Conversation history"), std::string::npos);
  EXPECT_NE(prompts[1].find("Client: Rough start."), std::string::npos);
  EXPECT_NE(prompts[1].find("Tell me about your week."), std::string::npos);
}

TEST(ClientMessages, RolesFromClientPerspective) {
  std::vector<Turn> turns = {{Speaker::kCounselor, "a", 0}, {Speaker::kClient, "b", 1}, {Speaker::kModerator, "[CONTINUE]", 2}};
  auto m = client_messages(turns, "c");
  EXPECT_EQ(m, (std::vector<ChatMessage>{{"user", "a"}, {"assistant", "b"}, {"user", "c"}}));
}

// ---- replay -----------------------------------------------------------------------

Transcript gold_session(int exchanges) {
  Transcript g;
  g.session_id = "gold";
  g.profile = profile();
  for (int i = 0; i < exchanges; ++i) {
    g.turns.push_back({Speaker::kCounselor, "Counselor line " + std::to_string(i) + " caf\xC3\xA9 exact bytes  ", 2 * i});
    Turn c{Speaker::kClient, "client " + std::to_string(i), 2 * i + 1};
    c.label = i == 2 ? ReactionLabel::kDefensiveResistance : ReactionLabel::kNonResistant;
    c.rationale = "because";
    g.turns.push_back(c);
  }
  return g;
}

TEST(RunReplay, IdentityReplayMatchesGold) {
  Transcript g = gold_session(5);
  ReplayBackend replay(g);
  auto r = run_replay(g, replay);
  ASSERT_EQ(r.alignment.size(), 5u);
  for (const auto& a : r.alignment) EXPECT_EQ(a.predicted, a.gold);
  EXPECT_EQ(r.transcript.termination, Termination::kSourceComplete);
  for (std::size_t i = 0; i < g.turns.size(); ++i) {
    EXPECT_EQ(r.transcript.turns[i].text, g.turns[i].text);
    EXPECT_EQ(r.transcript.turns[i].turn_index, g.turns[i].turn_index);
  }
}

TEST(RunReplay, CounselorBytesPreservedWithAnyClient) {
  Transcript g = gold_session(5);  // 10 turns
  auto client = ScriptedBackend::constant(client_output(ReactionLabel::kFacilitative, "Yes, let's."));
  auto r = run_replay(g, client);
  for (std::size_t i = 0; i < g.turns.size(); i += 2) EXPECT_EQ(r.transcript.turns[i].text, g.turns[i].text);
  int mismatched = 0;
  for (const auto& a : r.alignment) {
    EXPECT_EQ(a.predicted, ReactionLabel::kFacilitative);
    if (is_resistance(a.gold) && a.predicted != a.gold) ++mismatched;
  }
  EXPECT_EQ(mismatched, 1);
}

TEST(RunReplay, BackendFailureLeavesRemainingUnpredicted) {
  Transcript g = gold_session(3);
  ScriptedBackend client({client_output(ReactionLabel::kNonResistant, "ok")});
  auto r = run_replay(g, client);
  EXPECT_EQ(r.transcript.termination, Termination::kBackendFailure);
  ASSERT_EQ(r.alignment.size(), 3u);
  EXPECT_TRUE(r.alignment[0].predicted.has_value());
  EXPECT_FALSE(r.alignment[1].predicted.has_value());
  EXPECT_FALSE(r.alignment[2].predicted.has_value());
}

TEST(RunReplay, UnlabeledGoldIsPrecondition) {
  Transcript g = gold_session(2);
  g.turns[1].label.reset();
  auto client = ScriptedBackend::constant("x");
  EXPECT_THROW(run_replay(g, client), Error);
}

// ---- batch ------------------------------------------------------------------------

SessionRunner scripted_runner(std::string failing_profile = "") {
  return [failing_profile](const FivePProfile& p, int repeat, const std::string& id) {
    ScriptedBackend counselor({"Question " + std::to_string(repeat)});
    auto client = ScriptedBackend::constant(client_output(ReactionLabel::kNonResistant, p.profile_id + " answer"));
    ScriptedBackend moderator({"[CONTINUE]", "[TERMINATE]"});
    if (p.profile_id == failing_profile && repeat == 1) {
      ScriptedBackend dead({});
      return run_session(id, p, counselor, dead, moderator);
    }
    return run_session(id, p, counselor, client, moderator);
  };
}

TEST(BatchRun, FixedOrderTwoProfilesThreeRepeats) {
  auto r = batch_run({profile("a"), profile("b")}, 3, scripted_runner(), 1);
  ASSERT_EQ(r.transcripts.size(), 6u);
  std::vector<std::string> ids;
  for (const auto& t : r.transcripts) ids.push_back(t.session_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a-r0", "a-r1", "a-r2", "b-r0", "b-r1", "b-r2"}));
}

TEST(BatchRun, ConcurrencyDoesNotChangeResults) {
  auto one = batch_run({profile("a"), profile("b"), profile("c")}, 3, scripted_runner(), 1);
  auto four = batch_run({profile("a"), profile("b"), profile("c")}, 3, scripted_runner(), 4);
  EXPECT_EQ(one.transcripts, four.transcripts);
}

TEST(BatchRun, FailureIsIsolated) {
  auto r = batch_run({profile("a"), profile("b")}, 3, scripted_runner("b"), 4);
  EXPECT_EQ(r.transcripts.size(), 5u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].session_id, "b-r1");
  ASSERT_TRUE(r.failures[0].partial);
  EXPECT_EQ(r.failures[0].partial->termination, Termination::kBackendFailure);
}

TEST(BatchRun, RunnerExceptionsBecomeFailures) {
  auto r = batch_run({profile("a")}, 2,
                     [](const FivePProfile&, int repeat, const std::string& id) -> Transcript {
                       if (repeat == 0) throw std::runtime_error("boom");
                       return Transcript{id, profile("a"), {}, Termination::kModeratorTerminate};
                     },
                     2);
  EXPECT_EQ(r.transcripts.size(), 1u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].message, "boom");
  EXPECT_THROW(batch_run({profile("a")}, 0, scripted_runner(), 1), Error);
}

TEST(Journal, AppendsAndReloads) {
  auto path = std::filesystem::temp_directory_path() / "rimr_harness_test" / "journal.jsonl";
  std::filesystem::remove(path);
  TranscriptJournal journal(path);
  auto r = batch_run({profile("a")}, 2, scripted_runner(), 1);
  for (const auto& t : r.transcripts) journal.append(t);
  auto records = jsonl::read_file(path);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(transcript_from_json(records[1]), r.transcripts[1]);
}

// ---- stubs and remote --------------------------------------------------------------

TEST(Stubs, FullSessionWithStubsIsResistantOnTrigger) {
  FivePProfile p = profile();  // fear of rejection -> compliant trigger on "tell me more"
  auto counselor = make_stub_counselor();
  auto client = make_stub_client(p);
  auto moderator = make_stub_moderator(4);
  Transcript t = run_session("stub", p, *counselor, *client, *moderator);
  EXPECT_EQ(t.termination, Termination::kModeratorTerminate);
  EXPECT_EQ(t.client_turn_count(), 4u);
  EXPECT_EQ(t.turns[3].text, "Can you tell me more about what has been going on?");
  EXPECT_EQ(t.turns[4].label, ReactionLabel::kCompliantResistance);
  EXPECT_EQ(t.turns[1].label, ReactionLabel::kNonResistant);
}

TEST(Sampling, DefaultsAndValidation) {
  SamplingConfig s;
  EXPECT_EQ(s.temperature, 0.7);
  EXPECT_EQ(s.top_p, 0.8);
  EXPECT_EQ(s.top_k, 20);
  EXPECT_EQ(sampling_from_json(to_json(s)), s);
  EXPECT_THROW(sampling_from_json(json{{"top_p", 0.0}}), Error);
  EXPECT_THROW(sampling_from_json(json{{"temperature", -1.0}}), Error);
}

TEST(RemoteChatBackend, WireContractAndRetries) {
  httplib::Server server;
  std::atomic<int> hits{0};
  json last_request;
  std::string last_auth;
  server.Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 503;
      return;
    }
    last_request = json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    res.set_content(json{{"text", "[CONTINUE]"}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.auth_token = "secret";
  cfg.backoff = std::chrono::milliseconds(1);
  RemoteChatBackend backend(cfg);
  EXPECT_EQ(backend.generate("role", {{"user", "hi"}}, {}), "[CONTINUE]");
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(last_auth, "Bearer secret");
  EXPECT_EQ(last_request["role_prompt"], "role");
  EXPECT_EQ(last_request["messages"][0]["content"], "hi");
  EXPECT_EQ(last_request["sampling"]["top_k"], 20);

  server.stop();
  th.join();

  cfg.retries = 1;
  RemoteChatBackend dead(cfg);
  EXPECT_THROW(dead.generate("role", {}, {}), BackendError);
}

}  // namespace
}  // namespace rimr::sim
