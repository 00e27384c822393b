#include <gtest/gtest.h>

#include <random>

#include "../support/rewrite_gen.h"
#include "rimr/dataset/pipeline.h"
#include "rimr/reasoning_format.h"

namespace rimr::dataset {
namespace {

using nlohmann::json;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

SourceSession two_line_session(std::string counselor, std::string client = "I see.") {
  return {"s", Topic::kEmotion,
          {{Speaker::kCounselor, std::string(kCounselorOpener), 0},
           {Speaker::kClient, "Things are hard.", 1},
           {Speaker::kCounselor, std::move(counselor), 2},
           {Speaker::kClient, std::move(client), 3}}};
}

FivePProfile profile_with(FactorKind kind, std::string keyword) {
  FivePProfile p;
  p.profile_id = "p";
  p.presenting_problems = {"low mood"};
  p.predisposing_factors = {"perfectionism"};
  p.precipitating_factors = {"layoff"};
  p.perpetuating_factors = {"rumination"};
  p.factors(kind).push_back(std::move(keyword));
  return p;
}

const SourceSession& fixture(std::string_view id) {
  static const auto sessions = make_fixture_sessions();
  for (const auto& s : sessions) {
    if (s.session_id == id) return s;
  }
  throw std::runtime_error("no fixture");
}

// ---- extraction and judging --------------------------------------------------

TEST(ExtractProfile, ScriptedWellFormedReply) {
  ScriptedAnnotationBackend backend({"Presenting Problems: work stress; burnout\n"
                                     "Predisposing Factors: perfectionism\n"
                                     "Precipitating Factors: job promotion\n"
                                     "Perpetuating Factors: overworking\n"
                                     "Protective Factors: none\n"});
  FivePProfile p = extract_profile(fixture("fx-01"), backend);
  EXPECT_EQ(p.presenting_problems, (std::vector<std::string>{"work stress", "burnout"}));
  EXPECT_TRUE(p.protective_factors.empty());
  EXPECT_EQ(p.profile_id, "fx-01");
  EXPECT_EQ(p.topic, Topic::kAcademicCareer);
}

TEST(ExtractProfile, ProseReplyIsParseFailure) {
  ScriptedAnnotationBackend backend({"The client seems stressed about work and could use some rest."});
  EXPECT_EQ(code_of([&] { extract_profile(fixture("fx-01"), backend); }), ErrorCode::kParseFailure);
}

TEST(ExtractProfile, EmptyRequiredListIsValidationFailure) {
  ScriptedAnnotationBackend backend({"Presenting Problems: burnout\nPredisposing Factors:\n"
                                     "Precipitating Factors: x\nPerpetuating Factors: y\nProtective Factors: z\n"});
  EXPECT_EQ(code_of([&] { extract_profile(fixture("fx-01"), backend); }), ErrorCode::kValidationFailure);
}

TEST(ExtractProfile, TolerantLineFormat) {
  FivePProfile p = parse_profile_reply("**Presenting Problems**: a ;b\n- predisposing factors：c\n"
                                       "Precipitating Factors: d\nPerpetuating Factors: e\nProtective Factors: N/A",
                                       "id", Topic::kEmotion);
  EXPECT_EQ(p.presenting_problems, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(p.predisposing_factors, std::vector<std::string>{"c"});
}

TEST(ExtractProfile, RuleBasedFindsPlantedBurnoutKeywords) {
  RuleBasedAnnotationBackend backend;
  FivePProfile p = extract_profile(fixture("fx-01"), backend);
  auto has = [&](const std::string& kw) {
    return std::find(p.presenting_problems.begin(), p.presenting_problems.end(), kw) != p.presenting_problems.end();
  };
  EXPECT_TRUE(has("work stress"));
  EXPECT_TRUE(has("burnout"));
  EXPECT_EQ(p.predisposing_factors, std::vector<std::string>{"high need for control"});
}

TEST(ExtractProfile, RenderedReplyRoundTrips) {
  FivePProfile p = profile_with(FactorKind::kProtective, "supportive friend");
  p.profile_id = "x";
  EXPECT_EQ(parse_profile_reply(render_profile_reply(p), "x", p.topic), p);
}

TEST(JudgeProfile, RuleBasedKeepsFaithfulProfile) {
  RuleBasedAnnotationBackend backend;
  const auto& s = fixture("fx-02");
  FivePProfile p = extract_profile(s, backend);
  auto j = judge_profile_quality(p, s, backend);
  EXPECT_TRUE(j.coverage);
  EXPECT_TRUE(j.faithfulness);
  EXPECT_TRUE(j.keep());
}

TEST(JudgeProfile, UnutteredKeywordFailsFaithfulness) {
  RuleBasedAnnotationBackend backend;
  const auto& s = fixture("fx-02");
  FivePProfile p = extract_profile(s, backend);
  p.protective_factors.push_back("pilot license");
  auto j = judge_profile_quality(p, s, backend);
  EXPECT_TRUE(j.coverage);
  EXPECT_FALSE(j.faithfulness);
  EXPECT_FALSE(j.keep());
}

TEST(JudgeProfile, ConjunctionOfBothCriteria) {
  EXPECT_FALSE(parse_judge_reply("coverage: yes\nfaithfulness: no").keep());
  EXPECT_FALSE(parse_judge_reply("coverage: no\nfaithfulness: yes").keep());
  EXPECT_TRUE(parse_judge_reply("Coverage: YES\nFaithfulness: yes").keep());
  EXPECT_EQ(code_of([] { parse_judge_reply("looks fine"); }), ErrorCode::kParseFailure);
}

// ---- triggers ------------------------------------------------------------------

TEST(DetectTriggers, MethodQuestionPlusPriorCounselingIsDefensive) {
  auto spans = detect_triggers(two_line_session("Let's try this method; trust the process."),
                               profile_with(FactorKind::kPredisposing, "prior negative counseling experiences"));
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].kind, TriggerKind::kDefensive);
  EXPECT_EQ(spans[0].counselor_turn_index, 2);
  EXPECT_EQ(spans[0].matched_profile_features, std::vector<std::string>{"prior negative counseling experiences"});
  EXPECT_DOUBLE_EQ(spans[0].confidence, 2.0 / 3.0);
  EXPECT_EQ(trigger_label(spans[0].kind), ReactionLabel::kDefensiveResistance);
}

TEST(DetectTriggers, ProfileGateBlocksLexicalMatch) {
  EXPECT_TRUE(detect_triggers(two_line_session("Let's try this method; trust the process."),
                              profile_with(FactorKind::kProtective, "supportive friend"))
                  .empty());
}

TEST(DetectTriggers, AdviceWithNeedForControlIsControlling) {
  auto spans = detect_triggers(two_line_session("I think you should take a break, my advice is to rest."),
                               profile_with(FactorKind::kPredisposing, "high need for control"));
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].kind, TriggerKind::kControlling);
  EXPECT_DOUBLE_EQ(spans[0].confidence, 1.0 / 3.0);
}

TEST(DetectTriggers, SelectionPrefersConfidenceThenEarliestTurn) {
  std::vector<TriggerSpan> spans = {{4, TriggerKind::kAvoidant, {"a"}, 1.0 / 3},
                                    {6, TriggerKind::kEmotional, {"b"}, 2.0 / 3},
                                    {2, TriggerKind::kDefensive, {"c"}, 2.0 / 3}};
  EXPECT_EQ(select_trigger(spans)->counselor_turn_index, 2);
  EXPECT_FALSE(select_trigger({}).has_value());
}

TEST(DetectTriggers, PlanTargetsFollowingClientTurn) {
  auto s = two_line_session("Let's try this method.");
  TriggerSpan span{2, TriggerKind::kDefensive, {"x"}, 1.0};
  RewritePlan plan = make_rewrite_plan(s, span, 3);
  EXPECT_EQ(plan.target_client_turn_index, 3);
  EXPECT_EQ(plan.resistance_type, ReactionLabel::kDefensiveResistance);
  EXPECT_EQ(code_of([&] { make_rewrite_plan(s, span, 4); }), ErrorCode::kPrecondition);
  span.counselor_turn_index = 1;
  EXPECT_EQ(code_of([&] { make_rewrite_plan(s, span, 3); }), ErrorCode::kPrecondition);
}

// ---- rewriting -------------------------------------------------------------------

TEST(RewriteSession, StubProducesSingleLabeledEpisode) {
  RuleBasedAnnotationBackend backend;
  const auto& s = fixture("fx-03");
  FivePProfile p = extract_profile(s, backend);
  auto trigger = select_trigger(detect_triggers(s, p));
  ASSERT_TRUE(trigger);
  RewritePlan plan = make_rewrite_plan(s, *trigger, 3);
  Transcript t = rewrite_session(s, p, plan, backend);
  EXPECT_EQ(resistance_episode_count(t.turns), 1u);
  EXPECT_TRUE(validate_rewrite(s.turns, t.turns).empty());
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    if (t.turns[i].speaker == Speaker::kClient) {
      EXPECT_TRUE(t.turns[i].label.has_value());
      EXPECT_TRUE(t.turns[i].rationale.has_value());
    } else {
      EXPECT_EQ(t.turns[i].text, s.turns[i].text);
    }
  }
}

TEST(RewriteSession, ZeroFollowupsChangesOnlyTarget) {
  RuleBasedAnnotationBackend backend;
  const auto& s = fixture("fx-01");
  FivePProfile p = extract_profile(s, backend);
  RewritePlan plan = make_rewrite_plan(s, *select_trigger(detect_triggers(s, p)), 0);
  Transcript t = rewrite_session(s, p, plan, backend);
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    if (t.turns[i].turn_index == plan.target_client_turn_index) {
      EXPECT_NE(t.turns[i].text, s.turns[i].text);
    } else {
      EXPECT_EQ(t.turns[i].text, s.turns[i].text);
    }
  }
}

TEST(RewriteSession, OriginalSessionPassesValidationAfterAnnotation) {
  RuleBasedAnnotationBackend backend;
  const auto& s = fixture("fx-08");
  Transcript t = annotate_session(s, extract_profile(s, backend), backend);
  EXPECT_TRUE(validate_rewrite(s.turns, t.turns).empty());
  EXPECT_EQ(resistance_episode_count(t.turns), 0u);
}

TEST(RewriteSession, MalformedReplies) {
  auto s = two_line_session("hello");
  EXPECT_EQ(code_of([&] { apply_annotation_reply("no json here", s.turns); }), ErrorCode::kParseFailure);
  EXPECT_EQ(code_of([&] { apply_annotation_reply(R"({"turns":[{"turn_index":2,"label":"facilitative"}]})", s.turns); }),
            ErrorCode::kParseFailure);
  EXPECT_EQ(code_of([&] { apply_annotation_reply(R"({"turns":[{"turn_index":1,"label":"grumpy"}]})", s.turns); }),
            ErrorCode::kParseFailure);
  auto out = apply_annotation_reply(
      "Here you go:\n```json\n{\"turns\":[{\"turn_index\":1,\"label\":\"Emotional Resistance\",\"rationale\":\"x\"}]}\n```",
      s.turns);
  EXPECT_EQ(out[1].label, ReactionLabel::kEmotionalResistance);
  EXPECT_EQ(out[1].text, s.turns[1].text);
  EXPECT_FALSE(out[3].label.has_value());
}

// ---- validate_rewrite ------------------------------------------------------------

std::vector<Turn> labeled_session(int clients) {
  std::vector<Turn> turns;
  for (int c = 0; c < clients; ++c) {
    turns.push_back({Speaker::kCounselor, "c" + std::to_string(c), 2 * c});
    Turn t{Speaker::kClient, "u" + std::to_string(c), 2 * c + 1};
    t.label = ReactionLabel::kNonResistant;
    turns.push_back(t);
  }
  return turns;
}

std::vector<ViolationKind> kinds(const std::vector<RewriteViolation>& v) {
  std::vector<ViolationKind> out;
  for (const auto& x : v) out.push_back(x.kind);
  return out;
}

TEST(ValidateRewrite, TargetPlusThreeIsAccepted) {
  auto original = labeled_session(8);
  auto rewritten = original;
  for (int o = 2; o <= 5; ++o) rewritten[static_cast<std::size_t>(2 * o + 1)].text += "!";
  rewritten[5].label = ReactionLabel::kAvoidantResistance;
  EXPECT_TRUE(validate_rewrite(original, rewritten).empty());
}

TEST(ValidateRewrite, TargetPlusFourIsBeyondWindow) {
  auto original = labeled_session(8);
  auto rewritten = original;
  for (int o = 2; o <= 6; ++o) rewritten[static_cast<std::size_t>(2 * o + 1)].text += "!";
  auto v = validate_rewrite(original, rewritten);
  ASSERT_EQ(kinds(v), std::vector<ViolationKind>{ViolationKind::kModifiedBeyondWindow});
  EXPECT_EQ(v[0].turn_index, 13);
}

TEST(ValidateRewrite, TwoDisjointRunsAreMultipleEpisodes) {
  auto original = labeled_session(6);
  auto rewritten = original;
  rewritten[3].label = ReactionLabel::kCompliantResistance;
  rewritten[7].label = ReactionLabel::kDefensiveResistance;
  EXPECT_EQ(kinds(validate_rewrite(original, rewritten)), std::vector<ViolationKind>{ViolationKind::kMultipleEpisodes});
}

TEST(ValidateRewrite, CounselorEditsAndUnlabeledTurnsAreFlagged) {
  auto original = labeled_session(4);
  auto rewritten = original;
  rewritten[2].text = "edited";
  rewritten[5].label.reset();
  EXPECT_EQ(kinds(validate_rewrite(original, rewritten)),
            (std::vector<ViolationKind>{ViolationKind::kCounselorTextChanged, ViolationKind::kUnlabeledClientTurn}));
}

TEST(ValidateRewrite, StructureMismatch) {
  auto original = labeled_session(4);
  auto shorter = original;
  shorter.pop_back();
  EXPECT_EQ(code_of([&] { validate_rewrite(original, shorter); }), ErrorCode::kStructureMismatch);
  auto swapped = original;
  swapped[0].speaker = Speaker::kClient;
  EXPECT_EQ(code_of([&] { validate_rewrite(original, swapped); }), ErrorCode::kStructureMismatch);
}

TEST(ValidateRewriteProperty, IdempotentOnLabeledSessions) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = labeled_session(2 + static_cast<int>(rng() % 10));
    // at most one contiguous resistance run
    const std::size_t clients = s.size() / 2;
    const std::size_t a = rng() % clients;
    const std::size_t len = rng() % (clients - a + 1);
    for (std::size_t o = a; o < a + len; ++o) s[2 * o + 1].label = rimr::testing::random_resistance(rng);
    EXPECT_TRUE(validate_rewrite(s, s).empty());
  }
}

TEST(ValidateRewriteProperty, GeneratedPairs) {
  std::mt19937_64 rng(2024);
  int accepted = 0;
  int legal = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto pair = rimr::testing::generate_pair(rng);
    auto v = validate_rewrite(pair.original, pair.rewritten);
    if (!pair.planted) {
      ++legal;
      EXPECT_TRUE(v.empty()) << "trial " << trial;
    } else {
      auto k = kinds(v);
      EXPECT_NE(std::find(k.begin(), k.end(), *pair.planted), k.end()) << "trial " << trial;
    }
    if (v.empty()) {
      ++accepted;
      EXPECT_TRUE(rimr::testing::locality_holds(pair.original, pair.rewritten)) << "trial " << trial;
    }
  }
  EXPECT_EQ(accepted, legal);
  EXPECT_GT(legal, 50);
}

// ---- corpus ------------------------------------------------------------------------

TEST(BuildCorpus, FixtureSetHasSevenResistanceSessions) {
  RuleBasedAnnotationBackend backend;
  auto result = build_corpus(make_fixture_sessions(), backend, {});
  const auto& st = result.stats;
  for (const auto& f : st.failures) ADD_FAILURE() << f.session_id << " " << f.stage << " " << f.message;
  EXPECT_EQ(st.session_count, 10u);
  EXPECT_EQ(st.resistance_session_count, kFixturePlantedTriggers);
  for (std::size_t i = 0; i < result.corpus.size(); ++i) {
    EXPECT_EQ(resistance_episode_count(result.corpus[i].turns) == 1, i < kFixturePlantedTriggers)
        << result.corpus[i].session_id;
  }
}

TEST(BuildCorpus, PlantedTriggerKindsCoverAllFive) {
  RuleBasedAnnotationBackend backend;
  std::set<ReactionLabel> seen;
  for (const auto& t : build_corpus(make_fixture_sessions(), backend, {}).corpus) {
    for (const auto& turn : t.turns) {
      if (turn.label && is_resistance(*turn.label)) seen.insert(*turn.label);
    }
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(BuildCorpus, StatsConservation) {
  RuleBasedAnnotationBackend backend;
  auto result = build_corpus(make_fixture_sessions(), backend, {});
  std::size_t labels = 0;
  for (const auto& [l, n] : result.stats.label_counts) labels += n;
  std::size_t client_turns = 0;
  for (const auto& t : result.corpus) client_turns += t.client_turn_count();
  EXPECT_EQ(labels, client_turns);
  std::size_t topics = 0;
  for (const auto& [t, n] : result.stats.topic_counts) topics += n;
  EXPECT_EQ(topics, result.stats.session_count);
  EXPECT_LE(result.stats.resistance_session_count, result.stats.session_count);
}

TEST(BuildCorpus, NoTriggersMeansFullyCooperative) {
  RuleBasedAnnotationBackend backend;
  auto all = make_fixture_sessions();
  std::vector<SourceSession> quiet(all.begin() + kFixturePlantedTriggers, all.end());
  auto result = build_corpus(quiet, backend, {});
  EXPECT_EQ(result.stats.resistance_session_count, 0u);
  for (ReactionLabel l : kAllLabels) {
    if (is_resistance(l)) EXPECT_EQ(result.stats.label_counts.at(l), 0u);
  }
  EXPECT_EQ(result.stats.session_count, quiet.size());
}

TEST(BuildCorpus, DeterministicAcrossWorkerCounts) {
  RuleBasedAnnotationBackend backend;
  auto a = build_corpus(make_fixture_sessions(), backend, {3, 1});
  auto b = build_corpus(make_fixture_sessions(), backend, {3, 4});
  EXPECT_EQ(a.corpus, b.corpus);
}

TEST(BuildCorpus, FailuresAreIsolated) {
  auto sessions = make_fixture_sessions();
  sessions.resize(2);
  // First session: good extraction then a garbage judge reply.
  ScriptedAnnotationBackend backend({render_profile_reply(profile_with(FactorKind::kProtective, "x")), "garbage"});
  auto result = build_corpus({sessions[0]}, backend, {});
  ASSERT_EQ(result.stats.failures.size(), 1u);
  EXPECT_EQ(result.stats.failures[0].stage, "judge");
  EXPECT_EQ(result.stats.failures[0].code, ErrorCode::kParseFailure);
  EXPECT_EQ(result.stats.session_count, 0u);
}

TEST(BuildCorpus, DroppedProfilesAreCounted) {
  auto s = fixture("fx-01");
  ScriptedAnnotationBackend backend({render_profile_reply(profile_with(FactorKind::kProtective, "x")),
                                     "coverage: yes\nfaithfulness: no"});
  auto result = build_corpus({s}, backend, {});
  EXPECT_EQ(result.stats.dropped_count, 1u);
  EXPECT_EQ(result.stats.dropped_sessions, std::vector<std::string>{"fx-01"});
}

TEST(BuildCorpus, EmptyInputRejected) {
  RuleBasedAnnotationBackend backend;
  EXPECT_EQ(code_of([&] { build_corpus({}, backend, {}); }), ErrorCode::kEmptyInput);
}

TEST(SourceSessions, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "rimr_pipeline_test" / "sessions.jsonl";
  auto sessions = make_fixture_sessions();
  write_sessions(path, sessions);
  EXPECT_EQ(read_sessions(path), sessions);
}

}  // namespace
}  // namespace rimr::dataset
