#include <gtest/gtest.h>

#include <map>
#include <random>

#include "rimr/metrics/metrics.h"

namespace rimr::metrics {
namespace {

using L = ReactionLabel;
constexpr L kC = L::kControllingResistance;
constexpr L kE = L::kEmotionalResistance;
constexpr L kD = L::kDefensiveResistance;
constexpr L kA = L::kAvoidantResistance;
constexpr L kP = L::kCompliantResistance;
constexpr L kN = L::kNonResistant;
constexpr L kF = L::kFacilitative;

// Planted vectors keyed by text.
class TableEmbedder : public Embedder {
 public:
  explicit TableEmbedder(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
  std::vector<double> embed(const std::string& text) const override { return table_.at(text); }
  std::size_t dimension() const override { return table_.begin()->second.size(); }

 private:
  std::map<std::string, std::vector<double>> table_;
};

Transcript transcript_with(const std::vector<std::pair<std::string, L>>& clients, std::string id = "t") {
  Transcript t;
  t.session_id = std::move(id);
  int i = 0;
  for (const auto& [text, label] : clients) {
    t.turns.push_back({Speaker::kCounselor, "q" + std::to_string(i), i});
    ++i;
    Turn c{Speaker::kClient, text, i++};
    c.label = label;
    t.turns.push_back(c);
  }
  return t;
}

Transcript labels_only(const std::vector<L>& labels, std::string id = "t") {
  std::vector<std::pair<std::string, L>> clients;
  for (std::size_t i = 0; i < labels.size(); ++i) clients.push_back({"reply " + std::to_string(i), labels[i]});
  return transcript_with(clients, std::move(id));
}

TEST(Prf, TableOneRowFormula) {
  EXPECT_NEAR(f1_score(70.38, 78.95), 74.42, 0.01);
  const double f = f1_score(70.38, 78.95);
  EXPECT_NEAR(f, 2 * 70.38 * 78.95 / (70.38 + 78.95), 1e-9);
}

TEST(Prf, IdentityIsPerfect) {
  std::vector<LabelPair> pairs;
  for (L l : kAllLabels) pairs.push_back({l, l});
  Prf p = resistance_prf(pairs);
  EXPECT_EQ(p.precision, 100.0);
  EXPECT_EQ(p.recall, 100.0);
  EXPECT_EQ(p.f1, 100.0);
}

TEST(Prf, NoPredictedResistanceIsFlaggedZero) {
  Prf p = resistance_prf({{kD, kN}, {kA, kF}, {kN, kN}});
  EXPECT_EQ(p.precision, 0.0);
  EXPECT_TRUE(p.precision_undefined);
  EXPECT_EQ(p.recall, 0.0);
  EXPECT_FALSE(p.recall_undefined);
  EXPECT_EQ(p.f1, 0.0);
}

TEST(Prf, SubtypeMismatchStillCountsAsResistance) {
  Prf p = resistance_prf({{kD, kE}, {kN, kC}, {kA, kN}, {kF, kF}});
  EXPECT_EQ(p.counts, (BinaryCounts{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(p.precision, 50.0);
  EXPECT_DOUBLE_EQ(p.recall, 50.0);
}

TEST(Prf, EmptyInputRejected) {
  try {
    resistance_prf({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

TEST(Prf, F1IdentityOnRandomCounts) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    BinaryCounts c{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
    Prf p = prf_from_counts(c);
    if (p.precision + p.recall > 0) {
      EXPECT_NEAR(p.f1, 2 * p.precision * p.recall / (p.precision + p.recall), 1e-9);
      EXPECT_LE(p.f1, (p.precision + p.recall) / 2 + 1e-9);
    } else {
      EXPECT_EQ(p.f1, 0.0);
    }
  }
}

TEST(Rates, HandCounts) {
  EXPECT_DOUBLE_EQ(rtf(labels_only({kD, kN, kN, kF, kA, kN, kN, kN})), 25.0);
  EXPECT_NEAR(ccr(labels_only({kN, kF, kN, kF, kD, kP})), 66.67, 0.01);
  EXPECT_EQ(rtf(labels_only({kN, kF})), 0.0);
  EXPECT_EQ(ccr(labels_only({kN, kF})), 100.0);
  EXPECT_EQ(rtf(labels_only({kC, kE})), 100.0);
}

TEST(Rates, SumToHundredOnRandomTranscripts) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<L> labels(1 + rng() % 25);
    for (L& l : labels) l = kAllLabels[rng() % kLabelCount];
    Transcript t = labels_only(labels);
    EXPECT_NEAR(rtf(t) + ccr(t), 100.0, 1e-9);
  }
}

TEST(Rates, FlaggedTurnsAreNotCooperative) {
  Transcript t = labels_only({kN, kD, kN, kN});
  t.turns[1].parse_failed = true;
  EXPECT_DOUBLE_EQ(rtf(t), 25.0);
  EXPECT_DOUBLE_EQ(ccr(t), 50.0);
}

TEST(Rates, Errors) {
  Transcript empty;
  empty.turns.push_back({Speaker::kCounselor, "hi", 0});
  try {
    rtf(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoClientTurns);
  }
  Transcript unlabeled = labels_only({kN});
  unlabeled.turns[1].label.reset();
  EXPECT_THROW(ccr(unlabeled), Error);
}

TEST(Coherence, IdenticalUtterancesAreOne) {
  HashingEmbedder emb;
  Transcript t = transcript_with({{"same words", kN}, {"same words", kD}, {"same words", kF}});
  EXPECT_EQ(coherence(t, emb), 1.0);
}

TEST(Coherence, OrthogonalIsZero) {
  TableEmbedder emb({{"a", {1, 0}}, {"b", {0, 1}}});
  EXPECT_EQ(coherence(transcript_with({{"a", kN}, {"b", kN}}), emb), 0.0);
}

TEST(Coherence, PlantedCosinesAverage) {
  TableEmbedder emb({{"u1", {1, 0, 0}}, {"u2", {0.8, 0.6, 0}}, {"u3", {0.48, 0.36, 0.8}}});
  EXPECT_NEAR(coherence(transcript_with({{"u1", kN}, {"u2", kN}, {"u3", kN}}), emb), 0.7, 1e-12);
}

TEST(Coherence, CounselorTextOnlyInAllTurnsScope) {
  TableEmbedder emb({{"a", {1, 0}}, {"q0", {0, 1}}});
  Transcript t = transcript_with({{"a", kN}});
  t.turns.push_back({Speaker::kCounselor, "q0", 2});
  t.turns.push_back({Speaker::kClient, "a", 3, kN});
  EXPECT_EQ(coherence(t, emb), 1.0);
  EXPECT_EQ(coherence(t, emb, CoherenceScope::kAllTurns), 0.0);
}

TEST(Coherence, TooFewUtterances) {
  HashingEmbedder emb;
  try {
    coherence(transcript_with({{"only", kN}}), emb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewUtterances);
  }
}

TEST(Coherence, BoundedOnRandomText) {
  HashingEmbedder emb;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::pair<std::string, L>> clients;
    for (std::size_t k = 0; k < 2 + rng() % 6; ++k) {
      std::string s;
      for (std::size_t c = 0; c < rng() % 30; ++c) s += static_cast<char>('a' + rng() % 6);
      clients.push_back({s, kN});
    }
    const double c = coherence(transcript_with(clients), emb);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(HashingEmbedder, UnitNormAndDeterministic) {
  HashingEmbedder emb;
  for (std::string s : {"", "a", "I don't want to talk about it.", "\xC3\xA9t\xC3\xA9"}) {
    auto v = emb.embed(s);
    ASSERT_EQ(v.size(), 256u);
    double n = 0;
    for (double x : v) n += x * x;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-9);
    EXPECT_EQ(v, emb.embed(s));
  }
  EXPECT_EQ(emb.embed("Hello"), emb.embed("hello"));
  EXPECT_NE(emb.embed("hello"), emb.embed("goodbye"));
}

TEST(Confusion, PerfectIsDiagonal) {
  std::vector<LabelPair> pairs;
  for (L l : kAllLabels) pairs.push_back({l, l});
  ConfusionMatrix m = confusion_matrix(pairs);
  for (std::size_t r = 0; r < kLabelCount; ++r)
    for (std::size_t c = 0; c < kLabelCount; ++c) EXPECT_EQ(m[r][c], r == c ? 1u : 0u);
}

TEST(Confusion, ConstantPredictorFillsOneColumn) {
  std::vector<LabelPair> pairs;
  for (L l : kAllLabels) pairs.push_back({l, kF});
  ConfusionMatrix m = confusion_matrix(pairs);
  for (std::size_t r = 0; r < kLabelCount; ++r)
    for (std::size_t c = 0; c < kLabelCount; ++c) EXPECT_EQ(m[r][c], c == label_index(kF) ? 1u : 0u);
}

TEST(Confusion, TenHandBuiltPairs) {
  std::vector<LabelPair> pairs = {{kC, kC}, {kC, kE}, {kE, kE}, {kD, kN}, {kD, kD},
                                  {kA, kA}, {kP, kN}, {kN, kN}, {kN, kP}, {kF, kF}};
  ConfusionMatrix m = confusion_matrix(pairs);
  ConfusionMatrix want{};
  want[0] = {1, 1, 0, 0, 0, 0, 0};
  want[1] = {0, 1, 0, 0, 0, 0, 0};
  want[2] = {0, 0, 1, 0, 0, 1, 0};
  want[3] = {0, 0, 0, 1, 0, 0, 0};
  want[4] = {0, 0, 0, 0, 0, 1, 0};
  want[5] = {0, 0, 0, 0, 1, 1, 0};
  want[6] = {0, 0, 0, 0, 0, 0, 1};
  EXPECT_EQ(m, want);
  EXPECT_EQ(project_binary(m), (BinaryCounts{5, 1, 2, 2}));
  EXPECT_EQ(format_confusion_grid(m).substr(0, 14), "1\t1\t0\t0\t0\t0\t0\n");
}

TEST(Confusion, ProjectionMatchesPrfCountsOnRandomPairs) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    std::vector<LabelPair> pairs(1 + rng() % 40);
    std::array<std::size_t, kLabelCount> gold_counts{};
    for (auto& p : pairs) {
      p = {kAllLabels[rng() % kLabelCount], kAllLabels[rng() % kLabelCount]};
      ++gold_counts[label_index(p.gold)];
    }
    ConfusionMatrix m = confusion_matrix(pairs);
    EXPECT_EQ(project_binary(m), resistance_prf(pairs).counts);
    std::size_t total = 0;
    for (std::size_t r = 0; r < kLabelCount; ++r) {
      std::size_t row = 0;
      for (std::size_t c : m[r]) row += c;
      EXPECT_EQ(row, gold_counts[r]);
      total += row;
    }
    EXPECT_EQ(total, pairs.size());
  }
}

std::vector<sim::AlignedLabel> align(const std::vector<std::pair<L, L>>& pairs) {
  std::vector<sim::AlignedLabel> out;
  int i = 1;
  for (auto [g, p] : pairs) {
    out.push_back({i, g, p, false});
    i += 2;
  }
  return out;
}

TEST(Aggregate, MeansOverTranscripts) {
  HashingEmbedder emb;
  Transcript a = labels_only({kD, kN, kN, kN, kN}, "a");  // RTF 20
  Transcript b = labels_only({kD, kE, kN, kN, kN}, "b");  // RTF 40
  MetricReport r = aggregate_report({a, b}, {}, emb);
  EXPECT_DOUBLE_EQ(r.rtf, 30.0);
  EXPECT_DOUBLE_EQ(r.ccr, 70.0);
  EXPECT_DOUBLE_EQ(r.mean_turns, 10.0);
  EXPECT_EQ(r.n_sessions, 2u);
  EXPECT_EQ(r.n_client_turns, 10u);
  EXPECT_FALSE(r.has_prf);
}

TEST(Aggregate, SingleTranscriptEqualsItsOwnMetrics) {
  HashingEmbedder emb;
  Transcript t = transcript_with({{"I am fine.", kN}, {"Stop asking.", kD}, {"Okay, maybe.", kP}});
  auto al = align({{kN, kN}, {kD, kD}, {kP, kN}});
  MetricReport r = aggregate_report({t}, {al}, emb);
  EXPECT_DOUBLE_EQ(r.rtf, rtf(t));
  EXPECT_DOUBLE_EQ(r.ccr, ccr(t));
  EXPECT_DOUBLE_EQ(r.coherence, coherence(t, emb));
  Prf p = resistance_prf(scored_pairs(al));
  EXPECT_EQ(r.precision, p.precision);
  EXPECT_EQ(r.recall, p.recall);
  EXPECT_EQ(r.f1, p.f1);
}

TEST(Aggregate, PooledDiffersFromPerSession) {
  HashingEmbedder emb;
  auto a = align({{kD, kD}, {kA, kN}});                      // tp 1, fn 1
  auto b = align({{kN, kD}, {kN, kE}, {kF, kC}, {kP, kP}});  // tp 1, fp 3
  std::vector<Transcript> ts = {labels_only({kD, kA}, "a"), labels_only({kN, kN, kF, kP}, "b")};
  MetricReport micro = aggregate_report(ts, {a, b}, emb);
  EXPECT_DOUBLE_EQ(micro.precision, 40.0);
  EXPECT_NEAR(micro.recall, 200.0 / 3.0, 1e-12);
  EXPECT_EQ(micro.n_pairs, 6u);
  MetricReport macro = aggregate_report(ts, {a, b}, emb, {Averaging::kMacro});
  EXPECT_DOUBLE_EQ(macro.precision, 62.5);
  EXPECT_DOUBLE_EQ(macro.recall, 75.0);
  EXPECT_NE(micro.precision, macro.precision);
}

TEST(Aggregate, FlaggedAndUnpredictedPairsExcluded) {
  auto al = align({{kD, kD}, {kN, kD}, {kA, kA}});
  al[1].flagged = true;
  al[2].predicted.reset();
  auto pairs = scored_pairs(al);
  ASSERT_EQ(pairs.size(), 1u);
  HashingEmbedder emb;
  MetricReport r = aggregate_report({labels_only({kD, kN, kA})}, {al}, emb);
  EXPECT_EQ(r.precision, 100.0);
  EXPECT_EQ(r.n_pairs, 1u);
}

TEST(Aggregate, EmptyInputAndOutputs) {
  HashingEmbedder emb;
  EXPECT_THROW(aggregate_report({}, {}, emb), Error);
  MetricReport r = aggregate_report({labels_only({kD, kN})}, {align({{kD, kD}, {kN, kN}})}, emb);
  auto tsv = format_report_tsv(r);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "precision\trecall\tf1\trtf\tccr\tmean_turns\tcoherence\tn_sessions\tn_client_turns\tn_flagged\tn_pairs");
  EXPECT_NE(tsv.find("100.0000\t100.0000\t100.0000\t50.0000"), std::string::npos);
  auto j = report_to_json(r);
  EXPECT_EQ(j["f1"], 100.0);
  EXPECT_EQ(j["confusion"]["counts"][2][2], 1);
  EXPECT_EQ(j["confusion"]["labels"].size(), 7u);
}

TEST(AlignedLabel, JsonRoundTrip) {
  sim::AlignedLabel a{3, kD, kN, true};
  EXPECT_EQ(aligned_label_from_json(to_json(a)), a);
  sim::AlignedLabel b{5, kF, std::nullopt, false};
  EXPECT_EQ(aligned_label_from_json(to_json(b)), b);
  EXPECT_THROW(aligned_label_from_json(nlohmann::json{{"gold", "bogus"}, {"turn_index", 1}}), Error);
}

}  // namespace
}  // namespace rimr::metrics
