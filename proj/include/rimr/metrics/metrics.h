#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimr/domain.h"
#include "rimr/sim/harness.h"

namespace rimr::metrics {

// Maps text to a unit-length vector of fixed dimension; deterministic per text.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& text) const = 0;
  virtual std::size_t dimension() const = 0;
};

// Hashed character n-gram counts (FNV-1a over lowercased bytes), L2-normalized.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256, std::size_t ngram = 3);
  std::vector<double> embed(const std::string& text) const override;
  std::size_t dimension() const override { return dimension_; }

 private:
  std::size_t dimension_;
  std::size_t ngram_;
};

struct LabelPair {
  ReactionLabel gold = ReactionLabel::kNonResistant;
  ReactionLabel predicted = ReactionLabel::kNonResistant;
};

// Resistance-vs-cooperative projection counts.
struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const BinaryCounts&) const = default;
};

struct Prf {
  double precision = 0;  // percentages
  double recall = 0;
  double f1 = 0;
  BinaryCounts counts;
  bool precision_undefined = false;  // no predicted resistance; reported as 0
  bool recall_undefined = false;     // no gold resistance; reported as 0
};

double f1_score(double precision, double recall);
BinaryCounts binary_counts(const std::vector<LabelPair>& pairs);
Prf prf_from_counts(const BinaryCounts& counts);
// Throws EmptyInput on no pairs.
Prf resistance_prf(const std::vector<LabelPair>& pairs);

// Replay alignment to scored pairs; flagged and unpredicted turns are dropped.
std::vector<LabelPair> scored_pairs(const std::vector<sim::AlignedLabel>& alignment);

// Percent of client turns labeled resistance. Throws NoClientTurns, or
// Precondition on an unlabeled client turn.
double rtf(const Transcript& transcript);
// Percent of client turns labeled cooperative; parse-failed turns are never
// counted as cooperative, so ccr + rtf = 100 exactly when none are flagged.
double ccr(const Transcript& transcript);

enum class CoherenceScope { kClientOnly, kAllTurns };

// Mean cosine of adjacent utterance embeddings. Throws TooFewUtterances when
// fewer than two utterances are in scope.
double coherence(const Transcript& transcript, const Embedder& embedder,
                 CoherenceScope scope = CoherenceScope::kClientOnly);
double mean_adjacent_cosine(const std::vector<std::vector<double>>& embeddings);

// counts[gold][predicted], indexed by label_index.
using ConfusionMatrix = std::array<std::array<std::size_t, kLabelCount>, kLabelCount>;
ConfusionMatrix confusion_matrix(const std::vector<LabelPair>& pairs);
BinaryCounts project_binary(const ConfusionMatrix& matrix);

enum class Averaging { kMicro, kMacro };

struct ReportOptions {
  Averaging averaging = Averaging::kMicro;
  CoherenceScope coherence_scope = CoherenceScope::kClientOnly;
};

struct MetricReport {
  double precision = 0, recall = 0, f1 = 0;  // percentages over replay pairs
  double rtf = 0, ccr = 0;                   // percentages, mean over transcripts
  double mean_turns = 0;
  double coherence = 0;
  ConfusionMatrix confusion{};
  std::size_t n_sessions = 0;
  std::size_t n_client_turns = 0;
  std::size_t n_flagged = 0;
  std::size_t n_pairs = 0;
  bool has_prf = false;  // false without replay pairs
  bool precision_undefined = false;
  bool recall_undefined = false;
  std::size_t n_coherence_sessions = 0;  // transcripts with enough utterances
  Averaging averaging = Averaging::kMicro;
};

// Per-transcript metrics are averaged unweighted; P/R/F1 pool every scored pair
// (micro) or average per-alignment values (macro). Throws EmptyInput when
// there are no transcripts.
MetricReport aggregate_report(const std::vector<Transcript>& transcripts,
                              const std::vector<std::vector<sim::AlignedLabel>>& alignments,
                              const Embedder& embedder, const ReportOptions& options = {});

// Header line plus one value line, tab separated.
std::string format_report_tsv(const MetricReport& report);
nlohmann::json report_to_json(const MetricReport& report);
// Seven tab-separated rows of counts, rows gold, columns predicted, label order.
std::string format_confusion_grid(const ConfusionMatrix& matrix);

nlohmann::json to_json(const sim::AlignedLabel& aligned);
sim::AlignedLabel aligned_label_from_json(const nlohmann::json& record);

}  // namespace rimr::metrics
