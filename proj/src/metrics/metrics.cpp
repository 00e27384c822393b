#include "rimr/metrics/metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace rimr::metrics {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::size_t ngram) : dimension_(dimension), ngram_(ngram) {
  if (dimension_ == 0 || ngram_ == 0) throw Error(ErrorCode::kInvalidValue, "embedder dimension and ngram must be >= 1");
}

std::vector<double> HashingEmbedder::embed(const std::string& text) const {
  std::string padded = " ";
  for (unsigned char c : text) padded += static_cast<char>(std::tolower(c));
  padded += ' ';

  std::vector<double> v(dimension_, 0.0);
  if (padded.size() < ngram_) {
    v[fnv1a(padded) % dimension_] = 1.0;
  } else {
    for (std::size_t i = 0; i + ngram_ <= padded.size(); ++i) {
      v[fnv1a(std::string_view(padded).substr(i, ngram_)) % dimension_] += 1.0;
    }
  }
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

BinaryCounts binary_counts(const std::vector<LabelPair>& pairs) {
  BinaryCounts c;
  for (const LabelPair& p : pairs) {
    const bool g = is_resistance(p.gold), pr = is_resistance(p.predicted);
    if (g && pr) ++c.tp;
    else if (!g && pr) ++c.fp;
    else if (g && !pr) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf prf_from_counts(const BinaryCounts& counts) {
  Prf r;
  r.counts = counts;
  r.precision_undefined = counts.tp + counts.fp == 0;
  r.recall_undefined = counts.tp + counts.fn == 0;
  r.precision = percent(counts.tp, counts.tp + counts.fp);
  r.recall = percent(counts.tp, counts.tp + counts.fn);
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

Prf resistance_prf(const std::vector<LabelPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no label pairs to score");
  return prf_from_counts(binary_counts(pairs));
}

std::vector<LabelPair> scored_pairs(const std::vector<sim::AlignedLabel>& alignment) {
  std::vector<LabelPair> out;
  for (const auto& a : alignment) {
    if (a.flagged || !a.predicted) continue;
    out.push_back({a.gold, *a.predicted});
  }
  return out;
}

namespace {

struct ClientCounts {
  std::size_t total = 0, resistant = 0, cooperative = 0, flagged = 0;
};

ClientCounts count_client_turns(const Transcript& t) {
  ClientCounts c;
  for (const Turn& turn : t.turns) {
    if (turn.speaker != Speaker::kClient) continue;
    if (!turn.label) {
      throw Error(ErrorCode::kPrecondition, "client turn " + std::to_string(turn.turn_index) + " is unlabeled");
    }
    ++c.total;
    if (turn.parse_failed) ++c.flagged;
    if (is_resistance(*turn.label)) ++c.resistant;
    else if (!turn.parse_failed) ++c.cooperative;
  }
  if (c.total == 0) throw Error(ErrorCode::kNoClientTurns, "transcript " + t.session_id + " has no client turns");
  return c;
}

}  // namespace

double rtf(const Transcript& transcript) {
  ClientCounts c = count_client_turns(transcript);
  return percent(c.resistant, c.total);
}

double ccr(const Transcript& transcript) {
  ClientCounts c = count_client_turns(transcript);
  return percent(c.cooperative, c.total);
}

double mean_adjacent_cosine(const std::vector<std::vector<double>>& e) {
  if (e.size() < 2) throw Error(ErrorCode::kTooFewUtterances, "coherence needs at least two utterances");
  double sum = 0;
  for (std::size_t t = 1; t < e.size(); ++t) {
    const auto& a = e[t - 1];
    const auto& b = e[t];
    if (a.size() != b.size()) throw Error(ErrorCode::kShapeMismatch, "embedding dimensions differ");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    // Identical vectors are exactly 1; otherwise clamp rounding drift.
    sum += a == b ? 1.0 : std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  }
  return sum / static_cast<double>(e.size() - 1);
}

double coherence(const Transcript& transcript, const Embedder& embedder, CoherenceScope scope) {
  std::vector<std::vector<double>> e;
  for (const Turn& turn : transcript.turns) {
    if (turn.speaker == Speaker::kModerator) continue;
    if (scope == CoherenceScope::kClientOnly && turn.speaker != Speaker::kClient) continue;
    e.push_back(embedder.embed(turn.text));
  }
  return mean_adjacent_cosine(e);
}

ConfusionMatrix confusion_matrix(const std::vector<LabelPair>& pairs) {
  ConfusionMatrix m{};
  for (const LabelPair& p : pairs) ++m[label_index(p.gold)][label_index(p.predicted)];
  return m;
}

BinaryCounts project_binary(const ConfusionMatrix& m) {
  BinaryCounts c;
  for (ReactionLabel g : kAllLabels) {
    for (ReactionLabel p : kAllLabels) {
      const std::size_t n = m[label_index(g)][label_index(p)];
      const bool gr = is_resistance(g), pr = is_resistance(p);
      (gr ? (pr ? c.tp : c.fn) : (pr ? c.fp : c.tn)) += n;
    }
  }
  return c;
}

MetricReport aggregate_report(const std::vector<Transcript>& transcripts,
                              const std::vector<std::vector<sim::AlignedLabel>>& alignments,
                              const Embedder& embedder, const ReportOptions& options) {
  if (transcripts.empty()) throw Error(ErrorCode::kEmptyInput, "no transcripts to evaluate");
  MetricReport r;
  r.averaging = options.averaging;
  r.n_sessions = transcripts.size();

  double rtf_sum = 0, ccr_sum = 0, turns_sum = 0, coh_sum = 0;
  std::size_t rate_sessions = 0;
  for (const Transcript& t : transcripts) {
    turns_sum += static_cast<double>(t.conversational_turn_count());
    if (t.client_turn_count() > 0) {
      ClientCounts c = count_client_turns(t);
      r.n_client_turns += c.total;
      r.n_flagged += c.flagged;
      rtf_sum += percent(c.resistant, c.total);
      ccr_sum += percent(c.cooperative, c.total);
      ++rate_sessions;
    }
    try {
      coh_sum += coherence(t, embedder, options.coherence_scope);
      ++r.n_coherence_sessions;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooFewUtterances) throw;
    }
  }
  const double n = static_cast<double>(transcripts.size());
  r.mean_turns = turns_sum / n;
  if (rate_sessions > 0) {
    r.rtf = rtf_sum / static_cast<double>(rate_sessions);
    r.ccr = ccr_sum / static_cast<double>(rate_sessions);
  }
  if (r.n_coherence_sessions > 0) r.coherence = coh_sum / static_cast<double>(r.n_coherence_sessions);

  std::vector<LabelPair> pooled;
  double p_sum = 0, r_sum = 0, f_sum = 0;
  std::size_t scored_sessions = 0;
  for (const auto& alignment : alignments) {
    auto pairs = scored_pairs(alignment);
    if (pairs.empty()) continue;
    Prf s = resistance_prf(pairs);
    p_sum += s.precision;
    r_sum += s.recall;
    f_sum += s.f1;
    ++scored_sessions;
    pooled.insert(pooled.end(), pairs.begin(), pairs.end());
  }
  r.n_pairs = pooled.size();
  r.confusion = confusion_matrix(pooled);
  if (!pooled.empty()) {
    r.has_prf = true;
    Prf micro = prf_from_counts(project_binary(r.confusion));
    r.precision_undefined = micro.precision_undefined;
    r.recall_undefined = micro.recall_undefined;
    if (options.averaging == Averaging::kMicro) {
      r.precision = micro.precision;
      r.recall = micro.recall;
      r.f1 = micro.f1;
    } else {
      const double k = static_cast<double>(scored_sessions);
      r.precision = p_sum / k;
      r.recall = r_sum / k;
      r.f1 = f_sum / k;
    }
  }
  return r;
}

namespace {

std::string fixed(double x) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace

std::string format_report_tsv(const MetricReport& r) {
  std::ostringstream os;
  os << "precision\trecall\tf1\trtf\tccr\tmean_turns\tcoherence\tn_sessions\tn_client_turns\tn_flagged\tn_pairs\n";
  auto opt = [&](double x) { return r.has_prf ? fixed(x) : std::string("NA"); };
  os << opt(r.precision) << '\t' << opt(r.recall) << '\t' << opt(r.f1) << '\t' << fixed(r.rtf) << '\t'
     << fixed(r.ccr) << '\t' << fixed(r.mean_turns) << '\t' << fixed(r.coherence) << '\t' << r.n_sessions << '\t'
     << r.n_client_turns << '\t' << r.n_flagged << '\t' << r.n_pairs << '\n';
  return os.str();
}

json report_to_json(const MetricReport& r) {
  json confusion = json::array();
  for (const auto& row : r.confusion) confusion.push_back(row);
  json labels = json::array();
  for (ReactionLabel l : kAllLabels) labels.push_back(std::string(label_code(l)));
  json j{{"rtf", r.rtf},
         {"ccr", r.ccr},
         {"mean_turns", r.mean_turns},
         {"coherence", r.coherence},
         {"coherence_sessions", r.n_coherence_sessions},
         {"confusion", {{"labels", labels}, {"counts", confusion}}},
         {"n_sessions", r.n_sessions},
         {"n_client_turns", r.n_client_turns},
         {"n_flagged", r.n_flagged},
         {"n_pairs", r.n_pairs},
         {"averaging", r.averaging == Averaging::kMicro ? "micro" : "macro"}};
  if (r.has_prf) {
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["precision_undefined"] = r.precision_undefined;
    j["recall_undefined"] = r.recall_undefined;
  } else {
    j["precision"] = j["recall"] = j["f1"] = nullptr;
  }
  return j;
}

std::string format_confusion_grid(const ConfusionMatrix& m) {
  std::ostringstream os;
  for (const auto& row : m) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "\t" : "") << row[c];
    os << '\n';
  }
  return os.str();
}

json to_json(const sim::AlignedLabel& a) {
  json j{{"turn_index", a.turn_index}, {"gold", std::string(label_code(a.gold))}, {"flagged", a.flagged}};
  j["predicted"] = a.predicted ? json(std::string(label_code(*a.predicted))) : json(nullptr);
  return j;
}

sim::AlignedLabel aligned_label_from_json(const json& j) {
  auto label = [](const json& v, const char* key) {
    if (!v.is_string()) throw Error(ErrorCode::kParseFailure, std::string("field '") + key + "' must be a label code");
    auto l = parse_label_code(v.get<std::string>());
    if (!l) throw Error(ErrorCode::kParseFailure, "unknown reaction label '" + v.get<std::string>() + "'");
    return *l;
  };
  if (!j.is_object() || !j.contains("turn_index") || !j["turn_index"].is_number_integer() || !j.contains("gold")) {
    throw Error(ErrorCode::kParseFailure, "aligned label needs 'turn_index' and 'gold'");
  }
  sim::AlignedLabel a;
  a.turn_index = j["turn_index"].get<int>();
  a.gold = label(j["gold"], "gold");
  if (auto it = j.find("predicted"); it != j.end() && !it->is_null()) a.predicted = label(*it, "predicted");
  a.flagged = j.value("flagged", false);
  return a;
}

}  // namespace rimr::metrics
