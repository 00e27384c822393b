#include "rimr/cli/commands.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "rimr/metrics/metrics.h"
#include "rimr/serialize.h"
#include "rimr/training/fixtures.h"
#include "rimr/training/grad_check.h"
#include "rimr/training/trainer.h"
#include "rimr/util/parallel.h"

namespace rimr::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_jsonl(const fs::path& path, const json& header, const std::vector<json>& records) {
  ensure_parent(path);
  std::vector<json> all;
  all.reserve(records.size() + 1);
  all.push_back(header);
  all.insert(all.end(), records.begin(), records.end());
  jsonl::write_file(path, all);
}

// Applies fn to each record, prefixing errors with the record position.
template <typename T, typename Fn>
std::vector<T> parse_records(const fs::path& path, Fn&& fn) {
  std::vector<T> out;
  std::size_t n = 0;
  for (const json& r : read_records(path)) {
    ++n;
    try {
      out.push_back(fn(r));
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = std::string(error_code_name(e.code())) + ": ";
      if (msg.starts_with(prefix)) msg.erase(0, prefix.size());
      throw Error(e.code(), path.string() + ": record " + std::to_string(n) + ": " + msg);
    }
  }
  return out;
}

std::string fixed(double x, int precision = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << x;
  return os.str();
}

FivePProfile profile_from_record(const json& r) {
  if (r.is_object() && r.contains("turns") && r.contains("profile")) return validate_profile(r["profile"]);
  return validate_profile(r);
}

}  // namespace

int cmd_make_fixtures(const MakeFixturesOptions& opts, const RunConfig& config, std::ostream& out, std::ostream&) {
  fs::create_directories(opts.out_dir);
  std::vector<json> sessions, profiles, groups, sft;
  for (const auto& s : dataset::make_fixture_sessions()) sessions.push_back(dataset::to_json(s));
  for (const auto& p : fixture_profiles()) profiles.push_back(to_json(p));
  for (const auto& g : training::make_directional_corpus(config.seed, 50, 16, 16)) groups.push_back(training::to_json(g));
  for (const auto& e : training::make_sft_corpus(config.seed, 32, 16, 16)) sft.push_back(training::to_json(e));
  write_jsonl(opts.out_dir / "sessions.jsonl", artifact_header("source_sessions", config), sessions);
  write_jsonl(opts.out_dir / "profiles.jsonl", artifact_header("profiles", config), profiles);
  write_jsonl(opts.out_dir / "directional.jsonl", artifact_header("scored_groups", config), groups);
  write_jsonl(opts.out_dir / "sft.jsonl", artifact_header("sft_examples", config), sft);
  out << "wrote " << sessions.size() << " sessions, " << profiles.size() << " profiles, " << groups.size()
      << " scored groups, " << sft.size() << " sft examples to " << opts.out_dir.string() << "\n";
  return kExitOk;
}

int cmd_corpus_build(const CorpusBuildOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err) {
  auto sessions = parse_records<dataset::SourceSession>(opts.input, dataset::source_session_from_json);
  auto backend = BackendFactory(config).annotator();
  auto result = dataset::build_corpus(sessions, *backend, {config.max_followup_turns, config.workers});

  std::vector<json> records;
  for (const auto& t : result.corpus) records.push_back(to_json(t));
  write_jsonl(opts.output, artifact_header("corpus", config), records);
  ensure_parent(opts.stats);
  write_text_file(opts.stats, tsv_header("corpus_stats", config) + dataset::format_stats(result.stats));
  json stats = dataset::stats_to_json(result.stats);
  stats["rimr_artifact"] = artifact_header("corpus_stats", config)["rimr_artifact"];
  fs::path stats_json = opts.stats;
  stats_json.replace_extension(".json");
  write_text_file(stats_json, stats.dump(2) + "\n");

  for (const auto& f : result.stats.failures) {
    err << "session " << f.session_id << " failed at " << f.stage << ": " << error_code_name(f.code) << ": "
        << f.message << "\n";
  }
  out << "corpus: " << result.corpus.size() << " sessions (" << result.stats.resistance_session_count
      << " with resistance), " << result.stats.dropped_count << " dropped, " << result.stats.failures.size()
      << " failed\n";
  return result.stats.failures.empty() ? kExitOk : kExitFailed;
}

namespace {

int infer_vocab(const std::vector<std::vector<int>>& seqs) {
  int v = 0;
  for (const auto& s : seqs)
    for (int t : s) v = std::max(v, t + 1);
  return v;
}

training::ToyPolicy initial_policy(const TrainOptions& opts, int inferred_vocab) {
  if (opts.init) return training::load_policy(*opts.init);
  const int v = opts.vocab_size > 0 ? opts.vocab_size : inferred_vocab;
  if (v < 2) throw Error(ErrorCode::kInvalidValue, "vocabulary size must be >= 2");
  return training::ToyPolicy(v, opts.context_order);
}

void write_policy(const fs::path& path, const training::ToyPolicy& policy, const std::string& kind,
                  const RunConfig& config) {
  json j = training::to_json(policy);
  j["rimr_artifact"] = artifact_header(kind, config)["rimr_artifact"];
  ensure_parent(path);
  write_text_file(path, j.dump() + "\n");
}

}  // namespace

int cmd_train(const TrainOptions& opts, const RunConfig& config, std::ostream& out, std::ostream&) {
  if (opts.mode == TrainMode::kSft) {
    auto examples = parse_records<training::SftExample>(opts.data, training::sft_example_from_json);
    if (examples.empty()) throw Error(ErrorCode::kEmptyInput, "no SFT examples in " + opts.data.string());
    std::vector<std::vector<int>> seqs;
    for (const auto& e : examples) {
      seqs.push_back(e.context);
      seqs.push_back(e.target);
    }
    const training::ToyPolicy init = initial_policy(opts, infer_vocab(seqs));
    training::SftConfig cfg{opts.learning_rate, opts.epochs, opts.batch_size, config.seed};
    auto result = training::train_sft(examples, cfg, init);

    double loss = 0;
    std::size_t tokens = 0;
    for (const auto& e : examples) {
      loss += training::sft_loss(result.policy, e).value;
      tokens += e.target.size();
    }
    write_policy(opts.output, result.policy, "policy_sft", config);
    ensure_parent(opts.history);
    write_text_file(opts.history, tsv_header("sft_history", config) + training::format_history_table(result.history));
    if (!result.history.empty()) out << "first_step_loss\t" << fixed(result.history.front().mean_token_loss) << "\n";
    out << "final_mean_token_loss\t" << fixed(loss / static_cast<double>(tokens)) << "\n";
    return kExitOk;
  }

  auto groups = parse_records<training::ScoredGroup>(opts.data, training::scored_group_from_json);
  if (groups.empty()) throw Error(ErrorCode::kEmptyInput, "no scored groups in " + opts.data.string());
  std::vector<std::vector<int>> seqs;
  for (const auto& g : groups) {
    seqs.push_back(g.context);
    for (const auto& o : g.outputs) seqs.push_back(o.tokens);
  }
  const training::ToyPolicy init = initial_policy(opts, infer_vocab(seqs));
  training::GrpoConfig cfg;
  cfg.clip_epsilon = opts.clip_epsilon;
  cfg.kl_beta = opts.kl_beta;
  cfg.group_size = opts.group_size > 0 ? opts.group_size : static_cast<int>(groups.front().outputs.size());
  cfg.learning_rate = opts.learning_rate;
  cfg.epochs = opts.epochs;
  cfg.batch_size = opts.batch_size;
  cfg.seed = config.seed;
  cfg.normalization_scope = config.normalization_scope;
  cfg.workers = config.workers;
  auto result = training::train_offline(groups, cfg, init);

  auto mean_objective = [&](const training::ToyPolicy& p) {
    double sum = 0;
    for (const auto& g : groups) sum += training::grpo_objective(p, init, init, g, cfg).objective;
    return sum / static_cast<double>(groups.size());
  };
  write_policy(opts.output, result.policy, "policy_mrrl", config);
  ensure_parent(opts.history);
  write_text_file(opts.history, tsv_header("mrrl_history", config) + training::format_history_table(result.history));
  out << "initial_objective\t" << fixed(mean_objective(init)) << "\n";
  out << "final_objective\t" << fixed(mean_objective(result.policy)) << "\n";
  return kExitOk;
}

int cmd_grad_check(const GradCheckCliOptions& opts, const RunConfig& config, std::ostream& out, std::ostream&) {
  if (opts.instances < 1) throw Error(ErrorCode::kInvalidValue, "instances must be >= 1");
  struct OpSummary {
    std::string name;
    double max_rel_error = 0;
    std::size_t failed = 0;
  };
  std::vector<OpSummary> ops = {{"sft_loss"}, {"grpo_objective"}};

  auto corrupt = [&](training::ObjectiveFn fn, std::span<const double> params) -> training::ObjectiveFn {
    if (!opts.inject_corruption) return fn;
    auto g = fn(params).gradient;
    std::size_t k = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
      if (std::abs(g[i]) > std::abs(g[k])) k = i;
    return [fn, k](std::span<const double> x) {
      auto r = fn(x);
      r.gradient[k] *= 2.0;
      return r;
    };
  };

  training::GradCheckOptions gc;
  gc.tolerance = opts.tolerance;
  gc.sample_count = static_cast<std::size_t>(-1);
  gc.block_size = static_cast<std::size_t>(opts.vocab_size);
  for (int i = 0; i < opts.instances; ++i) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
    gc.seed = seed;
    auto sft = training::make_random_sft_instance(seed, opts.vocab_size, opts.seq_len);
    auto sft_report = training::grad_check(
        corrupt(training::sft_objective_fn(sft.policy, sft.example), sft.policy.params()), sft.policy.params(), gc);
    auto grpo = training::make_random_grpo_instance(seed, opts.group_size, opts.vocab_size, opts.seq_len);
    auto grpo_report = training::grad_check(corrupt(training::grpo_objective_fn(grpo), grpo.policy.params()),
                                            grpo.policy.params(), gc);
    for (auto [op, rep] : {std::pair{&ops[0], &sft_report}, std::pair{&ops[1], &grpo_report}}) {
      op->max_rel_error = std::max(op->max_rel_error, rep->max_rel_error);
      if (!rep->pass) ++op->failed;
    }
  }

  bool pass = true;
  out << "operation\tinstances\tmax_rel_error\tfailed\tresult\n";
  for (const auto& op : ops) {
    pass = pass && op.failed == 0;
    std::ostringstream err_str;
    err_str << std::scientific << std::setprecision(3) << op.max_rel_error;
    out << op.name << '\t' << opts.instances << '\t' << err_str.str() << '\t' << op.failed << '\t'
        << (op.failed == 0 ? "PASS" : "FAIL") << "\n";
  }
  out << "overall\t" << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitFailed;
}

int cmd_simulate(const SimulateOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err) {
  const BackendFactory factory(config);
  sim::SessionOptions session_opts;
  session_opts.limits = config.limits;
  session_opts.sampling = config.sampling;

  // Sessions are journaled as they finish; the ordered file replaces the journal at the end.
  fs::path journal_path = opts.output;
  journal_path += ".partial";
  ensure_parent(opts.output);
  fs::remove(journal_path);
  sim::TranscriptJournal journal(journal_path);

  std::vector<json> records;
  std::size_t failures = 0;
  if (opts.mode == SimulateMode::kFull) {
    std::vector<FivePProfile> profiles =
        opts.input ? parse_records<FivePProfile>(*opts.input, profile_from_record) : fixture_profiles();
    if (profiles.empty()) throw Error(ErrorCode::kEmptyInput, "no profiles to simulate");
    auto runner = [&](const FivePProfile& p, int, const std::string& id) {
      auto counselor = factory.counselor();
      auto client = factory.client(p);
      auto moderator = factory.moderator(config.stub_moderator_turns);
      Transcript t = sim::run_session(id, p, *counselor, *client, *moderator, session_opts);
      journal.append(t);
      return t;
    };
    auto batch = sim::batch_run(profiles, config.repeats, runner, config.workers);
    for (const auto& t : batch.transcripts) records.push_back(to_json(t));
    for (const auto& f : batch.failures) {
      err << "session " << f.session_id << " failed: " << f.message << "\n";
      if (f.partial) records.push_back(to_json(*f.partial));
    }
    failures = batch.failures.size();
  } else {
    if (!opts.input) throw Error(ErrorCode::kPrecondition, "replay needs a corpus file");
    auto gold = parse_records<Transcript>(*opts.input, transcript_from_json);
    if (gold.empty()) throw Error(ErrorCode::kEmptyInput, "corpus " + opts.input->string() + " is empty");
    auto results = parallel_map(gold.size(), config.workers, [&](std::size_t i) {
      std::unique_ptr<sim::ModelBackend> client;
      if (opts.gold_client) client = std::make_unique<sim::ReplayBackend>(gold[i]);
      else client = factory.client(gold[i].profile);
      auto r = sim::run_replay(gold[i], *client, session_opts);
      journal.append(r.transcript);
      return r;
    });
    for (const auto& r : results) {
      json al = json::array();
      for (const auto& a : r.alignment) al.push_back(metrics::to_json(a));
      records.push_back({{"session_id", r.transcript.session_id}, {"transcript", to_json(r.transcript)}, {"alignment", al}});
      if (r.transcript.termination == Termination::kBackendFailure) {
        err << "session " << r.transcript.session_id << " failed: backend failure\n";
        ++failures;
      }
    }
  }

  write_jsonl(opts.output, artifact_header(opts.mode == SimulateMode::kFull ? "transcripts" : "replay", config),
              records);
  fs::remove(journal_path);
  out << "simulated " << records.size() << " sessions (" << failures << " failed) -> " << opts.output.string()
      << "\n";
  return failures == 0 ? kExitOk : kExitFailed;
}

int cmd_evaluate(const EvaluateOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  if (fs::is_directory(opts.input)) {
    for (const auto& e : fs::directory_iterator(opts.input)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(opts.input)) {
    files.push_back(opts.input);
  } else {
    err << "input " << opts.input.string() << " does not exist\n";
    return kExitBadInput;
  }

  std::vector<Transcript> transcripts;
  std::vector<std::vector<sim::AlignedLabel>> alignments;
  for (const auto& f : files) {
    parse_records<int>(f, [&](const json& r) {
      if (r.is_object() && r.contains("alignment")) {
        transcripts.push_back(transcript_from_json(r.at("transcript")));
        std::vector<sim::AlignedLabel> al;
        for (const json& a : r["alignment"]) al.push_back(metrics::aligned_label_from_json(a));
        alignments.push_back(std::move(al));
      } else {
        transcripts.push_back(transcript_from_json(r));
      }
      return 0;
    });
  }
  if (transcripts.empty()) {
    err << "no transcripts found in " << opts.input.string() << "\n";
    return kExitBadInput;
  }

  metrics::HashingEmbedder embedder;
  metrics::ReportOptions ro;
  ro.averaging = opts.macro ? metrics::Averaging::kMacro : metrics::Averaging::kMicro;
  ro.coherence_scope = opts.all_turn_coherence ? metrics::CoherenceScope::kAllTurns : metrics::CoherenceScope::kClientOnly;
  auto report = metrics::aggregate_report(transcripts, alignments, embedder, ro);

  fs::create_directories(opts.out_dir);
  const std::string tsv = metrics::format_report_tsv(report);
  write_text_file(opts.out_dir / "report.tsv", tsv_header("metric_report", config) + tsv);
  json j = metrics::report_to_json(report);
  j["rimr_artifact"] = artifact_header("metric_report", config)["rimr_artifact"];
  j["precision_basis"] = "gold-label agreement under replay";
  write_text_file(opts.out_dir / "report.json", j.dump(2) + "\n");
  write_text_file(opts.out_dir / "confusion.tsv", metrics::format_confusion_grid(report.confusion));
  out << tsv;
  return kExitOk;
}

}  // namespace rimr::cli
