#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "rimr/cli/config.h"

// Subcommand bodies. Each returns the process exit code: 0 on success, 1 when
// the run completed but failed its check, 2 on bad input. Diagnostics go to err.
namespace rimr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitBadInput = 2;

struct MakeFixturesOptions {
  std::filesystem::path out_dir;
};
// sessions.jsonl (10 source sessions), profiles.jsonl, directional.jsonl
// (50 scored groups, V=16) and sft.jsonl.
int cmd_make_fixtures(const MakeFixturesOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err);

struct CorpusBuildOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path stats;  // tab-separated; a .json twin is written next to it
};
// Exit 0 iff no session failed validation.
int cmd_corpus_build(const CorpusBuildOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err);

enum class TrainMode { kSft, kMrrl };

struct TrainOptions {
  TrainMode mode = TrainMode::kMrrl;
  std::filesystem::path data;
  std::optional<std::filesystem::path> init;  // default: uniform policy
  std::filesystem::path output;
  std::filesystem::path history;
  int vocab_size = 0;  // 0: infer from the data
  int context_order = 1;
  double learning_rate = 0.5;
  int epochs = 1;
  int batch_size = 8;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  int group_size = 0;  // 0: size of the first group
};
int cmd_train(const TrainOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err);

struct GradCheckCliOptions {
  int instances = 20;
  int group_size = 2;
  int vocab_size = 5;
  int seq_len = 16;
  double tolerance = 1e-5;
  bool inject_corruption = false;  // negative control: doubles one gradient coordinate
};
int cmd_grad_check(const GradCheckCliOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err);

enum class SimulateMode { kFull, kReplay };

struct SimulateOptions {
  SimulateMode mode = SimulateMode::kFull;
  // full: profiles or corpus JSONL (empty: fixture profiles); replay: corpus JSONL.
  std::optional<std::filesystem::path> input;
  std::filesystem::path output;
  bool gold_client = false;  // replay with the gold client turns (identity replay)
};
int cmd_simulate(const SimulateOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err);

struct EvaluateOptions {
  std::filesystem::path input;  // a JSONL file or a directory of them
  std::filesystem::path out_dir;
  bool macro = false;
  bool all_turn_coherence = false;
};
// report.tsv, report.json and confusion.tsv in out_dir.
int cmd_evaluate(const EvaluateOptions& opts, const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace rimr::cli
