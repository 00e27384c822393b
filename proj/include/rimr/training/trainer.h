#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rimr/training/objectives.h"

namespace rimr::training {

struct IterationRecord {
  int iteration = 0;
  int epoch = 0;
  double objective = 0.0;  // batch-mean objective before the update
  double mean_kl = 0.0;
  double mean_abs_advantage = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<IterationRecord> history;
};

// Offline token-level GRPO. theta starts at `init`; the sampler (importance
// denominator) and the reference (KL target) are frozen copies taken before
// the loop, with the reference defaulting to `init`. Each iteration consumes
// one shuffled mini-batch and applies theta += lr * grad(mean objective).
TrainResult train_offline(std::span<const ScoredGroup> corpus, const GrpoConfig& cfg,
                          const ToyPolicy& init, const std::optional<ToyPolicy>& ref = std::nullopt);

struct SftConfig {
  double learning_rate = 0.5;
  int epochs = 1;
  int batch_size = 8;
  std::uint64_t seed = 0;
};

struct SftRecord {
  int iteration = 0;
  int epoch = 0;
  double mean_token_loss = 0.0;  // batch loss / batch token count, before the update

  bool operator==(const SftRecord&) const = default;
};

struct SftResult {
  ToyPolicy policy;
  std::vector<SftRecord> history;
};

SftResult train_sft(std::span<const SftExample> examples, const SftConfig& cfg, const ToyPolicy& init);

std::string format_history_table(std::span<const IterationRecord> history);
std::string format_history_table(std::span<const SftRecord> history);

}  // namespace rimr::training
