#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rimr/domain.h"
#include "rimr/training/rewards.h"
#include "rimr/training/toy_policy.h"

namespace rimr::training {

struct LossAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

// One conditional SFT target: `target` tokens generated after `context` tokens.
struct SftExample {
  std::vector<int> context;
  std::vector<int> target;
};

// loss = -sum_j log P(target_j | context, target_<j), with its exact gradient.
// Throws Error(kTokenOutOfVocab).
LossAndGradient sft_loss(const ToyPolicy& policy, const SftExample& example);

struct SampledOutput {
  std::vector<int> tokens;
  StepIndices step_end_indices{};
  RubricScores raw_scores;
};

struct ScoredGroup {
  std::string context_id;
  std::vector<int> context;
  std::vector<SampledOutput> outputs;
};

struct GrpoConfig {
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  int group_size = 3;
  double learning_rate = 0.1;
  int epochs = 1;
  int batch_size = 8;
  std::uint64_t seed = 0;
  NormalizationScope normalization_scope = NormalizationScope::kPerStepIndex;
  double std_floor = 1e-6;
  // Groups of a mini-batch evaluated concurrently; results are reduced in index order.
  int workers = 1;
};

// Throws Error(kInvalidValue) on out-of-range settings.
void validate_config(const GrpoConfig& cfg);

// Throws Error(kEmptyGroup / kShapeMismatch / kTokenOutOfVocab / kIndexMismatch ...) on malformed groups.
void validate_group(const ScoredGroup& group, int vocab_size, int group_size);

// Per-output token advantages from raw rubric scores (reward vector, group
// normalization, future-sum).
std::vector<std::vector<double>> group_advantages(const ScoredGroup& group, NormalizationScope scope,
                                                  double std_floor);

struct TokenTerm {
  double ratio = 1.0;
  double advantage = 0.0;
  double surrogate = 0.0;  // min(ratio * A, clip(ratio) * A)
  double kl = 0.0;         // pi_ref/pi - log(pi_ref/pi) - 1
};

struct GrpoEvaluation {
  double objective = 0.0;  // to be maximized
  std::vector<double> gradient;
  double mean_kl = 0.0;
  double mean_abs_advantage = 0.0;
  std::vector<std::vector<TokenTerm>> terms;  // [output][token]
};

// Clipped group-relative objective with per-token KL penalty for one group,
// averaged 1/G over outputs and 1/|o_i| over tokens. The sampler policy is the
// denominator of the importance ratio.
GrpoEvaluation grpo_objective(const ToyPolicy& policy, const ToyPolicy& sampler, const ToyPolicy& ref,
                              const ScoredGroup& group, const GrpoConfig& cfg);

}  // namespace rimr::training
