#include "rimr/training/objectives.h"

#include <algorithm>
#include <cmath>

namespace rimr::training {

namespace {

void check_tokens(std::span<const int> tokens, int vocab_size, const char* what) {
  for (int tok : tokens) {
    if (tok < 0 || tok >= vocab_size) {
      throw Error(ErrorCode::kTokenOutOfVocab, std::string(what) + " token " + std::to_string(tok) +
                                                   " outside vocabulary of size " +
                                                   std::to_string(vocab_size));
    }
  }
}

}  // namespace

LossAndGradient sft_loss(const ToyPolicy& policy, const SftExample& example) {
  check_tokens(example.context, policy.vocab_size(), "context");
  check_tokens(example.target, policy.vocab_size(), "target");
  LossAndGradient out;
  out.gradient.assign(policy.params().size(), 0.0);
  auto buckets = policy.sequence_buckets(example.context, example.target);
  for (std::size_t j = 0; j < example.target.size(); ++j) {
    out.value -= policy.log_prob(buckets[j], example.target[j]);
    policy.accumulate_log_prob_gradient(buckets[j], example.target[j], -1.0, out.gradient);
  }
  return out;
}

void validate_config(const GrpoConfig& cfg) {
  if (!(cfg.clip_epsilon > 0.0)) throw Error(ErrorCode::kInvalidValue, "clip_epsilon must be > 0");
  if (!(cfg.kl_beta >= 0.0)) throw Error(ErrorCode::kInvalidValue, "kl_beta must be >= 0");
  if (cfg.group_size < 2) throw Error(ErrorCode::kInvalidValue, "group_size must be >= 2");
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::kInvalidValue, "learning_rate must be > 0");
  if (cfg.epochs < 0) throw Error(ErrorCode::kInvalidValue, "epochs must be >= 0");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidValue, "batch_size must be >= 1");
  if (!(cfg.std_floor > 0.0)) throw Error(ErrorCode::kInvalidValue, "std_floor must be > 0");
  if (cfg.workers < 1) throw Error(ErrorCode::kInvalidValue, "workers must be >= 1");
}

void validate_group(const ScoredGroup& group, int vocab_size, int group_size) {
  if (group.outputs.empty()) {
    throw Error(ErrorCode::kEmptyGroup, "group '" + group.context_id + "' has no outputs");
  }
  if (static_cast<int>(group.outputs.size()) != group_size) {
    throw Error(ErrorCode::kShapeMismatch, "group '" + group.context_id + "' has " +
                                               std::to_string(group.outputs.size()) +
                                               " outputs, expected " + std::to_string(group_size));
  }
  check_tokens(group.context, vocab_size, "context");
  for (const SampledOutput& o : group.outputs) {
    check_tokens(o.tokens, vocab_size, "output");
    validate_rubric_scores(o.raw_scores);
    const auto& idx = o.step_end_indices;
    for (std::size_t k = 1; k < kStepCount; ++k) {
      if (idx[k] <= idx[k - 1]) {
        throw Error(ErrorCode::kNonMonotoneIndices,
                    "group '" + group.context_id + "': step-end indices not strictly increasing");
      }
    }
    if (idx[0] < 0 || o.tokens.empty() || idx[kStepCount - 1] != static_cast<int>(o.tokens.size()) - 1) {
      throw Error(ErrorCode::kIndexMismatch,
                  "group '" + group.context_id + "': final step must end on the last token");
    }
  }
}

std::vector<std::vector<double>> group_advantages(const ScoredGroup& group, NormalizationScope scope,
                                                  double std_floor) {
  std::vector<RewardVector> rewards;
  rewards.reserve(group.outputs.size());
  for (const SampledOutput& o : group.outputs) {
    rewards.push_back(build_reward_vector(normalized_rewards(o.raw_scores), o.step_end_indices));
  }
  auto normalized = normalize_group(rewards, scope, std_floor);
  std::vector<std::vector<double>> adv;
  adv.reserve(group.outputs.size());
  for (std::size_t i = 0; i < group.outputs.size(); ++i) {
    adv.push_back(token_advantages(normalized[i], group.outputs[i].tokens.size()));
  }
  return adv;
}

GrpoEvaluation grpo_objective(const ToyPolicy& policy, const ToyPolicy& sampler, const ToyPolicy& ref,
                              const ScoredGroup& group, const GrpoConfig& cfg) {
  if (!policy.same_shape(sampler) || !policy.same_shape(ref)) {
    throw Error(ErrorCode::kShapeMismatch, "policy, sampler and reference must share V and n");
  }
  validate_group(group, policy.vocab_size(), cfg.group_size);

  auto advantages = group_advantages(group, cfg.normalization_scope, cfg.std_floor);

  GrpoEvaluation eval;
  eval.gradient.assign(policy.params().size(), 0.0);
  eval.terms.resize(group.outputs.size());
  const double inv_g = 1.0 / static_cast<double>(group.outputs.size());
  const double lo = 1.0 - cfg.clip_epsilon;
  const double hi = 1.0 + cfg.clip_epsilon;
  std::size_t token_total = 0;

  for (std::size_t i = 0; i < group.outputs.size(); ++i) {
    const SampledOutput& o = group.outputs[i];
    const double weight = inv_g / static_cast<double>(o.tokens.size());
    auto buckets = policy.sequence_buckets(group.context, o.tokens);
    double output_sum = 0.0;
    auto& terms = eval.terms[i];
    terms.resize(o.tokens.size());

    for (std::size_t t = 0; t < o.tokens.size(); ++t) {
      const std::size_t b = buckets[t];
      const int tok = o.tokens[t];
      const double lp = policy.log_prob(b, tok);
      const double ratio = std::exp(lp - sampler.log_prob(b, tok));
      const double a = advantages[i][t];

      const double unclipped = ratio * a;
      const double clipped = std::clamp(ratio, lo, hi) * a;
      const double surrogate = std::min(unclipped, clipped);
      // The unclipped branch carries gradient ratio * A * dlogp; the clipped
      // branch is constant in theta whenever it is strictly smaller.
      const double d_surrogate = unclipped <= clipped ? unclipped : 0.0;

      const double ref_ratio = std::exp(ref.log_prob(b, tok) - lp);
      const double kl = ref_ratio - std::log(ref_ratio) - 1.0;
      // d kl / d logp = 1 - ref_ratio
      const double d_kl = 1.0 - ref_ratio;

      terms[t] = {ratio, a, surrogate, kl};
      output_sum += surrogate - cfg.kl_beta * kl;
      policy.accumulate_log_prob_gradient(b, tok, weight * (d_surrogate - cfg.kl_beta * d_kl),
                                          eval.gradient);
      eval.mean_kl += kl;
      eval.mean_abs_advantage += std::abs(a);
    }
    eval.objective += weight * output_sum;
    token_total += o.tokens.size();
  }
  eval.mean_kl /= static_cast<double>(token_total);
  eval.mean_abs_advantage /= static_cast<double>(token_total);
  return eval;
}

}  // namespace rimr::training
