#include "rimr/training/trainer.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "rimr/util/parallel.h"

namespace rimr::training {

namespace {

// Epoch-wise shuffled mini-batches of corpus indices.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, int epochs,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> order(n);
  for (int e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

TrainResult train_offline(std::span<const ScoredGroup> corpus, const GrpoConfig& cfg,
                          const ToyPolicy& init, const std::optional<ToyPolicy>& ref) {
  validate_config(cfg);
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "training corpus is empty");
  for (const ScoredGroup& g : corpus) validate_group(g, init.vocab_size(), cfg.group_size);

  const ToyPolicy sampler = init;
  const ToyPolicy reference = ref.value_or(init);
  if (!reference.same_shape(init)) {
    throw Error(ErrorCode::kShapeMismatch, "reference policy shape differs from the initial policy");
  }

  TrainResult result{init, {}};
  const std::size_t per_epoch =
      (corpus.size() + static_cast<std::size_t>(cfg.batch_size) - 1) / static_cast<std::size_t>(cfg.batch_size);
  auto batches = make_batches(corpus.size(), cfg.batch_size, cfg.epochs, cfg.seed);

  int iteration = 0;
  for (const auto& batch : batches) {
    const ToyPolicy& current = result.policy;
    auto evals = parallel_map(batch.size(), cfg.workers, [&](std::size_t j) {
      return grpo_objective(current, sampler, reference, corpus[batch[j]], cfg);
    });

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    IterationRecord rec;
    rec.iteration = iteration;
    rec.epoch = static_cast<int>(static_cast<std::size_t>(iteration) / per_epoch);
    std::vector<double> grad(current.params().size(), 0.0);
    for (const GrpoEvaluation& e : evals) {
      rec.objective += inv_b * e.objective;
      rec.mean_kl += inv_b * e.mean_kl;
      rec.mean_abs_advantage += inv_b * e.mean_abs_advantage;
      for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += inv_b * e.gradient[p];
    }

    auto params = result.policy.mutable_params();
    for (std::size_t p = 0; p < params.size(); ++p) params[p] += cfg.learning_rate * grad[p];
    result.history.push_back(rec);
    ++iteration;
  }
  return result;
}

SftResult train_sft(std::span<const SftExample> examples, const SftConfig& cfg, const ToyPolicy& init) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyInput, "SFT corpus is empty");
  if (!(cfg.learning_rate > 0.0) || cfg.epochs < 0 || cfg.batch_size < 1) {
    throw Error(ErrorCode::kInvalidValue, "invalid SFT configuration");
  }
  SftResult result{init, {}};
  const std::size_t per_epoch =
      (examples.size() + static_cast<std::size_t>(cfg.batch_size) - 1) / static_cast<std::size_t>(cfg.batch_size);
  auto batches = make_batches(examples.size(), cfg.batch_size, cfg.epochs, cfg.seed);

  int iteration = 0;
  for (const auto& batch : batches) {
    std::vector<double> grad(init.params().size(), 0.0);
    double loss = 0.0;
    std::size_t tokens = 0;
    for (std::size_t j : batch) {
      auto lg = sft_loss(result.policy, examples[j]);
      loss += lg.value;
      tokens += examples[j].target.size();
      for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += lg.gradient[p];
    }
    // Descend on the per-token mean loss of the batch.
    const double scale = tokens == 0 ? 0.0 : 1.0 / static_cast<double>(tokens);
    auto params = result.policy.mutable_params();
    for (std::size_t p = 0; p < params.size(); ++p) params[p] -= cfg.learning_rate * scale * grad[p];
    result.history.push_back({iteration, static_cast<int>(static_cast<std::size_t>(iteration) / per_epoch),
                              loss * scale});
    ++iteration;
  }
  return result;
}

std::string format_history_table(std::span<const IterationRecord> history) {
  std::string out = "iteration\tepoch\tobjective\tmean_kl\tmean_abs_advantage\n";
  for (const auto& r : history) {
    out += std::to_string(r.iteration) + "\t" + std::to_string(r.epoch) + "\t" + fmt(r.objective) +
           "\t" + fmt(r.mean_kl) + "\t" + fmt(r.mean_abs_advantage) + "\n";
  }
  return out;
}

std::string format_history_table(std::span<const SftRecord> history) {
  std::string out = "iteration\tepoch\tmean_token_loss\n";
  for (const auto& r : history) {
    out += std::to_string(r.iteration) + "\t" + std::to_string(r.epoch) + "\t" + fmt(r.mean_token_loss) + "\n";
  }
  return out;
}

}  // namespace rimr::training
