#include "rimr/training/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rimr::training {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const ObjectiveFn& fn, std::span<const double> params,
                           const GradCheckOptions& options) {
  std::vector<double> x(params.begin(), params.end());
  const LossAndGradient base = fn(x);
  if (base.gradient.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient length differs from parameter length");
  }

  std::vector<std::size_t> coords(x.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.sample_count < coords.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.sample_count);
    std::sort(coords.begin(), coords.end());
  }

  const std::size_t block_size = options.block_size == 0 ? std::max<std::size_t>(x.size(), 1) : options.block_size;
  GradCheckReport report;
  report.blocks.resize((x.size() + block_size - 1) / block_size);
  for (std::size_t b = 0; b < report.blocks.size(); ++b) report.blocks[b].block = b;

  for (std::size_t c : coords) {
    const double saved = x[c];
    x[c] = saved + options.step;
    const double plus = fn(x).value;
    x[c] = saved - options.step;
    const double minus = fn(x).value;
    x[c] = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double err = relative_error(base.gradient[c], numeric, options.abs_floor);

    BlockReport& block = report.blocks[c / block_size];
    ++block.checked;
    block.max_rel_error = std::max(block.max_rel_error, err);
    if (err >= options.tolerance) block.pass = false;
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.checked;
  }
  report.pass = std::all_of(report.blocks.begin(), report.blocks.end(),
                            [](const BlockReport& b) { return b.pass; });
  return report;
}

GrpoInstance make_random_grpo_instance(std::uint64_t seed, int group_size, int vocab_size, int seq_len) {
  if (seq_len < 4) throw Error(ErrorCode::kInvalidValue, "seq_len must be >= 4");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> token(0, vocab_size - 1);
  std::uniform_real_distribution<double> score(0.0, 5.0);

  GrpoInstance inst{ToyPolicy::random(vocab_size, 1, 0.5, rng()),
                    ToyPolicy::random(vocab_size, 1, 0.5, rng()),
                    ToyPolicy::random(vocab_size, 1, 0.5, rng()),
                    {},
                    {}};
  inst.config.group_size = group_size;
  inst.config.clip_epsilon = 0.2;
  inst.config.kl_beta = 0.1;

  inst.group.context_id = "random-" + std::to_string(seed);
  inst.group.context = {token(rng), token(rng), token(rng)};
  for (int i = 0; i < group_size; ++i) {
    SampledOutput o;
    for (int t = 0; t < seq_len; ++t) o.tokens.push_back(token(rng));
    // Three distinct cut points strictly inside [0, seq_len - 1).
    std::vector<int> cuts(static_cast<std::size_t>(seq_len - 1));
    std::iota(cuts.begin(), cuts.end(), 0);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    std::sort(cuts.begin(), cuts.begin() + 3);
    o.step_end_indices = {cuts[0], cuts[1], cuts[2], seq_len - 1};
    o.raw_scores = {score(rng), score(rng), score(rng), score(rng), score(rng)};
    inst.group.outputs.push_back(std::move(o));
  }
  return inst;
}

SftInstance make_random_sft_instance(std::uint64_t seed, int vocab_size, int seq_len) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> token(0, vocab_size - 1);
  SftInstance inst{ToyPolicy::random(vocab_size, 1, 0.5, rng()), {}};
  inst.example.context = {token(rng), token(rng)};
  for (int t = 0; t < seq_len; ++t) inst.example.target.push_back(token(rng));
  return inst;
}

ObjectiveFn sft_objective_fn(const ToyPolicy& shape, const SftExample& example) {
  return [shape, example](std::span<const double> params) {
    ToyPolicy p(shape.vocab_size(), shape.context_order(), std::vector<double>(params.begin(), params.end()));
    return sft_loss(p, example);
  };
}

ObjectiveFn grpo_objective_fn(const GrpoInstance& instance) {
  return [instance](std::span<const double> params) {
    ToyPolicy p(instance.policy.vocab_size(), instance.policy.context_order(),
                std::vector<double>(params.begin(), params.end()));
    GrpoEvaluation e = grpo_objective(p, instance.sampler, instance.ref, instance.group, instance.config);
    return LossAndGradient{e.objective, std::move(e.gradient)};
  };
}

}  // namespace rimr::training
