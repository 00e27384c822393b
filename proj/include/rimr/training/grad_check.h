#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rimr/training/objectives.h"

namespace rimr::training {

using ObjectiveFn = std::function<LossAndGradient(std::span<const double>)>;

struct GradCheckOptions {
  double tolerance = 1e-6;
  double step = 1e-5;
  // Coordinates checked; the full vector when >= its size.
  std::size_t sample_count = 64;
  std::uint64_t seed = 0;
  // Coordinates per reported block (one logit row for a ToyPolicy).
  std::size_t block_size = 0;  // 0: a single block
  // Denominator floor for the relative error, so exact zeros compare cleanly.
  double abs_floor = 1e-8;
};

struct BlockReport {
  std::size_t block = 0;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<BlockReport> blocks;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool pass = true;
};

// |analytic - numeric| / max(|analytic|, |numeric|, abs_floor)
double relative_error(double analytic, double numeric, double abs_floor);

// Central differences on a seeded random subset of coordinates.
GradCheckReport grad_check(const ObjectiveFn& fn, std::span<const double> params,
                           const GradCheckOptions& options);

struct GrpoInstance {
  ToyPolicy policy;
  ToyPolicy sampler;
  ToyPolicy ref;
  ScoredGroup group;
  GrpoConfig config;
};

// Random policies (n = 1) and one scored group with random step boundaries and scores.
GrpoInstance make_random_grpo_instance(std::uint64_t seed, int group_size, int vocab_size, int seq_len);

struct SftInstance {
  ToyPolicy policy;
  SftExample example;
};

SftInstance make_random_sft_instance(std::uint64_t seed, int vocab_size, int seq_len);

ObjectiveFn sft_objective_fn(const ToyPolicy& shape, const SftExample& example);
ObjectiveFn grpo_objective_fn(const GrpoInstance& instance);

}  // namespace rimr::training
