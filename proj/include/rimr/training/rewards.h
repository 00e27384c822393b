#pragma once

#include <array>
#include <span>
#include <vector>

#include "rimr/domain.h"

namespace rimr::training {

inline constexpr std::size_t kStepCount = 4;
using StepIndices = std::array<int, kStepCount>;

// Maps a 0..5 rubric score linearly onto [-1, 1]. Throws Error(kOutOfRange).
double normalize_score(double raw);

// Normalized rewards r1..r5 in rubric order.
std::array<double, 5> normalized_rewards(const RubricScores& scores);

struct RewardEntry {
  int token_index = 0;
  double reward = 0.0;

  bool operator==(const RewardEntry&) const = default;
};

// Step rewards placed at the step-end tokens idx(1..4).
struct RewardVector {
  std::array<RewardEntry, kStepCount> entries{};

  bool operator==(const RewardVector&) const = default;
};

// entries = [(idx1, r1), (idx2, r2), (idx3, r3 + r5), (idx4, r4 + r5)].
// Throws Error(kNonMonotoneIndices) unless idx is strictly increasing.
RewardVector build_reward_vector(const std::array<double, 5>& rewards, const StepIndices& indices);

enum class NormalizationScope {
  kPerStepIndex,  // statistics over the G rewards at each step position
  kWholeGroup,    // statistics over all 4G rewards of the group
};

std::string_view normalization_scope_code(NormalizationScope scope);
std::optional<NormalizationScope> parse_normalization_scope(std::string_view code);

// (r - mean) / max(population std, std_floor). Requires at least two vectors.
std::vector<RewardVector> normalize_group(std::span<const RewardVector> group, NormalizationScope scope,
                                          double std_floor);

// A_t = sum of normalized rewards whose token index is >= t, for t in [0, seq_len).
// Throws Error(kIndexMismatch) unless idx(4) == seq_len - 1.
std::vector<double> token_advantages(const RewardVector& normalized, std::size_t seq_len);

}  // namespace rimr::training
