#include "rimr/training/rewards.h"

#include <algorithm>
#include <cmath>

namespace rimr::training {

double normalize_score(double raw) {
  if (!(raw >= 0.0 && raw <= 5.0)) {
    throw Error(ErrorCode::kOutOfRange, "raw score " + std::to_string(raw) + " outside [0, 5]");
  }
  return raw / 2.5 - 1.0;
}

std::array<double, 5> normalized_rewards(const RubricScores& scores) {
  std::array<double, 5> out{};
  auto raw = scores.as_array();
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = normalize_score(raw[k]);
  return out;
}

RewardVector build_reward_vector(const std::array<double, 5>& r, const StepIndices& idx) {
  for (std::size_t k = 1; k < kStepCount; ++k) {
    if (idx[k] <= idx[k - 1]) {
      throw Error(ErrorCode::kNonMonotoneIndices,
                  "step-end indices must be strictly increasing (step " + std::to_string(k + 1) + ")");
    }
  }
  if (idx[0] < 0) throw Error(ErrorCode::kNonMonotoneIndices, "negative step-end index");
  RewardVector v;
  v.entries[0] = {idx[0], r[0]};
  v.entries[1] = {idx[1], r[1]};
  v.entries[2] = {idx[2], r[2] + r[4]};
  v.entries[3] = {idx[3], r[3] + r[4]};
  return v;
}

std::string_view normalization_scope_code(NormalizationScope scope) {
  return scope == NormalizationScope::kPerStepIndex ? "per_step_index" : "whole_group";
}

std::optional<NormalizationScope> parse_normalization_scope(std::string_view code) {
  if (code == "per_step_index") return NormalizationScope::kPerStepIndex;
  if (code == "whole_group") return NormalizationScope::kWholeGroup;
  return std::nullopt;
}

namespace {

struct Moments {
  double mean = 0.0;
  double scale = 1.0;
};

Moments moments(std::span<const double> xs, double std_floor) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  // Identical values: pin the mean so every centered value is exactly zero.
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) mean = xs.front();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::max(std::sqrt(var), std_floor)};
}

}  // namespace

std::vector<RewardVector> normalize_group(std::span<const RewardVector> group, NormalizationScope scope,
                                          double std_floor) {
  if (group.size() < 2) throw Error(ErrorCode::kPrecondition, "group normalization needs G >= 2");
  if (!(std_floor > 0.0)) throw Error(ErrorCode::kInvalidValue, "std_floor must be > 0");

  std::vector<RewardVector> out(group.begin(), group.end());
  if (scope == NormalizationScope::kWholeGroup) {
    std::vector<double> all;
    all.reserve(group.size() * kStepCount);
    for (const auto& v : group) {
      for (const auto& e : v.entries) all.push_back(e.reward);
    }
    Moments m = moments(all, std_floor);
    for (auto& v : out) {
      for (auto& e : v.entries) e.reward = (e.reward - m.mean) / m.scale;
    }
    return out;
  }

  std::vector<double> column(group.size());
  for (std::size_t k = 0; k < kStepCount; ++k) {
    for (std::size_t i = 0; i < group.size(); ++i) column[i] = group[i].entries[k].reward;
    Moments m = moments(column, std_floor);
    for (auto& v : out) v.entries[k].reward = (v.entries[k].reward - m.mean) / m.scale;
  }
  return out;
}

std::vector<double> token_advantages(const RewardVector& normalized, std::size_t seq_len) {
  const auto& e = normalized.entries;
  if (seq_len == 0 || e[kStepCount - 1].token_index != static_cast<int>(seq_len) - 1) {
    throw Error(ErrorCode::kIndexMismatch, "final step-end index " +
                                               std::to_string(e[kStepCount - 1].token_index) +
                                               " != seq_len - 1 (" + std::to_string(seq_len) + " - 1)");
  }
  for (std::size_t k = 1; k < kStepCount; ++k) {
    if (e[k].token_index <= e[k - 1].token_index) {
      throw Error(ErrorCode::kNonMonotoneIndices, "reward entries must have increasing token indices");
    }
  }
  if (e[0].token_index < 0) throw Error(ErrorCode::kNonMonotoneIndices, "negative token index");

  // A_t is constant on each span (idx(k-1), idx(k)]; tokens in that span see steps k..4.
  // Sums run in ascending step order.
  std::vector<double> adv(seq_len, 0.0);
  std::size_t t = 0;
  for (std::size_t first = 0; first < kStepCount; ++first) {
    double tail = 0.0;
    for (std::size_t k = first; k < kStepCount; ++k) tail += e[k].reward;
    const auto span_end = static_cast<std::size_t>(e[first].token_index);
    for (; t <= span_end; ++t) adv[t] = tail;
  }
  return adv;
}

}  // namespace rimr::training
