#include "rimr/training/toy_policy.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "rimr/error.h"

namespace rimr::training {

namespace {

std::size_t checked_bucket_count(int vocab_size, int context_order) {
  if (vocab_size < 2) throw Error(ErrorCode::kInvalidValue, "vocab_size must be >= 2");
  if (context_order < 0) throw Error(ErrorCode::kInvalidValue, "context_order must be >= 0");
  std::size_t count = 1;
  for (int i = 0; i < context_order; ++i) {
    count *= static_cast<std::size_t>(vocab_size);
    if (count > (std::size_t{1} << 24)) {
      throw Error(ErrorCode::kInvalidValue, "too many context buckets");
    }
  }
  return count;
}

}  // namespace

ToyPolicy::ToyPolicy(int vocab_size, int context_order)
    : vocab_size_(vocab_size),
      context_order_(context_order),
      bucket_count_(checked_bucket_count(vocab_size, context_order)),
      params_(bucket_count_ * static_cast<std::size_t>(vocab_size), 0.0) {}

ToyPolicy::ToyPolicy(int vocab_size, int context_order, std::vector<double> params)
    : vocab_size_(vocab_size),
      context_order_(context_order),
      bucket_count_(checked_bucket_count(vocab_size, context_order)),
      params_(std::move(params)) {
  if (params_.size() != bucket_count_ * static_cast<std::size_t>(vocab_size_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "params length " + std::to_string(params_.size()) + " != bucket_count * V");
  }
}

ToyPolicy ToyPolicy::random(int vocab_size, int context_order, double stddev, std::uint64_t seed) {
  ToyPolicy policy(vocab_size, context_order);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& p : policy.params_) p = dist(rng);
  return policy;
}

std::size_t ToyPolicy::bucket(std::span<const int> prefix) const {
  std::size_t b = 0;
  const auto n = static_cast<std::size_t>(context_order_);
  for (std::size_t j = 0; j < n; ++j) {
    // Window position j covers prefix[size - n + j]; missing positions are token 0.
    int tok = 0;
    if (prefix.size() + j >= n) tok = prefix[prefix.size() + j - n];
    b = b * static_cast<std::size_t>(vocab_size_) + static_cast<std::size_t>(tok);
  }
  return b;
}

std::vector<std::size_t> ToyPolicy::sequence_buckets(std::span<const int> context,
                                                     std::span<const int> tokens) const {
  std::vector<int> prefix(context.begin(), context.end());
  prefix.reserve(context.size() + tokens.size());
  std::vector<std::size_t> buckets;
  buckets.reserve(tokens.size());
  for (int tok : tokens) {
    buckets.push_back(bucket(prefix));
    prefix.push_back(tok);
  }
  return buckets;
}

std::span<const double> ToyPolicy::logits(std::size_t bucket) const {
  return std::span<const double>(params_).subspan(bucket * static_cast<std::size_t>(vocab_size_),
                                                  static_cast<std::size_t>(vocab_size_));
}

double ToyPolicy::log_prob(std::size_t bucket, int token) const {
  auto row = logits(bucket);
  double max = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double l : row) sum += std::exp(l - max);
  return row[static_cast<std::size_t>(token)] - max - std::log(sum);
}

std::vector<double> ToyPolicy::probabilities(std::size_t bucket) const {
  auto row = logits(bucket);
  double max = *std::max_element(row.begin(), row.end());
  std::vector<double> p(row.size());
  double sum = 0.0;
  for (std::size_t v = 0; v < row.size(); ++v) {
    p[v] = std::exp(row[v] - max);
    sum += p[v];
  }
  for (double& x : p) x /= sum;
  return p;
}

void ToyPolicy::accumulate_log_prob_gradient(std::size_t bucket, int token, double weight,
                                             std::span<double> grad) const {
  // d log softmax_token / d logit_v = [v == token] - p_v
  auto p = probabilities(bucket);
  const std::size_t offset = bucket * static_cast<std::size_t>(vocab_size_);
  for (std::size_t v = 0; v < p.size(); ++v) grad[offset + v] -= weight * p[v];
  grad[offset + static_cast<std::size_t>(token)] += weight;
}

double ToyPolicy::sequence_log_prob(std::span<const int> context, std::span<const int> tokens) const {
  auto buckets = sequence_buckets(context, tokens);
  double total = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) total += log_prob(buckets[t], tokens[t]);
  return total;
}

}  // namespace rimr::training
