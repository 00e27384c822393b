#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rimr::training {

// n-gram softmax policy: one logit row of size V per context bucket, where the
// bucket is the base-V number formed by the previous `context_order` tokens
// (left-padded with token 0). context_order = 0 gives a single unigram row.
class ToyPolicy {
 public:
  ToyPolicy(int vocab_size, int context_order);
  ToyPolicy(int vocab_size, int context_order, std::vector<double> params);

  // Logits drawn i.i.d. N(0, stddev^2).
  static ToyPolicy random(int vocab_size, int context_order, double stddev, std::uint64_t seed);

  int vocab_size() const { return vocab_size_; }
  int context_order() const { return context_order_; }
  std::size_t bucket_count() const { return bucket_count_; }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }

  bool same_shape(const ToyPolicy& other) const {
    return vocab_size_ == other.vocab_size_ && context_order_ == other.context_order_;
  }

  // Bucket for the next token given everything emitted so far.
  std::size_t bucket(std::span<const int> prefix) const;

  // Buckets for each output position of `tokens` when preceded by `context`.
  std::vector<std::size_t> sequence_buckets(std::span<const int> context,
                                            std::span<const int> tokens) const;

  std::span<const double> logits(std::size_t bucket) const;
  double log_prob(std::size_t bucket, int token) const;
  std::vector<double> probabilities(std::size_t bucket) const;

  // grad += weight * d log p(token | bucket) / d params.
  void accumulate_log_prob_gradient(std::size_t bucket, int token, double weight,
                                    std::span<double> grad) const;

  // Sum of log p over `tokens` conditioned on `context`.
  double sequence_log_prob(std::span<const int> context, std::span<const int> tokens) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  int vocab_size_;
  int context_order_;
  std::size_t bucket_count_;
  std::vector<double> params_;
};

}  // namespace rimr::training
