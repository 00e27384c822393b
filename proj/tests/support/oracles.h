#pragma once

// Independent reference computations used by unit and acceptance tests. Nothing
// here calls into the code paths being checked.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace rimr::testing {

struct StepReward {
  int token_index;
  double reward;
};

// A_t = sum over steps k (ascending) with idx(k) >= t, by explicit double loop.
inline std::vector<double> brute_force_advantages(const std::vector<StepReward>& steps, std::size_t seq_len) {
  std::vector<double> adv(seq_len, 0.0);
  for (std::size_t t = 0; t < seq_len; ++t) {
    double sum = 0.0;
    for (const StepReward& s : steps) {
      if (s.token_index >= static_cast<int>(t)) sum += s.reward;
    }
    adv[t] = sum;
  }
  return adv;
}

// (x - mean) / max(population std, floor) over one column.
inline std::vector<double> standardize(const std::vector<double>& xs, double floor) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(xs.size()));
  if (sd < floor) sd = floor;
  std::vector<double> out;
  for (double x : xs) out.push_back((x - mean) / sd);
  return out;
}

// Central finite differences of a scalar function over every coordinate.
inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double plus = f(x);
    x[i] = saved - h;
    const double minus = f(x);
    x[i] = saved;
    g[i] = (plus - minus) / (2.0 * h);
  }
  return g;
}

// Worst |a - n| / max(|a|, |n|, floor) across coordinates.
inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                 double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

// log softmax computed directly from a logit row, for objective re-derivation.
inline double log_softmax_at(std::span<const double> row, int token) {
  double z = 0.0;
  for (double l : row) z += std::exp(l);
  return row[static_cast<std::size_t>(token)] - std::log(z);
}

}  // namespace rimr::testing
