#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace rimr {

// Evaluates fn(0..count-1) on up to `workers` threads and returns the results
// in index order. The first exception (by index) is rethrown after all
// workers finish.
template <typename Fn>
auto parallel_map(std::size_t count, int workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);

  const auto run = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::atomic<std::size_t> next{0};
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads <= 1 || count <= 1) {
    run(next);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(n_threads, count); ++w) pool.emplace_back([&] { run(next); });
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace rimr
