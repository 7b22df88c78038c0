#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace atomreg {

/// Trials are reduced in fixed-size blocks so the merge order never depends on the thread count.
inline constexpr std::uint64_t kTrialBlock = 1024;

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs `trial(index, acc)` for every index in [0, n_trials) and returns the
 * merged accumulator.
 *
 * Each block of kTrialBlock consecutive trials accumulates into a fresh copy
 * of `init`; blocks are merged in index order with `merge(into, from)`. The
 * result is bit-identical for any thread count as long as `trial` derives its
 * randomness from the index alone.
 */
template <class Acc, class TrialFn, class MergeFn>
Acc run_trials(std::uint64_t n_trials, unsigned threads, const Acc& init, TrialFn trial,
               MergeFn merge) {
  const std::uint64_t n_blocks = (n_trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<Acc> partial(n_blocks, init);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      for (std::uint64_t b = next++; b < n_blocks; b = next++) {
        const std::uint64_t begin = b * kTrialBlock;
        const std::uint64_t end = std::min(n_trials, begin + kTrialBlock);
        for (std::uint64_t i = begin; i < end; ++i) trial(i, partial[b]);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n_blocks;
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(n_blocks, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  Acc total = init;
  for (auto& p : partial) merge(total, p);
  return total;
}

}  // namespace atomreg
