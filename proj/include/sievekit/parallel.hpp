#pragma once

// Deterministic parallel fold over [0, n). The index range is cut into
// fixed-size blocks that do not depend on the worker count; workers claim
// blocks from an atomic cursor and block results are combined in block
// order on the calling thread. Output is therefore identical for any
// parallelism degree, even for non-commutative combines.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace sievekit {

inline constexpr std::uint64_t kParallelBlock = 4096;

/// fold(acc, i) accumulates index i into a block accumulator that starts as
/// `init`; combine(total, block_acc) merges blocks in order.
template <typename Acc, typename Fold, typename Combine>
Acc parallel_fold(std::uint64_t n, unsigned workers, const Acc &init, Fold fold,
                  Combine combine) {
  const std::uint64_t blocks = (n + kParallelBlock - 1) / kParallelBlock;
  std::vector<std::optional<Acc>> partial(blocks);
  std::atomic<std::uint64_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    try {
      for (;;) {
        const std::uint64_t b = cursor.fetch_add(1);
        if (b >= blocks)
          return;
        Acc acc = init;
        const std::uint64_t end = std::min(n, (b + 1) * kParallelBlock);
        for (std::uint64_t i = b * kParallelBlock; i < end; ++i)
          fold(acc, i);
        partial[b] = std::move(acc);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure)
        failure = std::current_exception();
      cursor = blocks;
    }
  };

  workers = std::max(1u, workers);
  if (workers == 1 || blocks <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    const auto count = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));
    for (unsigned t = 0; t < count; ++t)
      pool.emplace_back(work);
  }
  if (failure)
    std::rethrow_exception(failure);

  Acc total = init;
  for (auto &p : partial)
    combine(total, *p);
  return total;
}

} // namespace sievekit
