#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hessiancone {

/// Number of workers for node-local loops. HESSIANCONE_THREADS caps it.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HESSIANCONE_THREADS")) {
    try {
      long cap = std::stol(env);
      if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    } catch (...) {
    }
  }
  return hw;
}

/// Calls body(begin, end) on contiguous chunks of [0, count). The chunking is
/// a pure function of count and the worker count, so results that only depend
/// on per-index work are reproducible.
template <class Body>
void parallel_chunks(std::size_t count, Body&& body, std::size_t min_chunk = 4096) {
  const unsigned workers = worker_count();
  if (workers <= 1 || count < 2 * min_chunk) {
    body(std::size_t{0}, count);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, (count + min_chunk - 1) / min_chunk);
  const std::size_t step = (count + chunks - 1) / chunks;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * step;
    const std::size_t hi = std::min(count, lo + step);
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  parallel_chunks(count, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) body(i);
  });
}

/// Sum of term(i) over [0, count) with a fixed blocking, independent of the
/// number of workers, so the floating-point result is reproducible.
template <class Term>
double deterministic_sum(std::size_t count, Term&& term) {
  constexpr std::size_t kBlock = 8192;
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_chunks(
      blocks,
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b) {
          double s = 0.0;
          const std::size_t end = std::min(count, (b + 1) * kBlock);
          for (std::size_t i = b * kBlock; i < end; ++i) s += term(i);
          partial[b] = s;
        }
      },
      1);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace hessiancone
