#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace g2p {

/// Half-open [begin, end) slice of a static partition.
struct Chunk {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Static partition of [0, n) into at most `parts` contiguous chunks of
/// near-equal size. Depends only on (n, parts).
[[nodiscard]] std::vector<Chunk> partition(std::size_t n, std::size_t parts);

/// Runs fn(chunk) for every chunk of partition(n, threads) on up to `threads`
/// threads. The first exception thrown by a worker is rethrown after all join.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t threads, Fn&& fn) {
  const auto chunks = partition(n, std::max<std::size_t>(threads, 1));
  if (chunks.size() <= 1) {
    for (const auto& c : chunks) fn(c);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks.size());
  {
    std::vector<std::jthread> workers;
    workers.reserve(chunks.size());
    for (const auto& c : chunks) {
      workers.emplace_back([&fn, &errors, c] {
        try {
          fn(c);
        } catch (...) {
          errors[c.index] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace g2p
