#include "g2p/parallel.hpp"

namespace g2p {

std::vector<Chunk> partition(std::size_t n, std::size_t parts) {
  std::vector<Chunk> chunks;
  if (n == 0) return chunks;
  parts = std::clamp<std::size_t>(parts, 1, n);
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    chunks.push_back({i, begin, begin + len});
    begin += len;
  }
  return chunks;
}

}  // namespace g2p
