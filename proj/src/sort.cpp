#include "zdtree/sort.hpp"

#include <algorithm>
#include <cstdint>

#include <tbb/parallel_for.h>

namespace zdtree {

namespace {

constexpr int kDigitBits = 11;
constexpr std::size_t kBuckets = std::size_t{1} << kDigitBits;
constexpr std::size_t kSmallSort = 2048;
constexpr std::size_t kBlockSize = 16384;

}  // namespace

void sort_by_morton(std::vector<QuantizedPoint>& points, int key_bits) {
  const std::size_t n = points.size();
  if (n < kSmallSort) {
    std::sort(points.begin(), points.end(), morton_less);
    return;
  }

  const std::size_t blocks = std::clamp<std::size_t>(n / kBlockSize, 1, 256);
  const std::size_t per_block = (n + blocks - 1) / blocks;
  std::vector<QuantizedPoint> scratch(n);
  std::vector<std::size_t> counts(blocks * kBuckets);
  auto* src = &points;
  auto* dst = &scratch;

  for (int shift = 0; shift < key_bits; shift += kDigitBits) {
    auto digit = [shift](const QuantizedPoint& p) {
      return static_cast<std::size_t>((p.key >> shift) & (kBuckets - 1));
    };
    std::fill(counts.begin(), counts.end(), 0);
    tbb::parallel_for(std::size_t{0}, blocks, [&](std::size_t b) {
      const std::size_t begin = b * per_block;
      const std::size_t end = std::min(n, begin + per_block);
      std::size_t* hist = &counts[b * kBuckets];
      for (std::size_t i = begin; i < end; ++i) ++hist[digit((*src)[i])];
    });

    // Skip passes where every key shares the digit.
    bool trivial = false;
    for (std::size_t d = 0; d < kBuckets && !trivial; ++d) {
      std::size_t total = 0;
      for (std::size_t b = 0; b < blocks; ++b) total += counts[b * kBuckets + d];
      if (total == n) trivial = true;
      if (total != 0) break;
    }
    if (trivial) continue;

    std::size_t running = 0;
    for (std::size_t d = 0; d < kBuckets; ++d) {
      for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t c = counts[b * kBuckets + d];
        counts[b * kBuckets + d] = running;
        running += c;
      }
    }
    tbb::parallel_for(std::size_t{0}, blocks, [&](std::size_t b) {
      const std::size_t begin = b * per_block;
      const std::size_t end = std::min(n, begin + per_block);
      std::size_t* offset = &counts[b * kBuckets];
      for (std::size_t i = begin; i < end; ++i) {
        const auto& p = (*src)[i];
        (*dst)[offset[digit(p)]++] = p;
      }
    });
    std::swap(src, dst);
  }
  if (src != &points) points.swap(scratch);

  // Equal keys keep input order after the stable passes; order them by id.
  std::size_t run = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || points[i].key != points[run].key) {
      if (i - run > 1) {
        std::sort(points.begin() + static_cast<std::ptrdiff_t>(run),
                  points.begin() + static_cast<std::ptrdiff_t>(i),
                  [](const QuantizedPoint& a, const QuantizedPoint& b) { return a.id < b.id; });
      }
      run = i;
    }
  }
}

bool is_morton_sorted(std::span<const QuantizedPoint> points) {
  return std::is_sorted(points.begin(), points.end(), morton_less);
}

}  // namespace zdtree
