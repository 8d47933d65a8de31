#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "zdtree/knn_result.hpp"

namespace zdtree {

inline constexpr std::uint64_t kInfiniteRadius = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::size_t kDefaultHeapThreshold = 40;

/// Best-k candidate set. Small k keeps a sorted array; larger k switches to
/// a binary max-heap keyed on (sqdist, id).
class NeighborSet {
 public:
  explicit NeighborSet(std::size_t k, std::size_t heap_threshold = kDefaultHeapThreshold)
      : k_(k), heap_(k > heap_threshold) {
    entries_.reserve(k);
  }

  std::size_t capacity() const { return k_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() >= k_; }

  /// Squared distance of the current k-th best, or kInfiniteRadius until k
  /// candidates have been seen.
  std::uint64_t radius() const {
    if (!full() || k_ == 0) return kInfiniteRadius;
    return heap_ ? entries_.front().sqdist : entries_.back().sqdist;
  }

  /// Returns true if the candidate was kept.
  bool insert(PointId id, std::uint64_t sqdist) {
    if (k_ == 0) return false;
    const Neighbor cand{id, sqdist};
    if (heap_) {
      if (!full()) {
        entries_.push_back(cand);
        std::push_heap(entries_.begin(), entries_.end(), closer);
        return true;
      }
      if (!closer(cand, entries_.front())) return false;
      std::pop_heap(entries_.begin(), entries_.end(), closer);
      entries_.back() = cand;
      std::push_heap(entries_.begin(), entries_.end(), closer);
      return true;
    }
    if (full()) {
      if (!closer(cand, entries_.back())) return false;
      entries_.pop_back();
    }
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), cand, closer);
    entries_.insert(pos, cand);
    return true;
  }

  /// Entries ordered by (sqdist, id).
  std::vector<Neighbor> sorted() const {
    std::vector<Neighbor> out = entries_;
    if (heap_) std::sort(out.begin(), out.end(), closer);
    return out;
  }

 private:
  std::size_t k_;
  bool heap_;
  std::vector<Neighbor> entries_;
};

}  // namespace zdtree
