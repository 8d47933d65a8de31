#pragma once

#include <cstdint>
#include <vector>

#include "zdtree/morton.hpp"

namespace zdtree {

struct Neighbor {
  PointId id = 0;
  std::uint64_t sqdist = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Candidate order: nearer first, smaller id on ties.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sqdist != b.sqdist ? a.sqdist < b.sqdist : a.id < b.id;
}

/// Neighbors of one query, ordered by (sqdist, id).
struct KnnResult {
  PointId query = 0;
  std::vector<Neighbor> neighbors;

  friend bool operator==(const KnnResult&, const KnnResult&) = default;
};

}  // namespace zdtree
