#pragma once

#include <span>
#include <vector>

#include "zdtree/morton.hpp"

namespace zdtree {

/// Parallel LSD radix sort on the cached Morton key, ties ordered by id.
/// `key_bits` bounds the significant key bits (dim * bits_per_dim).
void sort_by_morton(std::vector<QuantizedPoint>& points, int key_bits);

bool is_morton_sorted(std::span<const QuantizedPoint> points);

}  // namespace zdtree
