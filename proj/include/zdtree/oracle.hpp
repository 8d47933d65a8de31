#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "zdtree/knn_result.hpp"
#include "zdtree/morton.hpp"

namespace zdtree {

/// Brute-force kNN by linear scan in grid space. Shares nothing with the tree
/// code beyond the point and result types.
KnnResult oracle_knn(std::span<const QuantizedPoint> points, const QuantizedPoint& query,
                     std::size_t k, int dim, std::optional<PointId> exclude = std::nullopt);

/// Oracle kNN graph: every point against all others, ascending query id.
std::vector<KnnResult> oracle_knn_graph(std::span<const QuantizedPoint> points, std::size_t k,
                                        int dim);

}  // namespace zdtree
