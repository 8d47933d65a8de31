#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "zdtree/morton.hpp"
#include "zdtree/neighbor_set.hpp"
#include "zdtree/tree.hpp"

namespace zdtree {

enum class Variant {
  Root,  // search down from the root
  Leaf,  // search up from the leaf holding the point
  Bit,   // locate the leaf by Morton bits, then search up
};

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

/// Per-query counter of nodes on which the prune test ran.
struct QueryStats {
  std::uint64_t visits = 0;
};

struct QueryOptions {
  /// Id skipped as a candidate (the query itself for in-set queries).
  std::optional<PointId> exclude;
  /// When set, node visits are counted into it; the uncounted path is a
  /// separate instantiation with no counting code.
  QueryStats* stats = nullptr;
  std::size_t heap_threshold = kDefaultHeapThreshold;
};

/// Downward search from `node`, refining `set` in place.
void search_down(const ZdTree& tree, NodeId node, const QuantizedPoint& query, NeighborSet& set,
                 std::optional<PointId> exclude = std::nullopt, QueryStats* stats = nullptr);

KnnResult knn_root(const ZdTree& tree, const QuantizedPoint& query, std::size_t k,
                   const QueryOptions& opts = {});

/// Upward search starting at `leaf`, which must contain the query position.
KnnResult search_up(const ZdTree& tree, NodeId leaf, const QuantizedPoint& query, std::size_t k,
                    const QueryOptions& opts = {});

/// Leaf reached by following the query's Morton bits from the root. For a
/// stored position this is the leaf holding it. A query lying in a skipped
/// (empty) cut lands in a leaf whose box does not contain it.
NodeId locate_leaf(const ZdTree& tree, const QuantizedPoint& query);

KnnResult knn_bit(const ZdTree& tree, const QuantizedPoint& query, std::size_t k,
                  const QueryOptions& opts = {});

struct VisitSummary {
  double mean = 0.0;
  std::uint64_t max = 0;
  std::size_t queries = 0;
};

struct BatchOptions {
  Variant variant = Variant::Leaf;
  std::size_t heap_threshold = kDefaultHeapThreshold;
  /// Morton-sort external queries before running them.
  bool presort = true;
  /// Fill in visit counts.
  VisitSummary* visits = nullptr;
};

/// kNN of every stored point, excluding itself, in ascending query id order.
std::vector<KnnResult> knn_graph(const ZdTree& tree, std::size_t k, const BatchOptions& opts = {});

/// kNN of external query points (no self exclusion). Output follows input order.
std::vector<KnnResult> knn_batch(const ZdTree& tree, std::span<const QuantizedPoint> queries,
                                 std::size_t k, const BatchOptions& opts = {});

}  // namespace zdtree
