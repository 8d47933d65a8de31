#include "zdtree/knn.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include <tbb/parallel_for.h>
#include <tbb/parallel_sort.h>

#include "zdtree/sort.hpp"

namespace zdtree {

namespace {

using Wide = unsigned __int128;

// Squared distance from the query to a box center, both scaled by two so the
// center stays integral.
Wide doubled_center_sqdist(const QuantizedPoint& q, const GridBox& box, int dim) {
  Wide sum = 0;
  for (int i = 0; i < dim; ++i) {
    const std::int64_t twice_q = 2 * static_cast<std::int64_t>(q.grid[i]);
    const std::int64_t twice_c =
        static_cast<std::int64_t>(box.lo[i]) + static_cast<std::int64_t>(box.hi[i]);
    const std::int64_t diff = twice_q - twice_c;
    const auto mag = static_cast<std::uint64_t>(diff < 0 ? -diff : diff);
    sum += static_cast<Wide>(mag) * mag;
  }
  return sum;
}

template <bool Count>
class Searcher {
 public:
  Searcher(const ZdTree& tree, const QuantizedPoint& query, NeighborSet& set,
           std::optional<PointId> exclude)
      : tree_(tree), query_(query), set_(set), exclude_(exclude), dim_(tree.dim()) {}

  void down(NodeId id) {
    if constexpr (Count) ++visits_;
    const ZdNode& node = tree_.node(id);
    if (box_sqdist(query_, node.box, dim_) > set_.radius()) return;
    if (node.is_leaf()) {
      for (const auto& p : node.points) {
        if (exclude_ && p.id == *exclude_) continue;
        const std::uint64_t d = point_sqdist(query_, p, dim_);
        if (d <= set_.radius()) set_.insert(p.id, d);
      }
      return;
    }
    const Wide dl = doubled_center_sqdist(query_, tree_.node(node.left).box, dim_);
    const Wide dr = doubled_center_sqdist(query_, tree_.node(node.right).box, dim_);
    if (dl <= dr) {
      down(node.left);
      down(node.right);
    } else {
      down(node.right);
      down(node.left);
    }
  }

  // Seeds from `start` (any node), then climbs while the candidate ball can
  // reach outside the current node's box.
  void up(NodeId start) {
    down(start);
    NodeId cur = start;
    while (true) {
      const ZdNode& node = tree_.node(cur);
      if (node.parent == kNoNode) break;
      if (box_contains(node.box, query_, dim_) &&
          box_interior_sqdist(query_, node.box, dim_) >= set_.radius()) {
        break;
      }
      const ZdNode& parent = tree_.node(node.parent);
      down(parent.left == cur ? parent.right : parent.left);
      cur = node.parent;
    }
  }

  std::uint64_t visits() const { return visits_; }

 private:
  const ZdTree& tree_;
  const QuantizedPoint& query_;
  NeighborSet& set_;
  std::optional<PointId> exclude_;
  int dim_;
  std::uint64_t visits_ = 0;
};

template <class Body>
KnnResult run_query(const ZdTree& tree, const QuantizedPoint& query, std::size_t k,
                    const QueryOptions& opts, Body&& body) {
  NeighborSet set(k, opts.heap_threshold);
  if (opts.stats != nullptr) {
    Searcher<true> s(tree, query, set, opts.exclude);
    body(s);
    opts.stats->visits += s.visits();
  } else {
    Searcher<false> s(tree, query, set, opts.exclude);
    body(s);
  }
  return KnnResult{query.id, set.sorted()};
}

void check_k(std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
}

// Deepest node on the Morton-bit path whose box still contains the query.
NodeId locate_containing(const ZdTree& tree, const QuantizedPoint& query) {
  const int dim = tree.dim();
  NodeId id = tree.root();
  while (!tree.node(id).is_leaf()) {
    const ZdNode& n = tree.node(id);
    const NodeId next = ((query.key >> n.split_bit) & 1U) != 0 ? n.right : n.left;
    if (!box_contains(tree.node(next).box, query, dim)) break;
    id = next;
  }
  return id;
}

KnnResult run_variant(const ZdTree& tree, NodeId leaf, const QuantizedPoint& q, std::size_t k,
                      Variant v, const QueryOptions& opts) {
  switch (v) {
    case Variant::Root:
      return knn_root(tree, q, k, opts);
    case Variant::Leaf:
      if (leaf != kNoNode) return search_up(tree, leaf, q, k, opts);
      return knn_bit(tree, q, k, opts);
    case Variant::Bit:
      return knn_bit(tree, q, k, opts);
  }
  throw std::logic_error("unknown variant");
}

VisitSummary summarize(const std::vector<std::uint64_t>& visits) {
  VisitSummary s;
  s.queries = visits.size();
  if (visits.empty()) return s;
  s.max = *std::max_element(visits.begin(), visits.end());
  s.mean = static_cast<double>(std::accumulate(visits.begin(), visits.end(), std::uint64_t{0})) /
           static_cast<double>(visits.size());
  return s;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  if (name == "root") return Variant::Root;
  if (name == "leaf") return Variant::Leaf;
  if (name == "bit") return Variant::Bit;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (root|leaf|bit)");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Root: return "root";
    case Variant::Leaf: return "leaf";
    case Variant::Bit: return "bit";
  }
  return "?";
}

void search_down(const ZdTree& tree, NodeId node, const QuantizedPoint& query, NeighborSet& set,
                 std::optional<PointId> exclude, QueryStats* stats) {
  if (stats != nullptr) {
    Searcher<true> s(tree, query, set, exclude);
    s.down(node);
    stats->visits += s.visits();
  } else {
    Searcher<false> s(tree, query, set, exclude);
    s.down(node);
  }
}

KnnResult knn_root(const ZdTree& tree, const QuantizedPoint& query, std::size_t k,
                   const QueryOptions& opts) {
  check_k(k);
  return run_query(tree, query, k, opts, [&](auto& s) { s.down(tree.root()); });
}

KnnResult search_up(const ZdTree& tree, NodeId leaf, const QuantizedPoint& query, std::size_t k,
                    const QueryOptions& opts) {
  check_k(k);
  if (!tree.node(leaf).is_leaf()) throw std::invalid_argument("search_up: node is not a leaf");
  if (!box_contains(tree.node(leaf).box, query, tree.dim())) {
    throw std::invalid_argument("search_up: query lies outside the leaf box");
  }
  return run_query(tree, query, k, opts, [&](auto& s) { s.up(leaf); });
}

NodeId locate_leaf(const ZdTree& tree, const QuantizedPoint& query) {
  NodeId id = tree.root();
  while (!tree.node(id).is_leaf()) {
    const ZdNode& n = tree.node(id);
    id = ((query.key >> n.split_bit) & 1U) != 0 ? n.right : n.left;
  }
  return id;
}

KnnResult knn_bit(const ZdTree& tree, const QuantizedPoint& query, std::size_t k,
                  const QueryOptions& opts) {
  check_k(k);
  const NodeId start = locate_containing(tree, query);
  return run_query(tree, query, k, opts, [&](auto& s) { s.up(start); });
}

std::vector<KnnResult> knn_graph(const ZdTree& tree, std::size_t k, const BatchOptions& opts) {
  check_k(k);
  const auto leaves = tree.leaves();
  std::vector<std::size_t> offsets(leaves.size() + 1, 0);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    offsets[i + 1] = offsets[i] + tree.node(leaves[i]).points.size();
  }
  std::vector<KnnResult> results(offsets.back());
  std::vector<std::uint64_t> visits(opts.visits != nullptr ? results.size() : 0);

  // Leaves are in Morton order, so each chunk is a spatially coherent run.
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, leaves.size()),
                    [&](const tbb::blocked_range<std::size_t>& r) {
                      for (std::size_t li = r.begin(); li < r.end(); ++li) {
                        const NodeId leaf = leaves[li];
                        const auto& pts = tree.node(leaf).points;
                        for (std::size_t j = 0; j < pts.size(); ++j) {
                          const std::size_t slot = offsets[li] + j;
                          QueryStats qs;
                          QueryOptions qo;
                          qo.exclude = pts[j].id;
                          qo.heap_threshold = opts.heap_threshold;
                          qo.stats = opts.visits != nullptr ? &qs : nullptr;
                          results[slot] = run_variant(tree, leaf, pts[j], k, opts.variant, qo);
                          if (opts.visits != nullptr) visits[slot] = qs.visits;
                        }
                      }
                    });

  if (opts.visits != nullptr) *opts.visits = summarize(visits);
  tbb::parallel_sort(results.begin(), results.end(),
                     [](const KnnResult& a, const KnnResult& b) { return a.query < b.query; });
  return results;
}

std::vector<KnnResult> knn_batch(const ZdTree& tree, std::span<const QuantizedPoint> queries,
                                 std::size_t k, const BatchOptions& opts) {
  check_k(k);
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (opts.presort && queries.size() > 1) {
    std::vector<QuantizedPoint> keyed(queries.begin(), queries.end());
    for (std::size_t i = 0; i < keyed.size(); ++i) keyed[i].id = static_cast<PointId>(i);
    sort_by_morton(keyed, tree.quantizer().key_bits());
    for (std::size_t i = 0; i < keyed.size(); ++i) order[i] = keyed[i].id;
  }

  std::vector<KnnResult> results(queries.size());
  std::vector<std::uint64_t> visits(opts.visits != nullptr ? queries.size() : 0);
  const Variant v = opts.variant == Variant::Leaf ? Variant::Bit : opts.variant;
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, order.size()),
                    [&](const tbb::blocked_range<std::size_t>& r) {
                      for (std::size_t i = r.begin(); i < r.end(); ++i) {
                        const std::size_t slot = order[i];
                        QueryStats qs;
                        QueryOptions qo;
                        qo.heap_threshold = opts.heap_threshold;
                        qo.stats = opts.visits != nullptr ? &qs : nullptr;
                        results[slot] = run_variant(tree, kNoNode, queries[slot], k, v, qo);
                        if (opts.visits != nullptr) visits[slot] = qs.visits;
                      }
                    });
  if (opts.visits != nullptr) *opts.visits = summarize(visits);
  return results;
}

}  // namespace zdtree
