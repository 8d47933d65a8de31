#include "zdtree/tree.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>
#include <utility>

#include <tbb/parallel_for.h>
#include <tbb/parallel_reduce.h>

#include "zdtree/parallel.hpp"
#include "zdtree/sort.hpp"

namespace zdtree {

namespace {

bool bit_set(MortonKey key, int bit) { return ((key >> bit) & 1U) != 0; }

std::string describe_box(const GridBox& b, int dim) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < dim; ++i) os << (i ? "," : "") << b.lo[i] << ".." << b.hi[i];
  os << "]";
  return os.str();
}

}  // namespace

ZdTree::ZdTree(const Quantizer& quantizer, std::size_t leaf_cutoff)
    : quantizer_(quantizer), leaf_cutoff_(leaf_cutoff) {
  if (leaf_cutoff_ < 1) throw std::invalid_argument("leaf_cutoff must be at least 1");
  root_ = alloc_node();
  nodes_[root_].box = full_box(quantizer_.dim(), quantizer_.bits_per_dim());
}

ZdTree ZdTree::build(std::span<const QuantizedPoint> sorted_points, const Quantizer& quantizer,
                     std::size_t leaf_cutoff) {
  ZdTree tree(quantizer, leaf_cutoff);
  tree.build_node(tree.root_, sorted_points, tree.nodes_[tree.root_].box, kNoNode);
  tree.mark_present(sorted_points, 1);
  return tree;
}

ZdTree ZdTree::build_from_raw(std::span<const RawPoint> points, const Quantizer& quantizer,
                              std::size_t leaf_cutoff) {
  std::vector<QuantizedPoint> q(points.size());
  tbb::parallel_for(std::size_t{0}, points.size(),
                    [&](std::size_t i) { q[i] = quantizer.quantize(points[i]); });
  sort_by_morton(q, quantizer.key_bits());
  return build(q, quantizer, leaf_cutoff);
}

NodeId ZdTree::alloc_node() {
  NodeId id = kNoNode;
  if (free_.try_pop(id)) {
    nodes_[id] = ZdNode{};
    return id;
  }
  auto it = nodes_.grow_by(1);
  return static_cast<NodeId>(it - nodes_.begin());
}

void ZdTree::free_subtree(NodeId id) {
  ZdNode& n = nodes_[id];
  if (!n.is_leaf()) {
    free_subtree(n.left);
    free_subtree(n.right);
  }
  n = ZdNode{};
  free_.push(id);
}

std::size_t ZdTree::node_count() const { return nodes_.size() - free_.unsafe_size(); }

void ZdTree::build_node(NodeId id, std::span<const QuantizedPoint> pts, const GridBox& box,
                        NodeId parent) {
  ZdNode& node = nodes_[id];
  node.box = box;
  node.parent = parent;
  node.left = node.right = kNoNode;
  node.split_bit = -1;
  node.count = pts.size();

  // Leaf when small, or when every point shares one grid cell (no bit left to split on).
  if (pts.size() < leaf_cutoff_ || pts.front().key == pts.back().key) {
    node.points.assign(pts.begin(), pts.end());
    return;
  }
  std::vector<QuantizedPoint>().swap(node.points);

  // Sorted input: the highest bit where first and last differ is the first
  // non-empty cut. Skipped bits are empty cuts.
  const int bit = std::bit_width(pts.front().key ^ pts.back().key) - 1;
  const auto mid = std::partition_point(pts.begin(), pts.end(), [bit](const QuantizedPoint& p) {
    return !bit_set(p.key, bit);
  });
  const std::size_t split = static_cast<std::size_t>(mid - pts.begin());
  // Only unsorted input gets here; stop rather than recurse on the same range.
  if (split == 0 || split == pts.size()) {
    node.points.assign(pts.begin(), pts.end());
    return;
  }

  const int dim = quantizer_.dim();
  const int bits = quantizer_.bits_per_dim();
  const MortonKey one = MortonKey{1} << bit;
  const GridBox left_box = prefix_box(pts.front().key & ~one, bit, dim, bits);
  const GridBox right_box = prefix_box(pts.front().key | one, bit, dim, bits);

  const NodeId l = alloc_node();
  const NodeId r = alloc_node();
  node.left = l;
  node.right = r;
  node.split_bit = bit;
  fork_join(
      pts.size() >= kParallelGrain, [&] { build_node(l, pts.first(split), left_box, id); },
      [&] { build_node(r, pts.subspan(split), right_box, id); });
}

void ZdTree::mark_present(std::span<const QuantizedPoint> pts, std::uint8_t value) {
  if (pts.empty()) return;
  const PointId max_id = tbb::parallel_reduce(
      tbb::blocked_range<std::size_t>(0, pts.size()), PointId{0},
      [&](const tbb::blocked_range<std::size_t>& r, PointId acc) {
        for (std::size_t i = r.begin(); i < r.end(); ++i) acc = std::max(acc, pts[i].id);
        return acc;
      },
      [](PointId a, PointId b) { return std::max(a, b); });
  if (present_.size() <= max_id) present_.resize(std::size_t{max_id} + 1, 0);
  tbb::parallel_for(std::size_t{0}, pts.size(),
                    [&](std::size_t i) { present_[pts[i].id] = value; });
}

std::vector<NodeId> ZdTree::leaves() const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const ZdNode& n = nodes_[id];
    if (n.is_leaf()) {
      out.push_back(id);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return out;
}

std::vector<QuantizedPoint> ZdTree::flatten() const {
  const auto leaf_ids = leaves();
  std::vector<std::size_t> offsets(leaf_ids.size() + 1, 0);
  for (std::size_t i = 0; i < leaf_ids.size(); ++i) {
    offsets[i + 1] = offsets[i] + nodes_[leaf_ids[i]].points.size();
  }
  std::vector<QuantizedPoint> out(offsets.back());
  tbb::parallel_for(std::size_t{0}, leaf_ids.size(), [&](std::size_t i) {
    const auto& pts = nodes_[leaf_ids[i]].points;
    std::copy(pts.begin(), pts.end(), out.begin() + static_cast<std::ptrdiff_t>(offsets[i]));
  });
  return out;
}

int ZdTree::depth() const { return stats().depth; }

TreeStats ZdTree::stats() const {
  TreeStats s;
  std::vector<std::pair<NodeId, int>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    const ZdNode& n = nodes_[id];
    s.depth = std::max(s.depth, d);
    if (n.is_leaf()) {
      ++s.leaves;
      if (n.points.empty()) ++s.empty_leaves;
      s.max_leaf_size = std::max(s.max_leaf_size, n.points.size());
    } else {
      ++s.internal_nodes;
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return s;
}

ValidationReport ZdTree::validate() const {
  const int dim = quantizer_.dim();
  const int bits = quantizer_.bits_per_dim();
  auto fail = [](std::string msg) { return ValidationReport{false, std::move(msg)}; };

  if (root_ >= nodes_.size()) return fail("root index out of range");
  const ZdNode& root = nodes_[root_];
  if (root.parent != kNoNode) return fail("root has a parent");
  if (root.box != full_box(dim, bits)) return fail("root box does not span the full grid");

  struct Frame {
    NodeId id;
    int parent_bit;  // bits >= parent_bit are fixed by the node's box
  };
  std::vector<Frame> stack{{root_, dim * bits}};
  const QuantizedPoint* prev = nullptr;
  std::size_t leaf_total = 0;

  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const ZdNode& n = nodes_[f.id];
    auto where = [&] { return "node " + std::to_string(f.id) + " " + describe_box(n.box, dim); };

    if (n.is_leaf()) {
      if (n.right != kNoNode || n.split_bit != -1) return fail(where() + ": malformed leaf");
      if (n.count != n.points.size()) return fail(where() + ": leaf count mismatch");
      if (n.points.size() >= leaf_cutoff_ &&
          n.points.front().key != n.points.back().key) {
        return fail(where() + ": leaf holds " + std::to_string(n.points.size()) +
                    " points, cutoff " + std::to_string(leaf_cutoff_));
      }
      if (n.points.empty() && f.id != root_) return fail(where() + ": empty non-root leaf");
      for (const auto& p : n.points) {
        if (p.key != morton_encode(p.grid, dim, bits)) {
          return fail(where() + ": point " + std::to_string(p.id) + " has a stale key");
        }
        if (!box_contains(n.box, p, dim)) {
          return fail(where() + ": point " + std::to_string(p.id) + " lies outside its leaf box");
        }
        if (prev != nullptr && !morton_less(*prev, p)) {
          return fail(where() + ": point " + std::to_string(p.id) + " breaks Morton order");
        }
        if (!contains_id(p.id)) {
          return fail(where() + ": point " + std::to_string(p.id) + " missing from id registry");
        }
        prev = &p;
      }
      leaf_total += n.points.size();
      continue;
    }

    if (n.right == kNoNode) return fail(where() + ": internal node missing a child");
    if (!n.points.empty()) return fail(where() + ": internal node holds points");
    if (n.split_bit < 0 || n.split_bit >= f.parent_bit) {
      return fail(where() + ": split bit " + std::to_string(n.split_bit) +
                  " not below parent bit " + std::to_string(f.parent_bit));
    }
    const ZdNode& l = nodes_[n.left];
    const ZdNode& r = nodes_[n.right];
    if (l.parent != f.id || r.parent != f.id) return fail(where() + ": inconsistent parent link");
    if (n.count != l.count + r.count) return fail(where() + ": subtree count mismatch");
    if (l.count == 0 || r.count == 0) return fail(where() + ": empty child (uncollapsed empty cut)");
    if (n.count < leaf_cutoff_) return fail(where() + ": internal node below leaf cutoff");
    if (!box_contains(n.box, l.box, dim) || !box_contains(n.box, r.box, dim)) {
      return fail(where() + ": child box escapes parent box");
    }
    const MortonKey one = MortonKey{1} << n.split_bit;
    const MortonKey lo_key = morton_encode(l.box.lo, dim, bits);
    if (l.box != prefix_box(lo_key & ~one, n.split_bit, dim, bits) ||
        r.box != prefix_box(lo_key | one, n.split_bit, dim, bits)) {
      return fail(where() + ": child boxes are not the halves of split bit " +
                  std::to_string(n.split_bit));
    }
    // With no skipped bits the two halves must tile the parent exactly.
    if (n.split_bit == f.parent_bit - 1) {
      const int axis = axis_of_bit(n.split_bit, dim);
      GridBox joined = l.box;
      joined.hi[axis] = r.box.hi[axis];
      if (joined != n.box || l.box.hi[axis] + 1 != r.box.lo[axis]) {
        return fail(where() + ": children do not partition the parent box");
      }
    }
    stack.push_back({n.right, n.split_bit});
    stack.push_back({n.left, n.split_bit});
  }

  if (leaf_total != root.count) return fail("size does not equal the sum of leaf sizes");
  const auto registered =
      static_cast<std::size_t>(std::count(present_.begin(), present_.end(), std::uint8_t{1}));
  if (registered != leaf_total) return fail("id registry disagrees with stored points");
  return {};
}

}  // namespace zdtree
