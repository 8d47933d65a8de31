#include "zdtree/dynamic.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <string>

#include <tbb/concurrent_vector.h>
#include <tbb/parallel_for.h>

#include "zdtree/datagen.hpp"
#include "zdtree/parallel.hpp"
#include "zdtree/sort.hpp"
#include "zdtree/timing.hpp"

namespace zdtree {

UpdateBatch UpdateBatch::make(std::vector<QuantizedPoint> points, UpdateOp op, int key_bits) {
  sort_by_morton(points, key_bits);
  return UpdateBatch{std::move(points), op};
}

UpdateBatch UpdateBatch::from_raw(std::span<const RawPoint> points, const Quantizer& q,
                                  UpdateOp op) {
  std::vector<QuantizedPoint> out(points.size());
  if (points.size() >= kParallelGrain) {
    tbb::parallel_for(std::size_t{0}, points.size(),
                      [&](std::size_t i) { out[i] = q.quantize(points[i]); });
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = q.quantize(points[i]);
  }
  return make(std::move(out), op, q.key_bits());
}

namespace {

using Span = std::span<const QuantizedPoint>;

bool bit_set(MortonKey key, int bit) { return ((key >> bit) & 1U) != 0; }

std::size_t split_at_bit(Span pts, int bit) {
  return static_cast<std::size_t>(
      std::partition_point(pts.begin(), pts.end(),
                           [bit](const QuantizedPoint& p) { return !bit_set(p.key, bit); }) -
      pts.begin());
}

MortonKey above_bit_mask(int bit) { return ~((MortonKey{2} << bit) - 1); }

}  // namespace

/// Friend of ZdTree carrying the recursive update passes.
struct UpdateAccess {
  ZdTree& tree;
  tbb::concurrent_vector<PointId> missing{};

  // Key with the node's fixed bits above its split bit, split bit cleared.
  MortonKey node_prefix(const ZdNode& n) const {
    return morton_encode(tree.node(n.left).box.lo, tree.dim(), tree.quantizer().bits_per_dim());
  }

  GridBox box_at(MortonKey key, int bit) const {
    return prefix_box(key, bit, tree.dim(), tree.quantizer().bits_per_dim());
  }

  void reparent_children(NodeId id) {
    ZdNode& n = tree.mut(id);
    if (n.is_leaf()) return;
    tree.mut(n.left).parent = id;
    tree.mut(n.right).parent = id;
  }

  void insert(NodeId id, Span batch) {
    if (batch.empty()) return;
    ZdNode& node = tree.mut(id);

    if (node.is_leaf()) {
      std::vector<QuantizedPoint> merged(node.points.size() + batch.size());
      std::merge(node.points.begin(), node.points.end(), batch.begin(), batch.end(),
                 merged.begin(), morton_less);
      if (merged.size() < tree.leaf_cutoff()) {
        node.points = std::move(merged);
        node.count = node.points.size();
        return;
      }
      // Split the leaf by rebuilding its region from the merged points.
      const GridBox box = node.box;
      tree.build_node(id, merged, box, node.parent);
      return;
    }

    const int bit = node.split_bit;
    const MortonKey prefix = node_prefix(node);
    const MortonKey diff =
        ((batch.front().key ^ prefix) | (batch.back().key ^ prefix)) & above_bit_mask(bit);

    if (diff == 0) {
      const std::size_t mid = split_at_bit(batch, bit);
      node.count += batch.size();
      const NodeId l = node.left;
      const NodeId r = node.right;
      fork_join(
          batch.size() >= kParallelGrain, [&] { insert(l, batch.first(mid)); },
          [&] { insert(r, batch.subspan(mid)); });
      return;
    }

    // The batch fills a cut that was empty until now: a new branch at the
    // highest differing bit takes this slot, the old subtree moves below it.
    const int branch_bit = std::bit_width(diff) - 1;
    const bool old_side = bit_set(prefix, branch_bit);
    const NodeId old_id = tree.alloc_node();
    const NodeId fresh_id = tree.alloc_node();

    ZdNode& old = tree.mut(old_id);
    old = std::move(tree.mut(id));
    reparent_children(old_id);

    ZdNode& branch = tree.mut(id);
    branch = ZdNode{};
    branch.box = old.box;
    branch.parent = old.parent;
    branch.split_bit = branch_bit;
    branch.count = old.count + batch.size();
    branch.left = old_side ? fresh_id : old_id;
    branch.right = old_side ? old_id : fresh_id;

    old.parent = id;
    old.box = box_at(prefix, branch_bit);
    const GridBox fresh_box = box_at(prefix ^ (MortonKey{1} << branch_bit), branch_bit);

    const std::size_t mid = split_at_bit(batch, branch_bit);
    const Span same = old_side ? batch.subspan(mid) : batch.first(mid);
    const Span other = old_side ? batch.first(mid) : batch.subspan(mid);
    fork_join(
        batch.size() >= kParallelGrain, [&] { insert(old_id, same); },
        [&] { tree.build_node(fresh_id, other, fresh_box, id); });
  }

  std::size_t erase(NodeId id, Span batch) {
    if (batch.empty()) return 0;
    ZdNode& node = tree.mut(id);

    if (node.is_leaf()) return erase_from_leaf(node, batch);

    const int bit = node.split_bit;
    const MortonKey mask = above_bit_mask(bit);
    const MortonKey prefix = node_prefix(node) & mask;
    auto first_in = std::partition_point(batch.begin(), batch.end(), [&](const QuantizedPoint& p) {
      return (p.key & mask) < prefix;
    });
    auto last_in = std::partition_point(first_in, batch.end(), [&](const QuantizedPoint& p) {
      return (p.key & mask) == prefix;
    });
    for (auto it = batch.begin(); it != first_in; ++it) missing.push_back(it->id);
    for (auto it = last_in; it != batch.end(); ++it) missing.push_back(it->id);

    const Span inside(first_in, last_in);
    const std::size_t mid = split_at_bit(inside, bit);
    std::size_t removed_left = 0;
    std::size_t removed_right = 0;
    const NodeId l = node.left;
    const NodeId r = node.right;
    fork_join(
        inside.size() >= kParallelGrain, [&] { removed_left = erase(l, inside.first(mid)); },
        [&] { removed_right = erase(r, inside.subspan(mid)); });

    const std::size_t removed = removed_left + removed_right;
    if (removed == 0) return 0;
    node.count -= removed;

    if (node.count < tree.leaf_cutoff()) {
      collapse(id);
    } else if (tree.node(l).count == 0 || tree.node(r).count == 0) {
      splice(id, tree.node(l).count == 0 ? r : l, tree.node(l).count == 0 ? l : r);
    }
    return removed;
  }

  std::size_t erase_from_leaf(ZdNode& leaf, Span batch) {
    std::vector<QuantizedPoint> kept;
    kept.reserve(leaf.points.size());
    std::size_t removed = 0;
    auto it = leaf.points.begin();
    for (const auto& target : batch) {
      while (it != leaf.points.end() && morton_less(*it, target)) kept.push_back(*it++);
      if (it != leaf.points.end() && it->id == target.id && it->key == target.key) {
        tree.present_[it->id] = 0;
        ++it;
        ++removed;
      } else {
        missing.push_back(target.id);
      }
    }
    kept.insert(kept.end(), it, leaf.points.end());
    leaf.points = std::move(kept);
    leaf.count = leaf.points.size();
    return removed;
  }

  void gather(NodeId id, std::vector<QuantizedPoint>& out) const {
    const ZdNode& n = tree.node(id);
    if (n.is_leaf()) {
      out.insert(out.end(), n.points.begin(), n.points.end());
      return;
    }
    gather(n.left, out);
    gather(n.right, out);
  }

  void collapse(NodeId id) {
    ZdNode& node = tree.mut(id);
    std::vector<QuantizedPoint> pts;
    pts.reserve(node.count);
    gather(node.left, pts);
    gather(node.right, pts);
    tree.free_subtree(node.left);
    tree.free_subtree(node.right);
    node.left = node.right = kNoNode;
    node.split_bit = -1;
    node.points = std::move(pts);
    node.count = node.points.size();
  }

  // Replaces `id` by its only non-empty child, keeping id's box and parent.
  void splice(NodeId id, NodeId survivor, NodeId dead) {
    tree.free_subtree(dead);
    ZdNode& node = tree.mut(id);
    const GridBox box = node.box;
    const NodeId parent = node.parent;
    node = std::move(tree.mut(survivor));
    node.box = box;
    node.parent = parent;
    reparent_children(id);
    tree.mut(survivor) = ZdNode{};
    tree.free_.push(survivor);
  }

  void check_insert(Span batch) {
    const int dim = tree.dim();
    const int bits = tree.quantizer().bits_per_dim();
    const Coord gmax = tree.quantizer().grid_max();
    PointId max_id = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& p = batch[i];
      for (int a = 0; a < kMaxDim; ++a) {
        if ((a < dim && p.grid[a] > gmax) || (a >= dim && p.grid[a] != 0)) {
          throw InvalidBatch("point " + std::to_string(p.id) + " lies outside the universe grid");
        }
      }
      if (p.key != morton_encode(p.grid, dim, bits)) {
        throw InvalidBatch("point " + std::to_string(p.id) + " carries a stale Morton key");
      }
      if (i > 0 && !morton_less(batch[i - 1], p)) {
        throw InvalidBatch("insert batch is not in strict Morton order at position " +
                           std::to_string(i));
      }
      max_id = std::max(max_id, p.id);
    }
    auto& present = tree.present_;
    if (present.size() <= max_id) present.resize(std::size_t{max_id} + 1, 0);
    // Claim ids one by one; roll back on the first repeat.
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (present[batch[i].id] != 0) {
        for (std::size_t j = 0; j < i; ++j) present[batch[j].id] = 0;
        throw InvalidBatch("duplicate point id " + std::to_string(batch[i].id));
      }
      present[batch[i].id] = 1;
    }
  }
};

void batch_insert(ZdTree& tree, std::span<const QuantizedPoint> sorted_batch) {
  if (sorted_batch.empty()) return;
  UpdateAccess access{tree};
  access.check_insert(sorted_batch);
  access.insert(tree.root(), sorted_batch);
}

DeleteSummary batch_delete(ZdTree& tree, std::span<const QuantizedPoint> sorted_batch) {
  DeleteSummary summary;
  if (sorted_batch.empty()) return summary;
  if (!is_morton_sorted(sorted_batch)) {
    throw InvalidBatch("delete batch is not in Morton order");
  }
  UpdateAccess access{tree};
  summary.removed = access.erase(tree.root(), sorted_batch);
  summary.missing.assign(access.missing.begin(), access.missing.end());
  std::sort(summary.missing.begin(), summary.missing.end());
  return summary;
}

std::vector<UpdateCostRow> update_cost_probe(const UpdateCostConfig& config,
                                             std::span<const std::size_t> batch_sizes) {
  const Quantizer q = unit_quantizer(config.dim, config.seed);
  const PointCloud base = gen_uniform_cube(config.n_base, config.dim, config.seed);
  ZdTree tree = ZdTree::build_from_raw(base.points, q, config.leaf_cutoff);

  std::vector<UpdateCostRow> rows;
  for (const std::size_t size : batch_sizes) {
    PointCloud extra = gen_uniform_cube(size, config.dim, config.seed + 0x9e3779b9ULL + size);
    for (auto& p : extra.points) p.id += static_cast<PointId>(config.n_base);

    std::vector<double> ins;
    std::vector<double> del;
    for (int rep = 0; rep <= config.repetitions; ++rep) {
      const Stopwatch insert_clock;
      batch_insert(tree, UpdateBatch::from_raw(extra.points, q, UpdateOp::Insert));
      const double t_ins = insert_clock.seconds();
      const Stopwatch delete_clock;
      const auto summary = batch_delete(tree, UpdateBatch::from_raw(extra.points, q, UpdateOp::Delete));
      const double t_del = delete_clock.seconds();
      if (summary.removed != size) throw std::logic_error("update probe lost points");
      if (rep == 0) continue;  // warm-up
      ins.push_back(t_ins);
      del.push_back(t_del);
    }
    const double n = static_cast<double>(std::max<std::size_t>(size, 1));
    rows.push_back({size, median(ins) / n, median(del) / n});
  }
  return rows;
}

}  // namespace zdtree
