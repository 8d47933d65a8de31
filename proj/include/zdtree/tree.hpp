#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <tbb/concurrent_queue.h>
#include <tbb/concurrent_vector.h>

#include "zdtree/morton.hpp"

namespace zdtree {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr std::size_t kDefaultLeafCutoff = 16;

/// One zd-tree node. Internal nodes have both children set and a split bit;
/// leaves own their points in Morton order.
struct ZdNode {
  GridBox box;
  NodeId parent = kNoNode;
  NodeId left = kNoNode;
  NodeId right = kNoNode;
  int split_bit = -1;
  std::size_t count = 0;  // points in the subtree
  std::vector<QuantizedPoint> points;

  bool is_leaf() const { return left == kNoNode; }
};

struct ValidationReport {
  bool ok = true;
  std::string violation;

  explicit operator bool() const { return ok; }
};

struct TreeStats {
  std::size_t internal_nodes = 0;
  std::size_t leaves = 0;
  std::size_t empty_leaves = 0;
  std::size_t max_leaf_size = 0;
  int depth = 0;
};

/// kd-tree whose splits follow the Morton interleave. Nodes live in a pool
/// owned by the tree and refer to one another by index. Readers may share a
/// const tree freely; updates need exclusive access.
class ZdTree {
 public:
  ZdTree(const Quantizer& quantizer, std::size_t leaf_cutoff = kDefaultLeafCutoff);

  /// Builds from points already sorted by (key, id). Ordering is not checked.
  static ZdTree build(std::span<const QuantizedPoint> sorted_points, const Quantizer& quantizer,
                      std::size_t leaf_cutoff = kDefaultLeafCutoff);

  /// Quantizes, sorts, then builds.
  static ZdTree build_from_raw(std::span<const RawPoint> points, const Quantizer& quantizer,
                               std::size_t leaf_cutoff = kDefaultLeafCutoff);

  const Quantizer& quantizer() const { return quantizer_; }
  int dim() const { return quantizer_.dim(); }
  std::size_t leaf_cutoff() const { return leaf_cutoff_; }
  std::size_t size() const { return nodes_[root_].count; }
  bool empty() const { return size() == 0; }

  NodeId root() const { return root_; }
  const ZdNode& node(NodeId id) const { return nodes_[id]; }
  std::size_t node_count() const;

  bool contains_id(PointId id) const {
    return id < present_.size() && present_[id] != 0;
  }

  /// Leaves in Morton (in-order) sequence.
  std::vector<NodeId> leaves() const;
  /// All stored points in Morton order.
  std::vector<QuantizedPoint> flatten() const;

  int depth() const;
  TreeStats stats() const;
  ValidationReport validate() const;

 private:
  friend struct TreeMutator;
  friend struct UpdateAccess;

  NodeId alloc_node();
  void free_subtree(NodeId id);
  void build_node(NodeId id, std::span<const QuantizedPoint> pts, const GridBox& box,
                  NodeId parent);
  void mark_present(std::span<const QuantizedPoint> pts, std::uint8_t value);

  ZdNode& mut(NodeId id) { return nodes_[id]; }

  Quantizer quantizer_;
  std::size_t leaf_cutoff_;
  NodeId root_ = kNoNode;
  tbb::concurrent_vector<ZdNode> nodes_;
  tbb::concurrent_queue<NodeId> free_;
  std::vector<std::uint8_t> present_;  // indexed by point id
};

inline int tree_depth(const ZdTree& t) { return t.depth(); }
inline ValidationReport validate_tree(const ZdTree& t) { return t.validate(); }

}  // namespace zdtree
