#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zdtree/morton.hpp"
#include "zdtree/tree.hpp"

namespace zdtree {

enum class UpdateOp { Insert, Delete };

/// Points sorted by (key, id), quantized with the tree's quantizer.
struct UpdateBatch {
  std::vector<QuantizedPoint> points;
  UpdateOp op = UpdateOp::Insert;

  /// Sorts `points` into Morton order.
  static UpdateBatch make(std::vector<QuantizedPoint> points, UpdateOp op, int key_bits);
  /// Quantizes and sorts; throws OutOfUniverse before producing anything.
  static UpdateBatch from_raw(std::span<const RawPoint> points, const Quantizer& q, UpdateOp op);
};

/// Rejected insert batch. The tree is untouched when this is thrown.
class InvalidBatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inserts a sorted batch. The resulting leaves match a fresh build over the
/// union. Throws InvalidBatch (no mutation) on unsorted input, foreign grid
/// values, or ids that repeat within the batch or already exist in the tree.
void batch_insert(ZdTree& tree, std::span<const QuantizedPoint> sorted_batch);
inline void batch_insert(ZdTree& tree, const UpdateBatch& batch) {
  batch_insert(tree, batch.points);
}

struct DeleteSummary {
  std::size_t removed = 0;
  /// Ids not found at the given position, ascending.
  std::vector<PointId> missing;
};

/// Removes each point matched by (position, id). Absent entries are reported,
/// present ones are removed. Subtrees that drop below the leaf cutoff
/// collapse into one leaf; emptied halves are spliced out.
DeleteSummary batch_delete(ZdTree& tree, std::span<const QuantizedPoint> sorted_batch);
inline DeleteSummary batch_delete(ZdTree& tree, const UpdateBatch& batch) {
  return batch_delete(tree, batch.points);
}

struct UpdateCostRow {
  std::size_t batch_size = 0;
  double insert_s_per_pt = 0.0;
  double delete_s_per_pt = 0.0;
};

struct UpdateCostConfig {
  std::size_t n_base = 1'000'000;
  int dim = 2;
  std::size_t leaf_cutoff = kDefaultLeafCutoff;
  std::uint64_t seed = 0;
  int repetitions = 3;  // median over these, after one discarded warm-up
};

/// Times batch insert and batch delete (including quantize and sort) for each
/// batch size against a base tree of uniform points. Each insert is undone by
/// the matching delete so every repetition starts from the same tree.
std::vector<UpdateCostRow> update_cost_probe(const UpdateCostConfig& config,
                                             std::span<const std::size_t> batch_sizes);

}  // namespace zdtree
