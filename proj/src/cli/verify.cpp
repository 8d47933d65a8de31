#include "zdtree/cli/verify.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "zdtree/datagen.hpp"
#include "zdtree/dynamic.hpp"
#include "zdtree/knn.hpp"
#include "zdtree/oracle.hpp"
#include "zdtree/sort.hpp"
#include "zdtree/tree.hpp"

namespace zdtree::verify {

namespace {

class Recorder {
 public:
  explicit Recorder(std::string name) { result_.name = std::move(name); }

  void check(bool ok, const std::string& what) {
    ++result_.checks;
    if (ok) return;
    ++result_.failures;
    result_.passed = false;
    if (result_.detail.empty()) result_.detail = what;
  }

  PropertyResult done() { return std::move(result_); }

 private:
  PropertyResult result_;
};

std::vector<QuantizedPoint> quantize_all(const PointCloud& cloud, const Quantizer& q) {
  std::vector<QuantizedPoint> out;
  out.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.push_back(q.quantize(p));
  return out;
}

std::vector<QuantizedPoint> sorted_copy(std::vector<QuantizedPoint> pts, const Quantizer& q) {
  sort_by_morton(pts, q.key_bits());
  return pts;
}

std::string row_mismatch(std::string_view ctx, const KnnResult& got, const KnnResult& want) {
  std::ostringstream os;
  os << ctx << ": query " << want.query << " got [";
  for (const auto& nb : got.neighbors) os << nb.id << ":" << nb.sqdist << " ";
  os << "] want [";
  for (const auto& nb : want.neighbors) os << nb.id << ":" << nb.sqdist << " ";
  os << "]";
  return os.str();
}

struct LeafImage {
  GridBox box;
  std::vector<QuantizedPoint> points;
  friend bool operator==(const LeafImage&, const LeafImage&) = default;
};

std::vector<LeafImage> leaf_images(const ZdTree& t) {
  std::vector<LeafImage> out;
  for (const NodeId id : t.leaves()) out.push_back({t.node(id).box, t.node(id).points});
  return out;
}

// Bit-by-bit interleave, independent of the magic-number encoder.
MortonKey slow_interleave(const std::array<Coord, kMaxDim>& g, int dim, int bits) {
  MortonKey key = 0;
  for (int level = bits - 1; level >= 0; --level) {
    for (int a = 0; a < dim; ++a) key = (key << 1) | ((g[a] >> level) & 1U);
  }
  return key;
}

}  // namespace

PropertyResult check_oracle_equivalence(std::size_t n, const std::vector<std::size_t>& ks,
                                        std::size_t dynamic_queries, std::uint64_t seed) {
  Recorder rec("oracle-equivalence");
  for (const Distribution dist : kAllDistributions) {
    const int dim = distribution_dim(dist);
    const Quantizer q = unit_quantizer(dim, seed + 1);
    const auto pts = quantize_all(generate(dist, n, seed), q);
    const ZdTree tree = ZdTree::build(sorted_copy(pts, q), q);

    auto queries = quantize_all(generate(dist, dynamic_queries, seed + 7777), q);
    for (std::size_t i = 0; i < queries.size(); ++i) queries[i].id = static_cast<PointId>(n + i);

    for (const std::size_t k : ks) {
      const auto expect = oracle_knn_graph(pts, k, dim);
      for (const Variant v : {Variant::Root, Variant::Leaf, Variant::Bit}) {
        BatchOptions opts;
        opts.variant = v;
        const auto got = knn_graph(tree, k, opts);
        const std::string ctx = std::string(distribution_name(dist)) + " k=" + std::to_string(k) +
                                " " + std::string(variant_name(v));
        rec.check(got.size() == expect.size(), ctx + ": row count");
        for (std::size_t i = 0; i < std::min(got.size(), expect.size()); ++i) {
          rec.check(got[i] == expect[i], row_mismatch(ctx, got[i], expect[i]));
        }
      }
      for (const auto& query : queries) {
        const auto want = oracle_knn(pts, query, k, dim);
        const std::string ctx = std::string(distribution_name(dist)) + " dynamic k=" + std::to_string(k);
        const auto root = knn_root(tree, query, k);
        const auto bit = knn_bit(tree, query, k);
        rec.check(root == want, row_mismatch(ctx + " root", root, want));
        rec.check(bit == want, row_mismatch(ctx + " bit", bit, want));
      }
    }
  }
  return rec.done();
}

PropertyResult check_build_equivalence(std::size_t n, std::size_t trials, std::uint64_t seed) {
  Recorder rec("build-equivalence");
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const Distribution dist = kAllDistributions[t % std::size(kAllDistributions)];
    const int dim = distribution_dim(dist);
    const Quantizer q = unit_quantizer(dim, seed + t);
    const auto all = quantize_all(generate(dist, n, seed + 100 + t), q);

    const double insert_fraction = std::uniform_real_distribution<double>(0.01, 0.9)(rng);
    std::bernoulli_distribution pick(insert_fraction);
    std::vector<QuantizedPoint> base;
    std::vector<QuantizedPoint> extra;
    for (const auto& p : all) (pick(rng) ? extra : base).push_back(p);

    ZdTree grown = ZdTree::build(sorted_copy(base, q), q);
    batch_insert(grown, sorted_copy(extra, q));
    const ZdTree fresh = ZdTree::build(sorted_copy(all, q), q);

    const std::string ctx = "trial " + std::to_string(t) + " (" +
                            std::string(distribution_name(dist)) + ", |Q|=" +
                            std::to_string(extra.size()) + ")";
    const auto valid = grown.validate();
    rec.check(valid.ok, ctx + ": " + valid.violation);
    rec.check(leaf_images(grown) == leaf_images(fresh), ctx + ": leaf sequences differ");
  }
  return rec.done();
}

PropertyResult check_update_inverse(std::size_t n, std::size_t trials, std::size_t queries,
                                    std::uint64_t seed) {
  Recorder rec("update-inverse");
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const Distribution dist = kAllDistributions[t % std::size(kAllDistributions)];
    const int dim = distribution_dim(dist);
    const Quantizer q = unit_quantizer(dim, seed + t);
    const auto base = quantize_all(generate(dist, n, seed + 200 + t), q);
    auto extra = quantize_all(generate(dist, n / 2 + 1, seed + 300 + t), q);
    for (std::size_t i = 0; i < extra.size(); ++i) extra[i].id = static_cast<PointId>(n + i);
    auto probes = quantize_all(generate(dist, queries, seed + 400 + t), q);
    for (std::size_t i = 0; i < probes.size(); ++i) probes[i].id = static_cast<PointId>(2 * n + i);

    ZdTree tree = ZdTree::build(sorted_copy(base, q), q);
    std::vector<std::size_t> ks;
    std::vector<KnnResult> before;
    for (const auto& p : probes) {
      ks.push_back(std::uniform_int_distribution<std::size_t>(1, 20)(rng));
      before.push_back(knn_bit(tree, p, ks.back()));
    }

    const auto sorted_extra = sorted_copy(extra, q);
    batch_insert(tree, sorted_extra);
    const auto summary = batch_delete(tree, sorted_extra);
    const std::string ctx = "trial " + std::to_string(t);
    rec.check(summary.removed == extra.size() && summary.missing.empty(),
              ctx + ": delete did not remove every inserted point");
    rec.check(tree.size() == base.size(), ctx + ": size not restored");
    const auto valid = tree.validate();
    rec.check(valid.ok, ctx + ": " + valid.violation);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto root = knn_root(tree, probes[i], ks[i]);
      const auto bit = knn_bit(tree, probes[i], ks[i]);
      rec.check(root == before[i], row_mismatch(ctx + " root", root, before[i]));
      rec.check(bit == before[i], row_mismatch(ctx + " bit", bit, before[i]));
    }
  }
  return rec.done();
}

PropertyResult check_update_fuzz(std::size_t n, std::size_t rounds, std::uint64_t seed) {
  Recorder rec("update-fuzz");
  std::mt19937_64 rng(seed);
  for (const int dim : {3, 2}) {
    const Quantizer q = unit_quantizer(dim, seed + static_cast<std::uint64_t>(dim));
    auto live = quantize_all(gen_uniform_cube(n, dim, seed + 500), q);
    ZdTree tree = ZdTree::build(sorted_copy(live, q), q);
    PointId next_id = static_cast<PointId>(n);
    std::uniform_int_distribution<std::size_t> batch_size(0, std::max<std::size_t>(n / 50, 2));

    const std::size_t my_rounds = dim == 3 ? (rounds + 1) / 2 : rounds / 2;
    for (std::size_t round = 0; round < my_rounds; ++round) {
      const std::string ctx = std::to_string(dim) + "D round " + std::to_string(round);
      // Insert: mostly uniform, sometimes a tight cluster to force deep splits.
      const std::size_t add = batch_size(rng);
      const PointCloud source = round % 3 != 0 ? gen_uniform_cube(add, dim, rng())
                                : dim == 3     ? gen_plummer(add, rng())
                                               : gen_kuzmin(add, rng());
      auto fresh = quantize_all(source, q);
      for (auto& p : fresh) p.id = next_id++;
      batch_insert(tree, sorted_copy(fresh, q));
      live.insert(live.end(), fresh.begin(), fresh.end());
      auto valid = tree.validate();
      rec.check(valid.ok && tree.size() == live.size(), ctx + " insert: " + valid.violation);

      // Delete a random subset plus a few ids that are not present.
      const std::size_t drop = std::min(live.size(), batch_size(rng) * (round % 7 == 0 ? 4 : 1));
      std::shuffle(live.begin(), live.end(), rng);
      std::vector<QuantizedPoint> victims(live.end() - static_cast<std::ptrdiff_t>(drop), live.end());
      live.resize(live.size() - drop);
      std::vector<QuantizedPoint> ghosts = quantize_all(gen_uniform_cube(3, dim, rng()), q);
      for (auto& g : ghosts) g.id = next_id++;
      auto batch = victims;
      batch.insert(batch.end(), ghosts.begin(), ghosts.end());
      const auto summary = batch_delete(tree, sorted_copy(batch, q));
      valid = tree.validate();
      rec.check(valid.ok, ctx + " delete: " + valid.violation);
      rec.check(summary.removed == drop && summary.missing.size() == ghosts.size() &&
                    tree.size() == live.size(),
                ctx + " delete: size accounting");
    }
  }
  return rec.done();
}

PropertyResult check_build_invariants(std::size_t n, std::uint64_t seed, bool unsorted_input) {
  Recorder rec("build-invariants");
  std::mt19937_64 rng(seed);
  for (const Distribution dist : kAllDistributions) {
    const int dim = distribution_dim(dist);
    const Quantizer q = unit_quantizer(dim, seed);
    auto pts = sorted_copy(quantize_all(generate(dist, n, seed), q), q);
    if (unsorted_input) std::shuffle(pts.begin(), pts.end(), rng);
    const ZdTree tree = ZdTree::build(pts, q);
    const auto valid = tree.validate();
    const std::string ctx(distribution_name(dist));
    rec.check(valid.ok, ctx + ": " + valid.violation);
    rec.check(tree.depth() <= q.key_bits(), ctx + ": depth exceeds key bits");
    rec.check(tree.size() == n, ctx + ": size");
  }
  return rec.done();
}

PropertyResult check_morton_properties(std::size_t trials, std::uint64_t seed) {
  Recorder rec("morton-properties");
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const int dim = t % 2 == 0 ? 2 : 3;
    const int bits = std::uniform_int_distribution<int>(1, Quantizer::default_bits(dim))(rng);
    std::uniform_int_distribution<Coord> coord(0, static_cast<Coord>((std::uint64_t{1} << bits) - 1));
    auto random_point = [&](PointId id) {
      std::array<Coord, kMaxDim> g{};
      for (int a = 0; a < dim; ++a) g[a] = coord(rng);
      return make_grid_point(id, g, dim, bits);
    };
    const auto a = random_point(static_cast<PointId>(rng() % 4));
    const auto b = random_point(static_cast<PointId>(rng() % 4));

    // Encoding agrees with the bit-by-bit interleave.
    rec.check(a.key == slow_interleave(a.grid, dim, bits), "encode mismatch");

    // Range: everything inside the rectangle spanned by a and b sorts between its corners.
    std::array<Coord, kMaxDim> lo{};
    std::array<Coord, kMaxDim> hi{};
    std::array<Coord, kMaxDim> mid{};
    for (int i = 0; i < dim; ++i) {
      lo[i] = std::min(a.grid[i], b.grid[i]);
      hi[i] = std::max(a.grid[i], b.grid[i]);
      mid[i] = std::uniform_int_distribution<Coord>(lo[i], hi[i])(rng);
    }
    const MortonKey klo = morton_encode(lo, dim, bits);
    const MortonKey khi = morton_encode(hi, dim, bits);
    const MortonKey kmid = morton_encode(mid, dim, bits);
    rec.check(klo <= kmid && kmid <= khi, "range property violated");

    // Total order on (key, id).
    const auto c = make_grid_point(static_cast<PointId>(rng() % 4), t % 5 == 0 ? a.grid : mid, dim, bits);
    const auto ab = morton_compare(a, b);
    const auto ba = morton_compare(b, a);
    rec.check((ab < 0) == (ba > 0) && (ab == 0) == (ba == 0), "antisymmetry");
    rec.check((ab == 0) == (a.key == b.key && a.id == b.id), "totality");
    if (morton_compare(a, b) < 0 && morton_compare(b, c) < 0) {
      rec.check(morton_compare(a, c) < 0, "transitivity");
    }

    // Monotone in each coordinate.
    const int axis = static_cast<int>(rng() % static_cast<unsigned>(dim));
    if (a.grid[axis] < coord.max()) {
      auto g = a.grid;
      ++g[axis];
      rec.check(morton_encode(g, dim, bits) > a.key, "monotonicity");
    }

    // Box distances against a clamp-and-measure computation.
    const GridBox box{lo, hi};
    std::uint64_t want = 0;
    bool inside = true;
    std::uint64_t margin = ~std::uint64_t{0};
    for (int i = 0; i < dim; ++i) {
      const std::int64_t p = c.grid[i];
      const std::int64_t nearest = std::clamp<std::int64_t>(p, lo[i], hi[i]);
      want += static_cast<std::uint64_t>((p - nearest) * (p - nearest));
      inside = inside && p == nearest;
      margin = std::min<std::uint64_t>(margin, std::min<std::int64_t>(p - lo[i], hi[i] - p));
    }
    rec.check(box_sqdist(c, box, dim) == want, "box_sqdist");
    rec.check((want == 0) == box_contains(box, c, dim), "box_sqdist zero iff inside");
    if (inside) rec.check(box_interior_sqdist(c, box, dim) == margin * margin, "box_interior_sqdist");
  }
  return rec.done();
}

std::vector<PropertyResult> run_verify(const VerifyConfig& c) {
  std::vector<PropertyResult> out;
  out.push_back(check_morton_properties(c.morton_trials, c.seed));
  out.push_back(check_build_invariants(c.n, c.seed, c.inject_unsorted_build));
  out.push_back(check_oracle_equivalence(c.n, c.ks, c.dynamic_queries, c.seed));
  out.push_back(check_build_equivalence(c.n * 5, c.equivalence_trials, c.seed));
  out.push_back(check_update_inverse(c.n, c.inverse_trials, 100, c.seed));
  out.push_back(check_update_fuzz(c.fuzz_n, c.fuzz_rounds, c.seed));
  return out;
}

}  // namespace zdtree::verify
