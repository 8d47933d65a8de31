#include "zdtree/oracle.hpp"

#include <algorithm>

#include <tbb/parallel_for.h>

namespace zdtree {

namespace {

std::uint64_t scan_sqdist(const QuantizedPoint& a, const QuantizedPoint& b, int dim) {
  std::uint64_t s = 0;
  for (int i = 0; i < dim; ++i) {
    const auto x = static_cast<std::int64_t>(a.grid[i]) - static_cast<std::int64_t>(b.grid[i]);
    s += static_cast<std::uint64_t>(x * x);
  }
  return s;
}

}  // namespace

KnnResult oracle_knn(std::span<const QuantizedPoint> points, const QuantizedPoint& query,
                     std::size_t k, int dim, std::optional<PointId> exclude) {
  std::vector<Neighbor> all;
  all.reserve(points.size());
  for (const auto& p : points) {
    if (exclude && p.id == *exclude) continue;
    all.push_back({p.id, scan_sqdist(p, query, dim)});
  }
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    closer);
  all.resize(take);
  return KnnResult{query.id, std::move(all)};
}

std::vector<KnnResult> oracle_knn_graph(std::span<const QuantizedPoint> points, std::size_t k,
                                        int dim) {
  std::vector<KnnResult> out(points.size());
  tbb::parallel_for(std::size_t{0}, points.size(), [&](std::size_t i) {
    out[i] = oracle_knn(points, points[i], k, dim, points[i].id);
  });
  std::sort(out.begin(), out.end(),
            [](const KnnResult& a, const KnnResult& b) { return a.query < b.query; });
  return out;
}

}  // namespace zdtree
