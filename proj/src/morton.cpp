#include "zdtree/morton.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace zdtree {

namespace {

// Magic-number bit spreading: insert one (2D) or two (3D) zero bits between
// consecutive input bits.
constexpr std::uint64_t spread2(std::uint64_t v) {
  v &= 0xffffffffULL;
  v = (v | (v << 16)) & 0x0000ffff0000ffffULL;
  v = (v | (v << 8)) & 0x00ff00ff00ff00ffULL;
  v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0fULL;
  v = (v | (v << 2)) & 0x3333333333333333ULL;
  v = (v | (v << 1)) & 0x5555555555555555ULL;
  return v;
}

constexpr std::uint64_t compact2(std::uint64_t v) {
  v &= 0x5555555555555555ULL;
  v = (v | (v >> 1)) & 0x3333333333333333ULL;
  v = (v | (v >> 2)) & 0x0f0f0f0f0f0f0f0fULL;
  v = (v | (v >> 4)) & 0x00ff00ff00ff00ffULL;
  v = (v | (v >> 8)) & 0x0000ffff0000ffffULL;
  v = (v | (v >> 16)) & 0x00000000ffffffffULL;
  return v;
}

constexpr std::uint64_t spread3(std::uint64_t v) {
  v &= 0x1fffffULL;
  v = (v | (v << 32)) & 0x001f00000000ffffULL;
  v = (v | (v << 16)) & 0x001f0000ff0000ffULL;
  v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

constexpr std::uint64_t compact3(std::uint64_t v) {
  v &= 0x1249249249249249ULL;
  v = (v | (v >> 2)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v >> 4)) & 0x100f00f00f00f00fULL;
  v = (v | (v >> 8)) & 0x001f0000ff0000ffULL;
  v = (v | (v >> 16)) & 0x001f00000000ffffULL;
  v = (v | (v >> 32)) & 0x00000000001fffffULL;
  return v;
}

void check_layout(int dim, int bits_per_dim) {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("dimension must be 2 or 3, got " + std::to_string(dim));
  }
  if (bits_per_dim < 1 || bits_per_dim * dim > kKeyBitBudget) {
    throw std::invalid_argument("bit budget exceeded: " + std::to_string(bits_per_dim) +
                                " bits x " + std::to_string(dim) + " axes > " +
                                std::to_string(kKeyBitBudget));
  }
}

}  // namespace

MortonKey morton_encode(const std::array<Coord, kMaxDim>& grid, int dim, int /*bits_per_dim*/) {
  if (dim == 2) return (spread2(grid[0]) << 1) | spread2(grid[1]);
  return (spread3(grid[0]) << 2) | (spread3(grid[1]) << 1) | spread3(grid[2]);
}

std::array<Coord, kMaxDim> morton_decode(MortonKey key, int dim, int /*bits_per_dim*/) {
  std::array<Coord, kMaxDim> g{};
  if (dim == 2) {
    g[0] = static_cast<Coord>(compact2(key >> 1));
    g[1] = static_cast<Coord>(compact2(key));
  } else {
    g[0] = static_cast<Coord>(compact3(key >> 2));
    g[1] = static_cast<Coord>(compact3(key >> 1));
    g[2] = static_cast<Coord>(compact3(key));
  }
  return g;
}

QuantizedPoint make_grid_point(PointId id, const std::array<Coord, kMaxDim>& grid, int dim,
                               int bits_per_dim) {
  QuantizedPoint q;
  q.id = id;
  q.grid = grid;
  for (int i = dim; i < kMaxDim; ++i) q.grid[i] = 0;
  q.key = morton_encode(q.grid, dim, bits_per_dim);
  return q;
}

Quantizer Quantizer::with_shift(int dim, const std::array<double, kMaxDim>& box_lo,
                                const std::array<double, kMaxDim>& box_hi, int bits_per_dim,
                                const std::array<Coord, kMaxDim>& shift) {
  check_layout(dim, bits_per_dim);
  Quantizer q;
  q.dim_ = dim;
  q.bits_ = bits_per_dim;
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(box_lo[i]) || !std::isfinite(box_hi[i]) || !(box_lo[i] < box_hi[i])) {
      throw std::invalid_argument("degenerate universe box on axis " + std::to_string(i));
    }
    if (shift[i] > q.grid_max()) {
      throw std::invalid_argument("shift exceeds grid on axis " + std::to_string(i));
    }
    q.lo_[i] = box_lo[i];
    q.hi_[i] = box_hi[i];
    q.shift_[i] = shift[i];
  }
  return q;
}

Quantizer Quantizer::make(int dim, const std::array<double, kMaxDim>& box_lo,
                          const std::array<double, kMaxDim>& box_hi, int bits_per_dim,
                          std::uint64_t rng_seed) {
  check_layout(dim, bits_per_dim);
  std::mt19937_64 rng(rng_seed);
  std::array<Coord, kMaxDim> shift{};
  for (int i = 0; i < dim; ++i) shift[i] = static_cast<Coord>(rng() >> (64 - bits_per_dim));
  Quantizer q = with_shift(dim, box_lo, box_hi, bits_per_dim, shift);
  q.seed_ = rng_seed;
  return q;
}

int Quantizer::default_bits(int dim) {
  if (dim == 2) return 31;
  if (dim == 3) return 20;
  throw std::invalid_argument("dimension must be 2 or 3, got " + std::to_string(dim));
}

bool Quantizer::contains(const RawPoint& p) const {
  for (int i = 0; i < dim_; ++i) {
    const double c = p.coords[i];
    if (!std::isfinite(c) || c < lo_[i] || c > hi_[i]) return false;
  }
  return true;
}

QuantizedPoint Quantizer::quantize(const RawPoint& p) const {
  const std::uint64_t modulus = std::uint64_t{1} << bits_;
  const double scale = static_cast<double>(modulus - 1);
  std::array<Coord, kMaxDim> grid{};
  for (int i = 0; i < dim_; ++i) {
    const double c = p.coords[i];
    if (!std::isfinite(c) || c < lo_[i] || c > hi_[i]) {
      throw OutOfUniverse("point " + std::to_string(p.id) + " lies outside the universe box on axis " +
                          std::to_string(i));
    }
    auto cell = static_cast<std::uint64_t>(std::floor((c - lo_[i]) / (hi_[i] - lo_[i]) * scale));
    cell = std::min<std::uint64_t>(cell, modulus - 1);
    grid[i] = static_cast<Coord>((cell + shift_[i]) & (modulus - 1));
  }
  return make_grid_point(p.id, grid, dim_, bits_);
}

GridBox prefix_box(MortonKey key, int low_bit, int dim, int bits_per_dim) {
  const int total = dim * bits_per_dim;
  const MortonKey all = total >= 64 ? ~MortonKey{0} : (MortonKey{1} << total) - 1;
  const MortonKey low = low_bit >= 64 ? ~MortonKey{0} : (MortonKey{1} << low_bit) - 1;
  GridBox box;
  box.lo = morton_decode(key & ~low & all, dim, bits_per_dim);
  box.hi = morton_decode((key | low) & all, dim, bits_per_dim);
  return box;
}

bool box_contains(const GridBox& box, const QuantizedPoint& p, int dim) {
  for (int i = 0; i < dim; ++i) {
    if (p.grid[i] < box.lo[i] || p.grid[i] > box.hi[i]) return false;
  }
  return true;
}

bool box_contains(const GridBox& outer, const GridBox& inner, int dim) {
  for (int i = 0; i < dim; ++i) {
    if (inner.lo[i] < outer.lo[i] || inner.hi[i] > outer.hi[i]) return false;
  }
  return true;
}

std::uint64_t box_sqdist(const QuantizedPoint& p, const GridBox& box, int dim) {
  std::uint64_t sum = 0;
  for (int i = 0; i < dim; ++i) {
    std::uint64_t gap = 0;
    if (p.grid[i] < box.lo[i]) {
      gap = box.lo[i] - p.grid[i];
    } else if (p.grid[i] > box.hi[i]) {
      gap = p.grid[i] - box.hi[i];
    }
    sum += gap * gap;
  }
  return sum;
}

std::uint64_t box_interior_sqdist(const QuantizedPoint& p, const GridBox& box, int dim) {
  if (!box_contains(box, p, dim)) {
    throw std::invalid_argument("box_interior_sqdist: point lies outside the box");
  }
  std::uint64_t margin = ~std::uint64_t{0};
  for (int i = 0; i < dim; ++i) {
    margin = std::min<std::uint64_t>(margin, p.grid[i] - box.lo[i]);
    margin = std::min<std::uint64_t>(margin, box.hi[i] - p.grid[i]);
  }
  return margin * margin;
}

std::uint64_t point_sqdist(const QuantizedPoint& a, const QuantizedPoint& b, int dim) {
  std::uint64_t sum = 0;
  for (int i = 0; i < dim; ++i) {
    const std::uint64_t d = a.grid[i] > b.grid[i] ? a.grid[i] - b.grid[i] : b.grid[i] - a.grid[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace zdtree
