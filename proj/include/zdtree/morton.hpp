#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>

namespace zdtree {

using PointId = std::uint32_t;
using Coord = std::uint32_t;
using MortonKey = std::uint64_t;

inline constexpr int kMaxDim = 3;
inline constexpr int kKeyBitBudget = 62;

/// Thrown when a coordinate falls outside the fixed universe box.
class OutOfUniverse : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct RawPoint {
  PointId id = 0;
  std::array<double, kMaxDim> coords{};  // unused trailing axes are zero
};

/// Integer grid position after the random shift. `key` caches the Morton
/// interleave of `grid` so sorting and splitting never re-encode.
struct QuantizedPoint {
  MortonKey key = 0;
  PointId id = 0;
  std::array<Coord, kMaxDim> grid{};

  friend bool operator==(const QuantizedPoint&, const QuantizedPoint&) = default;
};

/// Inclusive box on the integer grid.
struct GridBox {
  std::array<Coord, kMaxDim> lo{};
  std::array<Coord, kMaxDim> hi{};

  friend bool operator==(const GridBox&, const GridBox&) = default;
};

/// Maps real coordinates inside a fixed universe box onto a 2^B grid with a
/// per-axis random shift applied modulo 2^B. Immutable once made.
class Quantizer {
 public:
  static Quantizer make(int dim, const std::array<double, kMaxDim>& box_lo,
                        const std::array<double, kMaxDim>& box_hi, int bits_per_dim,
                        std::uint64_t rng_seed);

  /// Same as make() but with an explicit shift (tests and fixtures).
  static Quantizer with_shift(int dim, const std::array<double, kMaxDim>& box_lo,
                              const std::array<double, kMaxDim>& box_hi, int bits_per_dim,
                              const std::array<Coord, kMaxDim>& shift);

  /// Default bit budget per axis: 31 in 2D, 20 in 3D.
  static int default_bits(int dim);

  QuantizedPoint quantize(const RawPoint& p) const;
  bool contains(const RawPoint& p) const;

  int dim() const { return dim_; }
  int bits_per_dim() const { return bits_; }
  int key_bits() const { return bits_ * dim_; }
  Coord grid_max() const { return static_cast<Coord>((std::uint64_t{1} << bits_) - 1); }
  const std::array<double, kMaxDim>& box_lo() const { return lo_; }
  const std::array<double, kMaxDim>& box_hi() const { return hi_; }
  const std::array<Coord, kMaxDim>& shift() const { return shift_; }
  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const Quantizer&, const Quantizer&) = default;

 private:
  Quantizer() = default;

  int dim_ = 0;
  int bits_ = 0;
  std::array<double, kMaxDim> lo_{};
  std::array<double, kMaxDim> hi_{};
  std::array<Coord, kMaxDim> shift_{};
  std::uint64_t seed_ = 0;
};

/// Bit-interleaves grid coordinates. Within each bit level, axis 0 supplies
/// the most significant bit.
MortonKey morton_encode(const std::array<Coord, kMaxDim>& grid, int dim, int bits_per_dim);
std::array<Coord, kMaxDim> morton_decode(MortonKey key, int dim, int bits_per_dim);

inline MortonKey morton_key(const QuantizedPoint& p, int dim, int bits_per_dim) {
  return morton_encode(p.grid, dim, bits_per_dim);
}

/// Builds a QuantizedPoint from grid coordinates that already include the shift.
QuantizedPoint make_grid_point(PointId id, const std::array<Coord, kMaxDim>& grid, int dim,
                               int bits_per_dim);

/// Total order by (key, id).
inline std::strong_ordering morton_compare(const QuantizedPoint& a, const QuantizedPoint& b) {
  if (auto c = a.key <=> b.key; c != 0) return c;
  return a.id <=> b.id;
}

inline bool morton_less(const QuantizedPoint& a, const QuantizedPoint& b) {
  return morton_compare(a, b) < 0;
}

/// Axis split by interleave bit `bit` (0 = least significant bit of the key).
inline int axis_of_bit(int bit, int dim) { return dim - 1 - bit % dim; }

/// Box of all keys sharing `key`'s bits at positions >= `low_bit`.
GridBox prefix_box(MortonKey key, int low_bit, int dim, int bits_per_dim);

inline GridBox full_box(int dim, int bits_per_dim) {
  return prefix_box(0, dim * bits_per_dim, dim, bits_per_dim);
}

bool box_contains(const GridBox& box, const QuantizedPoint& p, int dim);
bool box_contains(const GridBox& outer, const GridBox& inner, int dim);

/// Squared grid distance from p to the nearest point of box (0 inside).
std::uint64_t box_sqdist(const QuantizedPoint& p, const GridBox& box, int dim);

/// Squared distance from an interior p to the nearest face of box.
/// Throws std::invalid_argument if p lies outside.
std::uint64_t box_interior_sqdist(const QuantizedPoint& p, const GridBox& box, int dim);

std::uint64_t point_sqdist(const QuantizedPoint& a, const QuantizedPoint& b, int dim);

}  // namespace zdtree
