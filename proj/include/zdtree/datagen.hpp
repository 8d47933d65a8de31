#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "zdtree/morton.hpp"

namespace zdtree {

enum class Distribution { Cube2D, Cube3D, Sphere3D, Plummer3D, Kuzmin2D };

/// Names accepted on the command line: 2d-cube, 3d-cube, 3d-sphere,
/// 3d-plummer, 2d-kuzmin.
Distribution parse_distribution(std::string_view name);
std::string_view distribution_name(Distribution d);
int distribution_dim(Distribution d);
inline constexpr Distribution kAllDistributions[] = {
    Distribution::Cube2D, Distribution::Cube3D, Distribution::Sphere3D, Distribution::Plummer3D,
    Distribution::Kuzmin2D};

/// Raw points with ids 0..n-1, all inside the unit universe box [0,1]^dim.
struct PointCloud {
  int dim = 3;
  std::vector<RawPoint> points;
  std::string distribution;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
};

/// Outer radius, in model scale lengths, at which Plummer and Kuzmin samples
/// are rejected and redrawn. The unit box half-width maps to this radius.
inline constexpr double kSkewedClipRadius = 50.0;

PointCloud gen_uniform_cube(std::size_t n, int dim, std::uint64_t seed);
PointCloud gen_sphere_surface(std::size_t n, std::uint64_t seed);
PointCloud gen_plummer(std::size_t n, std::uint64_t seed);
PointCloud gen_kuzmin(std::size_t n, std::uint64_t seed);
PointCloud generate(Distribution d, std::size_t n, std::uint64_t seed);

/// Quantizer over [0,1]^dim with the default bit budget.
Quantizer unit_quantizer(int dim, std::uint64_t seed);

}  // namespace zdtree
