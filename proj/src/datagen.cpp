#include "zdtree/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <tbb/parallel_for.h>

namespace zdtree {

namespace {

// Each block of points draws from its own generator, seeded from the cloud
// seed and block index, so output does not depend on the worker count.
constexpr std::size_t kGenBlock = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// mt19937_64 with hand-written conversions; the std distributions are not
/// specified bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // (0, 1)
  double open_uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Box-Muller, one value per call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(open_uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::array<double, 3> unit_vector3() {
    while (true) {
      std::array<double, 3> v{normal(), normal(), normal()};
      const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      if (len < 1e-300) continue;
      for (auto& c : v) c /= len;
      return v;
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double to_unit(double c) { return std::clamp(c, 0.0, 1.0); }

template <class Fill>
PointCloud make_cloud(std::size_t n, int dim, std::uint64_t seed, std::string_view name,
                      Fill&& fill) {
  PointCloud cloud;
  cloud.dim = dim;
  cloud.seed = seed;
  cloud.distribution = std::string(name);
  cloud.points.resize(n);
  const std::size_t blocks = (n + kGenBlock - 1) / kGenBlock;
  tbb::parallel_for(std::size_t{0}, blocks, [&](std::size_t b) {
    Rng rng(splitmix64(seed ^ splitmix64(b)));
    const std::size_t end = std::min(n, (b + 1) * kGenBlock);
    for (std::size_t i = b * kGenBlock; i < end; ++i) {
      RawPoint& p = cloud.points[i];
      p.id = static_cast<PointId>(i);
      fill(rng, p.coords);
    }
  });
  return cloud;
}

}  // namespace

Distribution parse_distribution(std::string_view name) {
  for (const auto d : kAllDistributions) {
    if (distribution_name(d) == name) return d;
  }
  throw std::invalid_argument(
      "unknown distribution '" + std::string(name) +
      "' (2d-cube|3d-cube|3d-sphere|3d-plummer|2d-kuzmin)");
}

std::string_view distribution_name(Distribution d) {
  switch (d) {
    case Distribution::Cube2D: return "2d-cube";
    case Distribution::Cube3D: return "3d-cube";
    case Distribution::Sphere3D: return "3d-sphere";
    case Distribution::Plummer3D: return "3d-plummer";
    case Distribution::Kuzmin2D: return "2d-kuzmin";
  }
  return "?";
}

int distribution_dim(Distribution d) {
  return d == Distribution::Cube2D || d == Distribution::Kuzmin2D ? 2 : 3;
}

PointCloud gen_uniform_cube(std::size_t n, int dim, std::uint64_t seed) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("dimension must be 2 or 3");
  return make_cloud(n, dim, seed, dim == 2 ? "2d-cube" : "3d-cube",
                    [dim](Rng& rng, std::array<double, kMaxDim>& c) {
                      for (int i = 0; i < dim; ++i) c[i] = rng.uniform();
                    });
}

PointCloud gen_sphere_surface(std::size_t n, std::uint64_t seed) {
  return make_cloud(n, 3, seed, "3d-sphere", [](Rng& rng, std::array<double, kMaxDim>& c) {
    const auto v = rng.unit_vector3();
    for (int i = 0; i < 3; ++i) c[i] = to_unit(0.5 + 0.5 * v[i]);
  });
}

PointCloud gen_plummer(std::size_t n, std::uint64_t seed) {
  return make_cloud(n, 3, seed, "3d-plummer", [](Rng& rng, std::array<double, kMaxDim>& c) {
    // Inverse of the Plummer cumulative mass M(r) = r^3 / (1 + r^2)^(3/2).
    double r = 0.0;
    do {
      r = 1.0 / std::sqrt(std::pow(rng.open_uniform(), -2.0 / 3.0) - 1.0);
    } while (!(r <= kSkewedClipRadius));
    const auto v = rng.unit_vector3();
    const double scale = 0.5 * r / kSkewedClipRadius;
    for (int i = 0; i < 3; ++i) c[i] = to_unit(0.5 + scale * v[i]);
  });
}

PointCloud gen_kuzmin(std::size_t n, std::uint64_t seed) {
  return make_cloud(n, 2, seed, "2d-kuzmin", [](Rng& rng, std::array<double, kMaxDim>& c) {
    // Inverse of the Kuzmin disc cumulative mass M(R) = 1 - 1 / sqrt(1 + R^2).
    double r = 0.0;
    do {
      const double u = rng.open_uniform();
      r = std::sqrt(1.0 / ((1.0 - u) * (1.0 - u)) - 1.0);
    } while (!(r <= kSkewedClipRadius));
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    const double scale = 0.5 * r / kSkewedClipRadius;
    c[0] = to_unit(0.5 + scale * std::cos(theta));
    c[1] = to_unit(0.5 + scale * std::sin(theta));
  });
}

PointCloud generate(Distribution d, std::size_t n, std::uint64_t seed) {
  switch (d) {
    case Distribution::Cube2D: return gen_uniform_cube(n, 2, seed);
    case Distribution::Cube3D: return gen_uniform_cube(n, 3, seed);
    case Distribution::Sphere3D: return gen_sphere_surface(n, seed);
    case Distribution::Plummer3D: return gen_plummer(n, seed);
    case Distribution::Kuzmin2D: return gen_kuzmin(n, seed);
  }
  throw std::logic_error("unknown distribution");
}

Quantizer unit_quantizer(int dim, std::uint64_t seed) {
  return Quantizer::make(dim, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, Quantizer::default_bits(dim),
                         seed);
}

}  // namespace zdtree
