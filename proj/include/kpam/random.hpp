#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "kpam/geometry.hpp"

namespace kpam {

// Seeded RNG with hand-rolled distributions. std::mt19937_64 output is
// pinned by the standard, but the distribution adaptors are not; converting
// bits ourselves keeps results identical across toolchains, which the
// determinism guarantees depend on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi_inclusive - lo + 1));
  }

  // Standard normal via Box-Muller.
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec3 gaussian_vec3(double sigma) {
    return Vec3(sigma * gaussian(), sigma * gaussian(), sigma * gaussian());
  }

  Vec3 uniform_box(const Vec3& lo, const Vec3& hi) {
    return Vec3(uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z()));
  }

  // Uniform rotation on SO(3) (Shoemake's subgroup algorithm).
  UnitQuaternion rotation() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double u3 = uniform01();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    return UnitQuaternion(b * std::cos(2.0 * M_PI * u3), a * std::sin(2.0 * M_PI * u2),
                          a * std::cos(2.0 * M_PI * u2), b * std::sin(2.0 * M_PI * u3));
  }

  Vec3 unit_vector() {
    while (true) {
      const Vec3 v = gaussian_vec3(1.0);
      const double n = v.norm();
      if (n > 1e-6) return v / n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kpam
