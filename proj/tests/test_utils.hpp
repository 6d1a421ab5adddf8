#pragma once

#include <cmath>

#include "kpam/geometry.hpp"
#include "kpam/random.hpp"

namespace kpam::test {

inline RigidTransform random_transform(Rng& rng, double translation_range = 1.0) {
  return {rng.rotation(),
          rng.uniform_box(Vec3::Constant(-translation_range), Vec3::Constant(translation_range))};
}

inline KeypointSet random_keypoints(Rng& rng, int n, double half_extent = 0.5) {
  std::vector<std::string> names;
  std::vector<Vec3> points;
  for (int i = 0; i < n; ++i) {
    names.push_back("k" + std::to_string(i));
    points.push_back(rng.uniform_box(Vec3::Constant(-half_extent), Vec3::Constant(half_extent)));
  }
  return KeypointSet(std::move(names), std::move(points));
}

inline bool transforms_close(const RigidTransform& a, const RigidTransform& b, double tol) {
  return (a.translation - b.translation).norm() <= tol &&
         rotation_angle_between(a.rotation, b.rotation) <= tol;
}

}  // namespace kpam::test
