#include "kpam/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "kpam/random.hpp"

namespace kpam {

namespace {

KeypointSet random_keypoints(Rng& rng) {
  std::vector<Vec3> points;
  for (int i = 0; i < 4; ++i) points.push_back(rng.uniform_box(Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)));
  return KeypointSet({"k0", "k1", "k2", "k3"}, std::move(points));
}

RigidTransform random_transform(Rng& rng) {
  return {rng.rotation(), rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1))};
}

PlaneSpec random_plane(Rng& rng) {
  return {rng.unit_vector(), rng.uniform(-0.5, 0.5)};
}

// max |J_analytic - J_fd| over max(1, max |J_fd|).
double compare_against_fd(const std::function<ResidualBlock(const RigidTransform&)>& residual,
                          const RigidTransform& T, double fd_step) {
  const ResidualBlock analytic = residual(T);
  double max_abs_diff = 0.0;
  double max_abs_fd = 0.0;
  for (int col = 0; col < 6; ++col) {
    Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
    delta(col) = fd_step;
    const Eigen::VectorXd plus = residual(T.retract(delta)).value;
    const Eigen::VectorXd minus = residual(T.retract(-delta)).value;
    const Eigen::VectorXd fd = (plus - minus) / (2.0 * fd_step);
    max_abs_diff = std::max(max_abs_diff, (analytic.jacobian.col(col) - fd).cwiseAbs().maxCoeff());
    max_abs_fd = std::max(max_abs_fd, fd.cwiseAbs().maxCoeff());
  }
  return max_abs_diff / std::max(1.0, max_abs_fd);
}

}  // namespace

GradientCheckReport check_term_jacobians(int trials_per_variant, std::uint64_t seed,
                                         double fd_step, double tolerance) {
  Rng rng(seed);
  GradientCheckReport report;
  report.passed = true;

  struct Variant {
    std::string name;
    std::function<double(Rng&)> run;  // returns relative error for one trial
  };

  auto cost_trial = [fd_step](Rng& rng_ref, const CostTerm& term) {
    const KeypointSet kp = random_keypoints(rng_ref);
    const RigidTransform T = random_transform(rng_ref);
    return compare_against_fd(
        [&term, &kp](const RigidTransform& at) { return cost_residual(term, at, kp); }, T, fd_step);
  };
  auto constraint_trial = [fd_step](Rng& rng_ref, const ConstraintTerm& term) {
    const KeypointSet kp = random_keypoints(rng_ref);
    const RigidTransform T = random_transform(rng_ref);
    return compare_against_fd(
        [&term, &kp](const RigidTransform& at) { return constraint_residual(term, at, kp); }, T,
        fd_step);
  };

  const std::vector<Variant> variants = {
      {"point_l2",
       [&](Rng& r) {
         return cost_trial(r, PointL2Cost{"k1", r.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)),
                                          r.uniform(0.1, 5.0)});
       }},
      {"point_to_plane",
       [&](Rng& r) {
         return cost_trial(r, PointToPlaneCost{"k2", random_plane(r), r.uniform(0.1, 5.0)});
       }},
      {"axis_alignment",
       [&](Rng& r) {
         return cost_trial(r, AxisAlignmentCost{"k0", "k3", r.unit_vector(), r.uniform(0.1, 5.0)});
       }},
      {"point_target",
       [&](Rng& r) {
         return constraint_trial(
             r, PointTargetConstraint{"k0", r.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)), 1e-6});
       }},
      {"half_space",
       [&](Rng& r) { return constraint_trial(r, HalfSpaceConstraint{"k1", random_plane(r)}); }},
      {"workspace_box",
       [&](Rng& r) {
         const Vec3 lo = r.uniform_box(Vec3(-1, -1, -1), Vec3(0, 0, 0));
         const Vec3 hi = r.uniform_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
         return constraint_trial(r, WorkspaceBoxConstraint{"k3", lo, hi});
       }},
  };

  for (const auto& variant : variants) {
    GradientCheckReport::VariantResult result;
    result.variant = variant.name;
    result.trials = trials_per_variant;
    for (int t = 0; t < trials_per_variant; ++t) {
      result.max_relative_error = std::max(result.max_relative_error, variant.run(rng));
    }
    result.passed = result.max_relative_error < tolerance;
    report.max_relative_error = std::max(report.max_relative_error, result.max_relative_error);
    report.passed = report.passed && result.passed;
    report.variants.push_back(std::move(result));
  }
  return report;
}

}  // namespace kpam
