#include <doctest.h>

#include <cmath>

#include "kpam/errors.hpp"
#include "kpam/pose_baseline.hpp"
#include "kpam/random.hpp"
#include "kpam/scenes.hpp"
#include "kpam/solver.hpp"
#include "test_utils.hpp"

using namespace kpam;

namespace {

KeypointSet canonical_mug() { return canonical_category_model("mug").canonical_keypoints; }

KeypointSet scaled_about(const KeypointSet& kp, double scale, const Vec3& center) {
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < kp.size(); ++i) {
    points.push_back(center + scale * (kp.point(i) - center));
  }
  return KeypointSet(kp.names(), points);
}

double similarity_residual(const SimilarityTransform& s, const KeypointSet& src,
                           const KeypointSet& dst) {
  double total = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    total += (s.apply(src.point(i)) - dst.point(src.name(i))).squaredNorm();
  }
  return total;
}

}  // namespace

TEST_CASE("fit_similarity: observed equals template gives the identity") {
  const KeypointSet mug = canonical_mug();
  const SimilarityTransform fitted = fit_similarity(mug, mug);
  CHECK(fitted.scale == doctest::Approx(1.0));
  CHECK(fitted.translation.norm() < 1e-12);
  CHECK(rotation_angle_between(fitted.rotation, UnitQuaternion::identity()) < 1e-12);
}

TEST_CASE("fit_similarity: exact recovery of a synthetic similarity") {
  Rng rng(51);
  const KeypointSet mug = canonical_mug();

  // Pure scale 0.6.
  const SimilarityTransform shrunk = fit_similarity(mug, scaled_about(mug, 0.6, Vec3::Zero()));
  CHECK(std::abs(shrunk.scale - 0.6) < 1e-9);
  CHECK(shrunk.translation.norm() < 1e-9);

  // Full similarity: scale, rotation, translation.
  for (int i = 0; i < 30; ++i) {
    SimilarityTransform truth;
    truth.rotation = rng.rotation();
    truth.translation = rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
    truth.scale = rng.uniform(0.3, 2.5);
    std::vector<Vec3> observed;
    for (std::size_t k = 0; k < mug.size(); ++k) observed.push_back(truth.apply(mug.point(k)));
    const SimilarityTransform fitted = fit_similarity(mug, KeypointSet(mug.names(), observed));
    CHECK(std::abs(fitted.scale - truth.scale) < 1e-9);
    CHECK((fitted.translation - truth.translation).norm() < 1e-9);
    CHECK(rotation_angle_between(fitted.rotation, truth.rotation) < 1e-9);
  }
}

TEST_CASE("fit_similarity beats random similarity transforms on noisy data") {
  Rng rng(52);
  const KeypointSet shoe = canonical_category_model("shoe").canonical_keypoints;
  SimilarityTransform truth;
  truth.rotation = rng.rotation();
  truth.translation = Vec3(0.3, -0.2, 0.1);
  truth.scale = 1.4;
  std::vector<Vec3> observed;
  for (std::size_t k = 0; k < shoe.size(); ++k) {
    observed.push_back(truth.apply(shoe.point(k)) + rng.gaussian_vec3(0.01));
  }
  const KeypointSet observed_kp(shoe.names(), observed);
  const SimilarityTransform fitted = fit_similarity(shoe, observed_kp);
  const double fitted_residual = similarity_residual(fitted, shoe, observed_kp);

  for (int i = 0; i < 1000; ++i) {
    SimilarityTransform probe;
    probe.rotation = rng.rotation();
    probe.translation = rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
    probe.scale = rng.uniform(0.2, 3.0);
    CHECK(similarity_residual(probe, shoe, observed_kp) >= fitted_residual - 1e-12);
  }
}

TEST_CASE("fit_similarity error cases") {
  const KeypointSet mug = canonical_mug();
  const KeypointSet renamed({"a", "b", "c"}, mug.points());
  CHECK_THROWS_AS(std::ignore = fit_similarity(mug, renamed), NameMismatch);

  const KeypointSet collinear({"a", "b", "c"},
                              {Vec3(0, 0, 0), Vec3(0, 0, 0.1), Vec3(0, 0, 0.2)});
  CHECK_THROWS_AS(std::ignore = fit_similarity(collinear, collinear), DegenerateGeometry);

  const KeypointSet two({"a", "b"}, {Vec3(0, 0, 0), Vec3(1, 0, 0)});
  CHECK_THROWS_AS(std::ignore = fit_similarity(two, two), DegenerateGeometry);
}

TEST_CASE("pose_based_action trivial cases") {
  const Template tmpl{"mug", canonical_mug(), RigidTransform::identity()};
  const SimilarityTransform identity_fit;
  CHECK(test::transforms_close(pose_based_action(tmpl, identity_fit),
                               RigidTransform::identity(), 1e-12));

  Rng rng(53);
  const RigidTransform G = test::random_transform(rng);
  const Template tmpl_g{"mug", canonical_mug(), G};
  CHECK(test::transforms_close(pose_based_action(tmpl_g, identity_fit), G, 1e-12));
}

TEST_CASE("rack-miss reproduction: scaled-down mug misses the peg under the pose target") {
  // Peg geometry from the shipped mug_on_rack task; hanging target pose puts
  // handle_center exactly on the peg for the canonical mug.
  const KeypointSet mug = canonical_mug();
  const Vec3 peg(0.6, 0.0, 0.3);
  const UnitQuaternion hang = UnitQuaternion::from_axis_angle(Vec3(0, 1, 0), -M_PI / 2);
  RigidTransform target_pose;
  target_pose.rotation = hang;
  target_pose.translation = peg - hang.rotate(mug.point("handle_center"));
  const Template tmpl{"mug", mug, target_pose};

  // Instance: canonical mug scaled by 0.6 about bottom_center, sitting at an
  // arbitrary start pose.
  Rng rng(54);
  const RigidTransform start = test::random_transform(rng);
  const KeypointSet instance = scaled_about(mug, 0.6, Vec3::Zero()).transformed(start);

  const SimilarityTransform fitted = fit_similarity(mug, instance);
  CHECK(std::abs(fitted.scale - 0.6) < 1e-9);

  const RigidTransform action = pose_based_action(tmpl, fitted);
  const Vec3 handle_final = transform_point(action, instance.point("handle_center"));
  const double miss = (handle_final - peg).norm();

  // Analytically the miss is (1 - s) * ||handle offset from the scaling
  // center||, here 0.4 * ||(0.06, 0, 0.05)||.
  const double expected = 0.4 * mug.point("handle_center").norm();
  CHECK(miss == doctest::Approx(expected).epsilon(1e-9));
  CHECK(miss > 0.02);  // misses by more than the small-handle size itself

  // kPAM with the handle point-target constraint places it exactly.
  Problem problem{instance, {}, {}};
  problem.constraints.push_back(PointTargetConstraint{"handle_center", peg, 1e-6});
  problem.costs.push_back(
      PointL2Cost{"top_center", target_pose.rotation.rotate(mug.point("top_center")) +
                                    target_pose.translation,
                  1.0});
  problem.costs.push_back(
      PointL2Cost{"bottom_center", target_pose.rotation.rotate(mug.point("bottom_center")) +
                                       target_pose.translation,
                  1.0});
  const SolveResult result = solve(problem);
  CHECK(result.converged);
  const Vec3 handle_kpam = transform_point(result.transform, instance.point("handle_center"));
  CHECK((handle_kpam - peg).norm() <= 1e-6);
}

TEST_CASE("penetration reproduction: scaled-up mug sinks below the table under the pose target") {
  const KeypointSet mug = canonical_mug();
  // Target pose: upright on the table with the bottom on the z = 0 plane.
  RigidTransform target_pose;
  target_pose.translation = Vec3(0.5, 0.0, 0.0);
  const Template tmpl{"mug", mug, target_pose};

  // Instance scaled by 1.5 about the top center.
  Rng rng(55);
  const RigidTransform start = test::random_transform(rng);
  const KeypointSet instance =
      scaled_about(mug, 1.5, mug.point("top_center")).transformed(start);

  const SimilarityTransform fitted = fit_similarity(mug, instance);
  const RigidTransform action = pose_based_action(tmpl, fitted);
  const double bottom_z = transform_point(action, instance.point("bottom_center")).z();

  // Scaling about the top center drops the bottom by (s - 1) * height.
  CHECK(bottom_z == doctest::Approx(-0.05).epsilon(1e-9));
  CHECK(bottom_z < 0.0);

  // kPAM with half-space + point-to-plane terms keeps every keypoint above.
  Problem problem{instance, {}, {}};
  problem.costs.push_back(PointL2Cost{"bottom_center", target_pose.translation, 1.0});
  problem.costs.push_back(AxisAlignmentCost{"bottom_center", "top_center", Vec3(0, 0, 1), 1.0});
  problem.costs.push_back(PointToPlaneCost{"bottom_center", PlaneSpec{Vec3(0, 0, 1), 0.0}, 1.0});
  const PlaneSpec above{Vec3(0, 0, -1), 0.0};  // z >= 0
  for (const auto& name : instance.names()) {
    problem.constraints.push_back(HalfSpaceConstraint{name, above});
  }
  const SolveResult result = solve(problem);
  CHECK(result.converged);
  for (const auto& name : instance.names()) {
    CHECK(transform_point(result.transform, instance.point(name)).z() >= -1e-6);
  }
}

TEST_CASE("scale-1 instances: pose baseline matches kPAM with three point targets") {
  Rng rng(56);
  const KeypointSet mug = canonical_mug();
  const RigidTransform goal = test::random_transform(rng);
  const RigidTransform start = test::random_transform(rng);
  const KeypointSet instance = mug.transformed(start);

  // kPAM: point targets for all three keypoints at the goal configuration.
  Problem problem{instance, {}, {}};
  for (const auto& name : mug.names()) {
    problem.constraints.push_back(
        PointTargetConstraint{name, transform_point(goal, mug.point(name)), 1e-6});
  }
  const SolveResult kpam_result = solve(problem);
  CHECK(kpam_result.converged);

  // Baseline: template with the same goal pose.
  const Template tmpl{"mug", mug, goal};
  const RigidTransform baseline_action = pose_based_action(tmpl, fit_similarity(mug, instance));

  for (const auto& name : mug.names()) {
    const Vec3 via_kpam = transform_point(kpam_result.transform, instance.point(name));
    const Vec3 via_pose = transform_point(baseline_action, instance.point(name));
    CHECK((via_kpam - via_pose).norm() < 1e-5);
  }
}

TEST_CASE("template JSON round-trip") {
  Rng rng(57);
  const Template tmpl{"mug", canonical_mug(), test::random_transform(rng)};
  const Template reparsed = parse_template(serialize_template(tmpl));
  CHECK(reparsed.category == "mug");
  CHECK(reparsed.keypoints.names() == tmpl.keypoints.names());
  CHECK(test::transforms_close(reparsed.target_pose, tmpl.target_pose, 1e-12));

  CHECK_THROWS_AS(std::ignore = parse_template("{}"), ValidationError);
  CHECK_THROWS_AS(std::ignore = parse_template("<<<"), ParseError);
}
