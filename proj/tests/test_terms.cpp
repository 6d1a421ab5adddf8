#include <doctest.h>

#include <cmath>
#include <functional>

#include "kpam/errors.hpp"
#include "kpam/random.hpp"
#include "kpam/terms.hpp"
#include "test_utils.hpp"

using namespace kpam;

namespace {

const KeypointSet kMug({"bottom_center", "top_center", "handle_center"},
                       {Vec3(0, 0, 0), Vec3(0, 0, 0.1), Vec3(0.06, 0, 0.05)});

// Test-local central differences, independent of the library's checker.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const RigidTransform&)>& f,
                            const RigidTransform& T, double step = 1e-6) {
  const Eigen::VectorXd base = f(T);
  Eigen::MatrixXd J(base.size(), 6);
  for (int col = 0; col < 6; ++col) {
    Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
    delta(col) = step;
    J.col(col) = (f(T.retract(delta)) - f(T.retract(-delta))) / (2.0 * step);
  }
  return J;
}

PlaneSpec transform_plane(const RigidTransform& G, const PlaneSpec& plane) {
  const Vec3 n = G.rotation.rotate(plane.normal);
  return {n, plane.offset + n.dot(G.translation)};
}

}  // namespace

TEST_CASE("evaluate_cost: axis alignment cases from the mug example") {
  const AxisAlignmentCost axis{"bottom_center", "top_center", Vec3(0, 0, 1), 1.0};

  // Canonical mug axis is already +z: perfect alignment.
  CHECK(evaluate_cost(axis, RigidTransform::identity(), kMug) == doctest::Approx(0.0));

  // Flipping the axis gives the antipodal maximum ||1 - (-1)||^2 = 4.
  RigidTransform flipped;
  flipped.rotation = UnitQuaternion::from_axis_angle(Vec3(1, 0, 0), M_PI);
  CHECK(evaluate_cost(axis, flipped, kMug) == doctest::Approx(4.0));
}

TEST_CASE("evaluate_cost: point L2 direct substitution") {
  const PointL2Cost cost{"bottom_center", Vec3(0, 0, 0.1), 2.0};
  CHECK(evaluate_cost(cost, RigidTransform::identity(), kMug) == doctest::Approx(0.02));
}

TEST_CASE("evaluate_cost: point-to-plane") {
  const PointToPlaneCost cost{"top_center", PlaneSpec{Vec3(0, 0, 1), 0.0}, 3.0};
  // top_center is 0.1 above the plane: 3 * 0.1^2.
  CHECK(evaluate_cost(cost, RigidTransform::identity(), kMug) == doctest::Approx(0.03));
}

TEST_CASE("evaluate_constraint: half space sign convention") {
  const KeypointSet kp({"p"}, {Vec3(0, 0, -1)});
  const HalfSpaceConstraint below{"p", PlaneSpec{Vec3(0, 0, 1), 0.0}};
  CHECK(evaluate_constraint(below, RigidTransform::identity(), kp) == doctest::Approx(1.0));

  const KeypointSet kp2({"p"}, {Vec3(0, 0, 0.5)});
  CHECK(evaluate_constraint(below, RigidTransform::identity(), kp2) == doctest::Approx(-0.5));
}

TEST_CASE("evaluate_constraint: point target exact hit") {
  const KeypointSet kp({"p"}, {Vec3(1, 1, 1)});
  const PointTargetConstraint target{"p", Vec3(1, 1, 1), 1e-6};
  CHECK(evaluate_constraint(target, RigidTransform::identity(), kp) == doctest::Approx(0.0));
}

TEST_CASE("evaluate_constraint: workspace box residual is the max violation") {
  const KeypointSet kp({"p"}, {Vec3(0.5, -0.2, 2.0)});
  const WorkspaceBoxConstraint box{"p", Vec3(0, 0, 0), Vec3(1, 1, 1)};
  // x inside, y below min by 0.2, z above max by 1.0.
  CHECK(evaluate_constraint(box, RigidTransform::identity(), kp) == doctest::Approx(1.0));

  const KeypointSet inside({"p"}, {Vec3(0.5, 0.5, 0.5)});
  CHECK(evaluate_constraint(box, RigidTransform::identity(), inside) == doctest::Approx(-0.5));
}

TEST_CASE("unknown keypoint references throw") {
  const PointL2Cost cost{"nope", Vec3::Zero(), 1.0};
  CHECK_THROWS_AS(evaluate_cost(cost, RigidTransform::identity(), kMug), UnknownKeypoint);
  const HalfSpaceConstraint hs{"nope", PlaneSpec{}};
  CHECK_THROWS_AS(evaluate_constraint(hs, RigidTransform::identity(), kMug), UnknownKeypoint);
  CHECK_THROWS_AS(check_references(CostTerm(cost), kMug), UnknownKeypoint);
}

TEST_CASE("costs are non-negative and axis alignment stays in [0, 4]") {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform T = test::random_transform(rng);
    const KeypointSet kp = test::random_keypoints(rng, 4);
    const double w = rng.uniform(0.0, 3.0);

    const PointL2Cost l2{"k0", rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)), w};
    CHECK(evaluate_cost(l2, T, kp) >= 0.0);

    const PointToPlaneCost ptp{"k1", PlaneSpec{rng.unit_vector(), rng.uniform(-1, 1)}, w};
    CHECK(evaluate_cost(ptp, T, kp) >= 0.0);

    const AxisAlignmentCost axis{"k2", "k3", rng.unit_vector(), 1.0};
    const double value = evaluate_cost(axis, T, kp);
    CHECK(value >= 0.0);
    CHECK(value <= 4.0 + 1e-12);
  }
}

TEST_CASE("terms ignore relabeling of non-referenced keypoints") {
  Rng rng(22);
  const RigidTransform T = test::random_transform(rng);
  const KeypointSet original = test::random_keypoints(rng, 4);
  KeypointSet relabeled({"k0", "k1", "zzz", "qqq"}, original.points());

  const PointL2Cost l2{"k0", Vec3(0.2, 0.1, -0.3), 1.5};
  CHECK(evaluate_cost(l2, T, original) == doctest::Approx(evaluate_cost(l2, T, relabeled)));

  const AxisAlignmentCost axis{"k0", "k1", Vec3(0, 0, 1), 1.0};
  CHECK(evaluate_cost(axis, T, original) == doctest::Approx(evaluate_cost(axis, T, relabeled)));
}

TEST_CASE("analytic jacobians match test-local finite differences") {
  Rng rng(23);
  for (int i = 0; i < 25; ++i) {
    const RigidTransform T = test::random_transform(rng);
    const KeypointSet kp = test::random_keypoints(rng, 4);

    const std::vector<CostTerm> costs = {
        PointL2Cost{"k0", rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)), rng.uniform(0.1, 4)},
        PointToPlaneCost{"k1", PlaneSpec{rng.unit_vector(), rng.uniform(-1, 1)},
                         rng.uniform(0.1, 4)},
        AxisAlignmentCost{"k2", "k3", rng.unit_vector(), rng.uniform(0.1, 4)}};
    for (const auto& term : costs) {
      const ResidualBlock block = cost_residual(term, T, kp);
      const Eigen::MatrixXd fd = fd_jacobian(
          [&](const RigidTransform& at) { return cost_residual(term, at, kp).value; }, T);
      CHECK((block.jacobian - fd).cwiseAbs().maxCoeff() < 1e-5);
    }

    const std::vector<ConstraintTerm> constraints = {
        PointTargetConstraint{"k0", rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1)), 1e-6},
        HalfSpaceConstraint{"k1", PlaneSpec{rng.unit_vector(), rng.uniform(-1, 1)}},
        WorkspaceBoxConstraint{"k2", Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)}};
    for (const auto& term : constraints) {
      const ResidualBlock block = constraint_residual(term, T, kp);
      const Eigen::MatrixXd fd = fd_jacobian(
          [&](const RigidTransform& at) { return constraint_residual(term, at, kp).value; }, T);
      CHECK((block.jacobian - fd).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("point L2 residual and gradient vanish at the minimum") {
  const KeypointSet kp({"p"}, {Vec3(0.3, -0.2, 0.7)});
  const PointL2Cost cost{"p", Vec3(0.3, -0.2, 0.7), 1.0};
  const ResidualBlock block = cost_residual(cost, RigidTransform::identity(), kp);
  CHECK(block.value.norm() == doctest::Approx(0.0));
  CHECK((block.jacobian.transpose() * block.value).norm() == doctest::Approx(0.0));
}

TEST_CASE("axis alignment translation block is structurally zero") {
  Rng rng(24);
  for (int i = 0; i < 20; ++i) {
    const RigidTransform T = test::random_transform(rng);
    const AxisAlignmentCost axis{"bottom_center", "top_center", rng.unit_vector(), 2.0};
    const ResidualBlock block = cost_residual(axis, T, kMug);
    CHECK(block.jacobian.rightCols<3>().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("conjugation covariance for point and plane terms") {
  Rng rng(25);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform G = test::random_transform(rng);
    const RigidTransform T = test::random_transform(rng);
    const KeypointSet kp = test::random_keypoints(rng, 4);
    const KeypointSet kp_g = kp.transformed(G);
    const RigidTransform T_g = conjugate(G, T);

    const Vec3 target = rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
    const PointL2Cost l2{"k0", target, 1.7};
    const PointL2Cost l2_g{"k0", transform_point(G, target), 1.7};
    CHECK(evaluate_cost(l2, T, kp) ==
          doctest::Approx(evaluate_cost(l2_g, T_g, kp_g)).epsilon(1e-9));

    const PlaneSpec plane{rng.unit_vector(), rng.uniform(-1, 1)};
    const PointToPlaneCost ptp{"k1", plane, 0.8};
    const PointToPlaneCost ptp_g{"k1", transform_plane(G, plane), 0.8};
    CHECK(evaluate_cost(ptp, T, kp) ==
          doctest::Approx(evaluate_cost(ptp_g, T_g, kp_g)).epsilon(1e-9));

    const Vec3 axis_target = rng.unit_vector();
    const AxisAlignmentCost axis{"k2", "k3", axis_target, 1.0};
    const AxisAlignmentCost axis_g{"k2", "k3", G.rotation.rotate(axis_target), 1.0};
    CHECK(evaluate_cost(axis, T, kp) ==
          doctest::Approx(evaluate_cost(axis_g, T_g, kp_g)).epsilon(1e-9));

    const PointTargetConstraint pt{"k0", target, 1e-6};
    const PointTargetConstraint pt_g{"k0", transform_point(G, target), 1e-6};
    CHECK(evaluate_constraint(pt, T, kp) ==
          doctest::Approx(evaluate_constraint(pt_g, T_g, kp_g)).epsilon(1e-9));

    const HalfSpaceConstraint hs{"k1", plane};
    const HalfSpaceConstraint hs_g{"k1", transform_plane(G, plane)};
    CHECK(evaluate_constraint(hs, T, kp) ==
          doctest::Approx(evaluate_constraint(hs_g, T_g, kp_g)).epsilon(1e-9));
  }
}

TEST_CASE("workspace box covariance under pure translations") {
  // Boxes are axis-aligned, so covariance only holds for translations.
  Rng rng(26);
  for (int i = 0; i < 30; ++i) {
    RigidTransform G;
    G.translation = rng.uniform_box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
    const RigidTransform T = test::random_transform(rng);
    const KeypointSet kp = test::random_keypoints(rng, 4);

    const WorkspaceBoxConstraint box{"k0", Vec3(-0.4, -0.3, -0.2), Vec3(0.2, 0.3, 0.4)};
    const WorkspaceBoxConstraint box_g{"k0", box.min + G.translation, box.max + G.translation};
    CHECK(evaluate_constraint(box, T, kp) ==
          doctest::Approx(evaluate_constraint(box_g, conjugate(G, T), kp.transformed(G)))
              .epsilon(1e-9));
  }
}

TEST_CASE("validate_term rejects malformed parameters") {
  CHECK_THROWS_AS(validate_term(CostTerm(PointL2Cost{"a", Vec3::Zero(), -1.0}), "costs[0]"),
                  ValidationError);
  CHECK_THROWS_AS(
      validate_term(CostTerm(PointToPlaneCost{"a", PlaneSpec{Vec3(0, 0, 2), 0.0}, 1.0}),
                    "costs[0]"),
      ValidationError);
  CHECK_THROWS_AS(
      validate_term(CostTerm(AxisAlignmentCost{"a", "a", Vec3(0, 0, 1), 1.0}), "costs[0]"),
      ValidationError);
  CHECK_THROWS_AS(
      validate_term(ConstraintTerm(PointTargetConstraint{"a", Vec3::Zero(), 0.0}), "c[0]"),
      ValidationError);
  CHECK_THROWS_AS(
      validate_term(ConstraintTerm(WorkspaceBoxConstraint{"a", Vec3(1, 0, 0), Vec3(0, 1, 1)}),
                    "c[0]"),
      ValidationError);
}
