#pragma once

#include <Eigen/Core>

#include <string>
#include <variant>

#include "kpam/geometry.hpp"

namespace kpam {

// Plane {x : <normal, x> = offset}; half spaces are <normal, x> <= offset.
struct PlaneSpec {
  Vec3 normal{0.0, 0.0, 1.0};  // unit
  double offset = 0.0;         // meters
};

// ---------------------------------------------------------------------------
// Cost terms. Each evaluates to a non-negative scalar weight * ||r||^2.

// weight * ||T*p - target||^2
struct PointL2Cost {
  std::string keypoint;
  Vec3 target{0.0, 0.0, 0.0};
  double weight = 1.0;
};

// weight * (<n, T*p> - b)^2
struct PointToPlaneCost {
  std::string keypoint;
  PlaneSpec plane;
  double weight = 1.0;
};

// weight * (1 - <target_axis, rot(T) * axis_between(p_from, p_to)>)^2
struct AxisAlignmentCost {
  std::string from_keypoint;
  std::string to_keypoint;
  Vec3 target_axis{0.0, 0.0, 1.0};  // unit
  double weight = 1.0;
};

using CostTerm = std::variant<PointL2Cost, PointToPlaneCost, AxisAlignmentCost>;

// ---------------------------------------------------------------------------
// Constraint terms. Scalar residual convention: equalities are satisfied when
// |residual| <= tolerance, inequalities when residual <= 0.

// Equality: ||T*p - target|| = 0 within tolerance.
struct PointTargetConstraint {
  std::string keypoint;
  Vec3 target{0.0, 0.0, 0.0};
  double tolerance = 1e-6;  // meters
};

// Inequality: <n, T*p> - b <= 0.
struct HalfSpaceConstraint {
  std::string keypoint;
  PlaneSpec plane;
};

// Inequality: T*p inside the axis-aligned box [min, max].
struct WorkspaceBoxConstraint {
  std::string keypoint;
  Vec3 min{0.0, 0.0, 0.0};
  Vec3 max{0.0, 0.0, 0.0};
};

using ConstraintTerm =
    std::variant<PointTargetConstraint, HalfSpaceConstraint, WorkspaceBoxConstraint>;

// ---------------------------------------------------------------------------
// Residual form used by the solver and the gradient checks. `value` stacks the
// smooth residual components of one term; `jacobian` is its derivative with
// respect to the 6-dim local perturbation (3 rotation, 3 translation) at T,
// matching RigidTransform::retract.
//
// Component layout per term:
//   PointL2 / PointTarget : 3 rows, sqrt(w)*(T*p - target) resp. T*p - target
//   PointToPlane / HalfSpace : 1 row
//   AxisAlignment : 1 row, sqrt(w)*(1 - <v, R*a>)
//   WorkspaceBox : 6 rows, [min - x, x - max] per axis, each <= 0 when inside
struct ResidualBlock {
  Eigen::VectorXd value;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;
};

ResidualBlock cost_residual(const CostTerm& term, const RigidTransform& T,
                            const KeypointSet& kp);
ResidualBlock constraint_residual(const ConstraintTerm& term, const RigidTransform& T,
                                  const KeypointSet& kp);

// Scalar forms per the term semantics above.
double evaluate_cost(const CostTerm& term, const RigidTransform& T, const KeypointSet& kp);
double evaluate_constraint(const ConstraintTerm& term, const RigidTransform& T,
                           const KeypointSet& kp);

bool is_equality(const ConstraintTerm& term);

// Throws UnknownKeypoint unless every reference resolves in kp.
void check_references(const CostTerm& term, const KeypointSet& kp);
void check_references(const ConstraintTerm& term, const KeypointSet& kp);

// Structural validation independent of any keypoint set (weights, normals,
// box ordering, tolerances). Throws ValidationError; `path` prefixes messages.
void validate_term(const CostTerm& term, const std::string& path);
void validate_term(const ConstraintTerm& term, const std::string& path);

// "point_l2[bottom_center]" etc.; used for diagnostics and CSV columns.
std::string term_label(const CostTerm& term);
std::string term_label(const ConstraintTerm& term);

// Renormalizes a direction whose norm is within 1e-6 of 1; otherwise throws
// ValidationError mentioning `path`.
Vec3 normalize_unit(const Vec3& v, const std::string& path);

}  // namespace kpam
