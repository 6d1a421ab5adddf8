#include "kpam/terms.hpp"

#include <cmath>

#include "kpam/errors.hpp"

namespace kpam {

namespace {

Eigen::Matrix3d skew(const Vec3& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// d(T*p)/d(omega, dt) under the right-multiplicative retraction:
// T(delta)*p = R*exp(skew(omega))*p + t + dt  ==>  [-R*skew(p) | I].
Eigen::Matrix<double, 3, 6> point_jacobian(const RigidTransform& T, const Vec3& p) {
  Eigen::Matrix<double, 3, 6> J;
  J.leftCols<3>() = -T.rotation.matrix() * skew(p);
  J.rightCols<3>() = Eigen::Matrix3d::Identity();
  return J;
}

void check_weight(double weight, const std::string& path) {
  if (!std::isfinite(weight) || weight < 0.0) {
    throw ValidationError(path + ".weight: must be finite and >= 0");
  }
}

void check_plane(const PlaneSpec& plane, const std::string& path) {
  normalize_unit(plane.normal, path + ".plane.normal");
  if (!std::isfinite(plane.offset)) {
    throw ValidationError(path + ".plane.offset: must be finite");
  }
}

}  // namespace

Vec3 normalize_unit(const Vec3& v, const std::string& path) {
  const double n = v.norm();
  if (!v.allFinite() || std::abs(n - 1.0) > 1e-6) {
    throw ValidationError(path + ": expected unit vector, |v| = " + std::to_string(n));
  }
  return v / n;
}

ResidualBlock cost_residual(const CostTerm& term, const RigidTransform& T,
                            const KeypointSet& kp) {
  ResidualBlock block;
  if (const auto* c = std::get_if<PointL2Cost>(&term)) {
    const Vec3& p = kp.point(c->keypoint);
    const double s = std::sqrt(c->weight);
    block.value = s * (transform_point(T, p) - c->target);
    block.jacobian = s * point_jacobian(T, p);
  } else if (const auto* c = std::get_if<PointToPlaneCost>(&term)) {
    const Vec3& p = kp.point(c->keypoint);
    const double s = std::sqrt(c->weight);
    block.value.resize(1);
    block.value(0) = s * (c->plane.normal.dot(transform_point(T, p)) - c->plane.offset);
    block.jacobian = s * (c->plane.normal.transpose() * point_jacobian(T, p));
  } else {
    const auto& a = std::get<AxisAlignmentCost>(term);
    const Vec3 axis = axis_between(kp.point(a.from_keypoint), kp.point(a.to_keypoint));
    const double s = std::sqrt(a.weight);
    block.value.resize(1);
    block.value(0) = s * (1.0 - a.target_axis.dot(T.rotation.rotate(axis)));
    block.jacobian.resize(1, 6);
    // d(R*exp(w)*a)/dw = -R*skew(a); translation block is structurally zero.
    block.jacobian.leftCols<3>() =
        s * a.target_axis.transpose() * T.rotation.matrix() * skew(axis);
    block.jacobian.rightCols<3>().setZero();
  }
  return block;
}

ResidualBlock constraint_residual(const ConstraintTerm& term, const RigidTransform& T,
                                  const KeypointSet& kp) {
  ResidualBlock block;
  if (const auto* c = std::get_if<PointTargetConstraint>(&term)) {
    const Vec3& p = kp.point(c->keypoint);
    block.value = transform_point(T, p) - c->target;
    block.jacobian = point_jacobian(T, p);
  } else if (const auto* c = std::get_if<HalfSpaceConstraint>(&term)) {
    const Vec3& p = kp.point(c->keypoint);
    block.value.resize(1);
    block.value(0) = c->plane.normal.dot(transform_point(T, p)) - c->plane.offset;
    block.jacobian = c->plane.normal.transpose() * point_jacobian(T, p);
  } else {
    const auto& box = std::get<WorkspaceBoxConstraint>(term);
    const Vec3& p = kp.point(box.keypoint);
    const Vec3 y = transform_point(T, p);
    const Eigen::Matrix<double, 3, 6> Jp = point_jacobian(T, p);
    block.value.resize(6);
    block.jacobian.resize(6, 6);
    for (int k = 0; k < 3; ++k) {
      block.value(2 * k) = box.min(k) - y(k);
      block.jacobian.row(2 * k) = -Jp.row(k);
      block.value(2 * k + 1) = y(k) - box.max(k);
      block.jacobian.row(2 * k + 1) = Jp.row(k);
    }
  }
  return block;
}

double evaluate_cost(const CostTerm& term, const RigidTransform& T, const KeypointSet& kp) {
  return cost_residual(term, T, kp).value.squaredNorm();
}

double evaluate_constraint(const ConstraintTerm& term, const RigidTransform& T,
                           const KeypointSet& kp) {
  const ResidualBlock block = constraint_residual(term, T, kp);
  if (std::holds_alternative<PointTargetConstraint>(term)) {
    return block.value.norm();
  }
  return block.value.maxCoeff();
}

bool is_equality(const ConstraintTerm& term) {
  return std::holds_alternative<PointTargetConstraint>(term);
}

void check_references(const CostTerm& term, const KeypointSet& kp) {
  std::visit(
      [&kp](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, AxisAlignmentCost>) {
          kp.index_of(c.from_keypoint);
          kp.index_of(c.to_keypoint);
        } else {
          kp.index_of(c.keypoint);
        }
      },
      term);
}

void check_references(const ConstraintTerm& term, const KeypointSet& kp) {
  std::visit([&kp](const auto& c) { kp.index_of(c.keypoint); }, term);
}

void validate_term(const CostTerm& term, const std::string& path) {
  if (const auto* c = std::get_if<PointL2Cost>(&term)) {
    check_weight(c->weight, path);
    if (!c->target.allFinite()) throw ValidationError(path + ".target: must be finite");
  } else if (const auto* c = std::get_if<PointToPlaneCost>(&term)) {
    check_weight(c->weight, path);
    check_plane(c->plane, path);
  } else {
    const auto& a = std::get<AxisAlignmentCost>(term);
    check_weight(a.weight, path);
    normalize_unit(a.target_axis, path + ".target_axis");
    if (a.from_keypoint == a.to_keypoint) {
      throw ValidationError(path + ": from_keypoint and to_keypoint must differ");
    }
  }
}

void validate_term(const ConstraintTerm& term, const std::string& path) {
  if (const auto* c = std::get_if<PointTargetConstraint>(&term)) {
    if (!c->target.allFinite()) throw ValidationError(path + ".target: must be finite");
    if (!std::isfinite(c->tolerance) || c->tolerance <= 0.0) {
      throw ValidationError(path + ".tolerance: must be > 0");
    }
  } else if (const auto* c = std::get_if<HalfSpaceConstraint>(&term)) {
    check_plane(c->plane, path);
  } else {
    const auto& box = std::get<WorkspaceBoxConstraint>(term);
    if (!box.min.allFinite() || !box.max.allFinite()) {
      throw ValidationError(path + ": box bounds must be finite");
    }
    if ((box.min.array() > box.max.array()).any()) {
      throw ValidationError(path + ": box min must be <= max componentwise");
    }
  }
}

std::string term_label(const CostTerm& term) {
  if (const auto* c = std::get_if<PointL2Cost>(&term)) return "point_l2[" + c->keypoint + "]";
  if (const auto* c = std::get_if<PointToPlaneCost>(&term)) {
    return "point_to_plane[" + c->keypoint + "]";
  }
  const auto& c = std::get<AxisAlignmentCost>(term);
  return "axis_alignment[" + c.from_keypoint + "->" + c.to_keypoint + "]";
}

std::string term_label(const ConstraintTerm& term) {
  if (const auto* c = std::get_if<PointTargetConstraint>(&term)) {
    return "point_target[" + c->keypoint + "]";
  }
  if (const auto* c = std::get_if<HalfSpaceConstraint>(&term)) {
    return "half_space[" + c->keypoint + "]";
  }
  return "workspace_box[" + std::get<WorkspaceBoxConstraint>(term).keypoint + "]";
}

}  // namespace kpam
