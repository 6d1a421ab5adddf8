#include "kpam/geometry.hpp"

#include <cmath>
#include <unordered_set>

#include "kpam/errors.hpp"

namespace kpam {

namespace {

// Flip to the w >= 0 hemisphere; ties broken on the first nonzero component
// so equal rotations always canonicalize to identical bits.
Eigen::Quaterniond canonicalize(Eigen::Quaterniond q) {
  q.normalize();
  double lead = q.w();
  if (lead == 0.0) lead = q.x();
  if (lead == 0.0) lead = q.y();
  if (lead == 0.0) lead = q.z();
  if (lead < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
    : q_(canonicalize(Eigen::Quaterniond(w, x, y, z))) {}

UnitQuaternion::UnitQuaternion(const Eigen::Quaterniond& q) : q_(canonicalize(q)) {}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
  return UnitQuaternion(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis.normalized())));
}

UnitQuaternion UnitQuaternion::exp(const Vec3& rotation_vector) {
  const double angle = rotation_vector.norm();
  double half_sinc;  // sin(angle/2) / angle
  if (angle < 1e-8) {
    half_sinc = 0.5 - angle * angle / 48.0;
  } else {
    half_sinc = std::sin(0.5 * angle) / angle;
  }
  return UnitQuaternion(std::cos(0.5 * angle), half_sinc * rotation_vector.x(),
                        half_sinc * rotation_vector.y(), half_sinc * rotation_vector.z());
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& rhs) const {
  return UnitQuaternion(q_ * rhs.q_);
}

UnitQuaternion UnitQuaternion::inverse() const { return UnitQuaternion(q_.conjugate()); }

Vec3 UnitQuaternion::log() const {
  const Vec3 vec(q_.x(), q_.y(), q_.z());
  const double sin_half = vec.norm();
  const double cos_half = std::abs(q_.w());
  const double half_angle = std::atan2(sin_half, cos_half);
  if (sin_half < 1e-12) {
    return 2.0 * vec;  // first-order: q ~ (1, v/2)
  }
  return (2.0 * half_angle / sin_half) * vec;
}

double rotation_angle_between(const UnitQuaternion& a, const UnitQuaternion& b) {
  return (a.inverse() * b).log().norm();
}

RigidTransform RigidTransform::retract(const Eigen::Matrix<double, 6, 1>& delta) const {
  return {rotation * UnitQuaternion::exp(delta.head<3>()), translation + delta.tail<3>()};
}

Vec3 transform_point(const RigidTransform& T, const Vec3& p) {
  return T.rotation.rotate(p) + T.translation;
}

Vec3 rotate_direction(const RigidTransform& T, const Vec3& v) {
  if (std::abs(v.norm() - 1.0) > 1e-6) {
    throw NonUnitDirection("rotate_direction: |v| = " + std::to_string(v.norm()) +
                           " deviates from 1 beyond 1e-6");
  }
  return T.rotation.rotate(v);
}

Vec3 axis_between(const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len <= 1e-9) {
    throw DegenerateAxis("axis_between: points coincide within 1e-9 m");
  }
  return d / len;
}

RigidTransform conjugate(const RigidTransform& G, const RigidTransform& T) {
  return G * T * G.inverse();
}

KeypointSet::KeypointSet(std::vector<std::string> names, std::vector<Vec3> points)
    : names_(std::move(names)), points_(std::move(points)) {
  if (names_.empty() || names_.size() != points_.size()) {
    throw ValidationError("KeypointSet: need N >= 1 names with matching points, got " +
                          std::to_string(names_.size()) + " names / " +
                          std::to_string(points_.size()) + " points");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("KeypointSet: empty keypoint name");
    if (!seen.insert(n).second) {
      throw ValidationError("KeypointSet: duplicate keypoint name '" + n + "'");
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      throw ValidationError("KeypointSet: non-finite coordinates for '" + names_[i] + "'");
    }
  }
}

bool KeypointSet::contains(const std::string& name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t KeypointSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw UnknownKeypoint("keypoint '" + name + "' not present in set");
}

Vec3 KeypointSet::centroid() const {
  if (points_.empty()) return Vec3::Zero();
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points_) sum += p;
  return sum / static_cast<double>(points_.size());
}

KeypointSet KeypointSet::transformed(const RigidTransform& T) const {
  std::vector<Vec3> pts;
  pts.reserve(points_.size());
  for (const auto& p : points_) pts.push_back(transform_point(T, p));
  return KeypointSet(names_, std::move(pts));
}

}  // namespace kpam
