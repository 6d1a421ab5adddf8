#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <vector>

namespace kpam {

using Vec3 = Eigen::Vector3d;

// Unit quaternion with canonical sign (w >= 0). Always normalized on
// construction, so composition chains do not accumulate drift.
class UnitQuaternion {
 public:
  UnitQuaternion() : q_(1.0, 0.0, 0.0, 0.0) {}
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Eigen::Quaterniond& q);

  static UnitQuaternion identity() { return UnitQuaternion(); }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad);
  // Exponential map of a rotation vector (axis * angle).
  static UnitQuaternion exp(const Vec3& rotation_vector);

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  UnitQuaternion operator*(const UnitQuaternion& rhs) const;
  UnitQuaternion inverse() const;
  Vec3 rotate(const Vec3& v) const { return q_ * v; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }
  // Rotation vector (axis * angle), angle in [0, pi].
  Vec3 log() const;
  double norm() const { return q_.norm(); }

  const Eigen::Quaterniond& eigen() const { return q_; }

 private:
  Eigen::Quaterniond q_;
};

// Rotation angle carrying a into b, in [0, pi].
double rotation_angle_between(const UnitQuaternion& a, const UnitQuaternion& b);

// Element of SE(3): p -> rotation * p + translation.
struct RigidTransform {
  UnitQuaternion rotation;
  Vec3 translation{0.0, 0.0, 0.0};

  static RigidTransform identity() { return {}; }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, translation + rotation.rotate(rhs.translation)};
  }

  RigidTransform inverse() const {
    UnitQuaternion inv = rotation.inverse();
    return {inv, inv.rotate(-translation)};
  }

  // Right-multiplicative retraction on the 6-dim local parameterization:
  // rotation <- rotation * exp(omega), translation <- translation + dt.
  RigidTransform retract(const Eigen::Matrix<double, 6, 1>& delta) const;
};

Vec3 transform_point(const RigidTransform& T, const Vec3& p);

// Rotates a unit direction; throws NonUnitDirection if |v| deviates from 1
// beyond 1e-6.
Vec3 rotate_direction(const RigidTransform& T, const Vec3& v);

// Unit vector from a to b; throws DegenerateAxis if the points coincide
// within 1e-9 m.
Vec3 axis_between(const Vec3& a, const Vec3& b);

// G * T * G^-1.
RigidTransform conjugate(const RigidTransform& G, const RigidTransform& T);

// Named, ordered 3D keypoints for one object instance (world frame, meters).
// The validated constructor requires N >= 1, unique names, finite points;
// default construction gives the empty placeholder used inside containers.
class KeypointSet {
 public:
  KeypointSet() = default;
  KeypointSet(std::vector<std::string> names, std::vector<Vec3> points);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Vec3>& points() const { return points_; }

  bool contains(const std::string& name) const;
  // Index of a name; throws UnknownKeypoint if absent.
  std::size_t index_of(const std::string& name) const;
  const Vec3& point(const std::string& name) const { return points_[index_of(name)]; }
  const Vec3& point(std::size_t i) const { return points_.at(i); }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  Vec3 centroid() const;
  KeypointSet transformed(const RigidTransform& T) const;

 private:
  std::vector<std::string> names_;
  std::vector<Vec3> points_;
};

}  // namespace kpam
