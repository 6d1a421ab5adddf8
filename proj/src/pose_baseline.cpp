#include "kpam/pose_baseline.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "kpam/errors.hpp"
#include "kpam/json_io.hpp"

namespace kpam {

SimilarityTransform fit_similarity(const KeypointSet& template_kp,
                                   const KeypointSet& observed_kp) {
  if (template_kp.size() != observed_kp.size()) {
    throw NameMismatch("fit_similarity: sets have different sizes");
  }
  const std::size_t n = template_kp.size();
  if (n < 3) throw DegenerateGeometry("fit_similarity: need at least 3 keypoints");
  for (std::size_t i = 0; i < n; ++i) {
    if (!observed_kp.contains(template_kp.name(i))) {
      throw NameMismatch("fit_similarity: '" + template_kp.name(i) + "' missing from observed");
    }
  }

  const Vec3 src_centroid = template_kp.centroid();
  Vec3 obs_centroid = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) obs_centroid += observed_kp.point(template_kp.name(i));
  obs_centroid /= static_cast<double>(n);

  // Umeyama: rotation from the SVD of the cross-covariance, scale from the
  // singular values over the source variance.
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  double src_variance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 s = template_kp.point(i) - src_centroid;
    const Vec3 t = observed_kp.point(template_kp.name(i)) - obs_centroid;
    H += s * t.transpose();
    src_variance += s.squaredNorm();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  if (src_variance <= 1e-18 || sigma(1) <= 1e-12 * std::max(sigma(0), 1e-12)) {
    throw DegenerateGeometry("fit_similarity: keypoints are collinear or coincident");
  }

  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d R = svd.matrixV() * D * svd.matrixU().transpose();

  SimilarityTransform fitted;
  fitted.rotation = UnitQuaternion(Eigen::Quaterniond(R));
  fitted.scale = (sigma.asDiagonal() * D).trace() / src_variance;
  if (!(fitted.scale > 0.0) || !std::isfinite(fitted.scale)) {
    throw DegenerateGeometry("fit_similarity: non-positive fitted scale");
  }
  fitted.translation = obs_centroid - fitted.scale * (R * src_centroid);
  return fitted;
}

RigidTransform pose_based_action(const Template& tmpl, const SimilarityTransform& fitted) {
  return tmpl.target_pose * fitted.rigid_part().inverse();
}

Template parse_template(const std::string& text) {
  const Json j = parse_json(text, "template");
  if (!j.is_object()) throw ValidationError("template: expected a JSON object");
  const Json& version = require_field(j, "kpam_template_version", "template");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ValidationError("kpam_template_version: expected 1");
  }
  Template tmpl{
      require_string(j, "category", "template"),
      keypoint_set_from_json(require_field(j, "keypoints", "template"), "keypoints"),
      transform_from_json(require_field(j, "target_pose", "template"), "target_pose")};
  if (tmpl.keypoints.size() < 3) {
    throw ValidationError("keypoints: template needs at least 3 keypoints");
  }
  return tmpl;
}

std::string serialize_template(const Template& tmpl) {
  Json j;
  j["kpam_template_version"] = 1;
  j["category"] = tmpl.category;
  j["keypoints"] = to_json(tmpl.keypoints);
  j["target_pose"] = to_json(tmpl.target_pose);
  return j.dump(2) + "\n";
}

Template load_template(const std::string& file_path) {
  return parse_template(read_file(file_path));
}

}  // namespace kpam
