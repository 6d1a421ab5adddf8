#pragma once

#include <string>

#include "kpam/geometry.hpp"

namespace kpam {

// Category template for pose-based manipulation: canonical keypoints plus a
// single category-level goal pose.
struct Template {
  std::string category;
  KeypointSet keypoints;         // canonical frame
  RigidTransform target_pose;    // goal pose of the canonical instance
};

// Rigid pose plus a global scale: p -> scale * R * p + t.
struct SimilarityTransform {
  UnitQuaternion rotation;
  Vec3 translation{0.0, 0.0, 0.0};
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * rotation.rotate(p) + translation; }
  // Pose with the scale discarded; a physical pick-and-place cannot rescale.
  RigidTransform rigid_part() const { return {rotation, translation}; }
};

// Least-squares similarity alignment of template keypoints onto observed
// keypoints, matched by name (Umeyama). Throws NameMismatch if the name sets
// differ, DegenerateGeometry for < 3 or collinear points.
SimilarityTransform fit_similarity(const KeypointSet& template_kp,
                                   const KeypointSet& observed_kp);

// Rigid action carrying the instance from its estimated pose to the
// template's target pose: target_pose * rigid(fitted)^-1.
RigidTransform pose_based_action(const Template& tmpl, const SimilarityTransform& fitted);

// Template JSON ({"kpam_template_version": 1, category, keypoints,
// target_pose}); shipped alongside the task spec files.
Template parse_template(const std::string& text);
std::string serialize_template(const Template& tmpl);
Template load_template(const std::string& file_path);

}  // namespace kpam
