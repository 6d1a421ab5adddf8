#include "kpam/scenes.hpp"

#include <cmath>
#include <cstdio>

#include "kpam/errors.hpp"
#include "kpam/json_io.hpp"
#include "kpam/random.hpp"

namespace kpam {

namespace {

constexpr double kSmallHandleThreshold = 0.02;  // meters

void validate_ranges(const CategoryModel& model) {
  if (!(model.scale_range[0] > 0.0) || model.scale_range[0] > model.scale_range[1]) {
    throw ValidationError("CategoryModel.scale_range: need 0 < lo <= hi");
  }
  for (const auto& r : model.stretch_range) {
    if (!(r[0] > 0.0) || r[0] > r[1]) {
      throw ValidationError("CategoryModel.stretch_range: need 0 < lo <= hi");
    }
  }
}

}  // namespace

CategoryModel canonical_category_model(const std::string& category) {
  if (category == "mug") {
    CategoryModel model;
    model.category = "mug";
    model.canonical_keypoints =
        KeypointSet({"bottom_center", "top_center", "handle_center"},
                    {Vec3(0.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.1), Vec3(0.06, 0.0, 0.05)});
    model.scale_range = {0.5, 2.0};
    // Canonical handle is 4 cm tall and 2.5 cm wide.
    model.handle_min_dimension = 0.025;
    return model;
  }
  if (category == "shoe") {
    CategoryModel model;
    model.category = "shoe";
    model.canonical_keypoints = KeypointSet(
        {"toe", "sole_front", "sole_back", "heel_bottom", "tongue_top", "heel_top"},
        {Vec3(0.24, 0.0, 0.02), Vec3(0.19, 0.015, 0.0), Vec3(0.06, -0.015, 0.0),
         Vec3(0.0, 0.0, 0.0), Vec3(0.13, 0.0, 0.10), Vec3(0.0, 0.0, 0.09)});
    model.scale_range = {0.5, 2.0};
    return model;
  }
  throw ValidationError("unknown category '" + category + "' (expected mug or shoe)");
}

SceneInstance sample_instance(const CategoryModel& model, const PoseDistribution& pose_dist,
                              double noise_sigma, std::uint64_t seed,
                              const std::string& instance_id) {
  validate_ranges(model);
  if (noise_sigma < 0.0) throw ValidationError("noise_sigma must be >= 0");

  Rng rng(seed);
  const double scale = rng.uniform(model.scale_range[0], model.scale_range[1]);
  Vec3 stretch;
  for (int k = 0; k < 3; ++k) {
    stretch(k) = rng.uniform(model.stretch_range[k][0], model.stretch_range[k][1]);
  }

  RigidTransform pose;
  const double yaw = rng.uniform(0.0, 2.0 * M_PI);
  switch (pose_dist.orientation) {
    case StartOrientation::upright:
      pose.rotation = UnitQuaternion::from_axis_angle(Vec3(0, 0, 1), yaw);
      break;
    case StartOrientation::side_lying:
      pose.rotation = UnitQuaternion::from_axis_angle(Vec3(0, 0, 1), yaw) *
                      UnitQuaternion::from_axis_angle(Vec3(0, 1, 0), M_PI / 2.0);
      break;
    case StartOrientation::random_so3:
      pose.rotation = rng.rotation();
      break;
  }
  pose.translation = rng.uniform_box(pose_dist.position_min, pose_dist.position_max);

  const auto& canonical = model.canonical_keypoints;
  std::vector<Vec3> true_points;
  true_points.reserve(canonical.size());
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const Vec3 shaped = scale * stretch.cwiseProduct(canonical.point(i));
    true_points.push_back(transform_point(pose, shaped));
  }
  std::vector<Vec3> observed_points;
  observed_points.reserve(true_points.size());
  for (const auto& p : true_points) {
    observed_points.push_back(p + rng.gaussian_vec3(noise_sigma));
  }

  return SceneInstance{
      instance_id.empty() ? model.category + "-" + std::to_string(seed) : instance_id,
      KeypointSet(canonical.names(), std::move(true_points)),
      KeypointSet(canonical.names(), std::move(observed_points)),
      pose,
      scale,
      noise_sigma};
}

bool classify_small_handle(const SceneInstance& instance, const CategoryModel& model) {
  if (!model.handle_min_dimension.has_value()) {
    throw NotApplicable("category '" + model.category + "' has no handle dimensions");
  }
  return instance.applied_scale * model.handle_min_dimension.value() < kSmallHandleThreshold;
}

SceneSet generate_scenes(const CategoryModel& model, const PoseDistribution& pose_dist,
                         int count, double noise_sigma, std::uint64_t base_seed,
                         bool alternate_side_lying) {
  if (count < 0) throw ValidationError("generate_scenes: count must be >= 0");
  SceneSet scenes;
  scenes.category = model.category;
  scenes.instances.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    PoseDistribution dist = pose_dist;
    if (alternate_side_lying && (i % 2 == 1)) dist.orientation = StartOrientation::side_lying;
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%04d", model.category.c_str(), i);
    scenes.instances.push_back(
        sample_instance(model, dist, noise_sigma, base_seed + static_cast<std::uint64_t>(i), id));
  }
  return scenes;
}

SceneSet parse_scene_set(const std::string& text) {
  const Json j = parse_json(text, "scene set");
  if (!j.is_object()) throw ValidationError("scene set: expected a JSON object");
  const Json& version = require_field(j, "kpam_scene_version", "scene set");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ValidationError("kpam_scene_version: expected 1");
  }
  SceneSet scenes;
  scenes.category = require_string(j, "category", "scene set");
  const Json& instances = require_field(j, "instances", "scene set");
  if (!instances.is_array()) throw ValidationError("instances: expected an array");
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string path = "instances[" + std::to_string(i) + "]";
    const Json& item = instances[i];
    if (!item.is_object()) throw ValidationError(path + ": expected an object");
    const double noise_sigma = require_number(item, "noise_sigma", path);
    if (noise_sigma < 0.0) throw ValidationError(path + ".noise_sigma: must be >= 0");
    SceneInstance instance{
        require_string(item, "instance_id", path),
        keypoint_set_from_json(require_field(item, "true_keypoints", path),
                               path + ".true_keypoints"),
        keypoint_set_from_json(require_field(item, "observed_keypoints", path),
                               path + ".observed_keypoints"),
        transform_from_json(require_field(item, "ground_truth_pose", path),
                            path + ".ground_truth_pose"),
        require_number(item, "applied_scale", path),
        noise_sigma};
    if (instance.true_keypoints.names() != instance.observed_keypoints.names()) {
      throw ValidationError(path + ": true and observed keypoint names must match in order");
    }
    scenes.instances.push_back(std::move(instance));
  }
  return scenes;
}

std::string serialize_scene_set(const SceneSet& scenes) {
  Json j;
  j["kpam_scene_version"] = 1;
  j["category"] = scenes.category;
  Json instances = Json::array();
  for (const auto& instance : scenes.instances) {
    Json item;
    item["instance_id"] = instance.instance_id;
    item["applied_scale"] = instance.applied_scale;
    item["noise_sigma"] = instance.noise_sigma;
    item["ground_truth_pose"] = to_json(instance.ground_truth_pose);
    item["true_keypoints"] = to_json(instance.true_keypoints);
    item["observed_keypoints"] = to_json(instance.observed_keypoints);
    instances.push_back(std::move(item));
  }
  j["instances"] = std::move(instances);
  return j.dump(2) + "\n";
}

SceneSet load_scene_set(const std::string& file_path) {
  return parse_scene_set(read_file(file_path));
}

}  // namespace kpam
