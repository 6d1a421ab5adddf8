#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kpam/geometry.hpp"

namespace kpam {

// Shape-variation model for one object category. Instances are canonical
// keypoints scaled (uniform scale times per-axis stretch) and rigidly placed.
struct CategoryModel {
  std::string category;
  KeypointSet canonical_keypoints;
  std::array<double, 2> scale_range{1.0, 1.0};
  std::array<std::array<double, 2>, 3> stretch_range{{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}};
  // min(height, width) of the canonical handle; mugs only.
  std::optional<double> handle_min_dimension;
};

enum class StartOrientation {
  upright,     // yaw only
  side_lying,  // object axis horizontal, then yaw
  random_so3,  // uniform rotation
};

struct PoseDistribution {
  StartOrientation orientation = StartOrientation::upright;
  Vec3 position_min{-0.3, -0.3, 0.0};
  Vec3 position_max{0.3, 0.3, 0.05};
};

// One benchmark instance with ground truth.
struct SceneInstance {
  std::string instance_id;
  KeypointSet true_keypoints;      // world frame
  KeypointSet observed_keypoints;  // true + isotropic Gaussian noise
  RigidTransform ground_truth_pose;
  double applied_scale = 1.0;
  double noise_sigma = 0.0;  // meters
};

// Canonical models shipped with the repo ("mug", "shoe"); keypoint
// coordinates are repo constants, documented in the README.
CategoryModel canonical_category_model(const std::string& category);

// Deterministic per seed: scale, per-axis stretch, pose, then world-frame
// noise are drawn in a fixed order from one stream. An empty instance_id
// selects "<category>-<seed>".
SceneInstance sample_instance(const CategoryModel& model, const PoseDistribution& pose_dist,
                              double noise_sigma, std::uint64_t seed,
                              const std::string& instance_id = "");

// True iff the instance's scaled handle has height or width below 2 cm
// (strict). Throws NotApplicable for categories without a handle.
bool classify_small_handle(const SceneInstance& instance, const CategoryModel& model);

struct SceneSet {
  std::string category;
  std::vector<SceneInstance> instances;
};

// Batch generation: instance i uses seed base_seed + i and a zero-padded
// indexed id. `alternate_side_lying` flips every odd instance to side-lying,
// mirroring upright/horizontal start splits.
SceneSet generate_scenes(const CategoryModel& model, const PoseDistribution& pose_dist,
                         int count, double noise_sigma, std::uint64_t base_seed,
                         bool alternate_side_lying = false);

SceneSet parse_scene_set(const std::string& text);
std::string serialize_scene_set(const SceneSet& scenes);
SceneSet load_scene_set(const std::string& file_path);

}  // namespace kpam
