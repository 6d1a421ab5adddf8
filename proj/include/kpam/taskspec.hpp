#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kpam/geometry.hpp"
#include "kpam/solver.hpp"
#include "kpam/terms.hpp"

namespace kpam {

// Final-approach offset: the placement is entered along -direction, starting
// `distance` meters away.
struct ApproachSpec {
  Vec3 direction{0.0, 0.0, 1.0};  // unit
  double distance = 0.0;          // meters
};

// Declarative manipulation target: costs and constraints over named
// keypoints, independent of any particular object instance.
struct TaskSpec {
  std::string name;
  std::string category;
  std::vector<std::string> required_keypoints;
  std::vector<CostTerm> costs;
  std::vector<ConstraintTerm> constraints;
  std::optional<ApproachSpec> approach;
};

// Semantic checks: unique non-empty keypoint names, every term referencing
// only required keypoints, valid term parameters, unit approach direction,
// at least one term. Throws ValidationError with a field path.
void validate_task_spec(const TaskSpec& spec);

// JSON round trip. parse throws ParseError on malformed bytes and
// ValidationError on semantic violations; serialize emits the canonical
// form (fixed key order), so equal specs serialize byte-identically.
TaskSpec parse_task_spec(const std::string& text);
std::string serialize_task_spec(const TaskSpec& spec);

TaskSpec load_task_spec(const std::string& file_path);

// Binds the spec's terms to a concrete keypoint set. Extra keypoints are
// permitted and ignored; absent ones raise MissingKeypoint listing every
// missing name.
Problem instantiate_problem(const TaskSpec& spec, const KeypointSet& kp);

// Task library shipped with the repo (also present under data/task_specs/):
// "mug_upright", "mug_on_rack", "shoe_on_rack".
std::vector<std::string> builtin_task_names();
TaskSpec builtin_task_spec(const std::string& name);

// One detected object instance: {object_id, category, keypoints}.
struct KeypointObservation {
  std::string object_id;
  std::string category;
  KeypointSet keypoints;
};

KeypointObservation parse_keypoint_observation(const std::string& text);
std::string serialize_keypoint_observation(const KeypointObservation& obs);
KeypointObservation load_keypoint_observation(const std::string& file_path);

}  // namespace kpam
