#include "kpam/taskspec.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "kpam/errors.hpp"
#include "kpam/json_io.hpp"

namespace kpam {

namespace {

constexpr int kSpecVersion = 1;

Json plane_to_json(const PlaneSpec& plane) {
  Json j;
  j["normal"] = to_json(plane.normal);
  j["offset"] = plane.offset;
  return j;
}

PlaneSpec plane_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  PlaneSpec plane;
  plane.normal = vec3_from_json(require_field(j, "normal", path), path + ".normal");
  plane.normal = normalize_unit(plane.normal, path + ".normal");
  plane.offset = require_number(j, "offset", path);
  return plane;
}

Json cost_to_json(const CostTerm& term) {
  Json j;
  if (const auto* c = std::get_if<PointL2Cost>(&term)) {
    j["kind"] = "point_l2";
    j["keypoint"] = c->keypoint;
    j["target"] = to_json(c->target);
    j["weight"] = c->weight;
  } else if (const auto* c = std::get_if<PointToPlaneCost>(&term)) {
    j["kind"] = "point_to_plane";
    j["keypoint"] = c->keypoint;
    j["plane"] = plane_to_json(c->plane);
    j["weight"] = c->weight;
  } else {
    const auto& a = std::get<AxisAlignmentCost>(term);
    j["kind"] = "axis_alignment";
    j["from_keypoint"] = a.from_keypoint;
    j["to_keypoint"] = a.to_keypoint;
    j["target_axis"] = to_json(a.target_axis);
    j["weight"] = a.weight;
  }
  return j;
}

Json constraint_to_json(const ConstraintTerm& term) {
  Json j;
  if (const auto* c = std::get_if<PointTargetConstraint>(&term)) {
    j["kind"] = "point_target";
    j["keypoint"] = c->keypoint;
    j["target"] = to_json(c->target);
    j["tolerance"] = c->tolerance;
  } else if (const auto* c = std::get_if<HalfSpaceConstraint>(&term)) {
    j["kind"] = "half_space";
    j["keypoint"] = c->keypoint;
    j["plane"] = plane_to_json(c->plane);
  } else {
    const auto& box = std::get<WorkspaceBoxConstraint>(term);
    j["kind"] = "workspace_box";
    j["keypoint"] = box.keypoint;
    j["min"] = to_json(box.min);
    j["max"] = to_json(box.max);
  }
  return j;
}

double optional_number(const Json& j, const std::string& key, const std::string& path,
                       double fallback) {
  if (!j.contains(key)) return fallback;
  return require_number(j, key, path);
}

CostTerm cost_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  const std::string kind = require_string(j, "kind", path);
  if (kind == "point_l2") {
    PointL2Cost c;
    c.keypoint = require_string(j, "keypoint", path);
    c.target = vec3_from_json(require_field(j, "target", path), path + ".target");
    c.weight = optional_number(j, "weight", path, 1.0);
    return c;
  }
  if (kind == "point_to_plane") {
    PointToPlaneCost c;
    c.keypoint = require_string(j, "keypoint", path);
    c.plane = plane_from_json(require_field(j, "plane", path), path + ".plane");
    c.weight = optional_number(j, "weight", path, 1.0);
    return c;
  }
  if (kind == "axis_alignment") {
    AxisAlignmentCost c;
    c.from_keypoint = require_string(j, "from_keypoint", path);
    c.to_keypoint = require_string(j, "to_keypoint", path);
    c.target_axis = vec3_from_json(require_field(j, "target_axis", path), path + ".target_axis");
    c.target_axis = normalize_unit(c.target_axis, path + ".target_axis");
    c.weight = optional_number(j, "weight", path, 1.0);
    return c;
  }
  throw ValidationError(path + ".kind: unknown cost kind '" + kind + "'");
}

ConstraintTerm constraint_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  const std::string kind = require_string(j, "kind", path);
  if (kind == "point_target") {
    PointTargetConstraint c;
    c.keypoint = require_string(j, "keypoint", path);
    c.target = vec3_from_json(require_field(j, "target", path), path + ".target");
    c.tolerance = optional_number(j, "tolerance", path, 1e-6);
    return c;
  }
  if (kind == "half_space") {
    HalfSpaceConstraint c;
    c.keypoint = require_string(j, "keypoint", path);
    c.plane = plane_from_json(require_field(j, "plane", path), path + ".plane");
    return c;
  }
  if (kind == "workspace_box") {
    WorkspaceBoxConstraint c;
    c.keypoint = require_string(j, "keypoint", path);
    c.min = vec3_from_json(require_field(j, "min", path), path + ".min");
    c.max = vec3_from_json(require_field(j, "max", path), path + ".max");
    return c;
  }
  throw ValidationError(path + ".kind: unknown constraint kind '" + kind + "'");
}

void check_spec_reference(const std::string& name, const std::string& path,
                          const std::unordered_set<std::string>& declared) {
  if (!declared.count(name)) {
    throw ValidationError(path + ": references undeclared keypoint '" + name + "'");
  }
}

}  // namespace

void validate_task_spec(const TaskSpec& spec) {
  if (spec.name.empty()) throw ValidationError("name: must be non-empty");
  if (spec.category.empty()) throw ValidationError("category: must be non-empty");
  if (spec.required_keypoints.empty()) {
    throw ValidationError("required_keypoints: must be non-empty");
  }
  std::unordered_set<std::string> declared;
  for (std::size_t i = 0; i < spec.required_keypoints.size(); ++i) {
    const std::string& name = spec.required_keypoints[i];
    const std::string path = "required_keypoints[" + std::to_string(i) + "]";
    if (name.empty()) throw ValidationError(path + ": empty keypoint name");
    if (!declared.insert(name).second) {
      throw ValidationError(path + ": duplicate keypoint '" + name + "'");
    }
  }
  if (spec.costs.empty() && spec.constraints.empty()) {
    throw ValidationError("costs/constraints: at least one term is required");
  }

  for (std::size_t i = 0; i < spec.costs.size(); ++i) {
    const std::string path = "costs[" + std::to_string(i) + "]";
    validate_term(spec.costs[i], path);
    std::visit(
        [&](const auto& c) {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, AxisAlignmentCost>) {
            check_spec_reference(c.from_keypoint, path + ".from_keypoint", declared);
            check_spec_reference(c.to_keypoint, path + ".to_keypoint", declared);
          } else {
            check_spec_reference(c.keypoint, path + ".keypoint", declared);
          }
        },
        spec.costs[i]);
  }
  for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
    const std::string path = "constraints[" + std::to_string(i) + "]";
    validate_term(spec.constraints[i], path);
    std::visit([&](const auto& c) { check_spec_reference(c.keypoint, path + ".keypoint", declared); },
               spec.constraints[i]);
  }

  if (spec.approach) {
    normalize_unit(spec.approach->direction, "approach.direction");
    if (!std::isfinite(spec.approach->distance) || spec.approach->distance < 0.0) {
      throw ValidationError("approach.distance: must be >= 0");
    }
  }
}

TaskSpec parse_task_spec(const std::string& text) {
  const Json j = parse_json(text, "task spec");
  if (!j.is_object()) throw ValidationError("task spec: expected a JSON object");

  const Json& version = require_field(j, "kpam_spec_version", "task spec");
  if (!version.is_number_integer() || version.get<int>() != kSpecVersion) {
    throw ValidationError("kpam_spec_version: expected " + std::to_string(kSpecVersion));
  }

  TaskSpec spec;
  spec.name = require_string(j, "name", "task spec");
  spec.category = require_string(j, "category", "task spec");

  const Json& required = require_field(j, "required_keypoints", "task spec");
  if (!required.is_array()) throw ValidationError("required_keypoints: expected an array");
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (!required[i].is_string()) {
      throw ValidationError("required_keypoints[" + std::to_string(i) + "]: expected a string");
    }
    spec.required_keypoints.push_back(required[i].get<std::string>());
  }

  if (j.contains("costs")) {
    const Json& costs = j.at("costs");
    if (!costs.is_array()) throw ValidationError("costs: expected an array");
    for (std::size_t i = 0; i < costs.size(); ++i) {
      spec.costs.push_back(cost_from_json(costs[i], "costs[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("constraints")) {
    const Json& constraints = j.at("constraints");
    if (!constraints.is_array()) throw ValidationError("constraints: expected an array");
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      spec.constraints.push_back(
          constraint_from_json(constraints[i], "constraints[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("approach") && !j.at("approach").is_null()) {
    const Json& approach = j.at("approach");
    ApproachSpec a;
    a.direction = vec3_from_json(require_field(approach, "direction", "approach"),
                                 "approach.direction");
    a.direction = normalize_unit(a.direction, "approach.direction");
    a.distance = require_number(approach, "distance", "approach");
    spec.approach = a;
  }

  validate_task_spec(spec);
  return spec;
}

std::string serialize_task_spec(const TaskSpec& spec) {
  Json j;
  j["kpam_spec_version"] = kSpecVersion;
  j["name"] = spec.name;
  j["category"] = spec.category;
  j["required_keypoints"] = spec.required_keypoints;
  Json costs = Json::array();
  for (const auto& term : spec.costs) costs.push_back(cost_to_json(term));
  j["costs"] = std::move(costs);
  Json constraints = Json::array();
  for (const auto& term : spec.constraints) constraints.push_back(constraint_to_json(term));
  j["constraints"] = std::move(constraints);
  if (spec.approach) {
    Json a;
    a["direction"] = to_json(spec.approach->direction);
    a["distance"] = spec.approach->distance;
    j["approach"] = std::move(a);
  }
  return j.dump(2) + "\n";
}

TaskSpec load_task_spec(const std::string& file_path) {
  return parse_task_spec(read_file(file_path));
}

Problem instantiate_problem(const TaskSpec& spec, const KeypointSet& kp) {
  std::vector<std::string> missing;
  for (const auto& name : spec.required_keypoints) {
    if (!kp.contains(name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "keypoint set is missing:";
    for (const auto& name : missing) msg += " '" + name + "'";
    throw MissingKeypoint(msg);
  }
  return Problem{kp, spec.costs, spec.constraints};
}

std::vector<std::string> builtin_task_names() {
  return {"mug_upright", "mug_on_rack", "shoe_on_rack"};
}

TaskSpec builtin_task_spec(const std::string& name) {
  // World-frame geometry of the fixed fixtures (repo constants): table/shelf
  // surface at z = 0 for the mug tasks, rack peg at (0.6, 0, 0.3) pointing
  // along +y, shoe-rack surface at z = 0.15.
  if (name == "mug_upright") {
    TaskSpec spec;
    spec.name = "mug_upright";
    spec.category = "mug";
    spec.required_keypoints = {"bottom_center", "top_center"};
    spec.costs.push_back(AxisAlignmentCost{"bottom_center", "top_center", Vec3(0, 0, 1), 1.0});
    spec.constraints.push_back(PointTargetConstraint{"bottom_center", Vec3(0.5, 0.0, 0.0), 1e-6});
    return spec;
  }
  if (name == "mug_on_rack") {
    // Hanging pose for the canonical mug: rotated -90 deg about y so the
    // body hangs below the peg; handle_center sits exactly on the peg point.
    TaskSpec spec;
    spec.name = "mug_on_rack";
    spec.category = "mug";
    spec.required_keypoints = {"bottom_center", "top_center", "handle_center"};
    spec.constraints.push_back(
        PointTargetConstraint{"handle_center", Vec3(0.6, 0.0, 0.3), 1e-6});
    spec.costs.push_back(PointL2Cost{"top_center", Vec3(0.55, 0.0, 0.24), 1.0});
    spec.costs.push_back(PointL2Cost{"bottom_center", Vec3(0.65, 0.0, 0.24), 1.0});
    spec.approach = ApproachSpec{Vec3(0.0, 1.0, 0.0), 0.10};
    return spec;
  }
  if (name == "shoe_on_rack") {
    TaskSpec spec;
    spec.name = "shoe_on_rack";
    spec.category = "shoe";
    spec.required_keypoints = {"toe",         "sole_front", "sole_back",
                               "heel_bottom", "tongue_top", "heel_top"};
    const Vec3 place(0.40, -0.10, 0.15);
    spec.costs.push_back(PointL2Cost{"toe", place + Vec3(0.24, 0.0, 0.02), 1.0});
    spec.costs.push_back(PointL2Cost{"sole_front", place + Vec3(0.19, 0.015, 0.0), 1.0});
    spec.costs.push_back(PointL2Cost{"sole_back", place + Vec3(0.06, -0.015, 0.0), 1.0});
    spec.costs.push_back(PointL2Cost{"heel_bottom", place + Vec3(0.0, 0.0, 0.0), 1.0});
    const PlaneSpec rack_surface{Vec3(0, 0, 1), 0.15};
    spec.costs.push_back(PointToPlaneCost{"sole_front", rack_surface, 1.0});
    spec.costs.push_back(PointToPlaneCost{"sole_back", rack_surface, 1.0});
    spec.costs.push_back(PointToPlaneCost{"heel_bottom", rack_surface, 1.0});
    const PlaneSpec below_surface{Vec3(0, 0, -1), -0.15};  // z >= 0.15
    for (const auto& kp : spec.required_keypoints) {
      spec.constraints.push_back(HalfSpaceConstraint{kp, below_surface});
    }
    return spec;
  }
  throw ValidationError("unknown builtin task spec '" + name + "'");
}

KeypointObservation parse_keypoint_observation(const std::string& text) {
  const Json j = parse_json(text, "keypoint observation");
  if (!j.is_object()) throw ValidationError("keypoint observation: expected a JSON object");
  return KeypointObservation{
      require_string(j, "object_id", "keypoint observation"),
      require_string(j, "category", "keypoint observation"),
      keypoint_set_from_json(require_field(j, "keypoints", "keypoint observation"), "keypoints")};
}

std::string serialize_keypoint_observation(const KeypointObservation& obs) {
  Json j;
  j["object_id"] = obs.object_id;
  j["category"] = obs.category;
  j["keypoints"] = to_json(obs.keypoints);
  return j.dump(2) + "\n";
}

KeypointObservation load_keypoint_observation(const std::string& file_path) {
  return parse_keypoint_observation(read_file(file_path));
}

}  // namespace kpam
