#include "kpam/json_io.hpp"

#include <fstream>
#include <sstream>

#include "kpam/errors.hpp"

namespace kpam {

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(path + ": expected a 3-element array");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw ValidationError(path + ": expected numeric components");
    v(k) = j[k].get<double>();
  }
  if (!v.allFinite()) throw ValidationError(path + ": components must be finite");
  return v;
}

Json to_json(const RigidTransform& T) {
  Json j;
  j["rotation"] = Json::array({T.rotation.w(), T.rotation.x(), T.rotation.y(), T.rotation.z()});
  j["translation"] = to_json(T.translation);
  return j;
}

RigidTransform transform_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  const Json& rot = require_field(j, "rotation", path);
  if (!rot.is_array() || rot.size() != 4) {
    throw ValidationError(path + ".rotation: expected [w, x, y, z]");
  }
  for (int k = 0; k < 4; ++k) {
    if (!rot[k].is_number()) throw ValidationError(path + ".rotation: expected numbers");
  }
  const double w = rot[0].get<double>();
  const double x = rot[1].get<double>();
  const double y = rot[2].get<double>();
  const double z = rot[3].get<double>();
  const double norm = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    throw ValidationError(path + ".rotation: expected a unit quaternion");
  }
  RigidTransform T;
  T.rotation = UnitQuaternion(w, x, y, z);
  T.translation = vec3_from_json(require_field(j, "translation", path), path + ".translation");
  return T;
}

Json to_json(const KeypointSet& kp) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < kp.size(); ++i) {
    Json entry;
    entry["name"] = kp.name(i);
    entry["xyz"] = to_json(kp.point(i));
    arr.push_back(std::move(entry));
  }
  return arr;
}

KeypointSet keypoint_set_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ValidationError(path + ": expected a non-empty array of keypoints");
  }
  std::vector<std::string> names;
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string entry_path = path + "[" + std::to_string(i) + "]";
    const Json& entry = j[i];
    if (!entry.is_object()) throw ValidationError(entry_path + ": expected an object");
    names.push_back(require_string(entry, "name", entry_path));
    points.push_back(vec3_from_json(require_field(entry, "xyz", entry_path), entry_path + ".xyz"));
  }
  try {
    return KeypointSet(std::move(names), std::move(points));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

const Json& require_field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(path + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double require_number(const Json& j, const std::string& key, const std::string& path) {
  const Json& field = require_field(j, key, path);
  if (!field.is_number()) throw ValidationError(path + "." + key + ": expected a number");
  const double value = field.get<double>();
  if (!std::isfinite(value)) throw ValidationError(path + "." + key + ": must be finite");
  return value;
}

std::string require_string(const Json& j, const std::string& key, const std::string& path) {
  const Json& field = require_field(j, key, path);
  if (!field.is_string()) throw ValidationError(path + "." + key + ": expected a string");
  return field.get<std::string>();
}

Json parse_json(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(what + ": malformed JSON");
  return j;
}

std::string read_file(const std::string& file_path) {
  std::ifstream in(file_path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + file_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& file_path, const std::string& contents) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + file_path);
  out << contents;
}

}  // namespace kpam
