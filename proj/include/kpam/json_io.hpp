#pragma once

#include <nlohmann/json.hpp>

#include <string>

#include "kpam/geometry.hpp"

namespace kpam {

// Insertion-ordered JSON everywhere so canonical serializations are
// byte-stable.
using Json = nlohmann::ordered_json;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j, const std::string& path);

// {"rotation": [w, x, y, z], "translation": [x, y, z]}
Json to_json(const RigidTransform& T);
RigidTransform transform_from_json(const Json& j, const std::string& path);

// [{"name": ..., "xyz": [...]}, ...]
Json to_json(const KeypointSet& kp);
KeypointSet keypoint_set_from_json(const Json& j, const std::string& path);

// Field access that reports the offending path in ValidationError.
const Json& require_field(const Json& j, const std::string& key, const std::string& path);
double require_number(const Json& j, const std::string& key, const std::string& path);
std::string require_string(const Json& j, const std::string& key, const std::string& path);

// Parses bytes; malformed input yields ParseError.
Json parse_json(const std::string& text, const std::string& what);

std::string read_file(const std::string& file_path);
void write_file(const std::string& file_path, const std::string& contents);

}  // namespace kpam
