#include "kpam/heatmap.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#include "kpam/errors.hpp"
#include "kpam/json_io.hpp"

namespace kpam {

namespace {

constexpr char kMagic[4] = {'K', 'P', 'H', 'M'};
constexpr std::uint32_t kBinaryVersion = 1;
constexpr std::uint32_t kMaxGridCells = 1u << 26;  // 64M cells; rejects absurd headers

void check_index(const Heatmap& hm, int keypoint_index) {
  if (keypoint_index < 0 || keypoint_index >= hm.num_keypoints()) {
    throw IndexOutOfRange("keypoint index " + std::to_string(keypoint_index) + " out of range [0, " +
                          std::to_string(hm.num_keypoints()) + ")");
  }
}

void check_normalized(const Eigen::ArrayXXd& probability, int keypoint_index) {
  const double sum = probability.sum();
  if (std::abs(sum - 1.0) > 1e-6) {
    throw UnnormalizedHeatmap("probability mass for keypoint " + std::to_string(keypoint_index) +
                              " sums to " + std::to_string(sum));
  }
}

void append_u32(std::string& out, std::uint32_t value) {
  char buf[4];
  std::memcpy(buf, &value, 4);
  out.append(buf, 4);
}

std::uint32_t read_u32(const std::string& bytes, std::size_t offset) {
  std::uint32_t value;
  std::memcpy(&value, bytes.data() + offset, 4);
  return value;
}

}  // namespace

void validate_heatmap(const Heatmap& hm, double sum_tolerance) {
  if (hm.width <= 0 || hm.height <= 0) {
    throw ValidationError("heatmap: width and height must be positive");
  }
  if (hm.probability.empty() || hm.probability.size() != hm.depth.size()) {
    throw ValidationError("heatmap: need matching probability and depth grids, >= 1 keypoint");
  }
  for (int k = 0; k < hm.num_keypoints(); ++k) {
    const auto& prob = hm.probability[k];
    const auto& depth = hm.depth[k];
    if (prob.rows() != hm.height || prob.cols() != hm.width || depth.rows() != hm.height ||
        depth.cols() != hm.width) {
      throw ValidationError("heatmap: grid dimensions disagree with header");
    }
    if (!(prob >= 0.0).all() || !prob.isFinite().all()) {
      throw ValidationError("heatmap: probabilities must be finite and >= 0");
    }
    if (!depth.isFinite().all()) {
      throw ValidationError("heatmap: depths must be finite");
    }
    const double sum = prob.sum();
    if (std::abs(sum - 1.0) > sum_tolerance) {
      throw UnnormalizedHeatmap("probability mass for keypoint " + std::to_string(k) +
                                " sums to " + std::to_string(sum));
    }
  }
}

void renormalize_heatmap(Heatmap& hm) {
  validate_heatmap(hm, 1e-3);
  for (auto& prob : hm.probability) prob /= prob.sum();
}

std::pair<double, double> integral_uv(const Heatmap& hm, int keypoint_index) {
  check_index(hm, keypoint_index);
  const auto& prob = hm.probability[keypoint_index];
  check_normalized(prob, keypoint_index);

  double u = 0.0;
  const Eigen::ArrayXd col_mass = prob.colwise().sum();
  for (int c = 0; c < hm.width; ++c) u += static_cast<double>(c) * col_mass(c);
  double v = 0.0;
  const Eigen::ArrayXd row_mass = prob.rowwise().sum();
  for (int r = 0; r < hm.height; ++r) v += static_cast<double>(r) * row_mass(r);
  return {u, v};
}

double integral_depth(const Heatmap& hm, int keypoint_index) {
  check_index(hm, keypoint_index);
  const auto& prob = hm.probability[keypoint_index];
  check_normalized(prob, keypoint_index);
  return (prob * hm.depth[keypoint_index]).sum();
}

Vec3 backproject(double u, double v, double z, const CameraIntrinsics& intrinsics) {
  if (!(z > 0.0)) throw NonPositiveDepth("backproject: depth must be > 0, got " + std::to_string(z));
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw ValidationError("backproject: focal lengths must be > 0");
  }
  return Vec3((u - intrinsics.cx) * z / intrinsics.fx, (v - intrinsics.cy) * z / intrinsics.fy, z);
}

std::string serialize_heatmap_binary(const Heatmap& hm) {
  validate_heatmap(hm);
  std::string out;
  const std::size_t cells = static_cast<std::size_t>(hm.width) * hm.height;
  out.reserve(20 + 2 * hm.probability.size() * cells * 4);
  out.append(kMagic, 4);
  append_u32(out, kBinaryVersion);
  append_u32(out, static_cast<std::uint32_t>(hm.width));
  append_u32(out, static_cast<std::uint32_t>(hm.height));
  append_u32(out, static_cast<std::uint32_t>(hm.num_keypoints()));

  auto append_grid = [&out, &hm](const Eigen::ArrayXXd& grid) {
    for (int r = 0; r < hm.height; ++r) {
      for (int c = 0; c < hm.width; ++c) {
        const float value = static_cast<float>(grid(r, c));
        char buf[4];
        std::memcpy(buf, &value, 4);
        out.append(buf, 4);
      }
    }
  };
  for (const auto& grid : hm.probability) append_grid(grid);
  for (const auto& grid : hm.depth) append_grid(grid);
  return out;
}

Heatmap parse_heatmap_binary(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("heatmap: missing KPHM magic");
  }
  if (read_u32(bytes, 4) != kBinaryVersion) {
    throw ParseError("heatmap: unsupported version " + std::to_string(read_u32(bytes, 4)));
  }
  const std::uint32_t width = read_u32(bytes, 8);
  const std::uint32_t height = read_u32(bytes, 12);
  const std::uint32_t num_keypoints = read_u32(bytes, 16);
  if (width == 0 || height == 0 || num_keypoints == 0 ||
      static_cast<std::uint64_t>(width) * height > kMaxGridCells || num_keypoints > 4096) {
    throw ParseError("heatmap: implausible header dimensions");
  }
  const std::size_t cells = static_cast<std::size_t>(width) * height;
  const std::size_t expected = 20 + 2 * static_cast<std::size_t>(num_keypoints) * cells * 4;
  if (bytes.size() != expected) {
    throw ParseError("heatmap: expected " + std::to_string(expected) + " bytes, got " +
                     std::to_string(bytes.size()));
  }

  Heatmap hm;
  hm.width = static_cast<int>(width);
  hm.height = static_cast<int>(height);
  std::size_t offset = 20;
  auto read_grid = [&bytes, &offset, &hm]() {
    Eigen::ArrayXXd grid(hm.height, hm.width);
    for (int r = 0; r < hm.height; ++r) {
      for (int c = 0; c < hm.width; ++c) {
        float value;
        std::memcpy(&value, bytes.data() + offset, 4);
        offset += 4;
        grid(r, c) = static_cast<double>(value);
      }
    }
    return grid;
  };
  for (std::uint32_t k = 0; k < num_keypoints; ++k) hm.probability.push_back(read_grid());
  for (std::uint32_t k = 0; k < num_keypoints; ++k) hm.depth.push_back(read_grid());
  renormalize_heatmap(hm);
  return hm;
}

void save_heatmap(const Heatmap& hm, const std::string& file_path) {
  write_file(file_path, serialize_heatmap_binary(hm));
}

Heatmap load_heatmap(const std::string& file_path) {
  const std::string bytes = read_file(file_path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
    return parse_heatmap_binary(bytes);
  }
  return parse_heatmap_json(bytes);
}

std::string serialize_heatmap_json(const Heatmap& hm) {
  validate_heatmap(hm);
  Json j;
  j["kpam_heatmap_version"] = 1;
  j["width"] = hm.width;
  j["height"] = hm.height;
  j["num_keypoints"] = hm.num_keypoints();
  auto grids_to_json = [&hm](const std::vector<Eigen::ArrayXXd>& grids) {
    Json all = Json::array();
    for (const auto& grid : grids) {
      Json flat = Json::array();
      for (int r = 0; r < hm.height; ++r) {
        for (int c = 0; c < hm.width; ++c) flat.push_back(grid(r, c));
      }
      all.push_back(std::move(flat));
    }
    return all;
  };
  j["probability"] = grids_to_json(hm.probability);
  j["depth"] = grids_to_json(hm.depth);
  return j.dump() + "\n";
}

Heatmap parse_heatmap_json(const std::string& text) {
  const Json j = parse_json(text, "heatmap json");
  if (!j.is_object()) throw ValidationError("heatmap json: expected an object");
  const Json& version = require_field(j, "kpam_heatmap_version", "heatmap json");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ValidationError("kpam_heatmap_version: expected 1");
  }
  Heatmap hm;
  hm.width = static_cast<int>(require_number(j, "width", "heatmap json"));
  hm.height = static_cast<int>(require_number(j, "height", "heatmap json"));
  const int num_keypoints = static_cast<int>(require_number(j, "num_keypoints", "heatmap json"));
  if (hm.width <= 0 || hm.height <= 0 || num_keypoints <= 0 ||
      static_cast<std::uint64_t>(hm.width) * hm.height > kMaxGridCells) {
    throw ValidationError("heatmap json: implausible dimensions");
  }

  auto grids_from_json = [&hm](const Json& arr, int count, const std::string& path) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != count) {
      throw ValidationError(path + ": expected " + std::to_string(count) + " grids");
    }
    const std::size_t cells = static_cast<std::size_t>(hm.width) * hm.height;
    std::vector<Eigen::ArrayXXd> grids;
    for (int k = 0; k < count; ++k) {
      const Json& flat = arr[k];
      if (!flat.is_array() || flat.size() != cells) {
        throw ValidationError(path + "[" + std::to_string(k) + "]: expected " +
                              std::to_string(cells) + " values");
      }
      Eigen::ArrayXXd grid(hm.height, hm.width);
      std::size_t i = 0;
      for (int r = 0; r < hm.height; ++r) {
        for (int c = 0; c < hm.width; ++c, ++i) {
          if (!flat[i].is_number()) {
            throw ValidationError(path + "[" + std::to_string(k) + "]: expected numbers");
          }
          grid(r, c) = flat[i].get<double>();
        }
      }
      grids.push_back(std::move(grid));
    }
    return grids;
  };
  hm.probability = grids_from_json(require_field(j, "probability", "heatmap json"), num_keypoints,
                                   "probability");
  hm.depth = grids_from_json(require_field(j, "depth", "heatmap json"), num_keypoints, "depth");
  renormalize_heatmap(hm);
  return hm;
}

CameraIntrinsics parse_intrinsics(const std::string& text) {
  const Json j = parse_json(text, "intrinsics");
  if (!j.is_object()) throw ValidationError("intrinsics: expected an object");
  CameraIntrinsics intrinsics{
      require_number(j, "fx", "intrinsics"), require_number(j, "fy", "intrinsics"),
      require_number(j, "cx", "intrinsics"), require_number(j, "cy", "intrinsics")};
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw ValidationError("intrinsics: fx and fy must be > 0");
  }
  return intrinsics;
}

std::string serialize_intrinsics(const CameraIntrinsics& intrinsics) {
  Json j;
  j["fx"] = intrinsics.fx;
  j["fy"] = intrinsics.fy;
  j["cx"] = intrinsics.cx;
  j["cy"] = intrinsics.cy;
  return j.dump(2) + "\n";
}

CameraIntrinsics load_intrinsics(const std::string& file_path) {
  return parse_intrinsics(read_file(file_path));
}

}  // namespace kpam
