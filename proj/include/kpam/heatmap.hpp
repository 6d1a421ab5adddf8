#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "kpam/geometry.hpp"

namespace kpam {

// Per-keypoint probability and depth grids. Pixel convention: (u, v) =
// (column, row), origin at the top-left pixel center; grids are indexed
// (row, col). Each probability grid sums to 1.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<Eigen::ArrayXXd> probability;  // height x width each
  std::vector<Eigen::ArrayXXd> depth;        // meters

  int num_keypoints() const { return static_cast<int>(probability.size()); }
};

// Structural checks: positive dims, matching grid shapes, non-negative
// probabilities, per-keypoint sums within `sum_tolerance` of 1. Throws
// ValidationError / UnnormalizedHeatmap.
void validate_heatmap(const Heatmap& hm, double sum_tolerance = 1e-6);

// Rescales grids whose mass is within 1e-3 of 1 to sum exactly to 1; larger
// deviation throws UnnormalizedHeatmap. Applied by the file loaders, since
// serialized softmax output is never exactly normalized.
void renormalize_heatmap(Heatmap& hm);

// Expected pixel coordinate (u, v) of keypoint k under its probability grid.
std::pair<double, double> integral_uv(const Heatmap& hm, int keypoint_index);

// Probability-weighted mean depth of keypoint k.
double integral_depth(const Heatmap& hm, int keypoint_index);

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

// Pinhole backprojection to the camera frame:
// ((u - cx) z / fx, (v - cy) z / fy, z). Throws NonPositiveDepth for z <= 0.
Vec3 backproject(double u, double v, double z, const CameraIntrinsics& intrinsics);

// Binary format, little-endian: "KPHM", u32 version (1), u32 width, u32
// height, u32 num_keypoints, then row-major float32 probability grids for
// every keypoint followed by the depth grids.
std::string serialize_heatmap_binary(const Heatmap& hm);
Heatmap parse_heatmap_binary(const std::string& bytes);
void save_heatmap(const Heatmap& hm, const std::string& file_path);
// Accepts the binary format or the JSON debug form (sniffed by magic).
Heatmap load_heatmap(const std::string& file_path);

// JSON debug form: grids as flat row-major arrays per keypoint.
std::string serialize_heatmap_json(const Heatmap& hm);
Heatmap parse_heatmap_json(const std::string& text);

CameraIntrinsics parse_intrinsics(const std::string& text);
std::string serialize_intrinsics(const CameraIntrinsics& intrinsics);
CameraIntrinsics load_intrinsics(const std::string& file_path);

}  // namespace kpam
