#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "kpam/errors.hpp"
#include "kpam/heatmap.hpp"
#include "kpam/random.hpp"

using namespace kpam;

namespace {

Heatmap uniform_heatmap(int width, int height, int num_keypoints, double depth_value) {
  Heatmap hm;
  hm.width = width;
  hm.height = height;
  for (int k = 0; k < num_keypoints; ++k) {
    hm.probability.push_back(
        Eigen::ArrayXXd::Constant(height, width, 1.0 / (width * height)));
    hm.depth.push_back(Eigen::ArrayXXd::Constant(height, width, depth_value));
  }
  return hm;
}

Heatmap random_heatmap(Rng& rng, int width, int height, int num_keypoints) {
  Heatmap hm;
  hm.width = width;
  hm.height = height;
  for (int k = 0; k < num_keypoints; ++k) {
    Eigen::ArrayXXd prob(height, width);
    Eigen::ArrayXXd depth(height, width);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        prob(r, c) = rng.uniform(0.0, 1.0);
        depth(r, c) = rng.uniform(0.2, 3.0);
      }
    }
    prob /= prob.sum();
    hm.probability.push_back(std::move(prob));
    hm.depth.push_back(std::move(depth));
  }
  return hm;
}

// Brute-force double sums, the oracle the integral ops are checked against.
std::pair<double, double> brute_force_uv(const Heatmap& hm, int k) {
  double u = 0.0, v = 0.0;
  for (int r = 0; r < hm.height; ++r) {
    for (int c = 0; c < hm.width; ++c) {
      u += c * hm.probability[k](r, c);
      v += r * hm.probability[k](r, c);
    }
  }
  return {u, v};
}

double brute_force_depth(const Heatmap& hm, int k) {
  double z = 0.0;
  for (int r = 0; r < hm.height; ++r) {
    for (int c = 0; c < hm.width; ++c) z += hm.depth[k](r, c) * hm.probability[k](r, c);
  }
  return z;
}

}  // namespace

TEST_CASE("integral_uv: point mass and symmetric mass") {
  Heatmap hm = uniform_heatmap(16, 16, 1, 0.42);
  hm.probability[0].setZero();
  hm.probability[0](3, 7) = 1.0;  // row 3, col 7 -> (u, v) = (7, 3)
  const auto [u, v] = integral_uv(hm, 0);
  CHECK(u == doctest::Approx(7.0));
  CHECK(v == doctest::Approx(3.0));
  CHECK(integral_depth(hm, 0) == doctest::Approx(0.42));

  hm.probability[0].setZero();
  hm.probability[0](0, 0) = 0.5;
  hm.probability[0](0, 10) = 0.5;
  const auto [u2, v2] = integral_uv(hm, 0);
  CHECK(u2 == doctest::Approx(5.0));
  CHECK(v2 == doctest::Approx(0.0));
}

TEST_CASE("integral_depth: uniform probability, constant depth") {
  const Heatmap hm = uniform_heatmap(12, 9, 2, 1.0);
  CHECK(integral_depth(hm, 0) == doctest::Approx(1.0));
  CHECK(integral_depth(hm, 1) == doctest::Approx(1.0));
}

TEST_CASE("integral ops match brute-force summation on random heatmaps") {
  Rng rng(61);
  for (int i = 0; i < 200; ++i) {
    const Heatmap hm = random_heatmap(rng, 16, 16, 1);
    const auto [u, v] = integral_uv(hm, 0);
    const auto [bu, bv] = brute_force_uv(hm, 0);
    CHECK(std::abs(u - bu) < 1e-9);
    CHECK(std::abs(v - bv) < 1e-9);
    CHECK(std::abs(integral_depth(hm, 0) - brute_force_depth(hm, 0)) < 1e-9);

    // Result lies inside the pixel bounding box of the support.
    CHECK(u >= 0.0);
    CHECK(u <= hm.width - 1.0);
    CHECK(v >= 0.0);
    CHECK(v <= hm.height - 1.0);
  }
}

TEST_CASE("integral_uv is shift-equivariant for interior mass") {
  Rng rng(62);
  Heatmap hm = uniform_heatmap(20, 20, 1, 1.0);
  // Mass confined to a 6x6 block away from the borders.
  hm.probability[0].setZero();
  for (int r = 4; r < 10; ++r) {
    for (int c = 5; c < 11; ++c) hm.probability[0](r, c) = rng.uniform(0.1, 1.0);
  }
  hm.probability[0] /= hm.probability[0].sum();

  Heatmap shifted = hm;
  shifted.probability[0].setZero();
  const int du = 3, dv = 6;
  for (int r = 4; r < 10; ++r) {
    for (int c = 5; c < 11; ++c) shifted.probability[0](r + dv, c + du) = hm.probability[0](r, c);
  }

  const auto [u, v] = integral_uv(hm, 0);
  const auto [us, vs] = integral_uv(shifted, 0);
  CHECK(us - u == doctest::Approx(du).epsilon(1e-12));
  CHECK(vs - v == doctest::Approx(dv).epsilon(1e-12));
}

TEST_CASE("expectation lies in the convex hull of the support") {
  // Two-point support: expectation is on the segment between them.
  Heatmap hm = uniform_heatmap(16, 16, 1, 1.0);
  hm.probability[0].setZero();
  hm.probability[0](2, 3) = 0.25;
  hm.probability[0](10, 13) = 0.75;
  const auto [u, v] = integral_uv(hm, 0);
  CHECK(u == doctest::Approx(0.25 * 3 + 0.75 * 13));
  CHECK(v == doctest::Approx(0.25 * 2 + 0.75 * 10));
}

TEST_CASE("integral ops validate index and normalization") {
  Heatmap hm = uniform_heatmap(8, 8, 2, 1.0);
  CHECK_THROWS_AS(std::ignore = integral_uv(hm, -1), IndexOutOfRange);
  CHECK_THROWS_AS(std::ignore = integral_uv(hm, 2), IndexOutOfRange);
  CHECK_THROWS_AS(std::ignore = integral_depth(hm, 5), IndexOutOfRange);

  hm.probability[0] *= 1.5;  // clearly unnormalized
  CHECK_THROWS_AS(std::ignore = integral_uv(hm, 0), UnnormalizedHeatmap);
  CHECK_THROWS_AS(std::ignore = integral_depth(hm, 0), UnnormalizedHeatmap);
}

TEST_CASE("renormalization repairs small deviations and rejects large ones") {
  Heatmap hm = uniform_heatmap(8, 8, 1, 1.0);
  hm.probability[0] *= 1.0005;  // within the 1e-3 repair band
  CHECK_THROWS_AS(std::ignore = integral_uv(hm, 0), UnnormalizedHeatmap);
  renormalize_heatmap(hm);
  CHECK(hm.probability[0].sum() == doctest::Approx(1.0));
  CHECK_NOTHROW(std::ignore = integral_uv(hm, 0));

  hm.probability[0] *= 1.1;  // far out of band
  CHECK_THROWS_AS(renormalize_heatmap(hm), UnnormalizedHeatmap);
}

TEST_CASE("backproject: principal point, substitution, projection round-trip") {
  const CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 320.0};
  CHECK((backproject(320.0, 320.0, 1.0, intrinsics) - Vec3(0, 0, 1)).norm() < 1e-12);
  CHECK((backproject(820.0, 320.0, 2.0, intrinsics) - Vec3(2, 0, 2)).norm() < 1e-12);

  Rng rng(63);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 4.0));
    const double u = intrinsics.fx * p.x() / p.z() + intrinsics.cx;
    const double v = intrinsics.fy * p.y() / p.z() + intrinsics.cy;
    CHECK((backproject(u, v, p.z(), intrinsics) - p).norm() < 1e-9);
  }

  CHECK_THROWS_AS(std::ignore = backproject(0, 0, 0.0, intrinsics), NonPositiveDepth);
  CHECK_THROWS_AS(std::ignore = backproject(0, 0, -1.0, intrinsics), NonPositiveDepth);
  CHECK_THROWS_AS(std::ignore = backproject(0, 0, 1.0, CameraIntrinsics{0, 500, 0, 0}),
                  ValidationError);
}

TEST_CASE("binary round-trip preserves grids to float precision") {
  Rng rng(64);
  const Heatmap hm = random_heatmap(rng, 24, 17, 3);
  const Heatmap back = parse_heatmap_binary(serialize_heatmap_binary(hm));
  REQUIRE(back.width == hm.width);
  REQUIRE(back.height == hm.height);
  REQUIRE(back.num_keypoints() == 3);
  for (int k = 0; k < 3; ++k) {
    // float32 storage plus renormalization: ~1e-7 relative.
    CHECK((back.probability[k] - hm.probability[k]).abs().maxCoeff() < 1e-6);
    CHECK((back.depth[k] - hm.depth[k]).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("binary parser rejects malformed framing") {
  Rng rng(65);
  const std::string good = serialize_heatmap_binary(random_heatmap(rng, 8, 8, 1));

  CHECK_THROWS_AS(std::ignore = parse_heatmap_binary("XXXX"), ParseError);
  CHECK_THROWS_AS(std::ignore = parse_heatmap_binary(good.substr(0, good.size() - 5)), ParseError);
  std::string bad_version = good;
  bad_version[4] = 9;
  CHECK_THROWS_AS(std::ignore = parse_heatmap_binary(bad_version), ParseError);

  // Absurd header dims are rejected before allocation.
  std::string absurd = good.substr(0, 20);
  absurd[8] = absurd[9] = absurd[10] = absurd[11] = char(0xff);
  CHECK_THROWS_AS(std::ignore = parse_heatmap_binary(absurd), ParseError);
}

TEST_CASE("JSON debug form round-trips and cross-loads") {
  Rng rng(66);
  const Heatmap hm = random_heatmap(rng, 6, 5, 2);
  const Heatmap back = parse_heatmap_json(serialize_heatmap_json(hm));
  CHECK(back.width == 6);
  CHECK(back.height == 5);
  CHECK((back.probability[1] - hm.probability[1]).abs().maxCoeff() < 1e-12);

  const std::string path = "/tmp/kpam_test_heatmap.kphm";
  save_heatmap(hm, path);
  const Heatmap loaded = load_heatmap(path);
  CHECK(loaded.width == hm.width);
  std::remove(path.c_str());

  CHECK_THROWS_AS(std::ignore = parse_heatmap_json("{\"kpam_heatmap_version\":1}"),
                  ValidationError);
}

TEST_CASE("intrinsics JSON round-trip and validation") {
  const CameraIntrinsics intrinsics{525.5, 526.5, 319.5, 239.5};
  const CameraIntrinsics back = parse_intrinsics(serialize_intrinsics(intrinsics));
  CHECK(back.fx == intrinsics.fx);
  CHECK(back.fy == intrinsics.fy);
  CHECK(back.cx == intrinsics.cx);
  CHECK(back.cy == intrinsics.cy);

  CHECK_THROWS_AS(std::ignore = parse_intrinsics("{\"fx\":-1,\"fy\":1,\"cx\":0,\"cy\":0}"),
                  ValidationError);
  CHECK_THROWS_AS(std::ignore = parse_intrinsics("oops"), ParseError);
}
