// Command-line interface: solve task specs against keypoint observations,
// generate synthetic scenes, run kPAM-vs-baseline benchmarks, extract
// keypoints from heatmap files, and check term Jacobians.
//
// Exit codes: 0 success, 1 usage error, 2 validation error,
// 3 solver non-convergence (solve only).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "kpam/errors.hpp"
#include "kpam/gradcheck.hpp"
#include "kpam/harness.hpp"
#include "kpam/heatmap.hpp"
#include "kpam/json_io.hpp"
#include "kpam/scenes.hpp"
#include "kpam/solver.hpp"
#include "kpam/taskspec.hpp"

namespace {

using kpam::Json;

Json solve_result_to_json(const kpam::SolveResult& result) {
  Json j;
  j["transform"] = kpam::to_json(result.transform);
  j["objective"] = result.objective;
  Json residuals = Json::array();
  for (const auto& r : result.constraint_residuals) {
    Json entry;
    entry["name"] = r.name;
    entry["value"] = r.value;
    residuals.push_back(std::move(entry));
  }
  j["constraint_residuals"] = std::move(residuals);
  j["converged"] = result.converged;
  j["starts_tried"] = result.starts_tried;
  j["iterations_used"] = result.iterations_used;
  return j;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    kpam::write_file(out_path, text);
  }
}

int run_solve(const std::string& spec_path, const std::string& keypoints_path,
              std::uint64_t seed, const std::string& out_path) {
  const kpam::TaskSpec spec = kpam::load_task_spec(spec_path);
  const kpam::KeypointObservation obs = kpam::load_keypoint_observation(keypoints_path);
  kpam::SolverConfig config;
  config.rng_seed = seed;

  const kpam::Problem problem = kpam::instantiate_problem(spec, obs.keypoints);
  const kpam::SolveResult result = kpam::solve(problem, config);

  Json j = solve_result_to_json(result);
  if (spec.approach) {
    j["approach_transform"] = kpam::to_json(kpam::apply_approach_offset(
        result.transform, spec.approach->direction, spec.approach->distance));
  }
  emit(j.dump(2) + "\n", out_path);
  return result.converged ? 0 : 3;
}

int run_gen(const std::string& category, int count, double noise_sigma, std::uint64_t seed,
            const std::string& pose, const std::string& out_path) {
  const kpam::CategoryModel model = kpam::canonical_category_model(category);
  kpam::PoseDistribution dist;
  bool alternate = false;
  if (pose == "upright") {
    dist.orientation = kpam::StartOrientation::upright;
  } else if (pose == "side") {
    dist.orientation = kpam::StartOrientation::side_lying;
  } else if (pose == "random") {
    dist.orientation = kpam::StartOrientation::random_so3;
  } else if (pose == "mixed") {
    dist.orientation = kpam::StartOrientation::upright;
    alternate = true;
  } else {
    throw kpam::ValidationError("--pose: expected upright|side|random|mixed");
  }
  const kpam::SceneSet scenes =
      kpam::generate_scenes(model, dist, count, noise_sigma, seed, alternate);
  emit(kpam::serialize_scene_set(scenes), out_path);
  return 0;
}

int run_eval(const std::string& scenes_path, const std::string& spec_path,
             const std::string& methods_csv, const std::string& out_csv,
             std::uint64_t seed) {
  const kpam::SceneSet scenes = kpam::load_scene_set(scenes_path);
  const kpam::TaskSpec spec = kpam::load_task_spec(spec_path);
  if (scenes.category != spec.category) {
    throw kpam::ValidationError("scene category '" + scenes.category +
                                "' does not match spec category '" + spec.category + "'");
  }

  std::set<kpam::Method> methods;
  std::stringstream ss(methods_csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) methods.insert(kpam::method_from_name(token));
  }

  kpam::SolverConfig config;
  config.rng_seed = seed;
  const auto predicates = kpam::default_predicates(spec);
  const auto records =
      kpam::run_benchmark(scenes.instances, spec, predicates, methods, config);
  kpam::write_file(out_csv, kpam::records_to_csv(records, predicates));
  if (!records.empty()) {
    std::cout << kpam::summary_to_markdown(kpam::summarize(records));
  }
  return 0;
}

int run_detect_sim(const std::string& heatmap_path, const std::string& intrinsics_path,
                   const std::string& out_path, const std::string& names_csv,
                   const std::string& object_id, const std::string& category) {
  const kpam::Heatmap hm = kpam::load_heatmap(heatmap_path);
  const kpam::CameraIntrinsics intrinsics = kpam::load_intrinsics(intrinsics_path);

  std::vector<std::string> names;
  if (!names_csv.empty()) {
    std::stringstream ss(names_csv);
    std::string token;
    while (std::getline(ss, token, ',')) names.push_back(token);
    if (static_cast<int>(names.size()) != hm.num_keypoints()) {
      throw kpam::ValidationError("--names: expected " + std::to_string(hm.num_keypoints()) +
                                  " comma-separated names");
    }
  } else {
    for (int k = 0; k < hm.num_keypoints(); ++k) names.push_back("kp_" + std::to_string(k));
  }

  std::vector<kpam::Vec3> points;
  for (int k = 0; k < hm.num_keypoints(); ++k) {
    const auto [u, v] = kpam::integral_uv(hm, k);
    const double z = kpam::integral_depth(hm, k);
    points.push_back(kpam::backproject(u, v, z, intrinsics));
  }

  const kpam::KeypointObservation obs{object_id, category,
                                      kpam::KeypointSet(names, std::move(points))};
  emit(kpam::serialize_keypoint_observation(obs), out_path);
  return 0;
}

int run_gradcheck(int trials) {
  const kpam::GradientCheckReport report = kpam::check_term_jacobians(trials);
  for (const auto& v : report.variants) {
    std::printf("%-16s trials=%-4d max_rel_err=%.3e  %s\n", v.variant.c_str(), v.trials,
                v.max_relative_error, v.passed ? "PASS" : "FAIL");
  }
  std::printf("gradcheck: %s (max relative error %.3e, tolerance 1e-5)\n",
              report.passed ? "PASS" : "FAIL", report.max_relative_error);
  return report.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kPAM keypoint-based pick-and-place planner"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve a task spec against a keypoint observation");
  std::string spec_path, keypoints_path, out_path;
  std::uint64_t seed = 0;
  solve_cmd->add_option("--spec", spec_path, "Task spec JSON file")->required();
  solve_cmd->add_option("--keypoints", keypoints_path, "Keypoint observation JSON file")
      ->required();
  solve_cmd->add_option("--seed", seed, "Multistart RNG seed");
  solve_cmd->add_option("--out", out_path, "Output file for the SolveResult JSON (default stdout)");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic category instances");
  std::string category = "mug", pose = "mixed", gen_out;
  int count = 10;
  double noise_sigma = 0.002;
  std::uint64_t gen_seed = 0;
  gen_cmd->add_option("--category", category, "mug or shoe")->required();
  gen_cmd->add_option("--count", count, "Number of instances")->required();
  gen_cmd->add_option("--noise-sigma", noise_sigma, "Keypoint noise std (m)")->required();
  gen_cmd->add_option("--seed", gen_seed, "Base RNG seed")->required();
  gen_cmd->add_option("--out", gen_out, "Output scene JSON file")->required();
  gen_cmd->add_option("--pose", pose, "Start orientation: upright|side|random|mixed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Benchmark methods over a scene file");
  std::string scenes_path, eval_spec_path, methods_csv = "kpam,pose_baseline", out_csv;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--scenes", scenes_path, "Scene JSON file")->required();
  eval_cmd->add_option("--spec", eval_spec_path, "Task spec JSON file")->required();
  eval_cmd->add_option("--methods", methods_csv, "Comma-separated: kpam,pose_baseline");
  eval_cmd->add_option("--out-csv", out_csv, "Output CSV file")->required();
  eval_cmd->add_option("--seed", eval_seed, "Solver RNG seed");

  // detect-sim
  auto* detect_cmd =
      app.add_subcommand("detect-sim", "Extract keypoints from a heatmap file (integral op)");
  std::string heatmap_path, intrinsics_path, detect_out, names_csv, object_id = "object_0",
                                                                    obs_category = "unknown";
  detect_cmd->add_option("--heatmap", heatmap_path, "Heatmap file (KPHM binary or JSON)")
      ->required();
  detect_cmd->add_option("--intrinsics", intrinsics_path, "Camera intrinsics JSON")->required();
  detect_cmd->add_option("--out", detect_out, "Output keypoint observation JSON");
  detect_cmd->add_option("--names", names_csv, "Comma-separated keypoint names");
  detect_cmd->add_option("--object-id", object_id, "Object id for the observation");
  detect_cmd->add_option("--category", obs_category, "Category for the observation");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all term Jacobians");
  int trials = 100;
  grad_cmd->add_option("--trials", trials, "Random trials per term variant");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return run_solve(spec_path, keypoints_path, seed, out_path);
    if (gen_cmd->parsed()) return run_gen(category, count, noise_sigma, gen_seed, pose, gen_out);
    if (eval_cmd->parsed())
      return run_eval(scenes_path, eval_spec_path, methods_csv, out_csv, eval_seed);
    if (detect_cmd->parsed())
      return run_detect_sim(heatmap_path, intrinsics_path, detect_out, names_csv, object_id,
                            obs_category);
    if (grad_cmd->parsed()) return run_gradcheck(trials);
  } catch (const kpam::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
