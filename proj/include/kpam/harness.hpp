#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "kpam/pose_baseline.hpp"
#include "kpam/scenes.hpp"
#include "kpam/solver.hpp"
#include "kpam/taskspec.hpp"
#include "kpam/terms.hpp"

namespace kpam {

enum class Method { kpam, pose_baseline };

std::string method_name(Method method);
Method method_from_name(const std::string& name);

// Success criteria evaluated on the transformed true keypoints.

// Keypoint lands within `radius` of its target.
struct PlacementWithinPredicate {
  std::string keypoint;
  Vec3 target{0.0, 0.0, 0.0};
  double radius = 0.05;
};

// Handle keypoint lands within `capture_radius` of the peg point. peg_axis
// records the peg direction (the spec's approach direction).
struct HandleOnPegPredicate {
  std::string handle_keypoint;
  Vec3 peg_point{0.0, 0.0, 0.0};
  Vec3 peg_axis{0.0, 0.0, 1.0};
  double capture_radius = 0.01;
};

// No keypoint penetrates the half space by more than `margin`.
struct NoPenetrationPredicate {
  PlaneSpec plane;
  double margin = 1e-6;
};

using SuccessPredicate =
    std::variant<PlacementWithinPredicate, HandleOnPegPredicate, NoPenetrationPredicate>;

std::string predicate_label(const SuccessPredicate& predicate);

struct PredicateOutcome {
  std::string label;
  bool success = false;
  double value = 0.0;  // distance (placement/peg) or max signed penetration
};

struct TrialRecord {
  std::string instance_id;
  Method method = Method::kpam;
  bool ok = false;           // trial ran without error
  std::string error;         // diagnostic when !ok
  RigidTransform action;
  std::vector<PredicateOutcome> outcomes;          // one per configured predicate
  std::vector<NamedResidual> keypoint_errors;      // ||T*p_true - target|| per targeted keypoint
  bool solver_converged = false;
  double solver_objective = 0.0;
  int solver_iterations = 0;
};

// Optional post-action rigid disturbance (stand-in for the object shifting
// in the gripper); off by default.
struct BenchmarkOptions {
  double disturbance_rotation_sigma = 0.0;     // rad
  double disturbance_translation_sigma = 0.0;  // m
  std::uint64_t disturbance_seed = 0;
};

// Paper-default predicates derived from the spec: each point-target
// constraint becomes HandleOnPeg (1 cm) when the spec has an approach
// direction, else PlacementWithin (5 cm); each distinct half-space plane
// becomes NoPenetration.
std::vector<SuccessPredicate> default_predicates(const TaskSpec& spec);

// Category-level template for the pose baseline: canonical keypoints plus
// the task solution on the canonical instance as target pose.
Template derive_template(const TaskSpec& spec, const CategoryModel& model,
                         const SolverConfig& config);

// One record per (scene, method), methods in fixed enum order, actions
// evaluated on true keypoints. Per-trial errors are captured in the record
// rather than aborting the batch. Output is sorted by (instance_id, method).
std::vector<TrialRecord> run_benchmark(const std::vector<SceneInstance>& scenes,
                                       const TaskSpec& spec,
                                       const std::vector<SuccessPredicate>& predicates,
                                       const std::set<Method>& methods,
                                       const SolverConfig& config,
                                       const BenchmarkOptions& options = {});

struct KeypointErrorStats {
  std::string keypoint;
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
};

struct PredicateStats {
  std::string label;
  int successes = 0;
  int trials = 0;
};

struct MethodSummary {
  Method method = Method::kpam;
  int trials = 0;
  int failed_trials = 0;  // trials with ok == false
  std::vector<PredicateStats> predicates;
  std::vector<KeypointErrorStats> keypoint_errors;
};

struct BenchmarkSummary {
  std::vector<MethodSummary> methods;
};

// Per method: success rate per predicate, mean/median/std of each keypoint's
// placement error. Throws EmptyInput on an empty record list.
BenchmarkSummary summarize(const std::vector<TrialRecord>& records);

// Fixed column order, deterministic float formatting; byte-identical for
// identical inputs and seeds.
std::string records_to_csv(const std::vector<TrialRecord>& records,
                           const std::vector<SuccessPredicate>& predicates);

std::string summary_to_markdown(const BenchmarkSummary& summary);

}  // namespace kpam
