#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpam/geometry.hpp"
#include "kpam/terms.hpp"

namespace kpam {

// One optimization instance: minimize the summed cost terms over T in SE(3)
// subject to the constraint terms, keypoints entering parametrically.
struct Problem {
  KeypointSet keypoints;
  std::vector<CostTerm> costs;
  std::vector<ConstraintTerm> constraints;
};

struct SolverConfig {
  int max_outer_iterations = 20;
  int max_inner_iterations = 100;
  double initial_penalty = 10.0;
  double penalty_growth = 4.0;
  double equality_tolerance = 1e-6;    // meters
  double inequality_tolerance = 1e-6;
  double gradient_tolerance = 1e-10;
  int multistart_count = 8;
  std::uint64_t rng_seed = 0;
};

struct NamedResidual {
  std::string name;
  double value = 0.0;
};

struct SolveResult {
  RigidTransform transform;
  double objective = 0.0;
  std::vector<NamedResidual> constraint_residuals;
  bool converged = false;
  int starts_tried = 0;
  int iterations_used = 0;
};

// Throws InvalidProblem on an empty problem or unresolved keypoint
// references; ValidationError on malformed terms.
void validate_problem(const Problem& problem);

// Sum of all cost terms at T.
double problem_objective(const Problem& problem, const RigidTransform& T);

// Scalar residual of every constraint at T, in declaration order, named
// "<index>:<kind>[<keypoint>]".
std::vector<NamedResidual> problem_constraint_residuals(const Problem& problem,
                                                        const RigidTransform& T);

// Augmented-Lagrangian multistart solve. Deterministic for a fixed seed; if
// no start reaches feasibility the best-effort transform is returned with
// converged = false.
SolveResult solve(const Problem& problem, const SolverConfig& config = {});

// Least-squares rigid alignment (no scale) of source onto targets, matched
// by keypoint name. The closed-form special case of a pure point-target
// problem with N >= 3.
RigidTransform solve_closed_form_points(const KeypointSet& source, const KeypointSet& targets);

// Shifts the action away from the placement along `direction` (unit) by
// `distance` meters; rotation unchanged.
RigidTransform apply_approach_offset(const RigidTransform& T, const Vec3& direction,
                                     double distance);

}  // namespace kpam
