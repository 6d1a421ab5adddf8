#include "kpam/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kpam/errors.hpp"
#include "kpam/random.hpp"

namespace kpam {

namespace {

constexpr double kLmLambdaInit = 1e-4;
constexpr double kLmLambdaMax = 1e12;
constexpr double kLmLambdaMin = 1e-14;
constexpr double kStepTolerance = 1e-14;

struct ConstraintRows {
  // Row-level view of one constraint: equalities contribute their components
  // directly, inequalities contribute hinge rows.
  const ConstraintTerm* term = nullptr;
  bool equality = false;
  int row_count = 0;
  double feasibility_tolerance = 0.0;
};

struct StackedProblem {
  const Problem* problem = nullptr;
  std::vector<ConstraintRows> rows;
  int total_eq_rows = 0;
  int total_ineq_rows = 0;
};

StackedProblem stack_constraints(const Problem& problem, const SolverConfig& config) {
  StackedProblem sp;
  sp.problem = &problem;
  for (const auto& term : problem.constraints) {
    ConstraintRows cr;
    cr.term = &term;
    cr.equality = is_equality(term);
    if (const auto* pt = std::get_if<PointTargetConstraint>(&term)) {
      cr.row_count = 3;
      // Converged must imply both the per-term tolerance and the solver-wide
      // bound, so the check uses the stricter of the two.
      cr.feasibility_tolerance = std::min(pt->tolerance, config.equality_tolerance);
      sp.total_eq_rows += 3;
    } else if (std::holds_alternative<HalfSpaceConstraint>(term)) {
      cr.row_count = 1;
      cr.feasibility_tolerance = config.inequality_tolerance;
      sp.total_ineq_rows += 1;
    } else {
      cr.row_count = 6;
      cr.feasibility_tolerance = config.inequality_tolerance;
      sp.total_ineq_rows += 6;
    }
    sp.rows.push_back(cr);
  }
  return sp;
}

struct Multipliers {
  Eigen::VectorXd equality;    // one per equality row
  Eigen::VectorXd inequality;  // one per inequality row, >= 0
  double penalty = 0.0;
};

// Augmented-Lagrangian merit as a least-squares stack:
//   costs                            r_c
//   equalities    sqrt(rho/2) * (c + lambda/rho)
//   inequalities  sqrt(rho/2) * max(0, g + mu/rho)   (squared hinge)
void evaluate_merit(const StackedProblem& sp, const Multipliers& mult, const RigidTransform& T,
                    Eigen::VectorXd& residual, Eigen::MatrixXd* jacobian) {
  const Problem& problem = *sp.problem;
  std::vector<ResidualBlock> blocks;
  int rows = 0;
  for (const auto& term : problem.costs) {
    blocks.push_back(cost_residual(term, T, problem.keypoints));
    rows += static_cast<int>(blocks.back().value.size());
  }
  for (const auto& cr : sp.rows) {
    blocks.push_back(constraint_residual(*cr.term, T, problem.keypoints));
    rows += cr.row_count;
  }

  residual.resize(rows);
  if (jacobian != nullptr) jacobian->setZero(rows, 6);

  int row = 0;
  std::size_t b = 0;
  for (std::size_t i = 0; i < problem.costs.size(); ++i, ++b) {
    const auto& block = blocks[b];
    residual.segment(row, block.value.size()) = block.value;
    if (jacobian != nullptr) jacobian->middleRows(row, block.value.size()) = block.jacobian;
    row += static_cast<int>(block.value.size());
  }

  const double scale = std::sqrt(0.5 * mult.penalty);
  int eq_row = 0;
  int ineq_row = 0;
  for (const auto& cr : sp.rows) {
    const auto& block = blocks[b++];
    for (int k = 0; k < cr.row_count; ++k, ++row) {
      if (cr.equality) {
        const double shifted = block.value(k) + mult.equality(eq_row) / mult.penalty;
        residual(row) = scale * shifted;
        if (jacobian != nullptr) jacobian->row(row) = scale * block.jacobian.row(k);
        ++eq_row;
      } else {
        const double shifted = block.value(k) + mult.inequality(ineq_row) / mult.penalty;
        if (shifted > 0.0) {
          residual(row) = scale * shifted;
          if (jacobian != nullptr) jacobian->row(row) = scale * block.jacobian.row(k);
        } else {
          residual(row) = 0.0;
        }
        ++ineq_row;
      }
    }
  }
}

struct InnerResult {
  RigidTransform transform;
  int iterations = 0;
  bool stationary = false;  // gradient below tolerance or step below 1e-14
};

InnerResult lm_minimize(const StackedProblem& sp, const Multipliers& mult,
                        const RigidTransform& start, const SolverConfig& config) {
  InnerResult result;
  result.transform = start;

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  evaluate_merit(sp, mult, result.transform, r, &J);
  double merit = r.squaredNorm();
  double lm_lambda = kLmLambdaInit;

  for (int iter = 0; iter < config.max_inner_iterations; ++iter) {
    const Eigen::Matrix<double, 6, 1> gradient = 2.0 * J.transpose() * r;
    if (gradient.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      result.stationary = true;
      break;
    }

    Eigen::Matrix<double, 6, 6> H = J.transpose() * J;
    Eigen::Matrix<double, 6, 1> damping = H.diagonal().cwiseMax(1e-12);
    H.diagonal() += lm_lambda * damping;

    const Eigen::Matrix<double, 6, 1> step = H.ldlt().solve(-0.5 * gradient);
    ++result.iterations;

    const RigidTransform candidate = result.transform.retract(step);
    Eigen::VectorXd r_new;
    evaluate_merit(sp, mult, candidate, r_new, nullptr);
    const double merit_new = r_new.squaredNorm();

    if (merit_new < merit) {
      result.transform = candidate;
      merit = merit_new;
      evaluate_merit(sp, mult, result.transform, r, &J);
      lm_lambda = std::max(lm_lambda / 3.0, kLmLambdaMin);
      if (step.lpNorm<Eigen::Infinity>() <= kStepTolerance) {
        result.stationary = true;
        break;
      }
    } else {
      lm_lambda *= 2.0;
      if (lm_lambda > kLmLambdaMax) break;
    }
  }
  return result;
}

struct FeasibilityReport {
  bool feasible = true;
  double total_violation = 0.0;  // sum of positive scalar violations
  double max_violation = 0.0;
};

FeasibilityReport check_feasibility(const StackedProblem& sp, const RigidTransform& T) {
  FeasibilityReport report;
  for (const auto& cr : sp.rows) {
    const double residual = evaluate_constraint(*cr.term, T, sp.problem->keypoints);
    const double violation = cr.equality ? residual : std::max(0.0, residual);
    if (residual > cr.feasibility_tolerance) report.feasible = false;
    report.total_violation += violation;
    report.max_violation = std::max(report.max_violation, violation);
  }
  return report;
}

struct StartOutcome {
  RigidTransform transform;
  double objective = 0.0;
  bool feasible = false;
  bool stationary = false;
  double total_violation = 0.0;
  int inner_iterations = 0;
};

StartOutcome solve_from_start(const StackedProblem& sp, const RigidTransform& start,
                              const SolverConfig& config) {
  StartOutcome outcome;
  Multipliers mult;
  mult.equality = Eigen::VectorXd::Zero(sp.total_eq_rows);
  mult.inequality = Eigen::VectorXd::Zero(sp.total_ineq_rows);
  mult.penalty = config.initial_penalty;

  RigidTransform T = start;
  double previous_violation = std::numeric_limits<double>::infinity();
  bool stationary = false;

  for (int outer = 0; outer < config.max_outer_iterations; ++outer) {
    const InnerResult inner = lm_minimize(sp, mult, T, config);
    T = inner.transform;
    outcome.inner_iterations += inner.iterations;
    stationary = inner.stationary;

    const FeasibilityReport report = check_feasibility(sp, T);
    if ((report.feasible && stationary) || sp.rows.empty()) break;

    // First-order multiplier updates on the raw constraint rows.
    int eq_row = 0;
    int ineq_row = 0;
    for (const auto& cr : sp.rows) {
      const ResidualBlock block = constraint_residual(*cr.term, T, sp.problem->keypoints);
      for (int k = 0; k < cr.row_count; ++k) {
        if (cr.equality) {
          mult.equality(eq_row) += mult.penalty * block.value(k);
          ++eq_row;
        } else {
          mult.inequality(ineq_row) =
              std::max(0.0, mult.inequality(ineq_row) + mult.penalty * block.value(k));
          ++ineq_row;
        }
      }
    }
    // Grow the penalty unless the violation dropped by 4x.
    if (report.max_violation > 0.25 * previous_violation) {
      mult.penalty *= config.penalty_growth;
    }
    previous_violation = report.max_violation;
  }

  const FeasibilityReport report = check_feasibility(sp, T);
  outcome.transform = T;
  outcome.objective = problem_objective(*sp.problem, T);
  outcome.feasible = report.feasible;
  outcome.stationary = stationary;
  outcome.total_violation = report.total_violation;
  return outcome;
}

// Feasible-first, then objective, then total violation; strict comparisons so
// earlier start indices win ties.
bool better_than(const StartOutcome& a, const StartOutcome& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) return a.objective < b.objective;
  if (a.total_violation != b.total_violation) return a.total_violation < b.total_violation;
  return a.objective < b.objective;
}

void validate_config(const SolverConfig& config) {
  if (config.max_outer_iterations <= 0 || config.max_inner_iterations <= 0 ||
      config.initial_penalty <= 0.0 || config.equality_tolerance <= 0.0 ||
      config.inequality_tolerance <= 0.0 || config.gradient_tolerance <= 0.0 ||
      config.multistart_count <= 0) {
    throw ValidationError("SolverConfig: all parameters must be positive");
  }
  if (config.penalty_growth <= 1.0) {
    throw ValidationError("SolverConfig: penalty_growth must be > 1");
  }
}

}  // namespace

void validate_problem(const Problem& problem) {
  if (problem.costs.empty() && problem.constraints.empty()) {
    throw InvalidProblem("problem has no cost or constraint terms");
  }
  try {
    for (const auto& term : problem.costs) check_references(term, problem.keypoints);
    for (const auto& term : problem.constraints) check_references(term, problem.keypoints);
  } catch (const UnknownKeypoint& e) {
    throw InvalidProblem(std::string("unresolved term reference: ") + e.what());
  }
  for (std::size_t i = 0; i < problem.costs.size(); ++i) {
    validate_term(problem.costs[i], "costs[" + std::to_string(i) + "]");
  }
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    validate_term(problem.constraints[i], "constraints[" + std::to_string(i) + "]");
  }
}

double problem_objective(const Problem& problem, const RigidTransform& T) {
  double total = 0.0;
  for (const auto& term : problem.costs) total += evaluate_cost(term, T, problem.keypoints);
  return total;
}

std::vector<NamedResidual> problem_constraint_residuals(const Problem& problem,
                                                        const RigidTransform& T) {
  std::vector<NamedResidual> residuals;
  residuals.reserve(problem.constraints.size());
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    residuals.push_back({std::to_string(i) + ":" + term_label(problem.constraints[i]),
                         evaluate_constraint(problem.constraints[i], T, problem.keypoints)});
  }
  return residuals;
}

SolveResult solve(const Problem& problem, const SolverConfig& config) {
  validate_problem(problem);
  validate_config(config);

  const StackedProblem sp = stack_constraints(problem, config);

  // Starts: identity rotation plus uniform samples on SO(3). The translation
  // maps the keypoint centroid onto the centroid of the point targets so the
  // position terms begin near their basin.
  std::vector<Vec3> point_targets;
  for (const auto& term : problem.costs) {
    if (const auto* c = std::get_if<PointL2Cost>(&term)) point_targets.push_back(c->target);
  }
  for (const auto& term : problem.constraints) {
    if (const auto* c = std::get_if<PointTargetConstraint>(&term)) {
      point_targets.push_back(c->target);
    }
  }
  Vec3 target_centroid = Vec3::Zero();
  for (const auto& t : point_targets) target_centroid += t;
  if (!point_targets.empty()) target_centroid /= static_cast<double>(point_targets.size());
  const Vec3 keypoint_centroid = problem.keypoints.centroid();

  Rng rng(config.rng_seed);
  StartOutcome best;
  bool have_best = false;
  int winner_iterations = 0;

  for (int k = 0; k < config.multistart_count; ++k) {
    RigidTransform start;
    start.rotation = (k == 0) ? UnitQuaternion::identity() : rng.rotation();
    if (!point_targets.empty()) {
      start.translation = target_centroid - start.rotation.rotate(keypoint_centroid);
    }

    const StartOutcome outcome = solve_from_start(sp, start, config);
    if (!have_best || better_than(outcome, best)) {
      best = outcome;
      winner_iterations = outcome.inner_iterations;
      have_best = true;
    }
  }

  SolveResult result;
  result.transform = best.transform;
  result.objective = best.objective;
  result.constraint_residuals = problem_constraint_residuals(problem, best.transform);
  result.converged = best.feasible && best.stationary;
  result.starts_tried = config.multistart_count;
  result.iterations_used = winner_iterations;
  return result;
}

RigidTransform solve_closed_form_points(const KeypointSet& source, const KeypointSet& targets) {
  if (source.size() != targets.size()) {
    throw NameMismatch("solve_closed_form_points: sets have different sizes");
  }
  const std::size_t n = source.size();
  if (n < 3) {
    throw DegenerateGeometry("solve_closed_form_points: need at least 3 keypoints");
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!targets.contains(source.name(i))) {
      throw NameMismatch("solve_closed_form_points: '" + source.name(i) +
                         "' missing from targets");
    }
  }

  const Vec3 src_centroid = source.centroid();
  Vec3 tgt_centroid = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    tgt_centroid += targets.point(source.name(i));
  }
  tgt_centroid /= static_cast<double>(n);

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 s = source.point(i) - src_centroid;
    const Vec3 t = targets.point(source.name(i)) - tgt_centroid;
    H += s * t.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  if (sigma(1) <= 1e-12 * std::max(sigma(0), 1e-12)) {
    throw DegenerateGeometry("solve_closed_form_points: keypoints are collinear or coincident");
  }

  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d R = svd.matrixV() * D * svd.matrixU().transpose();

  RigidTransform result;
  result.rotation = UnitQuaternion(Eigen::Quaterniond(R));
  result.translation = tgt_centroid - R * src_centroid;
  return result;
}

RigidTransform apply_approach_offset(const RigidTransform& T, const Vec3& direction,
                                     double distance) {
  if (std::abs(direction.norm() - 1.0) > 1e-6) {
    throw NonUnitDirection("apply_approach_offset: direction must be unit length");
  }
  if (distance < 0.0) {
    throw ValidationError("apply_approach_offset: distance must be >= 0");
  }
  return {T.rotation, T.translation + distance * direction};
}

}  // namespace kpam
