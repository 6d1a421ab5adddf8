#include "kpam/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>

#include "kpam/errors.hpp"
#include "kpam/random.hpp"

namespace kpam {

namespace {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::string sanitize(const std::string& label) {
  std::string out;
  out.reserve(label.size());
  for (char c : label) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return out;
}

std::string csv_quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

PredicateOutcome evaluate_predicate(const SuccessPredicate& predicate, const std::string& label,
                                    const KeypointSet& transformed_true) {
  PredicateOutcome outcome;
  outcome.label = label;
  if (const auto* p = std::get_if<PlacementWithinPredicate>(&predicate)) {
    outcome.value = (transformed_true.point(p->keypoint) - p->target).norm();
    outcome.success = outcome.value <= p->radius;
  } else if (const auto* p = std::get_if<HandleOnPegPredicate>(&predicate)) {
    outcome.value = (transformed_true.point(p->handle_keypoint) - p->peg_point).norm();
    outcome.success = outcome.value <= p->capture_radius;
  } else {
    const auto& np = std::get<NoPenetrationPredicate>(predicate);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < transformed_true.size(); ++i) {
      worst = std::max(worst, np.plane.normal.dot(transformed_true.point(i)) - np.plane.offset);
    }
    outcome.value = worst;
    outcome.success = worst <= np.margin;
  }
  return outcome;
}

// keypoint -> target position pairs the spec pins down (constraints first).
std::vector<std::pair<std::string, Vec3>> spec_point_targets(const TaskSpec& spec) {
  std::vector<std::pair<std::string, Vec3>> targets;
  auto add = [&targets](const std::string& name, const Vec3& target) {
    for (const auto& existing : targets) {
      if (existing.first == name) return;
    }
    targets.emplace_back(name, target);
  };
  for (const auto& term : spec.constraints) {
    if (const auto* c = std::get_if<PointTargetConstraint>(&term)) add(c->keypoint, c->target);
  }
  for (const auto& term : spec.costs) {
    if (const auto* c = std::get_if<PointL2Cost>(&term)) add(c->keypoint, c->target);
  }
  return targets;
}

}  // namespace

std::string method_name(Method method) {
  return method == Method::kpam ? "kpam" : "pose_baseline";
}

Method method_from_name(const std::string& name) {
  if (name == "kpam") return Method::kpam;
  if (name == "pose_baseline") return Method::pose_baseline;
  throw ValidationError("unknown method '" + name + "' (expected kpam or pose_baseline)");
}

std::string predicate_label(const SuccessPredicate& predicate) {
  if (const auto* p = std::get_if<PlacementWithinPredicate>(&predicate)) {
    return "placement_within[" + p->keypoint + "]";
  }
  if (const auto* p = std::get_if<HandleOnPegPredicate>(&predicate)) {
    return "handle_on_peg[" + p->handle_keypoint + "]";
  }
  return "no_penetration";
}

std::vector<SuccessPredicate> default_predicates(const TaskSpec& spec) {
  std::vector<SuccessPredicate> predicates;
  for (const auto& term : spec.constraints) {
    if (const auto* c = std::get_if<PointTargetConstraint>(&term)) {
      if (spec.approach) {
        predicates.push_back(
            HandleOnPegPredicate{c->keypoint, c->target, spec.approach->direction, 0.01});
      } else {
        predicates.push_back(PlacementWithinPredicate{c->keypoint, c->target, 0.05});
      }
    }
  }
  std::vector<PlaneSpec> planes;
  for (const auto& term : spec.constraints) {
    if (const auto* c = std::get_if<HalfSpaceConstraint>(&term)) {
      const bool seen = std::any_of(planes.begin(), planes.end(), [&](const PlaneSpec& p) {
        return p.normal == c->plane.normal && p.offset == c->plane.offset;
      });
      if (!seen) {
        planes.push_back(c->plane);
        predicates.push_back(NoPenetrationPredicate{c->plane, 1e-6});
      }
    }
  }
  return predicates;
}

Template derive_template(const TaskSpec& spec, const CategoryModel& model,
                         const SolverConfig& config) {
  const Problem problem = instantiate_problem(spec, model.canonical_keypoints);
  const SolveResult result = solve(problem, config);
  if (!result.converged) {
    throw Error("derive_template: task '" + spec.name + "' has no feasible solution on the canonical " +
                model.category);
  }
  return Template{model.category, model.canonical_keypoints, result.transform};
}

std::vector<TrialRecord> run_benchmark(const std::vector<SceneInstance>& scenes,
                                       const TaskSpec& spec,
                                       const std::vector<SuccessPredicate>& predicates,
                                       const std::set<Method>& methods,
                                       const SolverConfig& config,
                                       const BenchmarkOptions& options) {
  if (scenes.empty()) throw EmptyInput("run_benchmark: no scenes");
  std::vector<TrialRecord> records;
  if (methods.empty()) return records;

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    labels.push_back(std::to_string(i) + ":" + predicate_label(predicates[i]));
  }

  // The pose baseline needs the category template; derive it once. Failures
  // poison only pose_baseline trials, not the batch.
  std::optional<CategoryModel> model;
  std::optional<Template> tmpl;
  std::string template_error;
  if (methods.count(Method::pose_baseline) != 0) {
    try {
      model = canonical_category_model(spec.category);
      tmpl = derive_template(spec, *model, config);
    } catch (const std::exception& e) {
      template_error = e.what();
    }
  }

  const bool disturb =
      options.disturbance_rotation_sigma > 0.0 || options.disturbance_translation_sigma > 0.0;
  Rng disturbance_rng(options.disturbance_seed);

  const auto point_targets = spec_point_targets(spec);
  const std::vector<Method> method_order = {Method::kpam, Method::pose_baseline};

  for (const auto& scene : scenes) {
    for (Method method : method_order) {
      if (methods.count(method) == 0) continue;

      // Draw the disturbance unconditionally so the stream stays aligned
      // across per-trial errors.
      RigidTransform disturbance;
      if (disturb) {
        disturbance.rotation =
            UnitQuaternion::exp(disturbance_rng.gaussian_vec3(options.disturbance_rotation_sigma));
        disturbance.translation =
            disturbance_rng.gaussian_vec3(options.disturbance_translation_sigma);
      }

      TrialRecord record;
      record.instance_id = scene.instance_id;
      record.method = method;
      try {
        if (method == Method::kpam) {
          const Problem problem = instantiate_problem(spec, scene.observed_keypoints);
          const SolveResult result = solve(problem, config);
          record.action = result.transform;
          record.solver_converged = result.converged;
          record.solver_objective = result.objective;
          record.solver_iterations = result.iterations_used;
        } else {
          if (!tmpl) throw Error("pose baseline unavailable: " + template_error);
          const SimilarityTransform fitted =
              fit_similarity(tmpl->keypoints, scene.observed_keypoints);
          record.action = pose_based_action(*tmpl, fitted);
          record.solver_converged = true;
        }
        if (disturb) record.action = disturbance * record.action;

        const KeypointSet transformed = scene.true_keypoints.transformed(record.action);
        for (std::size_t i = 0; i < predicates.size(); ++i) {
          record.outcomes.push_back(evaluate_predicate(predicates[i], labels[i], transformed));
        }
        for (const auto& [name, target] : point_targets) {
          record.keypoint_errors.push_back({name, (transformed.point(name) - target).norm()});
        }
        record.ok = true;
      } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
        record.outcomes.clear();
        for (const auto& label : labels) {
          record.outcomes.push_back(
              {label, false, std::numeric_limits<double>::quiet_NaN()});
        }
        record.keypoint_errors.clear();
      }
      records.push_back(std::move(record));
    }
  }

  std::sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
    return static_cast<int>(a.method) < static_cast<int>(b.method);
  });
  return records;
}

BenchmarkSummary summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw EmptyInput("summarize: no trial records");

  BenchmarkSummary summary;
  for (Method method : {Method::kpam, Method::pose_baseline}) {
    MethodSummary ms;
    ms.method = method;
    std::vector<std::string> label_order;
    std::map<std::string, PredicateStats> predicate_stats;
    std::map<std::string, std::vector<double>> errors;

    for (const auto& record : records) {
      if (record.method != method) continue;
      ++ms.trials;
      if (!record.ok) ++ms.failed_trials;
      for (const auto& outcome : record.outcomes) {
        auto [it, inserted] = predicate_stats.try_emplace(outcome.label);
        if (inserted) {
          it->second.label = outcome.label;
          label_order.push_back(outcome.label);
        }
        ++it->second.trials;
        if (outcome.success) ++it->second.successes;
      }
      for (const auto& err : record.keypoint_errors) {
        errors[err.name].push_back(err.value);
      }
    }
    if (ms.trials == 0) continue;

    for (const auto& label : label_order) ms.predicates.push_back(predicate_stats.at(label));
    for (auto& [name, values] : errors) {
      KeypointErrorStats stats;
      stats.keypoint = name;
      stats.count = static_cast<int>(values.size());
      double sum = 0.0;
      for (double v : values) sum += v;
      stats.mean = sum / values.size();
      std::sort(values.begin(), values.end());
      const std::size_t mid = values.size() / 2;
      stats.median = (values.size() % 2 == 1) ? values[mid]
                                              : 0.5 * (values[mid - 1] + values[mid]);
      double sq = 0.0;
      for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
      stats.stddev = std::sqrt(sq / values.size());
      ms.keypoint_errors.push_back(std::move(stats));
    }
    summary.methods.push_back(std::move(ms));
  }
  return summary;
}

std::string records_to_csv(const std::vector<TrialRecord>& records,
                           const std::vector<SuccessPredicate>& predicates) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    labels.push_back(std::to_string(i) + ":" + predicate_label(predicates[i]));
  }
  std::vector<std::string> error_columns;
  for (const auto& record : records) {
    for (const auto& err : record.keypoint_errors) {
      if (std::find(error_columns.begin(), error_columns.end(), err.name) ==
          error_columns.end()) {
        error_columns.push_back(err.name);
      }
    }
  }
  std::sort(error_columns.begin(), error_columns.end());

  std::string csv = "instance_id,method,ok,solver_converged,solver_objective,solver_iterations";
  for (const auto& label : labels) {
    csv += "," + sanitize(label) + "_success," + sanitize(label) + "_value";
  }
  for (const auto& name : error_columns) csv += ",err_" + sanitize(name);
  csv += ",error\n";

  for (const auto& record : records) {
    csv += record.instance_id + "," + method_name(record.method) + ",";
    csv += record.ok ? "1," : "0,";
    if (record.ok) {
      csv += (record.solver_converged ? "1," : "0,") + format_double(record.solver_objective) +
             "," + std::to_string(record.solver_iterations);
    } else {
      csv += ",,";
    }
    for (const auto& label : labels) {
      const auto it = std::find_if(record.outcomes.begin(), record.outcomes.end(),
                                   [&](const PredicateOutcome& o) { return o.label == label; });
      if (it != record.outcomes.end() && record.ok) {
        csv += std::string(",") + (it->success ? "1" : "0") + "," + format_double(it->value);
      } else {
        csv += ",,";
      }
    }
    for (const auto& name : error_columns) {
      const auto it = std::find_if(record.keypoint_errors.begin(), record.keypoint_errors.end(),
                                   [&](const NamedResidual& e) { return e.name == name; });
      csv += (it != record.keypoint_errors.end()) ? "," + format_double(it->value) : ",";
    }
    csv += record.error.empty() ? "," : "," + csv_quote(record.error);
    csv += "\n";
  }
  return csv;
}

std::string summary_to_markdown(const BenchmarkSummary& summary) {
  std::string md = "## Success rates\n\n";
  md += "| method | trials | errors | predicate | success |\n";
  md += "|---|---|---|---|---|\n";
  for (const auto& ms : summary.methods) {
    if (ms.predicates.empty()) {
      md += "| " + method_name(ms.method) + " | " + std::to_string(ms.trials) + " | " +
            std::to_string(ms.failed_trials) + " | - | - |\n";
    }
    for (const auto& ps : ms.predicates) {
      char rate[32];
      std::snprintf(rate, sizeof(rate), "%.1f%%",
                    ps.trials > 0 ? 100.0 * ps.successes / ps.trials : 0.0);
      md += "| " + method_name(ms.method) + " | " + std::to_string(ms.trials) + " | " +
            std::to_string(ms.failed_trials) + " | " + ps.label + " | " + rate + " (" +
            std::to_string(ps.successes) + "/" + std::to_string(ps.trials) + ") |\n";
    }
  }

  md += "\n## Keypoint placement error (m)\n\n";
  md += "| method | keypoint | count | mean | median | std |\n";
  md += "|---|---|---|---|---|---|\n";
  for (const auto& ms : summary.methods) {
    for (const auto& stats : ms.keypoint_errors) {
      md += "| " + method_name(ms.method) + " | " + stats.keypoint + " | " +
            std::to_string(stats.count) + " | " + format_double(stats.mean) + " | " +
            format_double(stats.median) + " | " + format_double(stats.stddev) + " |\n";
    }
  }
  return md;
}

}  // namespace kpam
