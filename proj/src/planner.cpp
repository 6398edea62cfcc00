#include "diffik/planner.hpp"

namespace diffik {

namespace {

template <class S>
std::vector<std::span<const S>> split_points(std::span<const S> head, std::span<const S> stacked,
                                             std::size_t dof, bool fixed_head) {
  std::vector<std::span<const S>> points;
  if (fixed_head) points.push_back(head);
  for (std::size_t off = 0; off < stacked.size(); off += dof)
    points.push_back(stacked.subspan(off, dof));
  return points;
}

}  // namespace

PlanResult plan(const Skeleton& skel, const DofLayout& layout, std::span<const double> start,
                const ObjectiveSpec& terminal, const ObjectiveSpec& path,
                const PlanOptions& options, const SolverConfig& config) {
  const std::size_t dof = layout.size();
  if (start.size() != dof) throw DimensionError("plan: start pose does not match the layout");
  if (terminal.has_smoothness() || path.has_smoothness())
    throw ValidationError("plan: smoothness is configured through PlanOptions, not term lists");
  if (terminal.terms.empty() && path.terms.empty())
    throw ValidationError("plan: no task terms");
  if (!terminal.terms.empty()) validate_spec(terminal, skel, layout);
  if (!path.terms.empty()) validate_spec(path, skel, layout);
  for (double w : options.smooth_weights)
    if (!(w >= 0.0)) throw ValidationError("plan: smoothness weights must be >= 0");

  const std::size_t total_points = options.n_intermediate + 2;
  const std::size_t free_points = options.fixed_head ? total_points - 1 : total_points;

  PlanResult result;
  for (std::size_t k = 0; k < 3; ++k)
    if (options.smooth_weights[k] != 0.0 && total_points <= k + 1)
      result.warnings.push_back("smoothness order " + std::to_string(k + 1) + " needs more than " +
                                std::to_string(total_points) + " points; it contributes 0");

  const std::vector<double> head = project_bounds(start, layout);
  std::vector<double> theta0;
  theta0.reserve(free_points * dof);
  for (std::size_t p = 0; p < free_points; ++p) theta0.insert(theta0.end(), head.begin(), head.end());
  std::vector<double> lower, upper;
  for (std::size_t p = 0; p < free_points; ++p) {
    lower.insert(lower.end(), layout.lower().begin(), layout.lower().end());
    upper.insert(upper.end(), layout.upper().begin(), layout.upper().end());
  }

  std::vector<ad::Var> head_vars(head.begin(), head.end());
  GradientEngine engine;
  double task_value = 0.0;
  const GradientFn f = [&](std::span<const double> x, std::span<double> g) {
    return engine.run(
        [&](std::span<const ad::Var> xs) {
          const auto points =
              split_points<ad::Var>(head_vars, xs, dof, options.fixed_head);
          return trajectory_objective<ad::Var>(skel, layout, terminal, path,
                                               options.smooth_weights, points,
                                               options.fixed_head ? 1 : 0, nullptr,
                                               &task_value);
        },
        x, g);
  };

  CriterionFn criterion;
  if (options.task_success) criterion = [&](double) { return task_value; };
  result.report = minimize(f, theta0, lower, upper, config, {}, criterion);
  result.task_loss = task_value;

  result.trajectory.fixed_head = options.fixed_head;
  if (options.fixed_head) result.trajectory.points.push_back(head);
  for (std::size_t p = 0; p < free_points; ++p) {
    const auto first = result.report.final_theta.begin() + static_cast<std::ptrdiff_t>(p * dof);
    result.trajectory.points.emplace_back(first, first + static_cast<std::ptrdiff_t>(dof));
  }
  return result;
}

double evaluate_trajectory_objective(const Skeleton& skel, const DofLayout& layout,
                                     const ObjectiveSpec& terminal, const ObjectiveSpec& path,
                                     const std::array<double, 3>& smooth_weights,
                                     const Trajectory& trajectory) {
  std::vector<std::span<const double>> points;
  for (const auto& p : trajectory.points) points.emplace_back(p);
  return trajectory_objective<double>(skel, layout, terminal, path, smooth_weights, points,
                                      trajectory.fixed_head ? 1 : 0);
}

}  // namespace diffik
