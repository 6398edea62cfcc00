#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "diffik/objectives.hpp"
#include "diffik/skeleton.hpp"
#include "diffik/solver.hpp"

namespace diffik {

struct Trajectory {
  /// n_intermediate + 2 angle vectors; points[0] is the start pose.
  std::vector<std::vector<double>> points;
  bool fixed_head = true;
  /// Judge success on the task terms alone, leaving the smoothness energy out
  /// of the threshold comparison. The optimized loss is unchanged.
  bool task_success = false;
};

struct PlanOptions {
  std::size_t n_intermediate = 0;
  /// Weights of the order-1, order-2 and order-3 smoothness energies.
  std::array<double, 3> smooth_weights{0.01, 0.01, 0.01};
  /// Pin points[0] to the start pose and keep it out of the optimization.
  bool fixed_head = true;
  /// Judge success on the task terms alone, leaving the smoothness energy out
  /// of the threshold comparison. The optimized loss is unchanged.
  bool task_success = false;
};

struct PlanResult {
  Trajectory trajectory;
  SolveReport report;
  /// Terminal plus path terms at the final iterate.
  double task_loss = 0.0;
  std::vector<std::string> warnings;
};

/// Trajectory objective over a full point list: terminal terms on the last
/// point, path terms on every optimized point, weighted smoothness energies
/// over all points. task_out, when given, receives the value of the
/// terminal and path terms alone.
template <class S>
S trajectory_objective(const Skeleton& skel, const DofLayout& layout,
                       const ObjectiveSpec& terminal, const ObjectiveSpec& path,
                       const std::array<double, 3>& smooth_weights,
                       std::span<const std::span<const S>> points, std::size_t first_free,
                       EvalStats* stats = nullptr, double* task_out = nullptr) {
  S total(0.0);
  const std::size_t last = points.size() - 1;
  const bool path_pose = !path.terms.empty() && path.needs_pose();
  for (std::size_t t = first_free; t < points.size(); ++t) {
    const bool is_last = t == last;
    const bool need_fk = path_pose || (is_last && terminal.needs_pose());
    GlobalPose<S> pose;
    if (need_fk) pose = forward<S>(skel, layout, points[t], stats);
    if (is_last) total = total + pose_terms<S>(terminal, need_fk ? &pose : nullptr, points[t]);
    if (!path.terms.empty())
      total = total + pose_terms<S>(path, need_fk ? &pose : nullptr, points[t]);
  }
  if (task_out) *task_out = ad::value_of(total);
  for (std::size_t k = 0; k < 3; ++k) {
    const int order = static_cast<int>(k) + 1;
    if (smooth_weights[k] == 0.0 || points.size() <= static_cast<std::size_t>(order)) continue;
    total = total + S(smooth_weights[k]) * smoothness_objective<S>(points, order);
  }
  return total;
}

/// Optimizes all free trajectory points jointly with the solver's
/// projected cautious-Adam loop. The stacked vector is point-major.
PlanResult plan(const Skeleton& skel, const DofLayout& layout, std::span<const double> start,
                const ObjectiveSpec& terminal, const ObjectiveSpec& path,
                const PlanOptions& options, const SolverConfig& config);

/// Evaluates trajectory_objective on a finished trajectory.
double evaluate_trajectory_objective(const Skeleton& skel, const DofLayout& layout,
                                     const ObjectiveSpec& terminal, const ObjectiveSpec& path,
                                     const std::array<double, 3>& smooth_weights,
                                     const Trajectory& trajectory);

}  // namespace diffik
