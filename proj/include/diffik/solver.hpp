#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "diffik/grad.hpp"
#include "diffik/objectives.hpp"
#include "diffik/skeleton.hpp"

namespace diffik {

using Duration = std::chrono::duration<double, std::milli>;

struct SolverConfig {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iterations = 500;
  double loss_threshold = 0.005;
  std::optional<Duration> time_budget;
  bool cautious = true;
  /// Applies the dim / (nnz(m_hat > 0) + 1) factor on top of the cautious
  /// mask. Only meaningful when cautious is on.
  bool alpha_scaling = true;
  /// Keep the per-iteration loss and timing trace in the report.
  bool record_trace = false;

  /// Throws ValidationError when an invariant does not hold.
  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

enum class StopReason { threshold, max_iterations, time_budget };

std::string_view stop_reason_name(StopReason r);
std::optional<StopReason> parse_stop_reason(std::string_view s);

struct SolveReport {
  std::vector<double> final_theta;
  double final_loss = 0.0;
  int iterations = 0;
  Duration wall_time{0.0};
  bool success = false;
  StopReason stop_reason = StopReason::max_iterations;
  /// Smallest iteration allowance seen during the run.
  int iterations_allowed = 0;
  /// True when a time budget was active, so iteration counts depend on the
  /// wall clock.
  bool time_dependent = false;
  std::vector<double> loss_trace;
  std::vector<double> iteration_ms;
};

/// The cautious momentum: m_hat masked where it disagrees in sign with the
/// gradient, renormalized by the kept fraction, and scaled by
/// dim / (nnz(m_hat > 0) + 1) when alpha_scaling is set.
std::vector<double> cautious_momentum(std::span<const double> m_hat, std::span<const double> grad,
                                      double epsilon, bool alpha_scaling);

/// One Adam (optionally cautious) update of theta in place. Throws
/// NonFiniteError on a non-finite gradient component.
void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad,
               const SolverConfig& config);

void project_bounds(std::span<double> theta, std::span<const double> lower,
                    std::span<const double> upper);
std::vector<double> project_bounds(std::span<const double> theta, const DofLayout& layout);

/// min(N_max, floor(T_max / mean(iteration_times))), never below 1. Without
/// a time budget the result is N_max.
int dynamic_budget(int max_iterations, std::optional<Duration> time_budget,
                   std::span<const double> iteration_ms);

/// f(theta, grad_out) -> J(theta).
using GradientFn = std::function<double(std::span<const double>, std::span<double>)>;

/// Called after every iteration with the projected theta and its loss.
using IterationObserver = std::function<void(int, std::span<const double>, double)>;

/// Value compared against loss_threshold after each evaluation, given the
/// loss f just returned. Defaults to the loss itself.
using CriterionFn = std::function<double(double)>;

/// Projected cautious-Adam descent with threshold, iteration-count and
/// time-budget stopping. Shared by solve() and the trajectory planner.
SolveReport minimize(const GradientFn& f, std::span<const double> theta0,
                     std::span<const double> lower, std::span<const double> upper,
                     const SolverConfig& config, const IterationObserver& observer = {},
                     const CriterionFn& criterion = {});

SolveReport solve(const Skeleton& skel, const DofLayout& layout, const ObjectiveSpec& spec,
                  std::span<const double> theta0, const SolverConfig& config,
                  const IterationObserver& observer = {});

}  // namespace diffik
