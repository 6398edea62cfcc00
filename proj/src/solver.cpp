#include "diffik/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diffik {

void SolverConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("solver config: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValidationError("solver config: beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValidationError("solver config: beta2 must be in (0,1)");
  if (!(epsilon > 0.0)) throw ValidationError("solver config: epsilon must be > 0");
  if (max_iterations < 1) throw ValidationError("solver config: max_iterations must be >= 1");
  if (!(loss_threshold > 0.0)) throw ValidationError("solver config: loss_threshold must be > 0");
  if (time_budget && !(time_budget->count() > 0.0))
    throw ValidationError("solver config: time_budget must be > 0");
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::threshold: return "threshold";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::time_budget: return "time_budget";
  }
  return "unknown";
}

std::optional<StopReason> parse_stop_reason(std::string_view s) {
  if (s == "threshold") return StopReason::threshold;
  if (s == "max_iterations") return StopReason::max_iterations;
  if (s == "time_budget") return StopReason::time_budget;
  return std::nullopt;
}

std::vector<double> cautious_momentum(std::span<const double> m_hat, std::span<const double> grad,
                                      double epsilon, bool alpha_scaling) {
  const std::size_t n = m_hat.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  std::size_t agree = 0;
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (m_hat[i] * grad[i] > 0.0) ++agree;
    if (m_hat[i] > 0.0) ++positive;
  }
  const double kept = static_cast<double>(agree) / static_cast<double>(n);
  const double mask_scale = 1.0 / std::max(kept, epsilon);
  const double alpha =
      alpha_scaling ? static_cast<double>(n) / (static_cast<double>(positive) + 1.0) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mask = (m_hat[i] * grad[i] > 0.0) ? mask_scale : 0.0;
    out[i] = alpha * (m_hat[i] * mask);
  }
  return out;
}

void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad,
               const SolverConfig& config) {
  const std::size_t n = theta.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n)
    throw DimensionError("adam_step: inconsistent vector lengths");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(grad[i]))
      throw NonFiniteError("adam_step: gradient component " + std::to_string(i) + " is not finite");

  const double b1 = config.beta1;
  const double b2 = config.beta2;
  ++state.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

  std::vector<double> m_hat(n), v_hat(n);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    m_hat[i] = state.m[i] / c1;
    v_hat[i] = state.v[i] / c2;
  }
  if (config.cautious) m_hat = cautious_momentum(m_hat, grad, config.epsilon, config.alpha_scaling);
  for (std::size_t i = 0; i < n; ++i)
    theta[i] -= config.learning_rate * m_hat[i] / (std::sqrt(v_hat[i]) + config.epsilon);
}

void project_bounds(std::span<double> theta, std::span<const double> lower,
                    std::span<const double> upper) {
  if (lower.size() != theta.size() || upper.size() != theta.size())
    throw DimensionError("project_bounds: inconsistent vector lengths");
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::clamp(theta[i], lower[i], upper[i]);
}

std::vector<double> project_bounds(std::span<const double> theta, const DofLayout& layout) {
  std::vector<double> out(theta.begin(), theta.end());
  project_bounds(out, layout.lower(), layout.upper());
  return out;
}

int dynamic_budget(int max_iterations, std::optional<Duration> time_budget,
                   std::span<const double> iteration_ms) {
  if (!time_budget || iteration_ms.empty()) return max_iterations;
  double total = 0.0;
  for (double t : iteration_ms) total += t;
  const double mean = total / static_cast<double>(iteration_ms.size());
  if (!(mean > 0.0)) return max_iterations;
  const double allowed = std::floor(time_budget->count() / mean);
  if (allowed >= static_cast<double>(max_iterations)) return max_iterations;
  return std::max(1, static_cast<int>(allowed));
}

SolveReport minimize(const GradientFn& f, std::span<const double> theta0,
                     std::span<const double> lower, std::span<const double> upper,
                     const SolverConfig& config, const IterationObserver& observer,
                     const CriterionFn& criterion) {
  config.validate();
  const auto reached = [&](double value) {
    return (criterion ? criterion(value) : value) < config.loss_threshold;
  };
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  const std::size_t n = theta0.size();
  std::vector<double> theta(theta0.begin(), theta0.end());
  project_bounds(theta, lower, upper);
  std::vector<double> grad(n, 0.0);
  AdamState state(n);

  SolveReport report;
  report.time_dependent = config.time_budget.has_value();
  double loss = f(theta, grad);
  bool done = reached(loss);
  if (config.record_trace) report.loss_trace.push_back(loss);

  std::vector<double> iteration_ms;
  int allowed = config.max_iterations;
  int iterations = 0;
  auto last = start;
  StopReason reason = StopReason::max_iterations;
  while (true) {
    if (done) {
      reason = StopReason::threshold;
      break;
    }
    if (iterations >= allowed) {
      reason = allowed < config.max_iterations ? StopReason::time_budget
                                               : StopReason::max_iterations;
      break;
    }
    adam_step(state, theta, grad, config);
    project_bounds(theta, lower, upper);
    loss = f(theta, grad);
    done = reached(loss);
    ++iterations;

    // The first iteration's duration includes the initial evaluation.
    const auto now = Clock::now();
    iteration_ms.push_back(Duration(now - last).count());
    last = now;
    allowed = std::min(allowed, dynamic_budget(config.max_iterations, config.time_budget,
                                               iteration_ms));
    if (config.record_trace) report.loss_trace.push_back(loss);
    if (observer) observer(iterations, theta, loss);
  }

  report.wall_time = Clock::now() - start;
  report.final_theta = std::move(theta);
  report.final_loss = loss;
  report.iterations = iterations;
  report.success = done;
  report.stop_reason = reason;
  report.iterations_allowed = allowed;
  if (config.record_trace) report.iteration_ms = std::move(iteration_ms);
  return report;
}

SolveReport solve(const Skeleton& skel, const DofLayout& layout, const ObjectiveSpec& spec,
                  std::span<const double> theta0, const SolverConfig& config,
                  const IterationObserver& observer) {
  if (theta0.size() != layout.size())
    throw DimensionError("solve: theta0 does not match the layout");
  validate_spec(spec, skel, layout);
  if (spec.has_smoothness())
    throw ValidationError("solve: smoothness terms need the trajectory planner");
  GradientEngine engine;
  const GradientFn f = [&](std::span<const double> x, std::span<double> g) {
    return value_and_gradient(engine, spec, skel, layout, x, g);
  };
  return minimize(f, theta0, layout.lower(), layout.upper(), config, observer);
}

}  // namespace diffik
