#include <doctest.h>

#include <random>

#include "diffik/errors.hpp"
#include "diffik/fk.hpp"
#include "diffik/planner.hpp"
#include "support.hpp"

using namespace diffik;

namespace {

struct Arm {
  Skeleton skel = load_skeleton(test::asset("humanoid_upper_body.json"));
  DofLayout layout = dof_layout(skel, test::right_arm());
  ObjectiveSpec simple = load_objective_spec(test::asset("objective_simple.json"), skel, layout);
  std::vector<double> rest = std::vector<double>(layout.size(), 0.0);
};

double energy(const std::vector<std::vector<double>>& points, int order) {
  std::vector<std::span<const double>> spans;
  for (const auto& p : points) spans.emplace_back(p);
  return smoothness_objective<double>(spans, order);
}

std::vector<std::vector<double>> linear_interpolation(const std::vector<double>& a,
                                                      const std::vector<double>& b,
                                                      std::size_t count) {
  std::vector<std::vector<double>> out;
  for (std::size_t t = 0; t < count; ++t) {
    const double s = static_cast<double>(t) / static_cast<double>(count - 1);
    std::vector<double> p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] + s * (b[i] - a[i]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("no intermediates and no smoothness reproduces solve exactly") {
  Arm arm;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  PlanOptions options;
  options.n_intermediate = 0;
  options.smooth_weights = {0.0, 0.0, 0.0};
  for (int trial = 0; trial < 20; ++trial) {
    ObjectiveSpec spec = arm.simple;
    set_distance_target(spec, {-0.5 + u(rng), 1.3 + u(rng), 0.3 + u(rng)});
    const SolveReport direct = solve(arm.skel, arm.layout, spec, arm.rest, SolverConfig{});
    const PlanResult planned = plan(arm.skel, arm.layout, arm.rest, spec, {}, options, SolverConfig{});
    CHECK(planned.report.iterations == direct.iterations);
    CHECK(planned.report.final_loss == direct.final_loss);
    CHECK(planned.report.success == direct.success);
    REQUIRE(planned.trajectory.points.size() == 2);
    CHECK(planned.trajectory.points[1] == direct.final_theta);
  }
}

TEST_CASE("satisfied start gives a constant trajectory at iteration zero") {
  Arm arm;
  ObjectiveSpec spec = arm.simple;
  const GlobalPosed pose = forward(arm.skel, arm.layout, arm.rest);
  set_distance_target(spec, effector_position(pose, arm.skel.index_of("right_index1"), {}));
  PlanOptions options;
  options.n_intermediate = 4;
  const PlanResult r = plan(arm.skel, arm.layout, arm.rest, spec, {}, options, SolverConfig{});
  CHECK(r.report.success);
  CHECK(r.report.iterations == 0);
  REQUIRE(r.trajectory.points.size() == 6);
  for (const auto& p : r.trajectory.points) CHECK(p == arm.rest);
  for (int n = 1; n <= 3; ++n) CHECK(energy(r.trajectory.points, n) == 0.0);
}

TEST_CASE("single hinge plans a monotone path") {
  const Skeleton skel = test::planar_chain({1.0}, 3.0);
  const DofLayout layout = full_dof_layout(skel);
  ObjectiveSpec spec;
  spec.terms.push_back(make_distance(skel.index_of("tip"), {}, {std::cos(1.0), std::sin(1.0), 0.0}));
  PlanOptions options;
  options.n_intermediate = 3;
  const PlanResult r = plan(skel, layout, std::vector<double>{0.0}, spec, {}, options, SolverConfig{});
  CHECK(r.report.success);
  REQUIRE(r.trajectory.points.size() == 5);
  CHECK(r.trajectory.points[0][0] == 0.0);
  for (std::size_t t = 1; t < r.trajectory.points.size(); ++t)
    CHECK(r.trajectory.points[t][0] > r.trajectory.points[t - 1][0]);
  CHECK(r.trajectory.points.back()[0] == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("planned trajectories respect bounds and pin the head") {
  Arm arm;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const auto start = test::random_in_bounds(arm.layout, rng);
  for (int trial = 0; trial < 8; ++trial) {
    ObjectiveSpec spec = arm.simple;
    set_distance_target(spec, {-0.5 + u(rng), 1.3 + u(rng), 0.3 + u(rng)});
    PlanOptions options;
    options.n_intermediate = 5;
    const PlanResult r = plan(arm.skel, arm.layout, start, spec, {}, options, SolverConfig{});
    REQUIRE(r.trajectory.points.size() == 7);
    CHECK(r.trajectory.points[0] == start);
    for (const auto& p : r.trajectory.points)
      for (std::size_t i = 0; i < p.size(); ++i)
        CHECK((p[i] >= arm.layout.lower()[i] && p[i] <= arm.layout.upper()[i]));
    const double total = evaluate_trajectory_objective(arm.skel, arm.layout, spec, {},
                                                       options.smooth_weights, r.trajectory);
    CHECK(total == doctest::Approx(r.report.final_loss).epsilon(1e-12));
  }
}

TEST_CASE("successful plans are no rougher than straight interpolation") {
  Arm arm;
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  int successes = 0;
  for (int trial = 0; trial < 10; ++trial) {
    ObjectiveSpec spec = arm.simple;
    // Close to the rest effector so the smoothness energy can fit under the
    // threshold.
    set_distance_target(spec, {-0.75 + u(rng), 1.45 + u(rng), 0.1 + u(rng)});
    PlanOptions options;
    options.n_intermediate = 5;
    const PlanResult r = plan(arm.skel, arm.layout, arm.rest, spec, {}, options, SolverConfig{});
    if (!r.report.success) continue;
    ++successes;
    const auto straight =
        linear_interpolation(arm.rest, r.trajectory.points.back(), r.trajectory.points.size());
    for (int n = 1; n <= 3; ++n) CHECK(std::isfinite(energy(r.trajectory.points, n)));
    // A straight line has no second or third differences, so only the first
    // order has a meaningful bound.
    CHECK(energy(r.trajectory.points, 1) <= 1.1 * energy(straight, 1) + 1e-12);
  }
  CHECK(successes > 0);
}

TEST_CASE("task-term success ignores the smoothness energy") {
  Arm arm;
  ObjectiveSpec spec = arm.simple;
  const std::vector<double> reachable{0.1, -0.1, 0.3, 0.4, 0.2, 0.6, 0.1, 0.2};
  const GlobalPosed pose = forward(arm.skel, arm.layout, reachable);
  set_distance_target(spec, effector_position(pose, arm.skel.index_of("right_index1"), {}));
  PlanOptions options;
  options.n_intermediate = 2;
  options.task_success = true;
  const PlanResult r = plan(arm.skel, arm.layout, arm.rest, spec, {}, options, SolverConfig{});
  CHECK(r.report.success);
  CHECK(r.task_loss < 0.005);
  CHECK(r.report.final_loss > r.task_loss);

  options.task_success = false;
  const PlanResult total = plan(arm.skel, arm.layout, arm.rest, spec, {}, options, SolverConfig{});
  CHECK(total.report.iterations >= r.report.iterations);
}

TEST_CASE("path terms bind to every optimized point") {
  Arm arm;
  ObjectiveSpec spec = arm.simple;
  set_distance_target(spec, {-0.5, 1.2, 0.4});
  std::vector<double> mask(arm.layout.size(), 0.0);
  mask[0] = mask[1] = 1.0;
  ObjectiveSpec path;
  path.terms.push_back(make_known_rotation(std::vector<double>(arm.layout.size(), 0.0), mask));
  PlanOptions options;
  options.n_intermediate = 3;
  options.smooth_weights = {0.0, 0.0, 0.0};
  const PlanResult r = plan(arm.skel, arm.layout, arm.rest, spec, path, options, SolverConfig{});
  const double total = evaluate_trajectory_objective(arm.skel, arm.layout, spec, path,
                                                     options.smooth_weights, r.trajectory);
  double expect = evaluate(spec, arm.skel, arm.layout, r.trajectory.points.back());
  for (std::size_t t = 1; t < r.trajectory.points.size(); ++t)
    expect += evaluate(path, arm.skel, arm.layout, r.trajectory.points[t]);
  CHECK(total == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("free head optimizes the first point too") {
  Arm arm;
  ObjectiveSpec spec = arm.simple;
  set_distance_target(spec, {-0.5, 1.2, 0.4});
  PlanOptions options;
  options.n_intermediate = 1;
  options.fixed_head = false;
  const PlanResult r = plan(arm.skel, arm.layout, arm.rest, spec, {}, options, SolverConfig{});
  CHECK_FALSE(r.trajectory.fixed_head);
  CHECK(r.trajectory.points.size() == 3);
  CHECK(r.report.final_theta.size() == 3 * arm.layout.size());
}

TEST_CASE("planner warnings and errors") {
  Arm arm;
  PlanOptions options;
  options.n_intermediate = 0;
  const PlanResult r = plan(arm.skel, arm.layout, arm.rest, arm.simple, {}, options, SolverConfig{});
  // Two points: orders 2 and 3 cannot contribute.
  CHECK(r.warnings.size() == 2);

  ObjectiveSpec with_smooth = arm.simple;
  with_smooth.terms.push_back(make_smoothness(1));
  CHECK_THROWS_AS(plan(arm.skel, arm.layout, arm.rest, with_smooth, {}, options, SolverConfig{}),
                  ValidationError);
  options.smooth_weights = {-1.0, 0.0, 0.0};
  CHECK_THROWS_AS(plan(arm.skel, arm.layout, arm.rest, arm.simple, {}, options, SolverConfig{}),
                  ValidationError);
  CHECK_THROWS_AS(plan(arm.skel, arm.layout, std::vector<double>{0.0}, arm.simple, {}, PlanOptions{},
                       SolverConfig{}),
                  DimensionError);
}
