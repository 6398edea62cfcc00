#include <doctest.h>

#include <numbers>
#include <random>

#include "diffik/baselines.hpp"
#include "diffik/errors.hpp"
#include "diffik/fk.hpp"
#include "support.hpp"

using namespace diffik;

namespace {

double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

void check_lengths(const std::vector<Vec3d>& p, std::span<const double> lengths, double tol) {
  for (std::size_t k = 0; k + 1 < p.size(); ++k) CHECK(std::abs(norm(p[k + 1] - p[k]) - lengths[k]) <= tol);
}

struct Arm {
  Skeleton skel = load_skeleton(test::asset("humanoid_upper_body.json"));
  DofLayout layout = dof_layout(skel, test::right_arm());
  ChainSpec chain = make_chain(skel, layout, test::right_arm(), "right_index1", {});
  ObjectiveSpec simple = load_objective_spec(test::asset("objective_simple.json"), skel, layout);
  std::vector<double> rest = std::vector<double>(layout.size(), 0.0);
};

}  // namespace

TEST_CASE("ccd angle matches the planar closed form") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> rad(0.2, 2.0);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = ang(rng), b = ang(rng);
    const Vec3d pivot{off(rng), off(rng), off(rng)};
    const double ra = rad(rng), rb = rad(rng);
    // Heights along the axis must not matter.
    const Vec3d point = pivot + Vec3d{ra * std::cos(a), ra * std::sin(a), off(rng)};
    const Vec3d target = pivot + Vec3d{rb * std::cos(b), rb * std::sin(b), off(rng)};
    const double got = ccd_angle(pivot, {0.0, 0.0, 1.0}, point, target);
    worst = std::max(worst, std::abs(wrap(got - (b - a))));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("ccd angle is zero for points on the axis") {
  CHECK(ccd_angle({}, {0.0, 0.0, 1.0}, {0.0, 0.0, 2.0}, {1.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("ccd solves a single hinge in one sweep") {
  const Skeleton skel = test::planar_chain({1.0}, 4.0);
  const DofLayout layout = full_dof_layout(skel);
  const ChainSpec chain = make_chain(skel, layout, {"j0"}, "tip", {});
  const double phi = 2.1;
  const Vec3d target{0.5 * std::cos(phi), 0.5 * std::sin(phi), 0.0};
  ObjectiveSpec spec;
  spec.terms.push_back(make_distance(skel.index_of("tip"), {}, target));
  SolverConfig config;
  config.max_iterations = 1;
  const auto report = ccd_solve(skel, layout, chain, target, spec, std::vector<double>{0.0}, config);
  CHECK(report.iterations == 1);
  CHECK(std::abs(report.final_theta[0] - phi) < 1e-9);
}

TEST_CASE("ccd clamps to the joint limit") {
  const Skeleton skel = test::planar_chain({1.0}, 0.5);
  const DofLayout layout = full_dof_layout(skel);
  const ChainSpec chain = make_chain(skel, layout, {"j0"}, "tip", {});
  const Vec3d target{0.0, 1.0, 0.0};
  ObjectiveSpec spec;
  spec.terms.push_back(make_distance(skel.index_of("tip"), {}, target));
  SolverConfig config;
  config.max_iterations = 3;
  const auto report = ccd_solve(skel, layout, chain, target, spec, std::vector<double>{0.0}, config);
  CHECK(report.final_theta[0] == 0.5);
  CHECK_FALSE(report.success);
}

TEST_CASE("fabrik straightens toward an unreachable target") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<double> lengths{0.5, 1.0, 0.25, 0.7};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3d> p{{u(rng), u(rng), u(rng)}};
    for (double l : lengths) p.push_back(p.back() + normalized(Vec3d{u(rng), u(rng), u(rng)}) * l);
    const Vec3d base = p.front();
    const Vec3d dir = normalized(Vec3d{u(rng), u(rng), u(rng)});
    const Vec3d target = base + dir * (3.0 + 5.0 * (u(rng) + 1.0));
    const FabrikResult r = fabrik_positions(p, lengths, target, 1, 1e-6);
    const Vec3d expect = base + dir * 2.45;
    CHECK(norm(r.positions.back() - expect) < 1e-3);
    CHECK_FALSE(r.reached);
    CHECK(r.positions.front() == base);
    check_lengths(r.positions, lengths, 1e-9);
  }
}

TEST_CASE("fabrik two-link reachable case meets the circle intersection") {
  const std::vector<double> lengths{1.0, 1.0};
  const std::vector<Vec3d> start{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
  const Vec3d target{1.2, 0.8, 0.0};
  const FabrikResult r = fabrik_positions(start, lengths, target, 50, 1e-4);
  CHECK(r.reached);
  CHECK(r.passes <= 50);
  CHECK(norm(r.positions.back() - target) < 1e-3);
  check_lengths(r.positions, lengths, 1e-9);

  // Unit circles about the base and the target meet at the midpoint of the
  // base-target segment, offset perpendicular by h.
  const double d = norm(target);
  const double h = std::sqrt(1.0 - d * d / 4.0);
  const Vec3d mid = target * 0.5;
  const Vec3d perp{-target.y / d, target.x / d, 0.0};
  const double e1 = norm(r.positions[1] - (mid + perp * h));
  const double e2 = norm(r.positions[1] - (mid - perp * h));
  CHECK(std::min(e1, e2) < 1e-3);
}

TEST_CASE("fabrik leaves a solved chain alone") {
  const std::vector<double> lengths{1.0, 1.0};
  const std::vector<Vec3d> start{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {1.0, 1.0, 0.0}};
  const FabrikResult r = fabrik_positions(start, lengths, {1.0, 1.0, 0.0}, 10, 1e-9);
  CHECK(r.reached);
  CHECK(r.passes == 0);
  CHECK(r.positions == start);
}

TEST_CASE("fabrik keeps segment lengths on random reachable targets") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<double> lengths{0.3, 0.8, 0.6};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3d> p{{0.0, 0.0, 0.0}};
    for (double l : lengths) p.push_back(p.back() + normalized(Vec3d{u(rng), u(rng), u(rng)}) * l);
    const Vec3d target = Vec3d{u(rng), u(rng), u(rng)} * 0.9;
    for (int passes : {1, 3, 20}) check_lengths(fabrik_positions(p, lengths, target, passes, 0.0).positions, lengths, 1e-9);
  }
}

TEST_CASE("fabrik input checks") {
  CHECK_THROWS_AS(fabrik_positions({{0.0, 0.0, 0.0}}, std::vector<double>{}, {}, 1, 0.0), DimensionError);
  const Skeleton skel = test::planar_chain({1.0});
  const DofLayout layout = full_dof_layout(skel);
  const ChainSpec chain = make_chain(skel, layout, {"j0"}, "tip", {});
  ObjectiveSpec spec;
  spec.terms.push_back(make_distance(1, {}, {}));
  CHECK_THROWS_AS(fabrik_solve(skel, layout, chain, {}, spec, std::vector<double>{0.0}, SolverConfig{}),
                  ValidationError);
}

TEST_CASE("chain construction") {
  Arm arm;
  CHECK(arm.chain.joints.size() == 4);
  CHECK(arm.chain.segment_lengths.size() == 4);
  CHECK(arm.chain.reach() > 0.6);
  CHECK_THROWS_AS(make_chain(arm.skel, arm.layout, {"right_elbow", "right_shoulder"}, "right_index1", {}),
                  ValidationError);
  CHECK_THROWS_AS(make_chain(arm.skel, arm.layout, {"right_shoulder"}, "left_index1", {}),
                  ValidationError);
  CHECK_THROWS_AS(make_chain(arm.skel, arm.layout, {"chest", "right_shoulder"}, "right_index1", {}),
                  ValidationError);
}

TEST_CASE("arm segment lengths are invariant under any angles") {
  Arm arm;
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const auto theta = test::random_in_bounds(arm.layout, rng);
    check_lengths(chain_positions(arm.skel, arm.layout, arm.chain, theta), arm.chain.segment_lengths, 1e-9);
  }
}

TEST_CASE("baselines respect bounds at every reported pose") {
  Arm arm;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  SolverConfig config;
  config.max_iterations = 60;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3d target{-0.5 + u(rng), 1.3 + u(rng), 0.3 + u(rng)};
    ObjectiveSpec spec = arm.simple;
    set_distance_target(spec, target);
    int calls = 0;
    auto observer = [&](int, std::span<const double> th, double) {
      ++calls;
      for (std::size_t i = 0; i < th.size(); ++i)
        CHECK((th[i] >= arm.layout.lower()[i] && th[i] <= arm.layout.upper()[i]));
    };
    calls = 0;
    const auto c = ccd_solve(arm.skel, arm.layout, arm.chain, target, spec, arm.rest, config, observer);
    CHECK(calls == c.iterations);
    calls = 0;
    const auto f = fabrik_solve(arm.skel, arm.layout, arm.chain, target, spec, arm.rest, config, observer);
    CHECK(calls == f.iterations);
    for (const auto* r : {&c, &f}) {
      CHECK(r->iterations <= config.max_iterations);
      CHECK(r->final_loss == doctest::Approx(evaluate(spec, arm.skel, arm.layout, r->final_theta)));
      CHECK(r->success == (r->final_loss < config.loss_threshold));
    }
  }
}

TEST_CASE("ccd reaches easy arm targets") {
  Arm arm;
  const GlobalPosed pose = forward(arm.skel, arm.layout, std::vector<double>{0.1, -0.1, 0.3, 0.4, 0.2, 0.6, 0.1, 0.2});
  const Vec3d target = effector_position(pose, arm.skel.index_of("right_index1"), {});
  ObjectiveSpec spec = arm.simple;
  set_distance_target(spec, target);
  const auto r = ccd_solve(arm.skel, arm.layout, arm.chain, target, spec, arm.rest, SolverConfig{});
  CHECK(r.success);
}
