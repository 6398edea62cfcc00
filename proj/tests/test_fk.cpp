#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "diffik/errors.hpp"
#include "diffik/fk.hpp"
#include "support.hpp"

using namespace diffik;
using diffik::test::planar_chain;
using diffik::test::planar_tip;

namespace {

// Hand-expanded Rz * Ry * Rx.
std::array<double, 9> zyx_closed_form(double x, double y, double z) {
  const double cx = std::cos(x), sx = std::sin(x);
  const double cy = std::cos(y), sy = std::sin(y);
  const double cz = std::cos(z), sz = std::sin(z);
  return {cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
          sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
          -sy,     cy * sx,                cy * cx};
}

std::string skeleton_doc(const std::string& bones, const std::string& units = "radians") {
  return R"({"version": 1, "units": ")" + units + R"(", "bones": [)" + bones + "]}";
}

}  // namespace

TEST_CASE("euler rotation matches the expanded ZYX product") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = u(rng), y = u(rng), z = u(rng);
    const Transformd r = euler_to_rotation(Vec3d{x, y, z});
    const auto expect = zyx_closed_form(x, y, z);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(r(i, j) == doctest::Approx(expect[i * 3 + j]).epsilon(1e-14));
    CHECK(orthonormality_error(r) < 1e-14);
    CHECK(r(3, 3) == 1.0);
  }
}

TEST_CASE("zero angles give the identity rotation") {
  const Transformd r = euler_to_rotation(Vec3d{0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(r(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("planar chains match closed-form trigonometry") {
  for (const std::vector<double> lengths : {std::vector<double>{1.0, 0.7},
                                            std::vector<double>{0.5, 1.25, 0.8}}) {
    const Skeleton skel = planar_chain(lengths);
    const DofLayout layout = full_dof_layout(skel);
    REQUIRE(layout.size() == lengths.size());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> theta(lengths.size());
      for (double& t : theta) t = u(rng);
      const GlobalPosed pose = forward(skel, layout, theta);
      const Vec3d tip = effector_position(pose, skel.index_of("tip"), {});
      const Vec3d expect = planar_tip(lengths, theta);
      worst = std::max({worst, std::abs(tip.x - expect.x), std::abs(tip.y - expect.y),
                        std::abs(tip.z)});
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("effector offset is applied in the bone frame") {
  const Skeleton skel = planar_chain({1.0});
  const DofLayout layout = full_dof_layout(skel);
  const std::vector<double> theta{std::numbers::pi / 2};
  const GlobalPosed pose = forward(skel, layout, theta);
  const Vec3d p = effector_position(pose, 0, {1.0, 0.0, 0.0});
  CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(1.0));
}

TEST_CASE("bone_direction rejects a zero axis") {
  const Skeleton skel = planar_chain({1.0});
  const DofLayout layout = full_dof_layout(skel);
  const GlobalPosed pose = forward(skel, layout, std::vector<double>{0.0});
  CHECK_THROWS_AS(bone_direction(pose, 0, {0.0, 0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(effector_position(pose, 99, {}), ValidationError);
}

TEST_CASE("forward checks the angle vector length") {
  const Skeleton skel = planar_chain({1.0, 1.0});
  const DofLayout layout = full_dof_layout(skel);
  CHECK_THROWS_AS(forward(skel, layout, std::vector<double>{0.0}), DimensionError);
}

TEST_CASE("rest rotation quaternion composes before the joint rotation") {
  const double h = 0.25;
  // Rest turn of 0.5 rad about z, joint turn 0.3 about z: total 0.8.
  const std::string doc = skeleton_doc(
      R"({"name": "a", "parent": null, "rest_rotation": [)" + std::to_string(std::cos(h)) +
      ", 0, 0, " + std::to_string(std::sin(h)) +
      R"(], "controlled_axes": ["z"], "limits": {"z": [-1, 1]}},
         {"name": "b", "parent": "a", "translation": [2, 0, 0]})");
  const Skeleton skel = parse_skeleton(doc);
  const DofLayout layout = full_dof_layout(skel);
  const GlobalPosed pose = forward(skel, layout, std::vector<double>{0.3});
  const Vec3d b = pose[1].translation();
  CHECK(b.x == doctest::Approx(2.0 * std::cos(0.8)).epsilon(1e-6));
  CHECK(b.y == doctest::Approx(2.0 * std::sin(0.8)).epsilon(1e-6));
}

TEST_CASE("skeleton file validation") {
  SUBCASE("unknown parent") {
    CHECK_THROWS_WITH_AS(parse_skeleton(skeleton_doc(R"({"name": "a", "parent": "ghost"})")),
                         doctest::Contains("unknown parent"), ValidationError);
  }
  SUBCASE("self parent") {
    CHECK_THROWS_WITH_AS(parse_skeleton(skeleton_doc(R"({"name": "a", "parent": "a"})")),
                         doctest::Contains("cycle"), ValidationError);
  }
  SUBCASE("parent after child") {
    CHECK_THROWS_WITH_AS(parse_skeleton(skeleton_doc(
                             R"({"name": "a", "parent": "b"}, {"name": "b", "parent": null})")),
                         doctest::Contains("ordering"), ValidationError);
  }
  SUBCASE("duplicate names") {
    CHECK_THROWS_WITH_AS(parse_skeleton(skeleton_doc(
                             R"({"name": "a", "parent": null}, {"name": "a", "parent": null})")),
                         doctest::Contains("duplicate"), ValidationError);
  }
  SUBCASE("inverted limits") {
    CHECK_THROWS_AS(parse_skeleton(skeleton_doc(
                        R"({"name": "a", "parent": null, "controlled_axes": ["x"],
                            "limits": {"x": [1, -1]}})")),
                    ValidationError);
  }
  SUBCASE("missing limits") {
    CHECK_THROWS_WITH_AS(parse_skeleton(skeleton_doc(
                             R"({"name": "a", "parent": null, "controlled_axes": ["y"]})")),
                         doctest::Contains("missing limits"), ValidationError);
  }
  SUBCASE("non-unit rest rotation") {
    CHECK_THROWS_WITH_AS(parse_skeleton(skeleton_doc(
                             R"({"name": "a", "parent": null, "rest_rotation": [1, 1, 0, 0]})")),
                         doctest::Contains("orthonormal"), ValidationError);
  }
  SUBCASE("bad json") { CHECK_THROWS_AS(parse_skeleton("{"), ParseError); }
  SUBCASE("bad version") {
    CHECK_THROWS_AS(parse_skeleton(R"({"version": 9, "bones": []})"), ParseError);
  }
}

TEST_CASE("degree limits are converted to radians") {
  const Skeleton skel = parse_skeleton(skeleton_doc(
      R"({"name": "a", "parent": null, "controlled_axes": ["x"], "limits": {"x": [-90, 45]}})",
      "degrees"));
  const DofLayout layout = full_dof_layout(skel);
  CHECK(layout.lower()[0] == doctest::Approx(-std::numbers::pi / 2));
  CHECK(layout.upper()[0] == doctest::Approx(std::numbers::pi / 4));
}

TEST_CASE("bundled humanoid round-trips through serialization") {
  const Skeleton skel = load_skeleton(diffik::test::asset("humanoid_upper_body.json"));
  const Skeleton again = parse_skeleton(serialize_skeleton(skel));
  CHECK(skel == again);
  const DofLayout arm = dof_layout(skel, diffik::test::right_arm());
  CHECK(arm.size() == 8);
  const int elbow_y = arm.dof_index(skel.index_of("right_elbow"), Axis::y);
  CHECK(elbow_y == 5);
  CHECK(arm.dof_index(skel.index_of("right_elbow"), Axis::x) == -1);
  CHECK(skel.is_ancestor(skel.index_of("chest"), skel.index_of("right_index1")));
  CHECK_FALSE(skel.is_ancestor(skel.index_of("left_collar"), skel.index_of("right_index1")));
}

TEST_CASE("global pose export has one line per bone") {
  const Skeleton skel = planar_chain({1.0, 2.0});
  const DofLayout layout = full_dof_layout(skel);
  const GlobalPosed pose = forward(skel, layout, std::vector<double>{0.0, 0.0});
  const std::string text = export_global_pose(skel, pose, 6);
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[2] == "tip 1 0 0 3 0 1 0 0 0 0 1 0 0 0 0 1");
}
