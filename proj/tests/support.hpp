#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "diffik/skeleton.hpp"

namespace diffik::test {

inline std::filesystem::path asset(const std::string& name) {
  return std::filesystem::path(DIFFIK_ASSET_DIR) / name;
}

inline Bone make_bone(std::string name, std::optional<std::size_t> parent, Vec3d translation) {
  Bone b;
  b.name = std::move(name);
  b.parent = parent;
  b.translation = translation;
  return b;
}

inline void control(Bone& b, Axis a, double lo, double hi) {
  b.controlled[static_cast<std::size_t>(a)] = true;
  b.limits[static_cast<std::size_t>(a)] = {lo, hi};
}

/// Planar chain in the xy plane: joint k sits at the end of link k-1 and
/// turns about z; the last bone is an uncontrolled tip at the end of the
/// final link.
inline Skeleton planar_chain(const std::vector<double>& lengths, double limit = 10.0) {
  std::vector<Bone> bones;
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    const Vec3d t = k == 0 ? Vec3d{} : Vec3d{lengths[k - 1], 0.0, 0.0};
    Bone b = make_bone("j" + std::to_string(k),
                       k == 0 ? std::nullopt : std::optional<std::size_t>(k - 1), t);
    control(b, Axis::z, -limit, limit);
    bones.push_back(b);
  }
  bones.push_back(make_bone("tip", lengths.size() - 1, {lengths.back(), 0.0, 0.0}));
  return Skeleton(std::move(bones));
}

/// Closed-form tip of a planar chain: sum of L_k (cos, sin) of the running
/// angle sum.
inline Vec3d planar_tip(const std::vector<double>& lengths, const std::vector<double>& angles) {
  double x = 0.0, y = 0.0, phi = 0.0;
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    phi += angles[k];
    x += lengths[k] * std::cos(phi);
    y += lengths[k] * std::sin(phi);
  }
  return {x, y, 0.0};
}

inline std::vector<double> random_in_bounds(const DofLayout& layout, std::mt19937_64& rng) {
  std::vector<double> theta(layout.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = layout.lower()[i] + u(rng) * (layout.upper()[i] - layout.lower()[i]);
  return theta;
}

inline const std::vector<std::string>& right_arm() {
  static const std::vector<std::string> names{"right_collar", "right_shoulder", "right_elbow",
                                              "right_wrist"};
  return names;
}

}  // namespace diffik::test
