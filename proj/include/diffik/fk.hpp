#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "diffik/errors.hpp"
#include "diffik/math.hpp"
#include "diffik/skeleton.hpp"

namespace diffik {

template <class S>
using GlobalPose = std::vector<Transform<S>>;

using GlobalPosed = GlobalPose<double>;

/// Counts forward-kinematics passes. Owned by the caller; never shared
/// between concurrent evaluations.
struct EvalStats {
  std::size_t fk_passes = 0;
};

/// R = Rz(theta_z) * Ry(theta_y) * Rx(theta_x), computed as that literal
/// product of the three elementary rotations.
template <class S>
Transform<S> euler_to_rotation(const S& tx, const S& ty, const S& tz) {
  using std::cos;
  using std::sin;
  using ad::cos;
  using ad::sin;
  const S cx = cos(tx), sx = sin(tx);
  const S cy = cos(ty), sy = sin(ty);
  const S cz = cos(tz), sz = sin(tz);

  Transform<S> rx, ry, rz;
  rx(1, 1) = cx;  rx(1, 2) = -sx;
  rx(2, 1) = sx;  rx(2, 2) = cx;

  ry(0, 0) = cy;  ry(0, 2) = sy;
  ry(2, 0) = -sy;  ry(2, 2) = cy;

  rz(0, 0) = cz;  rz(0, 1) = -sz;
  rz(1, 0) = sz;  rz(1, 1) = cz;

  return (rz * ry) * rx;
}

inline Transformd euler_to_rotation(const Vec3d& theta) {
  return euler_to_rotation<double>(theta.x, theta.y, theta.z);
}

/// Global transform of every bone: T_i = L_i R_i for roots and
/// T_parent L_i R_i otherwise, in one topological pass. Axes of a bone that
/// the layout does not drive contribute angle 0; bones the layout does not
/// drive at all skip the rotation factor.
template <class S>
GlobalPose<S> forward(const Skeleton& skel, const DofLayout& layout, std::span<const S> theta,
                      EvalStats* stats = nullptr) {
  if (theta.size() != layout.size())
    throw DimensionError("forward: angle vector has " + std::to_string(theta.size()) +
                         " entries, layout has " + std::to_string(layout.size()));
  if (layout.bone_count() != skel.size())
    throw DimensionError("forward: layout was built for a different skeleton");
  if (stats) ++stats->fk_passes;

  GlobalPose<S> pose;
  pose.reserve(skel.size());
  for (std::size_t i = 0; i < skel.size(); ++i) {
    const Bone& b = skel.bone(i);
    Transform<S> local(b.local);
    if (layout.drives(i)) {
      S angles[3] = {S(0.0), S(0.0), S(0.0)};
      for (Axis a : kAxes) {
        const int d = layout.dof_index(i, a);
        if (d >= 0) angles[static_cast<std::size_t>(a)] = theta[static_cast<std::size_t>(d)];
      }
      local = local * euler_to_rotation<S>(angles[0], angles[1], angles[2]);
    }
    if (b.parent)
      pose.push_back(pose[*b.parent] * local);
    else
      pose.push_back(std::move(local));
  }
  return pose;
}

inline GlobalPosed forward(const Skeleton& skel, const DofLayout& layout,
                           std::span<const double> theta, EvalStats* stats = nullptr) {
  return forward<double>(skel, layout, theta, stats);
}

/// T_bone applied to a point given in the bone's frame.
template <class S>
Vec3<S> effector_position(const GlobalPose<S>& pose, std::size_t bone, const Vec3d& offset) {
  if (bone >= pose.size()) throw ValidationError("effector_position: bone index out of range");
  return pose[bone].apply_point(Vec3<S>(offset));
}

/// Rotation block of T_bone applied to a local axis. Not normalized.
template <class S>
Vec3<S> bone_direction(const GlobalPose<S>& pose, std::size_t bone, const Vec3d& local_axis) {
  if (bone >= pose.size()) throw ValidationError("bone_direction: bone index out of range");
  if (local_axis.x == 0.0 && local_axis.y == 0.0 && local_axis.z == 0.0)
    throw ValidationError("bone_direction: zero axis");
  return pose[bone].apply_vector(Vec3<S>(local_axis));
}

/// Text export: one line per bone, "name" followed by the 16 row-major
/// matrix entries.
std::string export_global_pose(const Skeleton& skel, const GlobalPosed& pose, int precision = 17);

}  // namespace diffik
