#pragma once

#include <span>
#include <string>
#include <vector>

#include "diffik/objectives.hpp"
#include "diffik/skeleton.hpp"
#include "diffik/solver.hpp"

namespace diffik {

/// Serial chain for the geometric baselines. Joints are the controlled bones
/// from base to tip; the effector is a point fixed in effector_bone's frame.
struct ChainSpec {
  std::vector<std::size_t> joints;
  std::size_t effector_bone = 0;
  Vec3d effector_offset;
  /// |p_{k+1} - p_k| between consecutive joint origins, then last joint to
  /// effector. Constant for any angles.
  std::vector<double> segment_lengths;

  [[nodiscard]] double reach() const;
};

/// Builds a chain and checks that every joint is an ancestor of the next
/// and of the effector bone.
ChainSpec make_chain(const Skeleton& skel, const DofLayout& layout,
                     const std::vector<std::string>& joints, const std::string& effector_bone,
                     const Vec3d& effector_offset);

/// World positions of the chain joints followed by the effector point.
std::vector<Vec3d> chain_positions(const Skeleton& skel, const DofLayout& layout,
                                   const ChainSpec& chain, std::span<const double> theta);

/// Optimal rotation (radians) about the unit `axis` through `pivot` that
/// brings `point` closest to `target`.
double ccd_angle(const Vec3d& pivot, const Vec3d& axis, const Vec3d& point, const Vec3d& target);

/// Cyclic coordinate descent. One sweep visits every DOF from effector side
/// to base and counts as one iteration. The success check after each sweep
/// uses the full objective spec.
SolveReport ccd_solve(const Skeleton& skel, const DofLayout& layout, const ChainSpec& chain,
                      const Vec3d& target, const ObjectiveSpec& spec,
                      std::span<const double> theta0, const SolverConfig& config,
                      const IterationObserver& observer = {});

struct FabrikResult {
  std::vector<Vec3d> positions;
  int passes = 0;
  bool reached = false;
};

/// Position-space FABRIK on free joints. One pass is a backward+forward
/// pair; an unreachable target straightens the chain toward it in one pass.
FabrikResult fabrik_positions(std::vector<Vec3d> positions, std::span<const double> lengths,
                              const Vec3d& target, int max_passes, double tolerance);

/// Joint angles for `bone` that rotate its rest segment direction onto
/// `desired` (world), decomposed into the bone's controlled Euler axes and
/// clamped to the layout bounds. Writes into theta. The optional second pair
/// (the following segment in bone and world coordinates) fixes the twist
/// about the segment so a hinge further down can bend in the right plane;
/// pass zero vectors to skip it.
void align_joint(const Skeleton& skel, const DofLayout& layout, std::size_t bone,
                 const Vec3d& segment_in_bone, const Vec3d& desired, const Vec3d& next_in_bone,
                 const Vec3d& next_desired, std::span<double> theta);

/// FABRIK with angle reconstruction: every iteration runs one position pass
/// from the current pose, converts the positions back to clamped joint
/// angles and re-derives positions through FK before the success check.
SolveReport fabrik_solve(const Skeleton& skel, const DofLayout& layout, const ChainSpec& chain,
                         const Vec3d& target, const ObjectiveSpec& spec,
                         std::span<const double> theta0, const SolverConfig& config,
                         const IterationObserver& observer = {});

}  // namespace diffik
