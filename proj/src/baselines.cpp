#include "diffik/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "diffik/fk.hpp"

namespace diffik {

namespace {

constexpr double kDegenerate = 1e-12;

Transformd parent_frame(const Skeleton& skel, const GlobalPosed& pose, std::size_t bone) {
  const Bone& b = skel.bone(bone);
  return b.parent ? pose[*b.parent] * b.local : b.local;
}

Vec3d effector_point(const GlobalPosed& pose, const ChainSpec& chain) {
  return pose[chain.effector_bone].apply_point(chain.effector_offset);
}

/// Rotation taking unit vector a onto unit vector b about a x b.
Transformd align_rotation(const Vec3d& a, const Vec3d& b) {
  Vec3d axis = cross(a, b);
  const double s = norm(axis);
  const double c = dot(a, b);
  if (s < kDegenerate) {
    if (c > 0.0) return Transformd::identity();
    // Antiparallel: half turn about any axis perpendicular to a.
    axis = std::abs(a.x) < 0.9 ? cross(a, Vec3d{1.0, 0.0, 0.0}) : cross(a, Vec3d{0.0, 1.0, 0.0});
  }
  axis = normalized(axis);
  const double angle = std::atan2(s, c);
  const double ca = std::cos(angle), sa = std::sin(angle), t = 1.0 - ca;
  const double x = axis.x, y = axis.y, z = axis.z;
  Transformd r;
  r(0, 0) = t * x * x + ca;      r(0, 1) = t * x * y - sa * z;  r(0, 2) = t * x * z + sa * y;
  r(1, 0) = t * x * y + sa * z;  r(1, 1) = t * y * y + ca;      r(1, 2) = t * y * z - sa * x;
  r(2, 0) = t * x * z - sa * y;  r(2, 1) = t * y * z + sa * x;  r(2, 2) = t * z * z + ca;
  return r;
}

/// Rotation taking a1 onto b1 exactly and a2 into the half-plane spanned by
/// b1 and b2. Falls back to align_rotation when either pair is parallel.
Transformd triad_rotation(const Vec3d& a1, const Vec3d& a2, const Vec3d& b1, const Vec3d& b2) {
  const Vec3d ea = normalized(a1), eb = normalized(b1);
  const Vec3d pa = a2 - ea * dot(a2, ea), pb = b2 - eb * dot(b2, eb);
  if (norm(pa) < 1e-9 * norm(a2) + kDegenerate || norm(pb) < 1e-9 * norm(b2) + kDegenerate)
    return align_rotation(ea, eb);
  const Vec3d fa[3] = {ea, normalized(pa), cross(ea, normalized(pa))};
  const Vec3d fb[3] = {eb, normalized(pb), cross(eb, normalized(pb))};
  Transformd r;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double bi[3] = {fb[0][i], fb[1][i], fb[2][i]};
      const double aj[3] = {fa[0][j], fa[1][j], fa[2][j]};
      r(i, j) = bi[0] * aj[0] + bi[1] * aj[1] + bi[2] * aj[2];
    }
  }
  return r;
}

/// Shared iteration driver: check, step, re-evaluate, with the same stopping
/// rules as the gradient solver.
template <class Step>
SolveReport run_iterations(const Skeleton& skel, const DofLayout& layout,
                           const ObjectiveSpec& spec, std::span<const double> theta0,
                           const SolverConfig& config, const IterationObserver& observer,
                           Step&& step) {
  config.validate();
  validate_spec(spec, skel, layout);
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::vector<double> theta = project_bounds(theta0, layout);

  SolveReport report;
  report.time_dependent = config.time_budget.has_value();
  double loss = evaluate(spec, skel, layout, theta);
  if (config.record_trace) report.loss_trace.push_back(loss);

  std::vector<double> iteration_ms;
  int allowed = config.max_iterations;
  int iterations = 0;
  auto last = start;
  StopReason reason = StopReason::max_iterations;
  while (true) {
    if (loss < config.loss_threshold) {
      reason = StopReason::threshold;
      break;
    }
    if (iterations >= allowed) {
      reason = allowed < config.max_iterations ? StopReason::time_budget
                                               : StopReason::max_iterations;
      break;
    }
    step(theta);
    loss = evaluate(spec, skel, layout, theta);
    ++iterations;
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
  report.success = loss < config.loss_threshold;
  report.stop_reason = reason;
  report.iterations_allowed = allowed;
  if (config.record_trace) report.iteration_ms = std::move(iteration_ms);
  return report;
}

}  // namespace

double ChainSpec::reach() const {
  return std::accumulate(segment_lengths.begin(), segment_lengths.end(), 0.0);
}

ChainSpec make_chain(const Skeleton& skel, const DofLayout& layout,
                     const std::vector<std::string>& joints, const std::string& effector_bone,
                     const Vec3d& effector_offset) {
  if (joints.empty()) throw ValidationError("chain: needs at least one joint");
  ChainSpec chain;
  for (const auto& name : joints) chain.joints.push_back(skel.index_of(name));
  chain.effector_bone = skel.index_of(effector_bone);
  chain.effector_offset = effector_offset;
  for (std::size_t k = 0; k + 1 < chain.joints.size(); ++k) {
    if (chain.joints[k] == chain.joints[k + 1] ||
        !skel.is_ancestor(chain.joints[k], chain.joints[k + 1]))
      throw ValidationError("chain: '" + joints[k] + "' is not an ancestor of '" + joints[k + 1] +
                            "'");
  }
  if (!skel.is_ancestor(chain.joints.back(), chain.effector_bone))
    throw ValidationError("chain: effector bone '" + effector_bone + "' is not below '" +
                          joints.back() + "'");
  for (std::size_t j : chain.joints)
    if (!layout.drives(j))
      throw ValidationError("chain: joint '" + skel.bone(j).name + "' has no controlled DOF");

  const std::vector<double> rest(layout.size(), 0.0);
  const auto p = chain_positions(skel, layout, chain, rest);
  for (std::size_t k = 0; k + 1 < p.size(); ++k) chain.segment_lengths.push_back(norm(p[k + 1] - p[k]));
  return chain;
}

std::vector<Vec3d> chain_positions(const Skeleton& skel, const DofLayout& layout,
                                   const ChainSpec& chain, std::span<const double> theta) {
  const GlobalPosed pose = forward(skel, layout, theta);
  std::vector<Vec3d> out;
  out.reserve(chain.joints.size() + 1);
  for (std::size_t j : chain.joints) out.push_back(pose[j].translation());
  out.push_back(effector_point(pose, chain));
  return out;
}

double ccd_angle(const Vec3d& pivot, const Vec3d& axis, const Vec3d& point, const Vec3d& target) {
  const Vec3d u = point - pivot;
  const Vec3d w = target - pivot;
  const Vec3d up = u - axis * dot(u, axis);
  const Vec3d wp = w - axis * dot(w, axis);
  if (norm(up) < kDegenerate || norm(wp) < kDegenerate) return 0.0;
  return std::atan2(dot(axis, cross(up, wp)), dot(up, wp));
}

SolveReport ccd_solve(const Skeleton& skel, const DofLayout& layout, const ChainSpec& chain,
                      const Vec3d& target, const ObjectiveSpec& spec,
                      std::span<const double> theta0, const SolverConfig& config,
                      const IterationObserver& observer) {
  auto sweep = [&](std::vector<double>& theta) {
    for (auto jt = chain.joints.rbegin(); jt != chain.joints.rend(); ++jt) {
      const std::size_t bone = *jt;
      // Innermost rotation first: R = Rz Ry Rx, so x acts closest to the child.
      for (Axis axis : {Axis::x, Axis::y, Axis::z}) {
        const int d = layout.dof_index(bone, axis);
        if (d < 0) continue;
        const auto di = static_cast<std::size_t>(d);
        const GlobalPosed pose = forward(skel, layout, theta);
        const Transformd frame = parent_frame(skel, pose, bone);
        auto angle_of = [&](Axis a) {
          const int k = layout.dof_index(bone, a);
          return k >= 0 ? theta[static_cast<std::size_t>(k)] : 0.0;
        };
        // World axis of this DOF given the rotations applied outside it.
        Transformd outer = frame;
        Vec3d local_axis{0.0, 0.0, 1.0};
        if (axis != Axis::z) {
          outer = outer * euler_to_rotation(Vec3d{0.0, 0.0, angle_of(Axis::z)});
          local_axis = {0.0, 1.0, 0.0};
        }
        if (axis == Axis::x) {
          outer = outer * euler_to_rotation(Vec3d{0.0, angle_of(Axis::y), 0.0});
          local_axis = {1.0, 0.0, 0.0};
        }
        const Vec3d world_axis = normalized(outer.apply_vector(local_axis));
        const double delta =
            ccd_angle(frame.translation(), world_axis, effector_point(pose, chain), target);
        theta[di] = std::clamp(theta[di] + delta, layout.lower()[di], layout.upper()[di]);
      }
    }
  };
  return run_iterations(skel, layout, spec, theta0, config, observer, sweep);
}

FabrikResult fabrik_positions(std::vector<Vec3d> positions, std::span<const double> lengths,
                              const Vec3d& target, int max_passes, double tolerance) {
  if (positions.size() < 2 || lengths.size() + 1 != positions.size())
    throw DimensionError("fabrik: need n+1 positions for n segments");
  FabrikResult result;
  const std::size_t n = lengths.size();
  const Vec3d base = positions.front();
  const double reach = std::accumulate(lengths.begin(), lengths.end(), 0.0);

  for (int pass = 0; pass < max_passes; ++pass) {
    if (norm(positions.back() - target) <= tolerance) {
      result.reached = true;
      break;
    }
    ++result.passes;
    if (norm(target - base) >= reach) {
      for (std::size_t k = 0; k < n; ++k)
        positions[k + 1] = positions[k] + normalized(target - positions[k]) * lengths[k];
      continue;
    }
    positions[n] = target;
    for (std::size_t k = n; k-- > 0;) {
      const Vec3d dir = positions[k] - positions[k + 1];
      const double len = norm(dir);
      positions[k] = positions[k + 1] + (len > kDegenerate ? dir * (lengths[k] / len) : Vec3d{});
    }
    positions[0] = base;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3d dir = positions[k + 1] - positions[k];
      const double len = norm(dir);
      positions[k + 1] = positions[k] + (len > kDegenerate ? dir * (lengths[k] / len) : Vec3d{});
    }
  }
  if (!result.reached) result.reached = norm(positions.back() - target) <= tolerance;
  result.positions = std::move(positions);
  return result;
}

void align_joint(const Skeleton& skel, const DofLayout& layout, std::size_t bone,
                 const Vec3d& segment_in_bone, const Vec3d& desired, const Vec3d& next_in_bone,
                 const Vec3d& next_desired, std::span<double> theta) {
  if (norm(segment_in_bone) < kDegenerate || norm(desired) < kDegenerate) return;
  const GlobalPosed pose = forward(skel, layout, theta);
  const Transformd frame = parent_frame(skel, pose, bone);
  const Transformd to_local = rigid_inverse(frame);
  const Vec3d d_local = to_local.apply_vector(desired);
  const Transformd r = triad_rotation(segment_in_bone, next_in_bone, d_local,
                                      to_local.apply_vector(next_desired));

  // R = Rz Ry Rx  =>  R20 = -sin(y), R21 = cos(y) sin(x), R10 = sin(z) cos(y).
  const double ay = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double ax = std::atan2(r(2, 1), r(2, 2));
  const double az = std::atan2(r(1, 0), r(0, 0));
  const double angles[3] = {ax, ay, az};
  for (Axis a : kAxes) {
    const int d = layout.dof_index(bone, a);
    if (d < 0) continue;
    const auto di = static_cast<std::size_t>(d);
    theta[di] = std::clamp(angles[static_cast<std::size_t>(a)], layout.lower()[di],
                           layout.upper()[di]);
  }
}

SolveReport fabrik_solve(const Skeleton& skel, const DofLayout& layout, const ChainSpec& chain,
                         const Vec3d& target, const ObjectiveSpec& spec,
                         std::span<const double> theta0, const SolverConfig& config,
                         const IterationObserver& observer) {
  if (chain.joints.size() < 2) throw ValidationError("fabrik: chain needs at least two joints");
  auto iteration = [&](std::vector<double>& theta) {
    const auto current = chain_positions(skel, layout, chain, theta);
    const FabrikResult solved = fabrik_positions(current, chain.segment_lengths, target, 1, 0.0);
    const std::size_t count = chain.joints.size();
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t bone = chain.joints[k];
      const GlobalPosed pose = forward(skel, layout, theta);
      const auto point = [&](std::size_t i) {
        return i < count ? pose[chain.joints[i]].translation() : effector_point(pose, chain);
      };
      const Transformd to_bone = rigid_inverse(pose[bone]);
      const Vec3d segment_in_bone = to_bone.apply_point(point(k + 1));
      Vec3d next_in_bone{}, next_desired{};
      if (k + 1 < count) {
        next_in_bone = to_bone.apply_point(point(k + 2)) - segment_in_bone;
        next_desired = solved.positions[k + 2] - solved.positions[k + 1];
      }
      align_joint(skel, layout, bone, segment_in_bone, solved.positions[k + 1] - pose[bone].translation(),
                  next_in_bone, next_desired, theta);
    }
  };
  return run_iterations(skel, layout, spec, theta0, config, observer, iteration);
}

}  // namespace diffik
