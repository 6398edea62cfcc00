#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diffik/ad.hpp"
#include "diffik/errors.hpp"
#include "diffik/fk.hpp"
#include "diffik/math.hpp"
#include "diffik/skeleton.hpp"

namespace diffik {

/// Added inside the Euclidean norm so the distance gradient stays finite
/// when the effector sits exactly on the target.
inline constexpr double kNormEpsilon = 1e-12;
/// The cosine fed to arccos is clamped to [-1 + kCosClamp, 1 - kCosClamp].
inline constexpr double kCosClamp = 1e-7;

struct DistanceTerm {
  std::size_t bone = 0;
  Vec3d offset;
  Vec3d target;
};

struct LookAtTerm {
  std::size_t bone = 0;
  Vec3d local_axis{0.0, 1.0, 0.0};
  Vec3d target_direction{0.0, 1.0, 0.0};
  /// Added to target_direction before use. Zero unless a caller tunes it.
  Vec3d target_offset;
};

struct KnownRotationTerm {
  std::vector<double> theta_star;
  std::vector<double> mask;  // 0/1 per DOF
};

struct SmoothnessTerm {
  int order = 1;
};

enum class TermKind { distance, look_at, known_rotation, smoothness };

struct ObjectiveTerm {
  std::string name;
  double weight = 1.0;
  std::variant<DistanceTerm, LookAtTerm, KnownRotationTerm, SmoothnessTerm> payload;

  [[nodiscard]] TermKind kind() const { return static_cast<TermKind>(payload.index()); }
  [[nodiscard]] bool needs_pose() const {
    return kind() == TermKind::distance || kind() == TermKind::look_at;
  }
};

std::string_view term_kind_name(TermKind k);

struct ObjectiveSpec {
  std::vector<ObjectiveTerm> terms;

  [[nodiscard]] bool has_smoothness() const;
  [[nodiscard]] bool needs_pose() const;
};

ObjectiveTerm make_distance(std::size_t bone, Vec3d offset, Vec3d target, double weight = 1.0);
ObjectiveTerm make_look_at(std::size_t bone, Vec3d local_axis, Vec3d target_direction,
                           double weight = 1.0);
ObjectiveTerm make_known_rotation(std::vector<double> theta_star, std::vector<double> mask,
                                  double weight = 1.0);
ObjectiveTerm make_smoothness(int order, double weight = 1.0);

/// Checks every term invariant against a skeleton and layout. Throws
/// ValidationError naming the term.
void validate_spec(const ObjectiveSpec& spec, const Skeleton& skel, const DofLayout& layout);

/// Replaces the target of every distance term.
void set_distance_target(ObjectiveSpec& spec, const Vec3d& target);

// ---- individual terms -----------------------------------------------------

template <class S>
S distance_objective(const GlobalPose<S>& pose, std::size_t bone, const Vec3d& offset,
                     const Vec3d& target) {
  using std::sqrt;
  using ad::sqrt;
  const Vec3<S> p = effector_position(pose, bone, offset);
  const Vec3<S> d = Vec3<S>(target) - p;
  return sqrt(dot(d, d) + S(kNormEpsilon));
}

template <class S>
S look_at_objective(const GlobalPose<S>& pose, std::size_t bone, const Vec3d& local_axis,
                    const Vec3d& target_dir) {
  using std::acos;
  using std::sqrt;
  using ad::acos;
  using ad::sqrt;
  if (target_dir.x == 0.0 && target_dir.y == 0.0 && target_dir.z == 0.0)
    throw ValidationError("look_at: zero target direction");
  const Vec3<S> db = bone_direction(pose, bone, local_axis);
  const Vec3<S> dt(target_dir);
  const S c = dot(db, dt) / (sqrt(dot(db, db)) * S(norm(target_dir)));
  const S angle = acos(clamp_value(c, -1.0 + kCosClamp, 1.0 - kCosClamp));
  return angle * angle;
}

/// Mean squared deviation over the DOFs selected by mask.
template <class S>
S known_rotation_objective(std::span<const S> theta, std::span<const double> theta_star,
                           std::span<const double> mask) {
  if (theta.size() != theta_star.size() || theta.size() != mask.size())
    throw DimensionError("known_rotation: length mismatch");
  S sum(0.0);
  double selected = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const S d = theta[i] - S(theta_star[i]);
    sum = sum + S(mask[i]) * (d * d);
    selected += mask[i];
  }
  return sum / S(std::max(selected, 1.0));
}

/// Sum of squared n-th forward differences over the points (the signed
/// binomial stencil). Differences are taken one order at a time so constant
/// runs give exactly zero. Returns 0 when there are not more than `order`
/// points.
template <class S>
S smoothness_objective(std::span<const std::span<const S>> points, int order) {
  if (order < 1 || order > 3) throw ValidationError("smoothness: order must be 1, 2 or 3");
  const std::size_t n = static_cast<std::size_t>(order);
  S energy(0.0);
  if (points.size() <= n) return energy;
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw DimensionError("smoothness: points differ in length");
  std::array<S, 4> d;
  for (std::size_t t = 0; t + n < points.size(); ++t) {
    for (std::size_t j = 0; j < dim; ++j) {
      for (std::size_t k = 0; k <= n; ++k) d[k] = points[t + k][j];
      for (std::size_t level = 1; level <= n; ++level)
        for (std::size_t k = 0; k + level <= n; ++k) d[k] = d[k + 1] - d[k];
      energy = energy + d[0] * d[0];
    }
  }
  return energy;
}

// ---- composition ----------------------------------------------------------

namespace detail {

template <class S>
void check_finite(const S& v, const ObjectiveTerm& term) {
  if (!std::isfinite(ad::value_of(v)))
    throw NonFiniteError("objective term '" + term.name + "' produced a non-finite value");
}

}  // namespace detail

/// Weighted sum of the distance, look-at and known-rotation terms for one
/// pose whose FK has already been computed. Smoothness terms are skipped;
/// zero-weight terms contribute nothing.
template <class S>
S pose_terms(const ObjectiveSpec& spec, const GlobalPose<S>* pose, std::span<const S> theta) {
  S total(0.0);
  for (const ObjectiveTerm& term : spec.terms) {
    if (term.weight == 0.0) continue;
    S v(0.0);
    if (const auto* d = std::get_if<DistanceTerm>(&term.payload)) {
      v = distance_objective(*pose, d->bone, d->offset, d->target);
    } else if (const auto* l = std::get_if<LookAtTerm>(&term.payload)) {
      v = look_at_objective(*pose, l->bone, l->local_axis, l->target_direction + l->target_offset);
    } else if (const auto* k = std::get_if<KnownRotationTerm>(&term.payload)) {
      v = known_rotation_objective<S>(theta, k->theta_star, k->mask);
    } else {
      continue;
    }
    detail::check_finite(v, term);
    total = total + S(term.weight) * v;
  }
  return total;
}

/// J(theta) for a single pose: one FK pass, then the weighted term sum.
/// Throws ValidationError if the spec contains a smoothness term.
template <class S>
S evaluate(const ObjectiveSpec& spec, const Skeleton& skel, const DofLayout& layout,
           std::span<const S> theta, EvalStats* stats = nullptr) {
  if (spec.has_smoothness())
    throw ValidationError("evaluate: smoothness term needs a trajectory context");
  if (spec.needs_pose()) {
    const GlobalPose<S> pose = forward<S>(skel, layout, theta, stats);
    return pose_terms<S>(spec, &pose, theta);
  }
  return pose_terms<S>(spec, nullptr, theta);
}

inline double evaluate(const ObjectiveSpec& spec, const Skeleton& skel, const DofLayout& layout,
                       std::span<const double> theta, EvalStats* stats = nullptr) {
  return evaluate<double>(spec, skel, layout, theta, stats);
}

/// Trajectory context: pose terms bind to the final point, smoothness terms
/// to the whole sequence. Emits a warning on `warn` (if given) for every
/// smoothness term whose order is not below the point count.
template <class S>
S evaluate_trajectory(const ObjectiveSpec& spec, const Skeleton& skel, const DofLayout& layout,
                      std::span<const std::span<const S>> points, EvalStats* stats = nullptr,
                      std::vector<std::string>* warn = nullptr) {
  if (points.empty()) throw DimensionError("evaluate_trajectory: empty trajectory");
  S total(0.0);
  const std::span<const S> last = points.back();
  if (spec.needs_pose()) {
    const GlobalPose<S> pose = forward<S>(skel, layout, last, stats);
    total = pose_terms<S>(spec, &pose, last);
  } else {
    total = pose_terms<S>(spec, nullptr, last);
  }
  for (const ObjectiveTerm& term : spec.terms) {
    const auto* s = std::get_if<SmoothnessTerm>(&term.payload);
    if (!s || term.weight == 0.0) continue;
    if (points.size() <= static_cast<std::size_t>(s->order) && warn)
      warn->push_back("smoothness term '" + term.name + "' has order " +
                      std::to_string(s->order) + " but only " + std::to_string(points.size()) +
                      " points; it contributes 0");
    const S v = smoothness_objective<S>(points, s->order);
    detail::check_finite(v, term);
    total = total + S(term.weight) * v;
  }
  return total;
}

// ---- files ----------------------------------------------------------------

/// Parses an objective spec document, resolving bone names against skel and
/// per-bone known-rotation entries against layout.
ObjectiveSpec parse_objective_spec(std::string_view text, const Skeleton& skel,
                                   const DofLayout& layout);
ObjectiveSpec load_objective_spec(const std::filesystem::path& path, const Skeleton& skel,
                                  const DofLayout& layout);
std::string serialize_objective_spec(const ObjectiveSpec& spec, const Skeleton& skel);

/// Bone names the spec file declares as controlled ("controlled" key), or
/// empty when absent.
std::vector<std::string> objective_controlled_bones(std::string_view text);

}  // namespace diffik
