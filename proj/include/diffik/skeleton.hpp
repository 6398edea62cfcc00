#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diffik/math.hpp"

namespace diffik {

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};

char axis_name(Axis a);
std::optional<Axis> parse_axis(std::string_view s);

struct AngleLimits {
  double min = 0.0;
  double max = 0.0;
};

struct Bone {
  std::string name;
  std::optional<std::size_t> parent;
  /// Offset from the parent frame, meters.
  Vec3d translation;
  /// Rest rotation as a unit quaternion (w, x, y, z).
  std::array<double, 4> rest_rotation{1.0, 0.0, 0.0, 0.0};
  std::array<bool, 3> controlled{false, false, false};
  std::array<AngleLimits, 3> limits{};

  /// Fixed local transform: rest rotation plus offset translation.
  Transformd local;

  [[nodiscard]] bool controls(Axis a) const { return controlled[static_cast<std::size_t>(a)]; }
  [[nodiscard]] bool has_controlled_axes() const {
    return controlled[0] || controlled[1] || controlled[2];
  }
};

/// Immutable kinematic tree. Bones are stored in topological order.
class Skeleton {
 public:
  Skeleton() = default;

  /// Validates and takes ownership of bones whose parents are already
  /// resolved to indices. Throws ValidationError naming the offending bone.
  explicit Skeleton(std::vector<Bone> bones);

  [[nodiscard]] const std::vector<Bone>& bones() const { return bones_; }
  [[nodiscard]] std::size_t size() const { return bones_.size(); }
  [[nodiscard]] const Bone& bone(std::size_t i) const { return bones_.at(i); }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
  /// Like find() but throws ValidationError for an unknown name.
  [[nodiscard]] std::size_t index_of(std::string_view name) const;

  /// True when `ancestor` lies on the parent path of `bone` (or equals it).
  [[nodiscard]] bool is_ancestor(std::size_t ancestor, std::size_t bone) const;

 private:
  std::vector<Bone> bones_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

struct DofEntry {
  std::size_t bone;
  Axis axis;

  friend bool operator==(const DofEntry&, const DofEntry&) = default;
};

/// Flattening of the controlled degrees of freedom into one angle vector,
/// with per-entry bounds.
class DofLayout {
 public:
  DofLayout() = default;
  DofLayout(std::vector<DofEntry> entries, std::vector<double> lower, std::vector<double> upper,
            std::size_t bone_count);

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const std::vector<DofEntry>& entries() const { return entries_; }
  [[nodiscard]] const std::vector<double>& lower() const { return lower_; }
  [[nodiscard]] const std::vector<double>& upper() const { return upper_; }

  /// Index into the angle vector for (bone, axis), or -1.
  [[nodiscard]] int dof_index(std::size_t bone, Axis axis) const {
    return bone < bone_dofs_.size() ? bone_dofs_[bone][static_cast<std::size_t>(axis)] : -1;
  }
  [[nodiscard]] bool drives(std::size_t bone) const {
    return dof_index(bone, Axis::x) >= 0 || dof_index(bone, Axis::y) >= 0 ||
           dof_index(bone, Axis::z) >= 0;
  }
  [[nodiscard]] std::size_t bone_count() const { return bone_dofs_.size(); }

  friend bool operator==(const DofLayout& a, const DofLayout& b) {
    return a.entries_ == b.entries_ && a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

 private:
  std::vector<DofEntry> entries_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::array<int, 3>> bone_dofs_;
};

/// Enumerates (bone, axis) in skeleton order, then x, y, z.
DofLayout dof_layout(const Skeleton& skel, const std::vector<std::string>& controlled);

/// Layout over every bone that declares controlled axes.
DofLayout full_dof_layout(const Skeleton& skel);

Skeleton load_skeleton(const std::filesystem::path& path);
Skeleton parse_skeleton(std::string_view text);
/// Serializes in the radians form of the skeleton file format.
std::string serialize_skeleton(const Skeleton& skel);

bool operator==(const Skeleton& a, const Skeleton& b);

}  // namespace diffik
