#include "diffik/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "diffik/errors.hpp"

namespace diffik {

namespace {

using nlohmann::json;

constexpr double kOrthonormalTolerance = 1e-6;
constexpr int kFormatVersion = 1;

Vec3d read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(what + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

char axis_name(Axis a) { return "xyz"[static_cast<std::size_t>(a)]; }

std::optional<Axis> parse_axis(std::string_view s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  return std::nullopt;
}

Skeleton::Skeleton(std::vector<Bone> bones) : bones_(std::move(bones)) {
  for (std::size_t i = 0; i < bones_.size(); ++i) {
    Bone& b = bones_[i];
    if (b.name.empty()) throw ValidationError("bone " + std::to_string(i) + " has an empty name");
    if (!by_name_.emplace(b.name, i).second)
      throw ValidationError("bone '" + b.name + "': duplicate name");
    if (b.parent) {
      if (*b.parent == i) throw ValidationError("bone '" + b.name + "': cycle (bone is its own parent)");
      if (*b.parent > i)
        throw ValidationError("bone '" + b.name + "': parent must precede the bone (ordering)");
    }
    for (Axis a : kAxes) {
      if (!b.controls(a)) continue;
      const AngleLimits& lim = b.limits[static_cast<std::size_t>(a)];
      if (!std::isfinite(lim.min) || !std::isfinite(lim.max))
        throw ValidationError("bone '" + b.name + "': non-finite limit on axis " + axis_name(a));
      if (lim.min > lim.max)
        throw ValidationError("bone '" + b.name + "': limit min > max on axis " + axis_name(a));
    }
    if (!std::isfinite(b.translation.x) || !std::isfinite(b.translation.y) ||
        !std::isfinite(b.translation.z))
      throw ValidationError("bone '" + b.name + "': non-finite translation");
    b.local = quaternion_to_transform(b.rest_rotation);
    b.local(0, 3) = b.translation.x;
    b.local(1, 3) = b.translation.y;
    b.local(2, 3) = b.translation.z;
    const double err = orthonormality_error(b.local);
    if (!(err <= kOrthonormalTolerance))
      throw ValidationError("bone '" + b.name + "': rest rotation is not orthonormal");
  }
}

std::optional<std::size_t> Skeleton::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t Skeleton::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ValidationError("unknown bone '" + std::string(name) + "'");
  return *i;
}

bool Skeleton::is_ancestor(std::size_t ancestor, std::size_t bone) const {
  std::optional<std::size_t> cur = bone;
  while (cur) {
    if (*cur == ancestor) return true;
    cur = bones_[*cur].parent;
  }
  return false;
}

bool operator==(const Skeleton& a, const Skeleton& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Bone& x = a.bone(i);
    const Bone& y = b.bone(i);
    if (x.name != y.name || x.parent != y.parent || !(x.translation == y.translation) ||
        x.rest_rotation != y.rest_rotation || x.controlled != y.controlled)
      return false;
    for (std::size_t k = 0; k < 3; ++k) {
      if (!x.controlled[k]) continue;
      if (x.limits[k].min != y.limits[k].min || x.limits[k].max != y.limits[k].max) return false;
    }
    if (x.local.m != y.local.m) return false;
  }
  return true;
}

DofLayout::DofLayout(std::vector<DofEntry> entries, std::vector<double> lower,
                     std::vector<double> upper, std::size_t bone_count)
    : entries_(std::move(entries)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != entries_.size() || upper_.size() != entries_.size())
    throw DimensionError("dof layout: bound vectors must match entry count");
  bone_dofs_.assign(bone_count, {-1, -1, -1});
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (lower_[i] > upper_[i]) throw ValidationError("dof layout: lower > upper");
    const DofEntry& e = entries_[i];
    if (e.bone >= bone_count) throw ValidationError("dof layout: bone index out of range");
    bone_dofs_[e.bone][static_cast<std::size_t>(e.axis)] = static_cast<int>(i);
  }
}

DofLayout dof_layout(const Skeleton& skel, const std::vector<std::string>& controlled) {
  std::vector<bool> selected(skel.size(), false);
  for (const auto& name : controlled) selected[skel.index_of(name)] = true;

  std::vector<DofEntry> entries;
  std::vector<double> lower, upper;
  for (std::size_t i = 0; i < skel.size(); ++i) {
    if (!selected[i]) continue;
    const Bone& b = skel.bone(i);
    for (Axis a : kAxes) {
      if (!b.controls(a)) continue;
      entries.push_back({i, a});
      lower.push_back(b.limits[static_cast<std::size_t>(a)].min);
      upper.push_back(b.limits[static_cast<std::size_t>(a)].max);
    }
  }
  return DofLayout(std::move(entries), std::move(lower), std::move(upper), skel.size());
}

DofLayout full_dof_layout(const Skeleton& skel) {
  std::vector<std::string> names;
  for (const Bone& b : skel.bones())
    if (b.has_controlled_axes()) names.push_back(b.name);
  return dof_layout(skel, names);
}

Skeleton parse_skeleton(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("skeleton file: ") + e.what());
  }

  try {
    if (!doc.is_object()) throw ParseError("skeleton file: top level must be an object");
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion)
      throw ParseError("skeleton file: unsupported version " + std::to_string(version));
    const std::string units = doc.value("units", std::string("radians"));
    double scale = 1.0;
    if (units == "degrees") {
      scale = std::numbers::pi / 180.0;
    } else if (units != "radians") {
      throw ParseError("skeleton file: units must be \"radians\" or \"degrees\"");
    }

    const json& jb = doc.at("bones");
    if (!jb.is_array()) throw ParseError("skeleton file: 'bones' must be a list");

    std::unordered_map<std::string, std::size_t> seen;
    std::vector<std::string> all_names;
    for (const json& b : jb) all_names.push_back(b.at("name").get<std::string>());

    std::vector<Bone> bones;
    bones.reserve(jb.size());
    for (std::size_t i = 0; i < jb.size(); ++i) {
      const json& b = jb[i];
      Bone bone;
      bone.name = all_names[i];
      const json& parent = b.at("parent");
      if (!parent.is_null()) {
        const auto pname = parent.get<std::string>();
        auto it = seen.find(pname);
        if (pname == bone.name) {
          throw ValidationError("bone '" + bone.name + "': cycle (bone is its own parent)");
        } else if (it != seen.end()) {
          bone.parent = it->second;
        } else if (std::find(all_names.begin(), all_names.end(), pname) != all_names.end()) {
          throw ValidationError("bone '" + bone.name + "': parent '" + pname +
                                "' appears after it (ordering)");
        } else {
          throw ValidationError("bone '" + bone.name + "': unknown parent '" + pname + "'");
        }
      }
      bone.translation = read_vec3(b.value("translation", json::array({0.0, 0.0, 0.0})),
                                   "bone '" + bone.name + "' translation");
      if (b.contains("rest_rotation")) {
        const json& q = b.at("rest_rotation");
        if (!q.is_array() || q.size() != 4)
          throw ParseError("bone '" + bone.name + "': rest_rotation must be [w, x, y, z]");
        for (std::size_t k = 0; k < 4; ++k) bone.rest_rotation[k] = q[k].get<double>();
      }
      for (const json& ax : b.value("controlled_axes", json::array())) {
        auto a = parse_axis(ax.get<std::string>());
        if (!a) throw ParseError("bone '" + bone.name + "': bad axis '" + ax.get<std::string>() + "'");
        bone.controlled[static_cast<std::size_t>(*a)] = true;
      }
      const json limits = b.value("limits", json::object());
      for (Axis a : kAxes) {
        const std::string key(1, axis_name(a));
        if (!bone.controls(a)) continue;
        if (!limits.contains(key))
          throw ValidationError("bone '" + bone.name + "': missing limits for axis " + key);
        const json& l = limits.at(key);
        if (!l.is_array() || l.size() != 2)
          throw ParseError("bone '" + bone.name + "': limits." + key + " must be [min, max]");
        bone.limits[static_cast<std::size_t>(a)] = {l[0].get<double>() * scale,
                                                    l[1].get<double>() * scale};
      }
      seen.emplace(bone.name, i);
      bones.push_back(std::move(bone));
    }
    return Skeleton(std::move(bones));
  } catch (const json::exception& e) {
    throw ParseError(std::string("skeleton file: ") + e.what());
  }
}

Skeleton load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open skeleton file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_skeleton(ss.str());
}

std::string serialize_skeleton(const Skeleton& skel) {
  json doc;
  doc["version"] = kFormatVersion;
  doc["units"] = "radians";
  json bones = json::array();
  for (const Bone& b : skel.bones()) {
    json jb;
    jb["name"] = b.name;
    jb["parent"] = b.parent ? json(skel.bone(*b.parent).name) : json(nullptr);
    jb["translation"] = {b.translation.x, b.translation.y, b.translation.z};
    jb["rest_rotation"] = {b.rest_rotation[0], b.rest_rotation[1], b.rest_rotation[2],
                           b.rest_rotation[3]};
    json axes = json::array();
    json limits = json::object();
    for (Axis a : kAxes) {
      if (!b.controls(a)) continue;
      const std::string key(1, axis_name(a));
      axes.push_back(key);
      const AngleLimits& l = b.limits[static_cast<std::size_t>(a)];
      limits[key] = {l.min, l.max};
    }
    jb["controlled_axes"] = axes;
    jb["limits"] = limits;
    bones.push_back(std::move(jb));
  }
  doc["bones"] = std::move(bones);
  // nlohmann emits the shortest decimal form that round-trips each double.
  return doc.dump(2) + "\n";
}

}  // namespace diffik
