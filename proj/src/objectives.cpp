#include "diffik/objectives.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace diffik {

namespace {

using nlohmann::json;

Vec3d vec3_or(const json& obj, const char* key, Vec3d fallback) {
  if (!obj.contains(key)) return fallback;
  const json& j = obj.at(key);
  if (!j.is_array() || j.size() != 3)
    throw ParseError(std::string("objective spec: '") + key + "' must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

std::string_view term_kind_name(TermKind k) {
  switch (k) {
    case TermKind::distance: return "distance";
    case TermKind::look_at: return "look_at";
    case TermKind::known_rotation: return "known_rotation";
    case TermKind::smoothness: return "smoothness";
  }
  return "unknown";
}

bool ObjectiveSpec::has_smoothness() const {
  for (const auto& t : terms)
    if (t.kind() == TermKind::smoothness) return true;
  return false;
}

bool ObjectiveSpec::needs_pose() const {
  for (const auto& t : terms)
    if (t.needs_pose() && t.weight != 0.0) return true;
  return false;
}

ObjectiveTerm make_distance(std::size_t bone, Vec3d offset, Vec3d target, double weight) {
  return {"distance", weight, DistanceTerm{bone, offset, target}};
}

ObjectiveTerm make_look_at(std::size_t bone, Vec3d local_axis, Vec3d target_direction,
                           double weight) {
  return {"look_at", weight, LookAtTerm{bone, local_axis, target_direction, {}}};
}

ObjectiveTerm make_known_rotation(std::vector<double> theta_star, std::vector<double> mask,
                                  double weight) {
  return {"known_rotation", weight, KnownRotationTerm{std::move(theta_star), std::move(mask)}};
}

ObjectiveTerm make_smoothness(int order, double weight) {
  return {"smoothness" + std::to_string(order), weight, SmoothnessTerm{order}};
}

void validate_spec(const ObjectiveSpec& spec, const Skeleton& skel, const DofLayout& layout) {
  if (spec.terms.empty()) throw ValidationError("objective spec: at least one term is required");
  for (const ObjectiveTerm& t : spec.terms) {
    const std::string who = "objective term '" + t.name + "'";
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight))
      throw ValidationError(who + ": weight must be finite and >= 0");
    if (const auto* d = std::get_if<DistanceTerm>(&t.payload)) {
      if (d->bone >= skel.size()) throw ValidationError(who + ": references an unknown bone");
    } else if (const auto* l = std::get_if<LookAtTerm>(&t.payload)) {
      if (l->bone >= skel.size()) throw ValidationError(who + ": references an unknown bone");
      if (norm(l->local_axis) == 0.0) throw ValidationError(who + ": zero local axis");
      if (norm(l->target_direction + l->target_offset) == 0.0)
        throw ValidationError(who + ": zero target direction");
    } else if (const auto* k = std::get_if<KnownRotationTerm>(&t.payload)) {
      if (k->theta_star.size() != layout.size() || k->mask.size() != layout.size())
        throw ValidationError(who + ": theta_star and mask must have one entry per DOF (" +
                              std::to_string(layout.size()) + ")");
      for (double m : k->mask)
        if (m != 0.0 && m != 1.0) throw ValidationError(who + ": mask entries must be 0 or 1");
    } else if (const auto* s = std::get_if<SmoothnessTerm>(&t.payload)) {
      if (s->order < 1 || s->order > 3) throw ValidationError(who + ": order must be 1, 2 or 3");
    }
  }
}

void set_distance_target(ObjectiveSpec& spec, const Vec3d& target) {
  for (auto& t : spec.terms)
    if (auto* d = std::get_if<DistanceTerm>(&t.payload)) d->target = target;
}

std::vector<std::string> objective_controlled_bones(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("objective spec: ") + e.what());
  }
  std::vector<std::string> out;
  if (doc.is_object() && doc.contains("controlled"))
    for (const json& n : doc.at("controlled")) out.push_back(n.get<std::string>());
  return out;
}

ObjectiveSpec parse_objective_spec(std::string_view text, const Skeleton& skel,
                                   const DofLayout& layout) {
  ObjectiveSpec spec;
  try {
    const json doc = json::parse(text);
    if (!doc.is_object() || !doc.contains("terms"))
      throw ParseError("objective spec: expected an object with a 'terms' list");
    for (const json& jt : doc.at("terms")) {
      const std::string kind = jt.at("kind").get<std::string>();
      const double weight = jt.value("weight", 1.0);
      ObjectiveTerm term;
      term.weight = weight;
      if (kind == "distance") {
        term.payload = DistanceTerm{skel.index_of(jt.at("bone").get<std::string>()),
                                    vec3_or(jt, "offset", {}), vec3_or(jt, "target", {})};
      } else if (kind == "look_at") {
        LookAtTerm l;
        l.bone = skel.index_of(jt.at("bone").get<std::string>());
        l.local_axis = vec3_or(jt, "axis", l.local_axis);
        l.target_direction = vec3_or(jt, "direction", l.target_direction);
        l.target_offset = vec3_or(jt, "target_offset", {});
        term.payload = l;
      } else if (kind == "known_rotation") {
        KnownRotationTerm k;
        if (jt.contains("angles")) {
          // {"bone": {"x": angle, ...}, ...}: selected DOFs get mask 1.
          k.theta_star.assign(layout.size(), 0.0);
          k.mask.assign(layout.size(), 0.0);
          for (const auto& [bone_name, axes] : jt.at("angles").items()) {
            const std::size_t bone = skel.index_of(bone_name);
            for (const auto& [axis_key, value] : axes.items()) {
              const auto axis = parse_axis(axis_key);
              if (!axis) throw ParseError("objective spec: bad axis '" + axis_key + "'");
              const int d = layout.dof_index(bone, *axis);
              if (d < 0)
                throw ValidationError("objective spec: " + bone_name + "." + axis_key +
                                      " is not a controlled DOF");
              k.theta_star[static_cast<std::size_t>(d)] = value.get<double>();
              k.mask[static_cast<std::size_t>(d)] = 1.0;
            }
          }
        } else {
          k.theta_star = jt.at("theta_star").get<std::vector<double>>();
          k.mask = jt.contains("mask") ? jt.at("mask").get<std::vector<double>>()
                                       : std::vector<double>(k.theta_star.size(), 1.0);
        }
        term.payload = std::move(k);
      } else if (kind == "smoothness") {
        term.payload = SmoothnessTerm{jt.value("order", 1)};
      } else {
        throw ParseError("objective spec: unknown term kind '" + kind + "'");
      }
      term.name = jt.value("name", kind);
      spec.terms.push_back(std::move(term));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("objective spec: ") + e.what());
  }
  validate_spec(spec, skel, layout);
  return spec;
}

ObjectiveSpec load_objective_spec(const std::filesystem::path& path, const Skeleton& skel,
                                  const DofLayout& layout) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open objective spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_objective_spec(ss.str(), skel, layout);
}

std::string serialize_objective_spec(const ObjectiveSpec& spec, const Skeleton& skel) {
  json terms = json::array();
  for (const ObjectiveTerm& t : spec.terms) {
    json jt;
    jt["kind"] = term_kind_name(t.kind());
    jt["name"] = t.name;
    jt["weight"] = t.weight;
    if (const auto* d = std::get_if<DistanceTerm>(&t.payload)) {
      jt["bone"] = skel.bone(d->bone).name;
      jt["offset"] = to_json(d->offset);
      jt["target"] = to_json(d->target);
    } else if (const auto* l = std::get_if<LookAtTerm>(&t.payload)) {
      jt["bone"] = skel.bone(l->bone).name;
      jt["axis"] = to_json(l->local_axis);
      jt["direction"] = to_json(l->target_direction);
      jt["target_offset"] = to_json(l->target_offset);
    } else if (const auto* k = std::get_if<KnownRotationTerm>(&t.payload)) {
      jt["theta_star"] = k->theta_star;
      jt["mask"] = k->mask;
    } else if (const auto* s = std::get_if<SmoothnessTerm>(&t.payload)) {
      jt["order"] = s->order;
    }
    terms.push_back(std::move(jt));
  }
  return json{{"terms", terms}}.dump(2) + "\n";
}

}  // namespace diffik
