#include "diffik/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "diffik/errors.hpp"
#include "diffik/fk.hpp"

namespace diffik {

using nlohmann::json;

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("solver config: bad value for '") + key + "': " + e.what());
  }
}

double round_significant(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return std::strtod(buf, nullptr);
}

void round_in_place(json& j, int precision) {
  if (j.is_number_float()) {
    j = round_significant(j.get<double>(), precision);
  } else if (j.is_structured()) {
    for (auto& child : j) round_in_place(child, precision);
  }
}

}  // namespace

SolverConfig solver_config_from_json(const json& j, SolverConfig c) {
  if (!j.is_object()) throw ParseError("solver config: expected an object");
  static const char* const kKeys[] = {"learning_rate", "beta1",         "beta2",
                                      "epsilon",       "max_iterations", "loss_threshold",
                                      "time_budget_ms", "cautious",      "alpha_scaling",
                                      "record_trace"};
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ParseError("solver config: unknown key '" + key + "'");
  }
  read_if(j, "learning_rate", c.learning_rate);
  read_if(j, "beta1", c.beta1);
  read_if(j, "beta2", c.beta2);
  read_if(j, "epsilon", c.epsilon);
  read_if(j, "max_iterations", c.max_iterations);
  read_if(j, "loss_threshold", c.loss_threshold);
  read_if(j, "cautious", c.cautious);
  read_if(j, "alpha_scaling", c.alpha_scaling);
  read_if(j, "record_trace", c.record_trace);
  if (j.contains("time_budget_ms")) {
    if (j["time_budget_ms"].is_null()) {
      c.time_budget.reset();
    } else {
      double ms = 0.0;
      read_if(j, "time_budget_ms", ms);
      c.time_budget = Duration(ms);
    }
  }
  c.validate();
  return c;
}

SolverConfig parse_solver_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("solver config: ") + e.what());
  }
  return solver_config_from_json(j);
}

SolverConfig load_solver_config(const std::filesystem::path& path) {
  return parse_solver_config(read_text_file(path));
}

json solver_config_to_json(const SolverConfig& c) {
  json j = {{"learning_rate", c.learning_rate},   {"beta1", c.beta1},
            {"beta2", c.beta2},                   {"epsilon", c.epsilon},
            {"max_iterations", c.max_iterations}, {"loss_threshold", c.loss_threshold},
            {"cautious", c.cautious},             {"alpha_scaling", c.alpha_scaling},
            {"record_trace", c.record_trace}};
  j["time_budget_ms"] = c.time_budget ? json(c.time_budget->count()) : json(nullptr);
  return j;
}

json report_to_json(const SolveReport& r) {
  json j = {{"success", r.success},
            {"final_loss", r.final_loss},
            {"iterations", r.iterations},
            {"iterations_allowed", r.iterations_allowed},
            {"wall_time_ms", r.wall_time.count()},
            {"stop_reason", std::string(stop_reason_name(r.stop_reason))},
            {"time_dependent", r.time_dependent},
            {"final_theta", r.final_theta}};
  if (!r.loss_trace.empty()) j["loss_trace"] = r.loss_trace;
  if (!r.iteration_ms.empty()) j["iteration_ms"] = r.iteration_ms;
  return j;
}

SolveReport report_from_json(const json& j) {
  SolveReport r;
  try {
    r.success = j.at("success").get<bool>();
    r.final_loss = j.at("final_loss").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.iterations_allowed = j.value("iterations_allowed", r.iterations);
    r.wall_time = Duration(j.value("wall_time_ms", 0.0));
    const auto reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    if (!reason) throw ParseError("report: unknown stop_reason");
    r.stop_reason = *reason;
    r.time_dependent = j.value("time_dependent", false);
    r.final_theta = j.at("final_theta").get<std::vector<double>>();
    if (j.contains("loss_trace")) r.loss_trace = j["loss_trace"].get<std::vector<double>>();
    if (j.contains("iteration_ms")) r.iteration_ms = j["iteration_ms"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return r;
}

json trajectory_to_json(const Skeleton& skel, const DofLayout& layout, const Trajectory& t,
                        std::size_t effector_bone, const Vec3d& effector_offset) {
  json points = json::array();
  json effectors = json::array();
  for (const auto& p : t.points) {
    points.push_back(p);
    const GlobalPosed pose = forward(skel, layout, std::span<const double>(p));
    const Vec3d e = effector_position(pose, effector_bone, effector_offset);
    effectors.push_back({e.x, e.y, e.z});
  }
  return {{"fixed_head", t.fixed_head},
          {"effector", skel.bone(effector_bone).name},
          {"points", points},
          {"effector_positions", effectors}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  try {
    t.fixed_head = j.value("fixed_head", true);
    t.points = j.at("points").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("trajectory: ") + e.what());
  }
  if (t.points.empty()) throw ParseError("trajectory: no points");
  return t;
}

std::string dump_json(const json& j, int precision) {
  if (precision >= 17) return j.dump(2);
  json copy = j;
  round_in_place(copy, precision);
  return copy.dump(2);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path))
    throw Error("refusing to overwrite '" + path.string() + "' (use --force)");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace diffik
