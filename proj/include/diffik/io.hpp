#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "diffik/planner.hpp"
#include "diffik/skeleton.hpp"
#include "diffik/solver.hpp"

namespace diffik {

/// Solver config document: any subset of learning_rate, beta1, beta2,
/// epsilon, max_iterations, loss_threshold, time_budget_ms, cautious,
/// alpha_scaling, record_trace. Missing keys keep their defaults.
SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig base = {});
SolverConfig parse_solver_config(std::string_view text);
SolverConfig load_solver_config(const std::filesystem::path& path);
nlohmann::json solver_config_to_json(const SolverConfig& c);

nlohmann::json report_to_json(const SolveReport& r);
SolveReport report_from_json(const nlohmann::json& j);

/// Points plus per-point effector positions for a chosen effector.
nlohmann::json trajectory_to_json(const Skeleton& skel, const DofLayout& layout,
                                  const Trajectory& t, std::size_t effector_bone,
                                  const Vec3d& effector_offset);
Trajectory trajectory_from_json(const nlohmann::json& j);

/// Dumps a document with doubles printed at `precision` significant digits.
std::string dump_json(const nlohmann::json& j, int precision);

std::string read_text_file(const std::filesystem::path& path);
/// Fails with an Error when the file exists and overwrite is false.
void write_text_file(const std::filesystem::path& path, std::string_view text, bool overwrite);

}  // namespace diffik
