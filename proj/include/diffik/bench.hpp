#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "diffik/baselines.hpp"
#include "diffik/objectives.hpp"
#include "diffik/planner.hpp"
#include "diffik/skeleton.hpp"
#include "diffik/solver.hpp"

namespace diffik {

enum class SolverKind { gradient, ccd, fabrik };
enum class Preset { simple, custom, trajectory };

std::string_view solver_kind_name(SolverKind k);
std::optional<SolverKind> parse_solver_kind(std::string_view s);
std::string_view preset_name(Preset p);
std::optional<Preset> parse_preset(std::string_view s);

/// Kernels that exist in both forms. Parallel variants use OpenMP and must
/// produce results identical to the serial ones.
enum class Execution { serial, parallel };

struct BenchPlan {
  std::filesystem::path skeleton;
  std::vector<std::string> controlled;
  std::vector<std::string> chain_joints;
  std::string effector_bone;
  Vec3d effector_offset;
  /// Objective files with a placeholder distance target, replaced per target.
  std::filesystem::path simple_objective;
  std::filesystem::path custom_objective;
  std::vector<Preset> presets{Preset::simple, Preset::custom};
  std::vector<std::size_t> trajectory_points{0, 5, 10};
  std::array<double, 3> smooth_weights{0.01, 0.01, 0.01};
  /// Trajectory success on task terms only (see PlanOptions::task_success).
  bool trajectory_task_success = false;
  /// Apply smooth_weights at n_intermediate = 0 too. When false the n = 0
  /// row is the single-configuration solve.
  bool smooth_without_intermediates = true;
  std::size_t sample_count = 20000;
  std::size_t kmeans_k = 210;
  std::size_t warmup_count = 10;
  int runs = 5;
  std::vector<SolverKind> solvers{SolverKind::gradient, SolverKind::ccd, SolverKind::fabrik};
  std::map<SolverKind, SolverConfig> configs;
  std::uint64_t seed = 20240901;

  [[nodiscard]] const SolverConfig& config_for(SolverKind k) const;
  void validate() const;
};

/// Reads a plan document; relative paths resolve against the plan's folder.
BenchPlan load_bench_plan(const std::filesystem::path& path);

/// Everything a benchmark solve needs, loaded once and shared read-only.
struct BenchContext {
  Skeleton skel;
  DofLayout layout;
  ChainSpec chain;
  ObjectiveSpec simple;
  ObjectiveSpec custom;
  std::vector<double> rest;
  Vec3d base;

  static BenchContext from_plan(const BenchPlan& plan);
};

/// Uniform in [0, 1) from the top 53 bits; identical on every platform,
/// unlike the std distributions.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform samples in the ball of radius 1.1 * reach around the chain base.
std::vector<Vec3d> sample_targets(const Vec3d& base, double reach, std::size_t count,
                                  std::uint64_t seed);

SolveReport run_solver(const BenchContext& ctx, SolverKind kind, const ObjectiveSpec& spec,
                       const Vec3d& target, const SolverConfig& config);

/// True when any solver reaches the simple distance objective's threshold.
bool target_solvable(const BenchContext& ctx, const Vec3d& target,
                     const std::vector<SolverKind>& solvers, const BenchPlan& plan);

/// Keeps the solvable targets, preserving order.
std::vector<Vec3d> filter_solvable(const BenchContext& ctx, const std::vector<Vec3d>& targets,
                                   const std::vector<SolverKind>& solvers, const BenchPlan& plan,
                                   Execution exec = Execution::parallel);

struct KMeansResult {
  std::vector<Vec3d> centroids;
  std::vector<std::size_t> assignment;
  int iterations = 0;
  /// Sum of squared distances after each assignment step.
  std::vector<double> objective;
};

/// Lloyd's algorithm with farthest-point initialization from a seeded first
/// point. Empty clusters take the point farthest from its centroid.
KMeansResult kmeans(const std::vector<Vec3d>& points, std::size_t k, std::uint64_t seed,
                    int max_iters = 100, Execution exec = Execution::parallel);

/// Index of the nearest centroid for each point.
std::vector<std::size_t> assign_nearest(const std::vector<Vec3d>& points,
                                        const std::vector<Vec3d>& centroids, Execution exec);

struct BenchRecord {
  int run = 0;
  std::uint64_t seed = 0;
  std::string solver;
  Preset preset = Preset::simple;
  std::size_t target_index = 0;
  Vec3d target;
  int iterations = 0;
  double loss = 0.0;
  double time_ms = 0.0;
  bool success = false;
  StopReason stop_reason = StopReason::max_iterations;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample standard deviation (0 for fewer than two values).
MeanStd mean_std(const std::vector<double>& xs);

struct BenchRow {
  std::string solver;
  bool custom_objective = false;
  MeanStd solve_ms;
  MeanStd iterations;
  MeanStd ms_per_iter;
  MeanStd success_pct;
};

std::vector<BenchRow> aggregate(const std::vector<BenchRecord>& records);

struct BenchResult {
  std::vector<Vec3d> evaluated_targets;
  std::vector<BenchRecord> records;
  std::vector<BenchRow> rows;
  std::size_t solvable_count = 0;
};

/// Per-solve hook, called serially; used by tests to assert invariants on
/// every returned pose.
using BenchObserver = std::function<void(const BenchRecord&, std::span<const std::vector<double>>)>;

/// sample -> filter -> kmeans -> warm-up discard -> runs x presets x solvers
/// over the remaining targets, each solved from the rest pose.
BenchResult run_benchmark(const BenchPlan& plan, int jobs = 0,
                          const BenchObserver& observer = {});

/// Runs only the solve stage on given targets (the first warmup_count are
/// solved and discarded).
BenchResult run_on_targets(const BenchPlan& plan, const BenchContext& ctx,
                           const std::vector<Vec3d>& targets, int jobs = 0,
                           const BenchObserver& observer = {});

std::string summary_csv(const std::vector<BenchRow>& rows, int precision = 6);
std::string records_csv(const std::vector<BenchRecord>& records, int precision = 6);

}  // namespace diffik
