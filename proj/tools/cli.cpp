#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include "diffik/baselines.hpp"
#include "diffik/bench.hpp"
#include "diffik/errors.hpp"
#include "diffik/fk.hpp"
#include "diffik/io.hpp"
#include "diffik/planner.hpp"
#include "diffik/skeleton.hpp"
#include "diffik/solver.hpp"

namespace diffik::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  bool exact = false;
  bool force = false;
  std::string out;

  [[nodiscard]] int precision() const { return exact ? 17 : 6; }
};

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v))
      throw ParseError(std::string(what) + ": '" + text + "' is not a comma-separated number list");
    out.push_back(v);
  }
  return out;
}

Vec3d parse_vec3(const std::string& text, const char* what) {
  const auto v = parse_numbers(text, what);
  if (v.size() != 3) throw ParseError(std::string(what) + ": expected x,y,z");
  return {v[0], v[1], v[2]};
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

SolverConfig resolve_config(const std::string& path) {
  if (!path.empty()) return load_solver_config(path);
  if (const char* env = std::getenv(kConfigEnv); env && *env) return load_solver_config(env);
  return {};
}

/// Controlled bones: explicit flag, else the objective file's list, else all.
DofLayout resolve_layout(const Skeleton& skel, const std::string& controlled,
                         const std::string& objective_path) {
  if (!controlled.empty()) return dof_layout(skel, split_names(controlled));
  if (!objective_path.empty()) {
    const auto names = objective_controlled_bones(read_text_file(objective_path));
    if (!names.empty()) return dof_layout(skel, names);
  }
  return full_dof_layout(skel);
}

const DistanceTerm* first_distance(const ObjectiveSpec& spec) {
  for (const auto& t : spec.terms)
    if (const auto* d = std::get_if<DistanceTerm>(&t.payload)) return d;
  return nullptr;
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  } else {
    write_text_file(c.out, text + (text.empty() || text.back() == '\n' ? "" : "\n"), c.force);
  }
}

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  if (with_out) {
    cmd->add_option("--out", c.out, "Output file (stdout when omitted)");
    cmd->add_flag("--force", c.force, "Overwrite an existing output file");
  }
  cmd->add_flag("--exact", c.exact, "Print numbers with 17 significant digits");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable inverse kinematics with joint limits", "diffik"};
  app.require_subcommand(1, 1);

  Common common;

  // solve
  struct {
    std::string skeleton, objective, target, config, controlled, solver = "gradient", chain;
  } s;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one IK problem from the rest pose");
  solve_cmd->add_option("--skeleton", s.skeleton, "Skeleton file")->required();
  solve_cmd->add_option("--objective", s.objective, "Objective spec file")->required();
  solve_cmd->add_option("--target", s.target, "Distance target x,y,z (overrides the file)");
  solve_cmd->add_option("--config", s.config, "Solver config file");
  solve_cmd->add_option("--controlled", s.controlled, "Comma-separated controlled bones");
  solve_cmd->add_option("--solver", s.solver, "gradient, ccd or fabrik")
      ->check(CLI::IsMember({"gradient", "ccd", "fabrik"}));
  solve_cmd->add_option("--chain", s.chain, "Comma-separated chain joints (ccd, fabrik)");
  add_common(solve_cmd, common);

  // plan
  struct {
    std::string skeleton, objective, path_objective, target, config, controlled, smooth, start;
    std::size_t points = 0;
    bool free_head = false;
  } p;
  auto* plan_cmd = app.add_subcommand("plan", "Optimize a joint trajectory");
  plan_cmd->add_option("--skeleton", p.skeleton, "Skeleton file")->required();
  plan_cmd->add_option("--objective", p.objective, "Terminal objective spec")->required();
  plan_cmd->add_option("--path-objective", p.path_objective, "Objective applied to every point");
  plan_cmd->add_option("--points", p.points, "Number of intermediate points")->required();
  plan_cmd->add_option("--target", p.target, "Distance target x,y,z");
  plan_cmd->add_option("--smooth", p.smooth, "Smoothness weights l1,l2,l3");
  plan_cmd->add_option("--start", p.start, "Start angles (default rest)");
  plan_cmd->add_option("--config", p.config, "Solver config file");
  plan_cmd->add_option("--controlled", p.controlled, "Comma-separated controlled bones");
  plan_cmd->add_flag("--free-head", p.free_head, "Optimize the first point too");
  add_common(plan_cmd, common);

  // bench
  struct {
    std::string plan, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<std::size_t> samples;
    int jobs = 0;
  } b;
  auto* bench_cmd = app.add_subcommand("bench", "Run the benchmark protocol");
  bench_cmd->add_option("--plan", b.plan, "Bench plan file")->required();
  bench_cmd->add_option("--out", b.out_dir, "Output directory")->required();
  bench_cmd->add_option("--seed", b.seed, "Override the plan seed");
  bench_cmd->add_option("--runs", b.runs, "Override the number of runs");
  bench_cmd->add_option("--samples", b.samples, "Override sample_count");
  bench_cmd->add_option("--jobs", b.jobs, "Worker threads for target solving (0 = default)")
      ->check(CLI::NonNegativeNumber);
  bench_cmd->add_flag("--force", common.force, "Overwrite existing output files");
  bench_cmd->add_flag("--exact", common.exact, "Print numbers with 17 significant digits");

  // export
  struct {
    std::string skeleton, input, controlled, objective;
  } e;
  auto* export_cmd = app.add_subcommand("export", "Write global poses for a report or trajectory");
  export_cmd->add_option("--skeleton", e.skeleton, "Skeleton file")->required();
  export_cmd->add_option("--input", e.input, "SolveReport or Trajectory JSON")->required();
  export_cmd->add_option("--controlled", e.controlled, "Comma-separated controlled bones");
  export_cmd->add_option("--objective", e.objective, "Objective file naming the controlled bones");
  add_common(export_cmd, common);

  // validate
  std::string validate_skeleton;
  auto* validate_cmd = app.add_subcommand("validate", "Check a skeleton file");
  validate_cmd->add_option("skeleton", validate_skeleton, "Skeleton file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n" << app.help();
    return kExitInputError;
  }

  try {
    if (*solve_cmd) {
      const Skeleton skel = load_skeleton(s.skeleton);
      const DofLayout layout = resolve_layout(skel, s.controlled, s.objective);
      ObjectiveSpec spec = load_objective_spec(s.objective, skel, layout);
      const SolverConfig config = resolve_config(s.config);
      const DistanceTerm* dist = first_distance(spec);
      if (!s.target.empty()) {
        if (!dist) throw ValidationError("--target given but the objective has no distance term");
        set_distance_target(spec, parse_vec3(s.target, "--target"));
      }
      const std::vector<double> rest(layout.size(), 0.0);
      SolveReport report;
      if (s.solver == "gradient") {
        report = solve(skel, layout, spec, rest, config);
      } else {
        if (!dist) throw ValidationError("baseline solvers need a distance term");
        if (s.chain.empty()) throw ValidationError("--chain is required for " + s.solver);
        const ChainSpec chain = make_chain(skel, layout, split_names(s.chain),
                                           skel.bone(dist->bone).name, dist->offset);
        report = s.solver == "ccd"
                     ? ccd_solve(skel, layout, chain, dist->target, spec, rest, config)
                     : fabrik_solve(skel, layout, chain, dist->target, spec, rest, config);
      }
      emit(common, dump_json(report_to_json(report), common.precision()), out);
      return report.success ? kExitOk : kExitNotConverged;
    }

    if (*plan_cmd) {
      const Skeleton skel = load_skeleton(p.skeleton);
      const DofLayout layout = resolve_layout(skel, p.controlled, p.objective);
      ObjectiveSpec terminal = load_objective_spec(p.objective, skel, layout);
      ObjectiveSpec path;
      if (!p.path_objective.empty()) path = load_objective_spec(p.path_objective, skel, layout);
      const DistanceTerm* dist = first_distance(terminal);
      if (!p.target.empty()) {
        if (!dist) throw ValidationError("--target given but the objective has no distance term");
        set_distance_target(terminal, parse_vec3(p.target, "--target"));
      }
      PlanOptions options;
      options.n_intermediate = p.points;
      options.fixed_head = !p.free_head;
      if (!p.smooth.empty()) {
        const auto w = parse_numbers(p.smooth, "--smooth");
        if (w.size() != 3) throw ParseError("--smooth: expected three weights");
        options.smooth_weights = {w[0], w[1], w[2]};
      }
      std::vector<double> start(layout.size(), 0.0);
      if (!p.start.empty()) start = parse_numbers(p.start, "--start");
      const PlanResult result =
          plan(skel, layout, start, terminal, path, options, resolve_config(p.config));
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      const std::size_t eff_bone = dist ? dist->bone : skel.size() - 1;
      const Vec3d eff_offset = dist ? dist->offset : Vec3d{};
      json doc = trajectory_to_json(skel, layout, result.trajectory, eff_bone, eff_offset);
      doc["report"] = report_to_json(result.report);
      emit(common, dump_json(doc, common.precision()), out);
      return result.report.success ? kExitOk : kExitNotConverged;
    }

    if (*bench_cmd) {
      BenchPlan plan_doc = load_bench_plan(b.plan);
      if (b.seed) plan_doc.seed = *b.seed;
      if (b.runs) plan_doc.runs = *b.runs;
      if (b.samples) plan_doc.sample_count = *b.samples;
      plan_doc.validate();
      const fs::path dir(b.out_dir);
      const fs::path summary = dir / "summary.csv";
      const fs::path records = dir / "records.csv";
      if (!common.force && (fs::exists(summary) || fs::exists(records)))
        throw Error("refusing to overwrite results in '" + dir.string() + "' (use --force)");
      const BenchResult result = run_benchmark(plan_doc, b.jobs);
      fs::create_directories(dir);
      write_text_file(summary, summary_csv(result.rows, common.precision()), common.force);
      write_text_file(records, records_csv(result.records, common.precision()), common.force);
      out << summary_csv(result.rows, common.precision());
      err << "solvable targets: " << result.solvable_count << ", evaluated: "
          << result.evaluated_targets.size() << '\n';
      return kExitOk;
    }

    if (*export_cmd) {
      const Skeleton skel = load_skeleton(e.skeleton);
      const DofLayout layout = resolve_layout(skel, e.controlled, e.objective);
      json doc;
      try {
        doc = json::parse(read_text_file(e.input));
      } catch (const json::parse_error& ex) {
        throw ParseError("export: " + std::string(ex.what()));
      }
      std::vector<std::vector<double>> poses;
      if (doc.contains("points")) {
        poses = trajectory_from_json(doc).points;
      } else {
        poses.push_back(report_from_json(doc).final_theta);
      }
      std::string text;
      for (std::size_t i = 0; i < poses.size(); ++i) {
        if (poses.size() > 1) text += "# point " + std::to_string(i) + "\n";
        text += export_global_pose(skel, forward(skel, layout, std::span<const double>(poses[i])),
                                   common.precision());
      }
      emit(common, text, out);
      return kExitOk;
    }

    if (*validate_cmd) {
      const Skeleton skel = load_skeleton(validate_skeleton);
      out << "ok: " << skel.size() << " bones, " << full_dof_layout(skel).size()
          << " controlled DOFs\n";
      return kExitOk;
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInputError;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace diffik::cli
