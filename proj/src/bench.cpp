#include "diffik/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>

#include "diffik/errors.hpp"
#include "diffik/fk.hpp"
#include "diffik/io.hpp"

namespace diffik {

using nlohmann::json;

namespace {

int thread_count(int jobs) { return jobs > 0 ? jobs : omp_get_max_threads(); }

/// Runs fn(i) for i in [0, n), rethrowing the first exception on the caller.
template <class Fn>
void for_each_index(std::size_t n, Execution exec, int jobs, Fn&& fn) {
  if (exec == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(jobs))
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double distance2(const Vec3d& a, const Vec3d& b) {
  const Vec3d d = a - b;
  return dot(d, d);
}

SolverConfig deterministic(SolverConfig c) {
  c.time_budget.reset();
  c.record_trace = false;
  return c;
}

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string("bench stage '") + name + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& dir, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : dir / path;
}

}  // namespace

std::string_view solver_kind_name(SolverKind k) {
  switch (k) {
    case SolverKind::gradient: return "gradient";
    case SolverKind::ccd: return "ccd";
    case SolverKind::fabrik: return "fabrik";
  }
  return "unknown";
}

std::optional<SolverKind> parse_solver_kind(std::string_view s) {
  if (s == "gradient") return SolverKind::gradient;
  if (s == "ccd") return SolverKind::ccd;
  if (s == "fabrik") return SolverKind::fabrik;
  return std::nullopt;
}

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::simple: return "simple";
    case Preset::custom: return "custom";
    case Preset::trajectory: return "trajectory";
  }
  return "unknown";
}

std::optional<Preset> parse_preset(std::string_view s) {
  if (s == "simple") return Preset::simple;
  if (s == "custom") return Preset::custom;
  if (s == "trajectory") return Preset::trajectory;
  return std::nullopt;
}

const SolverConfig& BenchPlan::config_for(SolverKind k) const {
  static const SolverConfig kDefault;
  auto it = configs.find(k);
  return it == configs.end() ? kDefault : it->second;
}

void BenchPlan::validate() const {
  if (sample_count < 1) throw ValidationError("bench plan: sample_count must be >= 1");
  if (kmeans_k < 1) throw ValidationError("bench plan: kmeans_k must be >= 1");
  if (warmup_count >= kmeans_k) throw ValidationError("bench plan: warmup_count must be < kmeans_k");
  if (runs < 1) throw ValidationError("bench plan: runs must be >= 1");
  if (solvers.empty()) throw ValidationError("bench plan: no solvers");
  if (presets.empty()) throw ValidationError("bench plan: no presets");
  if (chain_joints.size() < 2) throw ValidationError("bench plan: chain needs at least two joints");
  for (double w : smooth_weights)
    if (!(w >= 0.0)) throw ValidationError("bench plan: smoothness weights must be >= 0");
  const bool wants_custom = std::find(presets.begin(), presets.end(), Preset::custom) != presets.end();
  if (wants_custom && custom_objective.empty())
    throw ValidationError("bench plan: custom preset needs custom_objective");
  for (const auto& [_, c] : configs) c.validate();
}

BenchPlan load_bench_plan(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("bench plan: " + std::string(e.what()));
  }
  const auto dir = path.parent_path();
  BenchPlan p;
  try {
    p.skeleton = resolve(dir, j.at("skeleton").get<std::string>());
    p.controlled = j.at("controlled").get<std::vector<std::string>>();
    const json& chain = j.at("chain");
    p.chain_joints = chain.at("joints").get<std::vector<std::string>>();
    p.effector_bone = chain.at("effector").get<std::string>();
    if (chain.contains("offset")) {
      const auto o = chain["offset"].get<std::vector<double>>();
      if (o.size() != 3) throw ParseError("bench plan: chain offset needs 3 values");
      p.effector_offset = {o[0], o[1], o[2]};
    }
    const json& obj = j.at("objectives");
    p.simple_objective = resolve(dir, obj.at("simple").get<std::string>());
    p.custom_objective = resolve(dir, obj.value("custom", std::string()));
    if (j.contains("presets")) {
      p.presets.clear();
      for (const auto& s : j["presets"].get<std::vector<std::string>>()) {
        auto preset = parse_preset(s);
        if (!preset) throw ParseError("bench plan: unknown preset '" + s + "'");
        p.presets.push_back(*preset);
      }
    }
    if (j.contains("trajectory")) {
      const json& t = j["trajectory"];
      if (t.contains("n_intermediate"))
        p.trajectory_points = t["n_intermediate"].get<std::vector<std::size_t>>();
      if (t.contains("smooth_weights")) {
        const auto w = t["smooth_weights"].get<std::vector<double>>();
        if (w.size() != 3) throw ParseError("bench plan: smooth_weights needs 3 values");
        p.smooth_weights = {w[0], w[1], w[2]};
      }
      if (t.contains("success")) {
        const auto mode = t["success"].get<std::string>();
        if (mode != "total" && mode != "task")
          throw ParseError("bench plan: trajectory success must be 'total' or 'task'");
        p.trajectory_task_success = mode == "task";
      }
      p.smooth_without_intermediates =
          t.value("smooth_without_intermediates", p.smooth_without_intermediates);
    }
    p.sample_count = j.value("sample_count", p.sample_count);
    p.kmeans_k = j.value("kmeans_k", p.kmeans_k);
    p.warmup_count = j.value("warmup_count", p.warmup_count);
    p.runs = j.value("runs", p.runs);
    p.seed = j.value("seed", p.seed);
    if (j.contains("solvers")) {
      p.solvers.clear();
      for (const auto& s : j["solvers"].get<std::vector<std::string>>()) {
        auto kind = parse_solver_kind(s);
        if (!kind) throw ParseError("bench plan: unknown solver '" + s + "'");
        p.solvers.push_back(*kind);
      }
    }
    if (j.contains("configs")) {
      for (const auto& [name, cfg] : j["configs"].items()) {
        auto kind = parse_solver_kind(name);
        if (!kind) throw ParseError("bench plan: config for unknown solver '" + name + "'");
        p.configs[*kind] = solver_config_from_json(cfg);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError("bench plan: " + std::string(e.what()));
  }
  p.validate();
  return p;
}

BenchContext BenchContext::from_plan(const BenchPlan& plan) {
  BenchContext ctx;
  ctx.skel = load_skeleton(plan.skeleton);
  ctx.layout = dof_layout(ctx.skel, plan.controlled);
  ctx.chain = make_chain(ctx.skel, ctx.layout, plan.chain_joints, plan.effector_bone,
                         plan.effector_offset);
  ctx.simple = load_objective_spec(plan.simple_objective, ctx.skel, ctx.layout);
  if (!plan.custom_objective.empty())
    ctx.custom = load_objective_spec(plan.custom_objective, ctx.skel, ctx.layout);
  ctx.rest = project_bounds(std::vector<double>(ctx.layout.size(), 0.0), ctx.layout);
  ctx.base = chain_positions(ctx.skel, ctx.layout, ctx.chain, ctx.rest).front();
  return ctx;
}

std::vector<Vec3d> sample_targets(const Vec3d& base, double reach, std::size_t count,
                                  std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample_targets: count must be >= 1");
  std::mt19937_64 rng(seed);
  const double radius = 1.1 * reach;
  std::vector<Vec3d> out;
  out.reserve(count);
  while (out.size() < count) {
    const Vec3d u{2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0,
                  2.0 * uniform01(rng) - 1.0};
    if (dot(u, u) > 1.0) continue;
    out.push_back(base + u * radius);
  }
  return out;
}

SolveReport run_solver(const BenchContext& ctx, SolverKind kind, const ObjectiveSpec& spec,
                       const Vec3d& target, const SolverConfig& config) {
  ObjectiveSpec s = spec;
  set_distance_target(s, target);
  switch (kind) {
    case SolverKind::gradient: return solve(ctx.skel, ctx.layout, s, ctx.rest, config);
    case SolverKind::ccd: return ccd_solve(ctx.skel, ctx.layout, ctx.chain, target, s, ctx.rest, config);
    case SolverKind::fabrik:
      return fabrik_solve(ctx.skel, ctx.layout, ctx.chain, target, s, ctx.rest, config);
  }
  throw ValidationError("unknown solver");
}

bool target_solvable(const BenchContext& ctx, const Vec3d& target,
                     const std::vector<SolverKind>& solvers, const BenchPlan& plan) {
  if (solvers.empty()) throw ValidationError("filter_solvable: no solvers");
  if (norm(target - ctx.base) > ctx.chain.reach()) return false;
  for (SolverKind k : solvers)
    if (run_solver(ctx, k, ctx.simple, target, deterministic(plan.config_for(k))).success) return true;
  return false;
}

std::vector<Vec3d> filter_solvable(const BenchContext& ctx, const std::vector<Vec3d>& targets,
                                   const std::vector<SolverKind>& solvers, const BenchPlan& plan,
                                   Execution exec) {
  if (solvers.empty()) throw ValidationError("filter_solvable: no solvers");
  std::vector<char> keep(targets.size(), 0);
  for_each_index(targets.size(), exec, 0,
                 [&](std::size_t i) { keep[i] = target_solvable(ctx, targets[i], solvers, plan); });
  std::vector<Vec3d> out;
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (keep[i]) out.push_back(targets[i]);
  return out;
}

std::vector<std::size_t> assign_nearest(const std::vector<Vec3d>& points,
                                        const std::vector<Vec3d>& centroids, Execution exec) {
  std::vector<std::size_t> out(points.size(), 0);
  for_each_index(points.size(), exec, 0, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = distance2(points[i], centroids[c]);
      if (d < best) {
        best = d;
        out[i] = c;
      }
    }
  });
  return out;
}

KMeansResult kmeans(const std::vector<Vec3d>& points, std::size_t k, std::uint64_t seed,
                    int max_iters, Execution exec) {
  const std::size_t n = points.size();
  if (k < 1) throw ValidationError("kmeans: k must be >= 1");
  if (k > n) throw ValidationError("kmeans: k exceeds the number of points");

  KMeansResult r;
  std::mt19937_64 rng(seed);
  const auto first = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  r.centroids.push_back(points[first]);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = distance2(points[i], points[first]);
  while (r.centroids.size() < k) {
    const auto far = static_cast<std::size_t>(
        std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    if (!(nearest[far] > 0.0)) throw ValidationError("kmeans: k exceeds the number of distinct points");
    r.centroids.push_back(points[far]);
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], distance2(points[i], points[far]));
  }

  for (r.iterations = 0; r.iterations < max_iters; ++r.iterations) {
    auto assignment = assign_nearest(points, r.centroids, exec);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += distance2(points[i], r.centroids[assignment[i]]);
    r.objective.push_back(total);
    const bool stable = assignment == r.assignment;
    r.assignment = std::move(assignment);
    if (stable) break;

    std::vector<Vec3d> sum(k);
    std::vector<std::size_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[r.assignment[i]] = sum[r.assignment[i]] + points[i];
      ++members[r.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (members[c] > 0) r.centroids[c] = sum[c] * (1.0 / static_cast<double>(members[c]));
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = distance2(points[i], r.centroids[r.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --members[r.assignment[far]];
      r.assignment[far] = c;
      members[c] = 1;
      r.centroids[c] = points[far];
    }
  }
  return r;
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return out;
}

std::vector<BenchRow> aggregate(const std::vector<BenchRecord>& records) {
  struct Group {
    std::string solver;
    Preset preset;
    std::vector<double> ms, iters, per_iter, success;
  };
  std::vector<Group> groups;
  for (const auto& rec : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.solver == rec.solver && g.preset == rec.preset;
    });
    if (it == groups.end()) {
      groups.push_back({rec.solver, rec.preset, {}, {}, {}, {}});
      it = groups.end() - 1;
    }
    it->ms.push_back(rec.time_ms);
    it->iters.push_back(rec.iterations);
    it->per_iter.push_back(rec.time_ms / std::max(rec.iterations, 1));
    it->success.push_back(rec.success ? 100.0 : 0.0);
  }
  std::vector<BenchRow> rows;
  for (const auto& g : groups) {
    rows.push_back({g.solver, g.preset == Preset::custom, mean_std(g.ms), mean_std(g.iters),
                    mean_std(g.per_iter), mean_std(g.success)});
  }
  return rows;
}

BenchResult run_on_targets(const BenchPlan& plan, const BenchContext& ctx,
                           const std::vector<Vec3d>& targets, int jobs,
                           const BenchObserver& observer) {
  if (targets.size() <= plan.warmup_count)
    throw ValidationError("bench: no targets left after warm-up");
  BenchResult result;
  result.evaluated_targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(plan.warmup_count),
                                  targets.end());
  const auto& evaluated = result.evaluated_targets;
  const Execution exec = thread_count(jobs) > 1 ? Execution::parallel : Execution::serial;

  struct Job {
    std::string name;
    Preset preset;
    std::function<std::pair<SolveReport, std::vector<std::vector<double>>>(const Vec3d&)> solve;
  };
  std::vector<Job> jobs_list;
  for (Preset preset : plan.presets) {
    if (preset == Preset::trajectory) {
      for (std::size_t n : plan.trajectory_points) {
        PlanOptions opt;
        opt.n_intermediate = n;
        if (n > 0 || plan.smooth_without_intermediates)
          opt.smooth_weights = plan.smooth_weights;
        else
          opt.smooth_weights = {0.0, 0.0, 0.0};
        opt.task_success = plan.trajectory_task_success;
        const SolverConfig cfg = deterministic(plan.config_for(SolverKind::gradient));
        jobs_list.push_back({"planner_n" + std::to_string(n), preset, [&ctx, opt, cfg](const Vec3d& t) {
                               ObjectiveSpec terminal = ctx.simple;
                               set_distance_target(terminal, t);
                               PlanResult pr = diffik::plan(ctx.skel, ctx.layout, ctx.rest, terminal, {}, opt, cfg);
                               return std::make_pair(std::move(pr.report),
                                                     std::move(pr.trajectory.points));
                             }});
      }
      continue;
    }
    const ObjectiveSpec& spec = preset == Preset::custom ? ctx.custom : ctx.simple;
    for (SolverKind kind : plan.solvers) {
      const SolverConfig cfg = deterministic(plan.config_for(kind));
      jobs_list.push_back({std::string(solver_kind_name(kind)), preset,
                           [&ctx, &spec, kind, cfg](const Vec3d& t) {
                             SolveReport r = run_solver(ctx, kind, spec, t, cfg);
                             std::vector<std::vector<double>> poses{r.final_theta};
                             return std::make_pair(std::move(r), std::move(poses));
                           }});
    }
  }

  for (int run = 0; run < plan.runs; ++run) {
    for (const Job& job : jobs_list) {
      for (std::size_t w = 0; w < plan.warmup_count; ++w) (void)job.solve(targets[w]);
      std::vector<BenchRecord> recs(evaluated.size());
      std::vector<std::vector<std::vector<double>>> poses(evaluated.size());
      for_each_index(evaluated.size(), exec, jobs, [&](std::size_t i) {
        auto [report, p] = job.solve(evaluated[i]);
        BenchRecord& rec = recs[i];
        rec.run = run;
        rec.seed = plan.seed;
        rec.solver = job.name;
        rec.preset = job.preset;
        rec.target_index = i;
        rec.target = evaluated[i];
        rec.iterations = report.iterations;
        rec.loss = report.final_loss;
        rec.time_ms = report.wall_time.count();
        rec.success = report.success;
        rec.stop_reason = report.stop_reason;
        poses[i] = std::move(p);
      });
      for (std::size_t i = 0; i < recs.size(); ++i) {
        if (observer) observer(recs[i], poses[i]);
        result.records.push_back(std::move(recs[i]));
      }
    }
  }
  result.rows = aggregate(result.records);
  return result;
}

BenchResult run_benchmark(const BenchPlan& plan, int jobs, const BenchObserver& observer) {
  plan.validate();
  const BenchContext ctx = stage("load", [&] { return BenchContext::from_plan(plan); });
  const Execution exec = thread_count(jobs) > 1 ? Execution::parallel : Execution::serial;
  const auto samples = stage("sample", [&] {
    return sample_targets(ctx.base, ctx.chain.reach(), plan.sample_count, plan.seed);
  });
  const auto solvable =
      stage("filter", [&] { return filter_solvable(ctx, samples, plan.solvers, plan, exec); });
  const auto clusters = stage("kmeans", [&] {
    if (solvable.size() < plan.kmeans_k)
      throw ValidationError("only " + std::to_string(solvable.size()) +
                            " solvable targets for kmeans_k=" + std::to_string(plan.kmeans_k));
    return kmeans(solvable, plan.kmeans_k, plan.seed, 100, exec);
  });
  BenchResult result =
      stage("solve", [&] { return run_on_targets(plan, ctx, clusters.centroids, jobs, observer); });
  result.solvable_count = solvable.size();
  return result;
}

std::string summary_csv(const std::vector<BenchRow>& rows, int precision) {
  std::ostringstream out;
  out << "solver,custom_objective,solve_ms_mean,solve_ms_std,iters_mean,iters_std,"
         "ms_per_iter_mean,ms_per_iter_std,success_pct_mean,success_pct_std\n";
  auto f = [&](double v) { return format_double(v, precision); };
  for (const auto& r : rows) {
    out << r.solver << ',' << (r.custom_objective ? "yes" : "no") << ',' << f(r.solve_ms.mean)
        << ',' << f(r.solve_ms.std) << ',' << f(r.iterations.mean) << ',' << f(r.iterations.std)
        << ',' << f(r.ms_per_iter.mean) << ',' << f(r.ms_per_iter.std) << ','
        << f(r.success_pct.mean) << ',' << f(r.success_pct.std) << '\n';
  }
  return out.str();
}

std::string records_csv(const std::vector<BenchRecord>& records, int precision) {
  std::ostringstream out;
  out << "run,seed,solver,preset,target_index,target_x,target_y,target_z,iterations,loss,"
         "time_ms,success,stop_reason\n";
  auto f = [&](double v) { return format_double(v, precision); };
  for (const auto& r : records) {
    out << r.run << ',' << r.seed << ',' << r.solver << ',' << preset_name(r.preset) << ','
        << r.target_index << ',' << f(r.target.x) << ',' << f(r.target.y) << ',' << f(r.target.z)
        << ',' << r.iterations << ',' << f(r.loss) << ',' << f(r.time_ms) << ','
        << (r.success ? 1 : 0) << ',' << stop_reason_name(r.stop_reason) << '\n';
  }
  return out.str();
}

}  // namespace diffik
