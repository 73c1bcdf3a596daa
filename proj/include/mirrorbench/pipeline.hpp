// Experiment pipelines behind the CLI subcommands: scan generation, mirror
// corruption, victim runs, metric reports, and the comparison protocols
// (attack-eval, ablation, distance sweep, placement perturbation). Every
// random draw is derived from the scenario seed through fixed stream tags,
// and batched work is committed in task-index order, so a config+seed pair
// fully determines every artifact byte regardless of the worker count.

#ifndef MIRRORBENCH_PIPELINE_HPP
#define MIRRORBENCH_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"
#include "mirrorbench/metrics.hpp"
#include "mirrorbench/mirror.hpp"
#include "mirrorbench/objective.hpp"
#include "mirrorbench/odometry.hpp"
#include "mirrorbench/optimizer.hpp"
#include "mirrorbench/ply_io.hpp"
#include "mirrorbench/scenario.hpp"
#include "mirrorbench/trajectory.hpp"
#include "mirrorbench/world.hpp"

namespace mirrorbench {

// Seed-stream tags. Streams must never collide across purposes, so each
// purpose owns a disjoint id range (run-indexed streams add the run index).
inline constexpr std::uint64_t kScanNoiseStream = 11;
inline constexpr std::uint64_t kEvalRunStream = 1000;    // + run index
inline constexpr std::uint64_t kSweepTrialStream = 3000; // + trial index
inline constexpr std::uint64_t kPerturbStream = 4000;    // + 1 + baseline index

/// Lane-keeping thresholds used for the informational departure flags.
inline constexpr double kLaneUrban = 0.29;
inline constexpr double kLaneHighway = 0.74;

/// Runs body(0..n-1) on up to `jobs` worker threads. Tasks draw from a
/// shared counter; callers index their outputs by task id, so results do not
/// depend on scheduling. The first worker exception is rethrown.
inline void parallel_for_indexed(int jobs, int n, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline Mirror make_mirror(const ScenarioConfig& cfg, const MirrorPlacement& p) {
  Mirror m = cfg.mirror;
  m.center = Vec3(p.x, p.y, cfg.mirror.center.z());
  m.yaw = p.theta;
  return m;
}

inline MirrorPlacement placement_of(const Mirror& m) {
  return MirrorPlacement{m.center.x(), m.center.y(), m.yaw};
}

/// Ground-truth frames for the scenario. Range noise (when enabled) is
/// seeded from the scenario seed unless a caller supplies its own stream.
inline std::vector<ScanFrame> build_frames(const ScenarioConfig& cfg,
                                           std::uint64_t noise_stream = kScanNoiseStream) {
  return generate_route_frames(cfg.world, cfg.route, cfg.speed, cfg.lidar,
                               mix_seed(cfg.seed, noise_stream));
}

inline Trajectory ground_truth_trajectory(const std::vector<ScanFrame>& frames) {
  Trajectory gt;
  gt.poses.reserve(frames.size());
  for (const ScanFrame& f : frames) gt.poses.push_back(f.gt_pose);
  return gt;
}

// ---------------------------------------------------------------------------
// Victim runs

/// One full victim pass: corrupt every scan with the (possibly absent)
/// mirror, run the odometry, and keep both trajectories in the shared start
/// frame. Ghost/occlusion totals feed the sweep and diagnostics.
struct VictimRun {
  Trajectory est;  // starts at identity by construction
  Trajectory gt;   // start-relative ground truth
  int degenerate_frames = 0;
  std::size_t total_ghosts = 0;
  std::size_t total_occluded = 0;
};

inline VictimRun run_victim(const std::vector<ScanFrame>& frames,
                            const std::optional<Mirror>& mirror,
                            const ActuationSchedule& schedule, MirrorMode mode,
                            const OdometryParams& params, double sensor_max_range) {
  if (frames.size() < 2) {
    throw ConfigError("run_victim: need at least two frames");
  }
  std::vector<PointCloud> scans;
  std::vector<double> timestamps;
  scans.reserve(frames.size());
  timestamps.reserve(frames.size());

  VictimRun out;
  for (const ScanFrame& frame : frames) {
    if (mirror) {
      const Mirror posed =
          mirror->with_yaw(mirror_yaw_at(schedule, mirror->yaw, frame.gt_pose.timestamp));
      CorruptedScan corrupted =
          corrupt_scan(frame.raw, frame.gt_pose, posed, mode, sensor_max_range);
      out.total_ghosts += corrupted.refl_world.size();
      out.total_occluded += corrupted.occ_world.size();
      scans.push_back(std::move(corrupted.scan));
    } else {
      scans.push_back(frame.raw);
    }
    timestamps.push_back(frame.gt_pose.timestamp);
  }

  OdometryResult odo = run_odometry(scans, timestamps, params);
  out.est = std::move(odo.estimated);
  out.degenerate_frames = odo.degenerate_frames;
  out.gt = ground_truth_trajectory(frames).start_relative();
  return out;
}

// ---------------------------------------------------------------------------
// Per-run reporting

/// Cross-track component of the pose error: the error vector expressed in
/// the reference pose's frame, lateral (y) axis. Drives the lane flags.
inline std::vector<double> per_frame_lateral_errors(const Trajectory& est, const Trajectory& ref) {
  const auto match = detail::associate_by_timestamp(est, ref);
  std::vector<double> lateral;
  lateral.reserve(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    const RigidPose& r = ref.poses[match[i]];
    const Vec3 err_in_ref = r.rotation.transpose() * (est.poses[i].translation - r.translation);
    lateral.push_back(std::abs(err_in_ref.y()));
  }
  return lateral;
}

/// Everything one experiment row needs.
struct EvalRun {
  std::string run_id;
  std::string mode;  // none | random | optimized | explicit | occlusion_only | reflection_only
  int run_index = 0;
  std::optional<MirrorPlacement> placement;
  double route_distance = std::numeric_limits<double>::quiet_NaN();
  double objective_score = std::numeric_limits<double>::quiet_NaN();  // J when optimized
  MetricReport vs_gt;
  double ape_vs_clean = std::numeric_limits<double>::quiet_NaN();
  int n_frames = 0;
  int degenerate_frames = 0;
  std::size_t total_ghosts = 0;
  std::size_t total_occluded = 0;
  bool lane_urban = false;
  bool lane_highway = false;
};

inline EvalRun make_eval_run(const ScenarioConfig& cfg, const std::string& mode, int run_index,
                             const std::optional<MirrorPlacement>& placement,
                             const VictimRun& run, const Trajectory* clean_est) {
  EvalRun row;
  row.run_id = mode + "_" + std::to_string(run_index);
  row.mode = mode;
  row.run_index = run_index;
  row.placement = placement;
  if (placement) {
    row.route_distance = route_distance_xy(cfg.route, placement->x, placement->y);
  }
  row.vs_gt = build_metric_report(run.est, run.gt);
  if (clean_est) {
    row.ape_vs_clean = ape_rmse(run.est, *clean_est);
  }
  row.n_frames = static_cast<int>(run.est.size());
  row.degenerate_frames = run.degenerate_frames;
  row.total_ghosts = run.total_ghosts;
  row.total_occluded = run.total_occluded;
  for (double lat : per_frame_lateral_errors(run.est, run.gt)) {
    row.lane_urban = row.lane_urban || lat > kLaneUrban;
    row.lane_highway = row.lane_highway || lat > kLaneHighway;
  }
  return row;
}

/// Flat metric row, recomputable from the persisted trajectory pair.
inline void write_metrics_csv(const std::filesystem::path& path, const std::string& run_id,
                              const MetricReport& report, int n_frames, int degenerate_frames) {
  std::ofstream out = open_output(path);
  out << "run_id,ape_rmse_m,max_heading_err_deg,n_frames,degenerate_frames\n";
  out << run_id << ',' << format_g9(report.ape_rmse) << ','
      << format_g9(report.max_heading_error_deg) << ',' << n_frames << ',' << degenerate_frames
      << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

/// Persists one run's trajectories + metrics + record under dir.
inline void persist_run(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                        const EvalRun& row, const VictimRun& run) {
  write_tum(dir / "est.tum", run.est);
  write_tum(dir / "gt.tum", run.gt);
  write_metrics_csv(dir / "metrics.csv", row.run_id, row.vs_gt, row.n_frames,
                    row.degenerate_frames);

  nlohmann::json rec;
  rec["run_id"] = row.run_id;
  rec["mode"] = row.mode;
  rec["scenario_hash"] = scenario_hash(cfg);
  rec["ape_rmse_m"] = row.vs_gt.ape_rmse;
  rec["max_heading_err_deg"] = row.vs_gt.max_heading_error_deg;
  rec["n_frames"] = row.n_frames;
  rec["degenerate_frames"] = row.degenerate_frames;
  rec["total_ghosts"] = row.total_ghosts;
  rec["total_occluded"] = row.total_occluded;
  rec["lane_departure_urban"] = row.lane_urban;
  rec["lane_departure_highway"] = row.lane_highway;
  if (row.placement) {
    rec["placement"] = {{"x", row.placement->x},
                        {"y", row.placement->y},
                        {"theta_deg", rad_to_deg(row.placement->theta)},
                        {"route_distance", row.route_distance}};
  }
  rec["artifacts"] = {(dir / "est.tum").string(), (dir / "gt.tum").string(),
                      (dir / "metrics.csv").string()};
  std::ofstream out = open_output(dir / "run_record.json");
  out << rec.dump(2) << '\n';
  if (!out) throw IoError("cannot write run record in " + dir.string());
}

inline std::string csv_opt(double v) {
  return std::isnan(v) ? std::string("") : format_g9(v);
}

inline void write_summary_header(std::ofstream& out) {
  out << "run_id,mode,run_index,x,y,theta_deg,route_distance,objective_J,ape_rmse_m,"
         "max_heading_err_deg,ape_vs_clean_m,n_frames,degenerate_frames,total_ghosts,"
         "total_occluded,lane_urban,lane_highway\n";
}

inline void write_summary_row(std::ofstream& out, const EvalRun& r) {
  out << r.run_id << ',' << r.mode << ',' << r.run_index << ','
      << (r.placement ? format_g9(r.placement->x) : "") << ','
      << (r.placement ? format_g9(r.placement->y) : "") << ','
      << (r.placement ? format_g9(rad_to_deg(r.placement->theta)) : "") << ','
      << csv_opt(r.route_distance) << ',' << csv_opt(r.objective_score) << ','
      << format_g9(r.vs_gt.ape_rmse) << ',' << format_g9(r.vs_gt.max_heading_error_deg) << ','
      << csv_opt(r.ape_vs_clean) << ',' << r.n_frames << ',' << r.degenerate_frames << ','
      << r.total_ghosts << ',' << r.total_occluded << ',' << (r.lane_urban ? 1 : 0) << ','
      << (r.lane_highway ? 1 : 0) << '\n';
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.std += (x - s.mean) * (x - s.mean);
  s.std = xs.size() > 1 ? std::sqrt(s.std / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// Per-mode mean +/- sample-std aggregation over a batch of runs.
inline void write_stats_csv(const std::filesystem::path& path,
                            const std::vector<EvalRun>& rows) {
  std::vector<std::string> modes;
  for (const EvalRun& r : rows) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  std::ofstream out = open_output(path);
  out << "mode,n,ape_mean_m,ape_std_m,heading_mean_deg,heading_std_deg,ape_pretty\n";
  for (const std::string& mode : modes) {
    std::vector<double> apes, headings;
    for (const EvalRun& r : rows) {
      if (r.mode != mode) continue;
      apes.push_back(r.vs_gt.ape_rmse);
      headings.push_back(r.vs_gt.max_heading_error_deg);
    }
    const MeanStd a = mean_std(apes);
    const MeanStd h = mean_std(headings);
    char pretty[64];
    std::snprintf(pretty, sizeof(pretty), "%.3f+/-%.3f", a.mean, a.std);
    out << mode << ',' << apes.size() << ',' << format_g9(a.mean) << ',' << format_g9(a.std) << ','
        << format_g9(h.mean) << ',' << format_g9(h.std) << ',' << pretty << '\n';
  }
  if (!out) throw IoError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  bool mirror_present = true;
  bool diagnostics = true;  // also dump p_occ / p_refl per frame
};

/// Writes raw and corrupted per-frame clouds plus the ground-truth
/// trajectory. With the mirror absent the corrupted files are byte-identical
/// to the raw ones.
inline void cmd_simulate(const ScenarioConfig& cfg, const SimulateOptions& opt) {
  const std::filesystem::path out(cfg.out_dir);
  const std::vector<ScanFrame> frames = build_frames(cfg);

  char name[64];
  for (const ScanFrame& frame : frames) {
    std::snprintf(name, sizeof(name), "frame_%06d.ply", frame.index);
    write_ply(out / "frames" / name, frame.raw);

    CorruptedScan corrupted;
    if (opt.mirror_present) {
      const Mirror posed = cfg.mirror.with_yaw(
          mirror_yaw_at(cfg.actuation, cfg.mirror.yaw, frame.gt_pose.timestamp));
      corrupted =
          corrupt_scan(frame.raw, frame.gt_pose, posed, MirrorMode::Full, cfg.lidar.max_range);
    } else {
      corrupted.scan = frame.raw;
    }
    std::snprintf(name, sizeof(name), "sim_%06d.ply", frame.index);
    write_ply(out / "frames" / name, corrupted.scan);
    if (opt.diagnostics) {
      std::snprintf(name, sizeof(name), "p_occ_%06d.ply", frame.index);
      write_ply(out / "frames" / name, corrupted.occ_world);
      std::snprintf(name, sizeof(name), "p_refl_%06d.ply", frame.index);
      write_ply(out / "frames" / name, corrupted.refl_world);
    }
  }
  write_tum(out / "gt.tum", ground_truth_trajectory(frames).start_relative());
  save_scenario(out / "scenario.json", cfg);
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeOutcome {
  OptimizationResult result;
  ObjectiveTrace best_trace;
};

/// Placement search for one run seed; the per-run stream keeps batched
/// evaluations independent.
inline OptimizationResult optimize_for_run(const ScenarioConfig& cfg, const ObjectiveContext& ctx,
                                           int run_index) {
  OptimizerConfig opt_cfg = cfg.optimizer;
  opt_cfg.seed = mix_seed(cfg.seed, kEvalRunStream + static_cast<std::uint64_t>(run_index));
  return optimize_placement(cfg.search, cfg.route, opt_cfg, [&](const MirrorPlacement& p) {
    return ctx.score(make_mirror(cfg, p), cfg.actuation);
  });
}

/// Full optimize pipeline: search, then dump history, the winning placement,
/// and the winner's per-frame objective trace.
inline OptimizeOutcome cmd_optimize(const ScenarioConfig& cfg) {
  const std::filesystem::path out(cfg.out_dir);
  const std::vector<ScanFrame> frames = build_frames(cfg);
  const ObjectiveContext ctx(frames, cfg.alpha, cfg.d_voxel, cfg.lidar.max_range);

  OptimizeOutcome outcome;
  outcome.result = optimize_for_run(cfg, ctx, 0);
  outcome.best_trace = ctx.evaluate(make_mirror(cfg, outcome.result.best_params), cfg.actuation);

  {
    std::ofstream hist = open_output(out / "history.csv");
    write_optimizer_history_csv(hist, outcome.result);
    if (!hist) throw IoError("cannot write history.csv");
  }
  {
    std::ofstream trace = open_output(out / "trace.csv");
    write_objective_trace_csv(trace, outcome.best_trace);
    if (!trace) throw IoError("cannot write trace.csv");
  }
  {
    nlohmann::json best;
    best["x"] = outcome.result.best_params.x;
    best["y"] = outcome.result.best_params.y;
    best["theta_deg"] = rad_to_deg(outcome.result.best_params.theta);
    best["score"] = outcome.result.best_score;
    best["route_distance"] =
        route_distance_xy(cfg.route, outcome.result.best_params.x, outcome.result.best_params.y);
    best["scenario_hash"] = scenario_hash(cfg);
    std::ofstream bp = open_output(out / "best_placement.json");
    bp << best.dump(2) << '\n';
    if (!bp) throw IoError("cannot write best_placement.json");
  }
  save_scenario(out / "scenario.json", cfg);
  return outcome;
}

// ---------------------------------------------------------------------------
// attack-eval

enum class PlacementSource { None, Random, Optimized, Explicit, All };

struct AttackEvalOptions {
  PlacementSource source = PlacementSource::All;
  int batch = 1;
  int jobs = 1;
  // Standoff for standalone random baselines; when absent, the search
  // space's minimum route distance is used.
  std::optional<double> random_distance;
};

/// Head-to-head evaluation. `All` runs, per batch index i: an optimized
/// placement (fresh search under seed stream i), a random placement at the
/// same route distance, and one shared mirror-absent reference.
inline std::vector<EvalRun> cmd_attack_eval(const ScenarioConfig& cfg,
                                            const AttackEvalOptions& opt) {
  if (opt.batch < 1) throw ConfigError("attack-eval: batch must be >= 1");
  const std::filesystem::path out(cfg.out_dir);
  const std::vector<ScanFrame> frames = build_frames(cfg);

  // Mirror-absent reference, shared by every row's ape_vs_clean column.
  const VictimRun clean = run_victim(frames, std::nullopt, cfg.actuation, MirrorMode::Full,
                                     cfg.odometry, cfg.lidar.max_range);

  const bool want_none = opt.source == PlacementSource::None || opt.source == PlacementSource::All;
  const bool want_random =
      opt.source == PlacementSource::Random || opt.source == PlacementSource::All;
  const bool want_optimized =
      opt.source == PlacementSource::Optimized || opt.source == PlacementSource::All;
  const bool want_explicit = opt.source == PlacementSource::Explicit;

  std::optional<ObjectiveContext> ctx;
  if (want_optimized) {
    ctx.emplace(frames, cfg.alpha, cfg.d_voxel, cfg.lidar.max_range);
  }

  // Per-index work item; results land in slots so worker order is irrelevant.
  std::vector<std::vector<EvalRun>> slots(opt.batch);
  parallel_for_indexed(opt.jobs, opt.batch, [&](int i) {
    const std::uint64_t run_seed =
        mix_seed(cfg.seed, kEvalRunStream + static_cast<std::uint64_t>(i));
    std::optional<double> matched_distance = opt.random_distance;
    std::vector<EvalRun>& local = slots[i];

    auto emit = [&](const std::string& mode, const std::optional<MirrorPlacement>& pl,
                    const VictimRun& run, double objective_score) {
      EvalRun row = make_eval_run(cfg, mode, i, pl, run, &clean.est);
      row.objective_score = objective_score;
      persist_run(out / "runs" / row.run_id, cfg, row, run);
      local.push_back(row);
    };

    if (want_optimized) {
      const OptimizationResult best = optimize_for_run(cfg, *ctx, i);
      const Mirror mirror = make_mirror(cfg, best.best_params);
      const VictimRun run = run_victim(frames, mirror, cfg.actuation, MirrorMode::Full,
                                       cfg.odometry, cfg.lidar.max_range);
      emit("optimized", best.best_params, run, best.best_score);
      matched_distance = route_distance_xy(cfg.route, best.best_params.x, best.best_params.y);
    }
    if (want_random) {
      const double dist = matched_distance.value_or(cfg.search.min_route_distance);
      const MirrorPlacement pl = sample_random_placement(cfg.search, cfg.route, dist, run_seed);
      const VictimRun run = run_victim(frames, make_mirror(cfg, pl), cfg.actuation,
                                       MirrorMode::Full, cfg.odometry, cfg.lidar.max_range);
      emit("random", pl, run, std::numeric_limits<double>::quiet_NaN());
    }
    if (want_explicit) {
      const VictimRun run = run_victim(frames, cfg.mirror, cfg.actuation, MirrorMode::Full,
                                       cfg.odometry, cfg.lidar.max_range);
      emit("explicit", placement_of(cfg.mirror), run, std::numeric_limits<double>::quiet_NaN());
    }
  });

  std::vector<EvalRun> rows;
  if (want_none) {
    EvalRun row = make_eval_run(cfg, "none", 0, std::nullopt, clean, &clean.est);
    persist_run(out / "runs" / row.run_id, cfg, row, clean);
    rows.push_back(row);
  }
  for (const std::vector<EvalRun>& local : slots) {
    rows.insert(rows.end(), local.begin(), local.end());
  }

  {
    std::ofstream summary = open_output(out / "summary.csv");
    write_summary_header(summary);
    for (const EvalRun& r : rows) write_summary_row(summary, r);
    if (!summary) throw IoError("cannot write summary.csv");
  }
  write_stats_csv(out / "stats.csv", rows);
  save_scenario(out / "scenario.json", cfg);
  return rows;
}

// ---------------------------------------------------------------------------
// ablation

/// Occlusion-only vs reflection-only vs full, per batch index, with the
/// same per-index optimized placement attack-eval would use.
inline std::vector<EvalRun> cmd_ablation(const ScenarioConfig& cfg, int batch, int jobs = 1) {
  if (batch < 1) throw ConfigError("ablation: batch must be >= 1");
  const std::filesystem::path out(cfg.out_dir);
  const std::vector<ScanFrame> frames = build_frames(cfg);
  const ObjectiveContext ctx(frames, cfg.alpha, cfg.d_voxel, cfg.lidar.max_range);
  const VictimRun clean = run_victim(frames, std::nullopt, cfg.actuation, MirrorMode::Full,
                                     cfg.odometry, cfg.lidar.max_range);

  struct ModeEntry {
    const char* name;
    MirrorMode mode;
  };
  static constexpr ModeEntry kModes[] = {{"full", MirrorMode::Full},
                                         {"occlusion_only", MirrorMode::OcclusionOnly},
                                         {"reflection_only", MirrorMode::ReflectionOnly}};

  std::vector<std::vector<EvalRun>> slots(batch);
  parallel_for_indexed(jobs, batch, [&](int i) {
    const OptimizationResult best = optimize_for_run(cfg, ctx, i);
    const Mirror mirror = make_mirror(cfg, best.best_params);
    for (const ModeEntry& entry : kModes) {
      const VictimRun run =
          run_victim(frames, mirror, cfg.actuation, entry.mode, cfg.odometry, cfg.lidar.max_range);
      EvalRun row = make_eval_run(cfg, entry.name, i, best.best_params, run, &clean.est);
      row.objective_score = best.best_score;
      persist_run(out / "runs" / row.run_id, cfg, row, run);
      slots[i].push_back(row);
    }
  });

  std::vector<EvalRun> rows;
  for (const std::vector<EvalRun>& local : slots) {
    rows.insert(rows.end(), local.begin(), local.end());
  }
  {
    std::ofstream summary = open_output(out / "ablation.csv");
    write_summary_header(summary);
    for (const EvalRun& r : rows) write_summary_row(summary, r);
    if (!summary) throw IoError("cannot write ablation.csv");
  }
  write_stats_csv(out / "stats.csv", rows);
  save_scenario(out / "scenario.json", cfg);
  return rows;
}

// ---------------------------------------------------------------------------
// sweep-distance

struct SweepRow {
  double target_distance = 0.0;
  int trial = 0;
  bool skipped = false;  // translated placement left the search bounds
  double realized_distance = std::numeric_limits<double>::quiet_NaN();
  double ape_rmse = std::numeric_limits<double>::quiet_NaN();
  double max_heading_err_deg = std::numeric_limits<double>::quiet_NaN();
  std::size_t total_ghosts = 0;
  std::size_t total_occluded = 0;
};

/// Moves a placement to an exact standoff by sliding it along the horizontal
/// normal from its nearest route point.
inline std::optional<MirrorPlacement> translate_to_distance(const Polyline& route,
                                                            const MirrorPlacement& base,
                                                            double target_distance) {
  // Nearest route point at the route's altitude (planar-route convention).
  const Vec3 q(base.x, base.y, route.vertices.front().z());
  double best = std::numeric_limits<double>::infinity();
  Vec3 nearest = route.vertices.front();
  for (std::size_t i = 1; i < route.vertices.size(); ++i) {
    const Vec3& a = route.vertices[i - 1];
    const Vec3& b = route.vertices[i];
    const Vec3 ab = b - a;
    const double denom = ab.squaredNorm();
    double t = denom > 0.0 ? (q - a).dot(ab) / denom : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3 candidate = a + t * ab;
    const double d = (q - candidate).norm();
    if (d < best) {
      best = d;
      nearest = candidate;
    }
  }
  const double nx = base.x - nearest.x();
  const double ny = base.y - nearest.y();
  const double norm = std::hypot(nx, ny);
  if (norm < 1e-9) return std::nullopt;  // placement on the route; side undefined
  MirrorPlacement moved = base;
  moved.x = nearest.x() + target_distance * nx / norm;
  moved.y = nearest.y() + target_distance * ny / norm;
  return moved;
}

/// Distance sweep: optimize once, then translate the winner to each target
/// standoff and measure drift and ghost volume, `trials` victim runs each.
inline std::vector<SweepRow> cmd_sweep_distance(const ScenarioConfig& cfg, double from, double to,
                                                double step, int trials, int jobs = 1) {
  if (!(from <= to) || !(step > 0.0)) throw ConfigError("sweep-distance: need from <= to, step > 0");
  if (trials < 1) throw ConfigError("sweep-distance: trials must be >= 1");
  const std::filesystem::path out(cfg.out_dir);

  const std::vector<ScanFrame> frames = build_frames(cfg);
  const ObjectiveContext ctx(frames, cfg.alpha, cfg.d_voxel, cfg.lidar.max_range);
  const OptimizationResult best = optimize_for_run(cfg, ctx, 0);

  struct Task {
    double target = 0.0;
    int trial = 0;
    std::optional<MirrorPlacement> placement;  // absent -> skipped row
  };
  std::vector<Task> tasks;
  for (double target = from; target <= to + 1e-9; target += step) {
    const std::optional<MirrorPlacement> moved =
        translate_to_distance(cfg.route, best.best_params, target);
    const bool in_bounds = moved && cfg.search.in_bounds(*moved);
    for (int trial = 0; trial < trials; ++trial) {
      tasks.push_back({target, trial, in_bounds ? moved : std::nullopt});
    }
  }

  const bool noisy = cfg.lidar.range_noise_sigma > 0.0;
  std::vector<SweepRow> rows(tasks.size());
  parallel_for_indexed(jobs, static_cast<int>(tasks.size()), [&](int ti) {
    const Task& task = tasks[ti];
    SweepRow& row = rows[ti];
    row.target_distance = task.target;
    row.trial = task.trial;
    if (!task.placement) {
      row.skipped = true;
      return;
    }
    row.realized_distance = route_distance_xy(cfg.route, task.placement->x, task.placement->y);
    // Per-trial scans only differ when range noise is enabled.
    const std::vector<ScanFrame> noisy_frames =
        noisy ? build_frames(cfg, kSweepTrialStream + static_cast<std::uint64_t>(task.trial))
              : std::vector<ScanFrame>{};
    const std::vector<ScanFrame>& trial_frames = noisy ? noisy_frames : frames;
    const VictimRun run = run_victim(trial_frames, make_mirror(cfg, *task.placement),
                                     cfg.actuation, MirrorMode::Full, cfg.odometry,
                                     cfg.lidar.max_range);
    const MetricReport report = build_metric_report(run.est, run.gt);
    row.ape_rmse = report.ape_rmse;
    row.max_heading_err_deg = report.max_heading_error_deg;
    row.total_ghosts = run.total_ghosts;
    row.total_occluded = run.total_occluded;

    char run_name[64];
    std::snprintf(run_name, sizeof(run_name), "d%.1f_t%02d", task.target, task.trial);
    EvalRun record = make_eval_run(cfg, "sweep", ti, *task.placement, run, nullptr);
    record.run_id = run_name;
    persist_run(out / "runs" / run_name, cfg, record, run);
  });

  std::ofstream csv = open_output(out / "sweep.csv");
  csv << "target_distance,trial,skipped,realized_distance,ape_rmse_m,max_heading_err_deg,"
         "total_ghosts,total_occluded\n";
  for (const SweepRow& r : rows) {
    csv << format_g9(r.target_distance) << ',' << r.trial << ',' << (r.skipped ? 1 : 0) << ','
        << csv_opt(r.realized_distance) << ',' << csv_opt(r.ape_rmse) << ','
        << csv_opt(r.max_heading_err_deg) << ',' << r.total_ghosts << ',' << r.total_occluded
        << '\n';
  }
  if (!csv) throw IoError("cannot write sweep.csv");
  save_scenario(out / "scenario.json", cfg);
  return rows;
}

// ---------------------------------------------------------------------------
// perturb-placement

struct PerturbRow {
  std::string kind;  // perturbed | random_baseline
  int trial = 0;
  double dx = 0.0, dy = 0.0, dtheta = 0.0;  // offsets for perturbed rows
  MirrorPlacement placement;
  double ape_rmse = 0.0;
  double max_heading_err_deg = 0.0;
};

/// Robustness protocol: n uniform placement perturbations of the optimized
/// mirror (position +-0.5 m, yaw +-5 deg) against a random baseline at the
/// optimized standoff.
inline std::vector<PerturbRow> cmd_perturb_placement(const ScenarioConfig& cfg, int n,
                                                     int baseline_runs, int jobs = 1) {
  if (n < 1) throw ConfigError("perturb-placement: n must be >= 1");
  if (baseline_runs < 0) throw ConfigError("perturb-placement: baseline_runs must be >= 0");
  const std::filesystem::path out(cfg.out_dir);

  const std::vector<ScanFrame> frames = build_frames(cfg);
  const ObjectiveContext ctx(frames, cfg.alpha, cfg.d_voxel, cfg.lidar.max_range);
  const OptimizationResult best = optimize_for_run(cfg, ctx, 0);
  const double matched_distance =
      route_distance_xy(cfg.route, best.best_params.x, best.best_params.y);

  // All draws happen up front on one stream so the task list is fixed before
  // any parallel evaluation starts.
  std::vector<PerturbRow> rows(static_cast<std::size_t>(n) + baseline_runs);
  Rng rng(mix_seed(cfg.seed, kPerturbStream));
  for (int k = 0; k < n; ++k) {
    PerturbRow& row = rows[k];
    row.kind = "perturbed";
    row.trial = k;
    row.dx = rng.uniform(-0.5, 0.5);
    row.dy = rng.uniform(-0.5, 0.5);
    row.dtheta = rng.uniform(deg_to_rad(-5.0), deg_to_rad(5.0));
    row.placement = best.best_params;
    row.placement.x += row.dx;
    row.placement.y += row.dy;
    row.placement.theta += row.dtheta;
  }
  for (int k = 0; k < baseline_runs; ++k) {
    PerturbRow& row = rows[n + k];
    row.kind = "random_baseline";
    row.trial = k;
    row.placement = sample_random_placement(
        cfg.search, cfg.route, matched_distance,
        mix_seed(cfg.seed, kPerturbStream + 1 + static_cast<std::uint64_t>(k)));
  }

  parallel_for_indexed(jobs, static_cast<int>(rows.size()), [&](int i) {
    PerturbRow& row = rows[i];
    const VictimRun run = run_victim(frames, make_mirror(cfg, row.placement), cfg.actuation,
                                     MirrorMode::Full, cfg.odometry, cfg.lidar.max_range);
    const MetricReport report = build_metric_report(run.est, run.gt);
    row.ape_rmse = report.ape_rmse;
    row.max_heading_err_deg = report.max_heading_error_deg;

    char run_name[64];
    std::snprintf(run_name, sizeof(run_name), "%s_%03d", row.kind.c_str(), row.trial);
    EvalRun record = make_eval_run(cfg, row.kind, row.trial, row.placement, run, nullptr);
    persist_run(out / "runs" / run_name, cfg, record, run);
  });

  std::ofstream csv = open_output(out / "perturb.csv");
  csv << "kind,trial,dx,dy,dtheta_deg,x,y,theta_deg,ape_rmse_m,max_heading_err_deg\n";
  for (const PerturbRow& r : rows) {
    csv << r.kind << ',' << r.trial << ',' << format_g9(r.dx) << ',' << format_g9(r.dy) << ','
        << format_g9(rad_to_deg(r.dtheta)) << ',' << format_g9(r.placement.x) << ','
        << format_g9(r.placement.y) << ',' << format_g9(rad_to_deg(r.placement.theta)) << ','
        << format_g9(r.ape_rmse) << ',' << format_g9(r.max_heading_err_deg) << '\n';
  }
  if (!csv) throw IoError("cannot write perturb.csv");
  save_scenario(out / "scenario.json", cfg);
  return rows;
}

// ---------------------------------------------------------------------------
// metrics (from files)

/// Recomputes trajectory metrics from persisted TUM files.
inline MetricReport metrics_from_files(const std::filesystem::path& est_path,
                                       const std::filesystem::path& ref_path) {
  const Trajectory est = read_tum(est_path);
  const Trajectory ref = read_tum(ref_path);
  return build_metric_report(est.start_relative(), ref.start_relative());
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_PIPELINE_HPP
