// Command-line front end for the bench. Subcommands map 1:1 onto the
// experiment pipelines; global flags select the scenario file, seed, output
// directory, and worker count. Exit codes: 0 success, 2 configuration
// error, 3 infeasible placement space, 4 I/O failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mirrorbench/pipeline.hpp"

namespace mb = mirrorbench;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int jobs = 1;
};

mb::ScenarioConfig resolve_config(const GlobalArgs& args) {
  mb::ScenarioConfig cfg =
      args.config_path.empty() ? mb::default_scenario() : mb::load_scenario(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  cfg.validate();
  return cfg;
}

void print_stats(const std::vector<mb::EvalRun>& rows) {
  std::vector<std::string> modes;
  for (const mb::EvalRun& r : rows) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  for (const std::string& mode : modes) {
    std::vector<double> apes, headings;
    for (const mb::EvalRun& r : rows) {
      if (r.mode != mode) continue;
      apes.push_back(r.vs_gt.ape_rmse);
      headings.push_back(r.vs_gt.max_heading_error_deg);
    }
    const mb::MeanStd a = mb::mean_std(apes);
    const mb::MeanStd h = mb::mean_std(headings);
    std::printf("%-16s n=%-3zu APE %.3f+/-%.3f m   max heading %.2f+/-%.2f deg\n", mode.c_str(),
                apes.size(), a.mean, a.std, h.mean, h.std);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Simulation bench for planar-mirror attacks on lidar scan-matching odometry"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs global;
  app.add_option("--config", global.config_path,
                 "Scenario JSON file (omit for the built-in corridor scenario)");
  app.add_option("--seed", global.seed, "Override the scenario seed");
  app.add_option("--out", global.out_dir, "Override the scenario output directory");
  app.add_option("--jobs", global.jobs, "Worker threads for batched runs")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Write per-frame raw/corrupted clouds and the ground-truth trajectory");
  bool no_mirror = false, no_diagnostics = false;
  simulate->add_flag("--no-mirror", no_mirror, "Disable the mirror (corrupted == raw)");
  simulate->add_flag("--no-diagnostics", no_diagnostics,
                     "Skip the per-frame occluded/ghost diagnostic clouds");

  // optimize
  auto* optimize =
      app.add_subcommand("optimize", "Search mirror placement maximizing the attack objective");
  bool test_function = false;
  optimize->add_flag("--test-function", test_function,
                     "Optimize a closed-form quadratic instead of the scan objective");

  // attack-eval
  auto* attack =
      app.add_subcommand("attack-eval", "Victim drift for optimized/random/absent mirrors");
  std::string placement = "all";
  int batch = 1;
  std::optional<double> random_distance;
  attack->add_option("--placement", placement, "all|none|random|optimized|explicit")
      ->check(CLI::IsMember({"all", "none", "random", "optimized", "explicit"}));
  attack->add_option("--batch", batch, "Independent seeded runs per mode")
      ->check(CLI::PositiveNumber);
  attack->add_option("--distance", random_distance,
                     "Route standoff for standalone random placements");

  // ablation
  auto* ablation =
      app.add_subcommand("ablation", "Full vs occlusion-only vs reflection-only corruption");
  int ablation_batch = 1;
  ablation->add_option("--batch", ablation_batch, "Independent seeded runs per mode")
      ->check(CLI::PositiveNumber);

  // sweep-distance
  auto* sweep = app.add_subcommand("sweep-distance",
                                   "Drift and ghost volume vs mirror-route standoff");
  double sweep_from = 1.5, sweep_to = 4.0, sweep_step = 0.5;
  int sweep_trials = 10;
  sweep->add_option("--from", sweep_from, "Smallest standoff, meters");
  sweep->add_option("--to", sweep_to, "Largest standoff, meters");
  sweep->add_option("--step", sweep_step, "Standoff increment, meters");
  sweep->add_option("--trials", sweep_trials, "Victim runs per standoff")
      ->check(CLI::PositiveNumber);

  // perturb-placement
  auto* perturb = app.add_subcommand("perturb-placement",
                                     "Drift under placement noise around the optimized mirror");
  int perturb_n = 100, perturb_baseline = 20;
  perturb->add_option("--n", perturb_n, "Perturbed placements")->check(CLI::PositiveNumber);
  perturb->add_option("--baseline", perturb_baseline,
                      "Random baseline runs at the optimized standoff");

  // metrics
  auto* metrics =
      app.add_subcommand("metrics", "Recompute metrics from persisted trajectory/cloud files");
  std::string est_path, ref_path, cloud_a, cloud_b, run_id = "run";
  metrics->add_option("--est", est_path, "Estimated trajectory (TUM)");
  metrics->add_option("--ref", ref_path, "Reference trajectory (TUM)");
  metrics->add_option("--cloud-a", cloud_a, "First cloud (PLY) for Chamfer distance");
  metrics->add_option("--cloud-b", cloud_b, "Second cloud (PLY) for Chamfer distance");
  metrics->add_option("--run-id", run_id, "Identifier for the emitted CSV row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad usage is a configuration error
  }

  if (metrics->parsed()) {
    // Pure file-to-file computation; no scenario needed.
    const bool want_traj = !est_path.empty() || !ref_path.empty();
    const bool want_cloud = !cloud_a.empty() || !cloud_b.empty();
    if (!want_traj && !want_cloud) {
      throw mb::ConfigError("metrics: provide --est/--ref and/or --cloud-a/--cloud-b");
    }
    if (want_traj) {
      if (est_path.empty() || ref_path.empty()) {
        throw mb::ConfigError("metrics: --est and --ref must be given together");
      }
      const mb::MetricReport report = mb::metrics_from_files(est_path, ref_path);
      std::printf("run_id,ape_rmse_m,max_heading_err_deg,n_frames,degenerate_frames\n");
      std::printf("%s,%s,%s,%zu,%d\n", run_id.c_str(), mb::format_g9(report.ape_rmse).c_str(),
                  mb::format_g9(report.max_heading_error_deg).c_str(),
                  report.per_frame_errors.size(), 0);
    }
    if (want_cloud) {
      if (cloud_a.empty() || cloud_b.empty()) {
        throw mb::ConfigError("metrics: --cloud-a and --cloud-b must be given together");
      }
      const mb::PointCloud a = mb::read_ply(cloud_a);
      const mb::PointCloud b = mb::read_ply(cloud_b);
      const double cd = mb::chamfer_distance(a, b);
      std::printf("chamfer_sq_m2,chamfer_root_m\n%s,%s\n", mb::format_g9(cd).c_str(),
                  mb::format_g9(std::sqrt(cd)).c_str());
    }
    return 0;
  }

  const mb::ScenarioConfig cfg = resolve_config(global);

  if (simulate->parsed()) {
    mb::SimulateOptions opt;
    opt.mirror_present = !no_mirror;
    opt.diagnostics = !no_diagnostics;
    mb::cmd_simulate(cfg, opt);
    std::printf("simulate: frames written to %s\n", cfg.out_dir.c_str());
  } else if (optimize->parsed()) {
    if (test_function) {
      // Known interior optimum; exercises the search loop end to end
      // without touching the scan pipeline.
      const mb::MirrorPlacement target{20.0, 3.0, 0.5};
      mb::OptimizerConfig oc = cfg.optimizer;
      oc.seed = cfg.seed;
      const mb::OptimizationResult res = mb::optimize_placement(
          cfg.search, cfg.route, oc, [&](const mb::MirrorPlacement& p) {
            const double dx = p.x - target.x, dy = p.y - target.y, dt = p.theta - target.theta;
            return -(dx * dx + dy * dy + dt * dt);
          });
      std::ofstream hist = mb::open_output(std::filesystem::path(cfg.out_dir) / "history.csv");
      mb::write_optimizer_history_csv(hist, res);
      std::printf("optimize (test function): best (%.4f, %.4f, %.4f) score %.6f\n",
                  res.best_params.x, res.best_params.y, res.best_params.theta, res.best_score);
    } else {
      const mb::OptimizeOutcome outcome = mb::cmd_optimize(cfg);
      std::printf("optimize: best (%.3f, %.3f, %.1f deg) J=%.4f -> %s\n",
                  outcome.result.best_params.x, outcome.result.best_params.y,
                  mb::rad_to_deg(outcome.result.best_params.theta), outcome.result.best_score,
                  cfg.out_dir.c_str());
    }
  } else if (attack->parsed()) {
    mb::AttackEvalOptions opt;
    if (placement == "none") opt.source = mb::PlacementSource::None;
    else if (placement == "random") opt.source = mb::PlacementSource::Random;
    else if (placement == "optimized") opt.source = mb::PlacementSource::Optimized;
    else if (placement == "explicit") opt.source = mb::PlacementSource::Explicit;
    else opt.source = mb::PlacementSource::All;
    opt.batch = batch;
    opt.jobs = global.jobs;
    opt.random_distance = random_distance;
    const auto rows = mb::cmd_attack_eval(cfg, opt);
    print_stats(rows);
  } else if (ablation->parsed()) {
    const auto rows = mb::cmd_ablation(cfg, ablation_batch, global.jobs);
    print_stats(rows);
  } else if (sweep->parsed()) {
    const auto rows = mb::cmd_sweep_distance(cfg, sweep_from, sweep_to, sweep_step, sweep_trials,
                                             global.jobs);
    for (const mb::SweepRow& r : rows) {
      if (r.trial != 0) continue;
      if (r.skipped) {
        std::printf("d=%.1f m: skipped (outside search bounds)\n", r.target_distance);
      } else {
        std::printf("d=%.1f m: APE %.3f m, ghosts %zu\n", r.target_distance, r.ape_rmse,
                    r.total_ghosts);
      }
    }
  } else if (perturb->parsed()) {
    const auto rows = mb::cmd_perturb_placement(cfg, perturb_n, perturb_baseline, global.jobs);
    std::vector<double> perturbed, baseline;
    for (const mb::PerturbRow& r : rows) {
      (r.kind == "perturbed" ? perturbed : baseline).push_back(r.ape_rmse);
    }
    std::printf("perturbed:       n=%zu median APE %.3f m\n", perturbed.size(),
                mb::median_of(perturbed));
    if (!baseline.empty()) {
      std::printf("random baseline: n=%zu median APE %.3f m\n", baseline.size(),
                  mb::median_of(baseline));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mb::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mb::InfeasibleSpaceError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const mb::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
