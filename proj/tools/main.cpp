/*
 * Copyright 2026 The pgslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgslam/errors.hpp"
#include "pgslam/eval.hpp"
#include "pgslam/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const pgslam::RunConfig config = pgslam::load_config_file(config_path);
  const pgslam::SimulateResult r =
      pgslam::run_simulate(config, config_path, out_dir);
  std::cout << "simulate: " << r.frames << " frames, " << r.windows
            << " windows (" << r.loop_window_pairs << " loop pairs), "
            << r.detections << " detections\n";
  return 0;
}

int cmd_run(const std::string& windows, const std::string& detections,
            const pgslam::RunOptions& options, const std::string& out_dir) {
  const pgslam::RunResult r =
      pgslam::run_backend(windows, detections, options, out_dir);
  std::cout << "run: " << r.frames << " frames, " << r.loops_closed
            << " loops closed, " << r.global_optimizations
            << " optimizations, final chi2 " << r.final_chi2 << "\n";
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path,
             const std::string& csv_path) {
  const pgslam::Trajectory est = pgslam::load_kitti_poses(est_path);
  const pgslam::Trajectory gt = pgslam::load_kitti_poses(gt_path);
  const pgslam::EvalReport report = pgslam::evaluate(est, gt);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) {
      throw pgslam::io_error("eval: cannot open '" + csv_path + "'");
    }
    pgslam::write_report_csv(report, csv);
  }
  pgslam::write_report_table(report, std::cout);
  return 0;
}

int cmd_plot(const std::vector<std::string>& files,
             const std::string& svg_path, const std::string& csv_path) {
  std::vector<std::pair<std::string, pgslam::Trajectory>> tracks;
  for (const std::string& file : files) {
    tracks.emplace_back(std::filesystem::path(file).stem().string(),
                        pgslam::load_kitti_poses(file));
  }
  pgslam::write_trajectory_plot(tracks, svg_path, csv_path);
  std::cout << "plot: " << tracks.size() << " trajectories -> " << svg_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose-graph SLAM back-end with a simulated front-end"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  auto* simulate = app.add_subcommand(
      "simulate", "generate ground truth, windows and detections");
  simulate->add_option("--config", config_path, "key=value config file")
      ->required();
  simulate->add_option("--out-dir", out_dir, "output directory");

  std::string windows_path, detections_path, run_config_path;
  pgslam::RunOptions options;
  bool no_loop_closing = false;
  auto* run = app.add_subcommand(
      "run", "incremental back-end over a window stream");
  run->add_option("--windows", windows_path, "window edge file")->required();
  run->add_option("--detections", detections_path, "detection trace file")
      ->required();
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--config", run_config_path,
                  "optional config file for loop filter and optimizer keys");
  run->add_flag("--no-loop-closing", no_loop_closing,
                "raw chained odometry, no loop constraints, no optimization");
  run->add_flag("--window-relax", options.window_relax,
                "relax every window before using its edges");
  run->add_option("--optimize-every", options.optimize_every,
                  "optimize every N frames in addition to loop events");
  run->add_option("--verify-gt", options.verify_gt_path,
                  "KITTI ground truth for the proximity verifier");
  run->add_option("--verify-radius", options.verify_radius,
                  "proximity verifier radius in meters");

  std::string est_path, gt_path, csv_path;
  auto* eval = app.add_subcommand("eval", "trajectory error metrics");
  eval->add_option("--est", est_path, "estimated KITTI trajectory")
      ->required();
  eval->add_option("--gt", gt_path, "ground-truth KITTI trajectory")
      ->required();
  eval->add_option("--csv", csv_path, "write the report as CSV");

  std::vector<std::string> plot_files;
  std::string svg_path = "trajectories.svg", tracks_csv;
  auto* plot = app.add_subcommand("plot", "bird's-eye SVG overlay");
  plot->add_option("files", plot_files, "KITTI trajectory files")
      ->required()
      ->expected(-1);
  plot->add_option("--out", svg_path, "output SVG path");
  plot->add_option("--csv", tracks_csv, "also write tracks as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir);
    if (run->parsed()) {
      options.loop_closing = !no_loop_closing;
      if (no_loop_closing && options.optimize_every > 0) {
        std::cerr << "run: --no-loop-closing excludes --optimize-every\n";
        return kExitUsage;
      }
      if (!run_config_path.empty()) {
        const pgslam::RunConfig rc = pgslam::load_config_file(run_config_path);
        options.filter = rc.filter;
        options.lm = rc.lm;
      }
      return cmd_run(windows_path, detections_path, options, out_dir);
    }
    if (eval->parsed()) return cmd_eval(est_path, gt_path, csv_path);
    if (plot->parsed()) return cmd_plot(plot_files, svg_path, tracks_csv);
  } catch (const pgslam::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const pgslam::io_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
