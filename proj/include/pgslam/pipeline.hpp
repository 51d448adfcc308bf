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

#ifndef PGSLAM_PIPELINE_HPP_
#define PGSLAM_PIPELINE_HPP_

#include <map>
#include <string>
#include <vector>

#include "pgslam/eval.hpp"
#include "pgslam/loop.hpp"
#include "pgslam/optimizer.hpp"
#include "pgslam/sim.hpp"

namespace pgslam {

inline constexpr const char* kVersion = "0.1.0";

/// Flat key=value configuration covering the simulator, loop filter and
/// optimizer. Unknown keys are errors.
struct RunConfig {
  SimConfig sim;
  LoopFilterConfig filter;
  LMConfig lm;
};

RunConfig parse_config_text(const std::string& text,
                            const std::string& context);
RunConfig load_config_file(const std::string& path);

/// Reproducibility record written next to every command's outputs.
void write_manifest(const std::string& path, const std::string& command,
                    const std::map<std::string, std::string>& inputs,
                    const std::map<std::string, std::string>& outputs,
                    const std::map<std::string, std::string>& settings);

struct SimulateResult {
  int frames = 0;
  int windows = 0;
  int detections = 0;
  int loop_window_pairs = 0;
};

/// Generates ground truth, the window stream and the detection trace.
/// The stream interleaves, after the sliding window of an accepting
/// frame, the two crossed loop windows for every candidate the filter
/// accepts; the back-end runs the same filter over the same trace and
/// consumes them in lockstep.
/// Writes windows.txt, groundtruth.txt, detections.txt and manifest.json
/// into out_dir.
SimulateResult run_simulate(const RunConfig& config,
                            const std::string& config_path,
                            const std::string& out_dir);

struct RunOptions {
  bool loop_closing = true;
  bool window_relax = false;
  /// Additionally optimize every N appended frames (0 = only on loops).
  int optimize_every = 0;
  LoopFilterConfig filter;
  LMConfig lm;
  /// Empty: accept every filtered candidate. Otherwise a KITTI file with
  /// ground truth used by the proximity verifier.
  std::string verify_gt_path;
  double verify_radius = 7.0;
};

struct RunResult {
  int frames = 0;
  int loops_closed = 0;
  int global_optimizations = 0;
  double final_chi2 = 0.0;
};

/// Incremental back-end: appends every window, filters detections, and
/// on each verified loop adds the crossed-window constraints and
/// optimizes the whole graph. Writes estimate.txt (KITTI), graph.g2o,
/// loops.txt and manifest.json into out_dir. On optimizer failure the
/// pre-failure graph is saved to graph.g2o before the error propagates.
RunResult run_backend(const std::string& windows_path,
                      const std::string& detections_path,
                      const RunOptions& options, const std::string& out_dir);

/// Deterministic bird's-eye (x-z plane) SVG overlay of one or more
/// trajectories, plus a CSV of the tracks when csv_path is nonempty.
void write_trajectory_plot(
    const std::vector<std::pair<std::string, Trajectory>>& tracks,
    const std::string& svg_path, const std::string& csv_path);

}  // namespace pgslam

#endif  // PGSLAM_PIPELINE_HPP_
