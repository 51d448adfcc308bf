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

#ifndef PGSLAM_SIM_HPP_
#define PGSLAM_SIM_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pgslam/lie.hpp"
#include "pgslam/loop.hpp"
#include "pgslam/window.hpp"

namespace pgslam {

/// Absolute camera-to-world poses, one per frame, frame indices dense
/// from 0.
using Trajectory = std::vector<Pose>;

enum class PathKind { circle, figure_eight, straight, waypoints };

/// Deterministic stand-in for a learned windowed-pose-graph front-end.
/// Paths live in the x-z plane (camera looks along +z, y points down).
/// Per-edge noise is zero-mean Gaussian in twist coordinates composed
/// right-multiplicatively onto the true relative motion; drift_bias is a
/// constant twist composed once per edge, signed by the edge's temporal
/// direction.
struct SimConfig {
  std::uint64_t seed = 0;
  int window = 3;
  PathKind path = PathKind::circle;
  double radius = 150.0;        // circle, figure_eight
  double length = 500.0;        // straight
  std::vector<Vector3> waypoints;
  int frames = 0;               // 0 derives a default from the geometry
  double step = 1.0;            // meters per frame
  double noise_rot = 0.0;       // std dev, radians per edge
  double noise_trans = 0.0;     // std dev, meters per edge
  Twist drift_bias;             // per-edge systematic twist
  double loop_radius = 7.0;     // oracle detection radius, meters
  int min_loop_separation = 100;

  void validate() const;
  int resolved_frames() const;
};

Trajectory generate_ground_truth(const SimConfig& config);

/// A noisy window over the given frames; every directed edge gets an
/// independent perturbation draw. Shared by sliding and loop windows.
WindowedPoseGraph make_window(const Trajectory& gt,
                              const std::vector<NodeId>& frames,
                              const SimConfig& config, std::mt19937_64& rng);

/// Sliding windows over the last `window` frames, one per frame from
/// frame window-1 on. A fresh RNG is seeded from config.seed.
std::vector<WindowedPoseGraph> emit_windows(const Trajectory& gt,
                                            const SimConfig& config);

/// Place-recognition oracle: a detection for every frame pair closer
/// than loop_radius with index gap above min_loop_separation, scored by
/// proximity. Emitted in (query, match) order.
std::vector<LoopDetection> oracle_detections(const Trajectory& gt,
                                             const SimConfig& config);

/// KITTI pose format: 12 space-separated numbers per line, the row-major
/// 3x4 [R|t] block, 17 significant digits. Rotation blocks that deviate
/// from orthonormality by more than 1e-6 are re-orthonormalized on load
/// with a warning on stderr.
Trajectory load_kitti_poses(const std::string& path);
void save_kitti_poses(const Trajectory& t, const std::string& path);

/// Window edge files: a header line declaring the window size and Euler
/// convention, then one `frame_i frame_j rx ry rz tx ty tz` record per
/// directed edge. Records of one window are contiguous, ordered by
/// (from-view, to-view).
void save_window_stream(const std::vector<WindowedPoseGraph>& windows, int n,
                        const std::string& path);
std::vector<WindowedPoseGraph> load_window_stream(const std::string& path);

}  // namespace pgslam

#endif  // PGSLAM_SIM_HPP_
