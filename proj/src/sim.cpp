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

#include "pgslam/sim.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "pgslam/errors.hpp"
#include "pgslam/text.hpp"

namespace pgslam {

namespace {

Rotation yaw_rotation(double angle) {
  // Heading about the +y axis; maps the +z camera axis to
  // (sin angle, 0, cos angle).
  Matrix3 m;
  m << std::cos(angle), 0, std::sin(angle), 0, 1, 0, -std::sin(angle), 0,
      std::cos(angle);
  return Rotation::from_matrix(m, 1e-9);
}

double waypoint_path_length(const std::vector<Vector3>& pts) {
  double len = 0.0;
  for (size_t k = 1; k < pts.size(); ++k) len += (pts[k] - pts[k - 1]).norm();
  return len;
}

Rotation heading_towards(const Vector3& dir) {
  const Vector3 z = Vector3::UnitZ();
  const Vector3 d = dir.normalized();
  if ((d - z).norm() < 1e-12) return Rotation::identity();
  if ((d + z).norm() < 1e-12) return yaw_rotation(kPi);
  Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(z, d);
  q.normalize();
  return Rotation::from_quaternion(q);
}

}  // namespace

void SimConfig::validate() const {
  if (window < 2) throw std::invalid_argument("SimConfig: window must be >= 2");
  if (!(step > 0.0)) {
    throw std::invalid_argument("SimConfig: step must be > 0 (degenerate path)");
  }
  if (noise_rot < 0.0 || noise_trans < 0.0) {
    throw std::invalid_argument("SimConfig: noise std devs must be >= 0");
  }
  if (!(loop_radius > 0.0)) {
    throw std::invalid_argument("SimConfig: loop_radius must be > 0");
  }
  if (min_loop_separation < 1) {
    throw std::invalid_argument("SimConfig: min_loop_separation must be >= 1");
  }
  if (frames < 0) throw std::invalid_argument("SimConfig: frames must be >= 0");
  switch (path) {
    case PathKind::circle:
    case PathKind::figure_eight:
      if (!(radius > 0.0)) {
        throw std::invalid_argument("SimConfig: radius must be > 0");
      }
      break;
    case PathKind::straight:
      if (!(length > 0.0)) {
        throw std::invalid_argument("SimConfig: length must be > 0");
      }
      break;
    case PathKind::waypoints:
      if (waypoints.size() < 2 || !(waypoint_path_length(waypoints) > 0.0)) {
        throw std::invalid_argument(
            "SimConfig: waypoint path needs >= 2 points and nonzero length");
      }
      break;
  }
}

int SimConfig::resolved_frames() const {
  if (frames > 0) return frames;
  const auto per_lap = [&] {
    return static_cast<int>(std::ceil(2.0 * kPi * radius / step));
  };
  switch (path) {
    case PathKind::circle:
      // Run 15% past closure so the place-recognition oracle sees a
      // revisit stretch.
      return per_lap() + std::max(50, per_lap() * 15 / 100);
    case PathKind::figure_eight:
      return 2 * per_lap() + 50;
    case PathKind::straight:
      return static_cast<int>(std::floor(length / step)) + 1;
    case PathKind::waypoints:
      return static_cast<int>(
                 std::floor(waypoint_path_length(waypoints) / step)) +
             1;
  }
  return 0;
}

Trajectory generate_ground_truth(const SimConfig& config) {
  config.validate();
  const int frames = config.resolved_frames();
  if (frames < 2) {
    throw std::invalid_argument("generate_ground_truth: need >= 2 frames");
  }
  Trajectory out;
  out.reserve(frames);

  switch (config.path) {
    case PathKind::circle: {
      const double r = config.radius;
      for (int k = 0; k < frames; ++k) {
        const double a = k * config.step / r;
        out.emplace_back(yaw_rotation(a),
                         Vector3(r * (1.0 - std::cos(a)), 0, r * std::sin(a)));
      }
      break;
    }
    case PathKind::figure_eight: {
      const double r = config.radius;
      const int per_lap = static_cast<int>(std::ceil(2.0 * kPi * r / config.step));
      for (int k = 0; k < frames; ++k) {
        const int lap = (k / per_lap) % 2;
        const double a = (k % per_lap) * config.step / r;
        if (lap == 0) {
          out.emplace_back(yaw_rotation(a), Vector3(r * (1.0 - std::cos(a)), 0,
                                                    r * std::sin(a)));
        } else {
          out.emplace_back(yaw_rotation(-a),
                           Vector3(-r * (1.0 - std::cos(a)), 0,
                                   r * std::sin(a)));
        }
      }
      break;
    }
    case PathKind::straight: {
      for (int k = 0; k < frames; ++k) {
        out.emplace_back(Rotation::identity(), Vector3(0, 0, k * config.step));
      }
      break;
    }
    case PathKind::waypoints: {
      const std::vector<Vector3>& pts = config.waypoints;
      std::vector<double> cumulative{0.0};
      for (size_t k = 1; k < pts.size(); ++k) {
        cumulative.push_back(cumulative.back() + (pts[k] - pts[k - 1]).norm());
      }
      size_t seg = 1;
      for (int k = 0; k < frames; ++k) {
        const double s = std::min(k * config.step, cumulative.back());
        while (seg + 1 < cumulative.size() && cumulative[seg] < s) ++seg;
        const Vector3 a = pts[seg - 1];
        const Vector3 b = pts[seg];
        const double seg_len = cumulative[seg] - cumulative[seg - 1];
        const double f = seg_len > 0 ? (s - cumulative[seg - 1]) / seg_len : 0;
        out.emplace_back(heading_towards(b - a), a + f * (b - a));
      }
      break;
    }
  }
  return out;
}

WindowedPoseGraph make_window(const Trajectory& gt,
                              const std::vector<NodeId>& frames,
                              const SimConfig& config, std::mt19937_64& rng) {
  const int n = static_cast<int>(frames.size());
  // Distributions require a positive sigma; they are only sampled when
  // the corresponding noise is enabled.
  std::normal_distribution<double> rot_noise(
      0.0, config.noise_rot > 0.0 ? config.noise_rot : 1.0);
  std::normal_distribution<double> trans_noise(
      0.0, config.noise_trans > 0.0 ? config.noise_trans : 1.0);
  const bool drifting = !config.drift_bias.is_zero();

  std::vector<WindowEdge> edges;
  edges.reserve(static_cast<size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const NodeId fi = frames[i];
      const NodeId fj = frames[j];
      if (fi < 0 || fj < 0 || fi >= static_cast<NodeId>(gt.size()) ||
          fj >= static_cast<NodeId>(gt.size())) {
        throw std::invalid_argument("make_window: frame outside trajectory");
      }
      Pose motion = gt[fi].inverse() * gt[fj];
      if (config.noise_trans > 0.0 || config.noise_rot > 0.0) {
        Twist noise;
        if (config.noise_trans > 0.0) {
          noise.rho = Vector3(trans_noise(rng), trans_noise(rng),
                              trans_noise(rng));
        }
        if (config.noise_rot > 0.0) {
          noise.phi = Vector3(rot_noise(rng), rot_noise(rng), rot_noise(rng));
        }
        motion = motion * se3_exp(noise);
      }
      if (drifting) {
        motion = motion * se3_exp(config.drift_bias.scaled(
                              fj > fi ? 1.0 : -1.0));
      }
      edges.push_back(WindowEdge{i, j, motion});
    }
  }
  return WindowedPoseGraph::build(frames, edges);
}

std::vector<WindowedPoseGraph> emit_windows(const Trajectory& gt,
                                            const SimConfig& config) {
  config.validate();
  const int n = config.window;
  if (static_cast<int>(gt.size()) < n) {
    throw std::invalid_argument("emit_windows: trajectory shorter than window");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<WindowedPoseGraph> out;
  for (int k = n - 1; k < static_cast<int>(gt.size()); ++k) {
    std::vector<NodeId> frames;
    for (int f = k - n + 1; f <= k; ++f) frames.push_back(f);
    out.push_back(make_window(gt, frames, config, rng));
  }
  return out;
}

std::vector<LoopDetection> oracle_detections(const Trajectory& gt,
                                             const SimConfig& config) {
  config.validate();
  std::vector<LoopDetection> trace;
  for (NodeId q = 0; q < static_cast<NodeId>(gt.size()); ++q) {
    for (NodeId m = 0; m + config.min_loop_separation < q; ++m) {
      const double d = (gt[q].translation() - gt[m].translation()).norm();
      if (d < config.loop_radius) {
        trace.push_back(LoopDetection{q, m, 1.0 - d / config.loop_radius});
      }
    }
  }
  return trace;
}

Trajectory load_kitti_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_kitti_poses: cannot open '" + path + "'");
  Trajectory out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> f = split_fields(line);
    if (f.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 12) {
      throw io_error(ctx + ": expected 12 fields, got " +
                     std::to_string(f.size()));
    }
    Matrix3 r;
    Vector3 t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        r(row, col) = parse_double(f[row * 4 + col], ctx);
      }
      t(row) = parse_double(f[row * 4 + 3], ctx);
    }
    const double err = orthonormality_error(r);
    if (err > 1e-6) {
      std::cerr << ctx << ": rotation deviates from orthonormality by " << err
                << ", re-orthonormalizing\n";
      Eigen::Quaterniond q(r);
      q.normalize();
      r = q.toRotationMatrix();
    }
    out.emplace_back(Rotation::from_matrix(r, 1e-5), t);
  }
  return out;
}

void save_kitti_poses(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_kitti_poses: cannot open '" + path + "'");
  for (const Pose& pose : t) {
    const Eigen::Matrix<double, 3, 4> m = pose.matrix3x4();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 4; ++col) {
        if (row != 0 || col != 0) out << ' ';
        out << fmt17(m(row, col));
      }
    }
    out << '\n';
  }
  if (!out) throw io_error("save_kitti_poses: write failed");
}

namespace {

constexpr const char* kWindowHeaderPrefix = "pgslam-windows";
constexpr const char* kEulerTag = "euler=intrinsic-zyx(rx,ry,rz)";

}  // namespace

void save_window_stream(const std::vector<WindowedPoseGraph>& windows, int n,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_window_stream: cannot open '" + path + "'");
  out << kWindowHeaderPrefix << " n=" << n << ' ' << kEulerTag << '\n';
  for (const WindowedPoseGraph& w : windows) {
    if (w.size() != n) {
      throw std::invalid_argument(
          "save_window_stream: window size differs from the header");
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const EulerEdge e = euler_edge_from_pose(w.edge(i, j));
        out << w.frame_ids()[i] << ' ' << w.frame_ids()[j] << ' '
            << fmt17(e.euler.x()) << ' ' << fmt17(e.euler.y()) << ' '
            << fmt17(e.euler.z()) << ' ' << fmt17(e.translation.x()) << ' '
            << fmt17(e.translation.y()) << ' ' << fmt17(e.translation.z())
            << '\n';
      }
    }
  }
  if (!out) throw io_error("save_window_stream: write failed");
}

std::vector<WindowedPoseGraph> load_window_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_window_stream: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) {
    throw io_error(path + ": empty window file");
  }
  const std::vector<std::string> header = split_fields(line);
  if (header.size() != 3 || header[0] != kWindowHeaderPrefix ||
      header[1].rfind("n=", 0) != 0) {
    throw io_error(path + ":1: bad header");
  }
  if (header[2] != kEulerTag) {
    throw io_error(path + ":1: unsupported Euler convention '" + header[2] +
                   "'");
  }
  const int n =
      static_cast<int>(parse_int(header[1].substr(2), path + ":1"));
  if (n < 2) throw io_error(path + ":1: window size must be >= 2");
  const int per_window = n * (n - 1);

  struct Record {
    NodeId from, to;
    Pose motion;
    int line_no;
  };
  std::vector<Record> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> f = split_fields(line);
    if (f.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 8) {
      throw io_error(ctx + ": expected 8 fields, got " +
                     std::to_string(f.size()));
    }
    EulerEdge e;
    e.euler = Vector3(parse_double(f[2], ctx), parse_double(f[3], ctx),
                      parse_double(f[4], ctx));
    e.translation = Vector3(parse_double(f[5], ctx), parse_double(f[6], ctx),
                            parse_double(f[7], ctx));
    records.push_back(Record{static_cast<NodeId>(parse_int(f[0], ctx)),
                             static_cast<NodeId>(parse_int(f[1], ctx)),
                             pose_from_euler_edge(e), line_no});
  }
  if (records.size() % per_window != 0) {
    throw io_error(path + ": record count " + std::to_string(records.size()) +
                   " is not a multiple of " + std::to_string(per_window));
  }

  std::vector<WindowedPoseGraph> out;
  for (size_t base = 0; base < records.size(); base += per_window) {
    // The first n-1 records of a window all leave view 0 and list the
    // remaining views in order.
    std::vector<NodeId> frames{records[base].from};
    for (int k = 0; k < n - 1; ++k) {
      if (records[base + k].from != frames[0]) {
        throw io_error(path + ":" + std::to_string(records[base + k].line_no) +
                       ": window records out of order");
      }
      frames.push_back(records[base + k].to);
    }
    std::vector<WindowEdge> edges;
    size_t r = base;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const Record& rec = records[r++];
        if (rec.from != frames[i] || rec.to != frames[j]) {
          throw io_error(path + ":" + std::to_string(rec.line_no) +
                         ": window records out of order");
        }
        edges.push_back(WindowEdge{i, j, rec.motion});
      }
    }
    out.push_back(WindowedPoseGraph::build(frames, edges));
  }
  return out;
}

}  // namespace pgslam
