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

#include "pgslam/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pgslam/errors.hpp"
#include "pgslam/text.hpp"

namespace pgslam {

namespace {

Vector3 parse_vec3(const std::string& value, const std::string& ctx) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  if (parts.size() != 3) {
    throw io_error(ctx + ": expected 'x,y,z', got '" + value + "'");
  }
  return Vector3(parse_double(parts[0], ctx), parse_double(parts[1], ctx),
                 parse_double(parts[2], ctx));
}

std::vector<Vector3> parse_waypoints(const std::string& value,
                                     const std::string& ctx) {
  std::vector<Vector3> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_vec3(item, ctx));
  }
  return out;
}

std::string vec3_to_string(const Vector3& v) {
  return fmt17(v.x()) + "," + fmt17(v.y()) + "," + fmt17(v.z());
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& context) {
  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const std::string ctx = context + ":" + std::to_string(line_no);
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw io_error(ctx + ": expected key=value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "seed") {
      config.sim.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
    } else if (key == "window") {
      config.sim.window = static_cast<int>(parse_int(value, ctx));
    } else if (key == "path") {
      if (value == "circle") config.sim.path = PathKind::circle;
      else if (value == "figure_eight") config.sim.path = PathKind::figure_eight;
      else if (value == "straight") config.sim.path = PathKind::straight;
      else if (value == "waypoints") config.sim.path = PathKind::waypoints;
      else throw io_error(ctx + ": unknown path kind '" + value + "'");
    } else if (key == "radius") {
      config.sim.radius = parse_double(value, ctx);
    } else if (key == "length") {
      config.sim.length = parse_double(value, ctx);
    } else if (key == "waypoints") {
      config.sim.waypoints = parse_waypoints(value, ctx);
    } else if (key == "frames") {
      config.sim.frames = static_cast<int>(parse_int(value, ctx));
    } else if (key == "step") {
      config.sim.step = parse_double(value, ctx);
    } else if (key == "noise_rot") {
      config.sim.noise_rot = parse_double(value, ctx);
    } else if (key == "noise_trans") {
      config.sim.noise_trans = parse_double(value, ctx);
    } else if (key == "drift_trans") {
      config.sim.drift_bias.rho = parse_vec3(value, ctx);
    } else if (key == "drift_rot") {
      config.sim.drift_bias.phi = parse_vec3(value, ctx);
    } else if (key == "loop_radius") {
      config.sim.loop_radius = parse_double(value, ctx);
    } else if (key == "min_loop_separation") {
      config.sim.min_loop_separation = static_cast<int>(parse_int(value, ctx));
    } else if (key == "loop_min_consecutive") {
      config.filter.min_consecutive = static_cast<int>(parse_int(value, ctx));
    } else if (key == "loop_band") {
      config.filter.match_band = static_cast<int>(parse_int(value, ctx));
    } else if (key == "loop_cooldown") {
      config.filter.cooldown_frames = static_cast<int>(parse_int(value, ctx));
    } else if (key == "lm_max_iterations") {
      config.lm.max_iterations = static_cast<int>(parse_int(value, ctx));
    } else if (key == "lm_initial_lambda") {
      config.lm.initial_lambda = parse_double(value, ctx);
    } else if (key == "lm_lambda_up") {
      config.lm.lambda_up = parse_double(value, ctx);
    } else if (key == "lm_lambda_down") {
      config.lm.lambda_down = parse_double(value, ctx);
    } else if (key == "lm_chi2_tol") {
      config.lm.absolute_chi2_tol = parse_double(value, ctx);
    } else if (key == "lm_rel_tol") {
      config.lm.relative_decrease_tol = parse_double(value, ctx);
    } else if (key == "lm_step_tol") {
      config.lm.step_norm_tol = parse_double(value, ctx);
    } else if (key == "lm_jacobian") {
      if (value == "first_order") config.lm.jacobian = JacobianApprox::first_order;
      else if (value == "full") config.lm.jacobian = JacobianApprox::full;
      else throw io_error(ctx + ": unknown jacobian mode '" + value + "'");
    } else {
      throw io_error(ctx + ": unknown configuration key '" + key + "'");
    }
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_config_file: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

namespace {

const char* path_kind_name(PathKind kind) {
  switch (kind) {
    case PathKind::circle: return "circle";
    case PathKind::figure_eight: return "figure_eight";
    case PathKind::straight: return "straight";
    case PathKind::waypoints: return "waypoints";
  }
  return "unknown";
}

std::map<std::string, std::string> config_to_map(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(c.sim.seed);
  m["window"] = std::to_string(c.sim.window);
  m["path"] = path_kind_name(c.sim.path);
  m["radius"] = fmt17(c.sim.radius);
  m["length"] = fmt17(c.sim.length);
  if (!c.sim.waypoints.empty()) {
    std::string w;
    for (const Vector3& p : c.sim.waypoints) {
      if (!w.empty()) w += ";";
      w += vec3_to_string(p);
    }
    m["waypoints"] = w;
  }
  m["frames"] = std::to_string(c.sim.resolved_frames());
  m["step"] = fmt17(c.sim.step);
  m["noise_rot"] = fmt17(c.sim.noise_rot);
  m["noise_trans"] = fmt17(c.sim.noise_trans);
  m["drift_trans"] = vec3_to_string(c.sim.drift_bias.rho);
  m["drift_rot"] = vec3_to_string(c.sim.drift_bias.phi);
  m["loop_radius"] = fmt17(c.sim.loop_radius);
  m["min_loop_separation"] = std::to_string(c.sim.min_loop_separation);
  m["loop_min_consecutive"] = std::to_string(c.filter.min_consecutive);
  m["loop_band"] = std::to_string(c.filter.match_band);
  m["loop_cooldown"] = std::to_string(c.filter.cooldown_frames);
  m["lm_max_iterations"] = std::to_string(c.lm.max_iterations);
  m["lm_initial_lambda"] = fmt17(c.lm.initial_lambda);
  m["lm_lambda_up"] = fmt17(c.lm.lambda_up);
  m["lm_lambda_down"] = fmt17(c.lm.lambda_down);
  m["lm_chi2_tol"] = fmt17(c.lm.absolute_chi2_tol);
  m["lm_rel_tol"] = fmt17(c.lm.relative_decrease_tol);
  m["lm_step_tol"] = fmt17(c.lm.step_norm_tol);
  m["lm_jacobian"] = c.lm.jacobian == JacobianApprox::full ? "full"
                                                           : "first_order";
  return m;
}

}  // namespace

void write_manifest(const std::string& path, const std::string& command,
                    const std::map<std::string, std::string>& inputs,
                    const std::map<std::string, std::string>& outputs,
                    const std::map<std::string, std::string>& settings) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["settings"] = settings;
  std::ofstream out(path);
  if (!out) throw io_error("write_manifest: cannot open '" + path + "'");
  out << j.dump(2) << '\n';
}

SimulateResult run_simulate(const RunConfig& config,
                            const std::string& config_path,
                            const std::string& out_dir) {
  config.sim.validate();
  std::filesystem::create_directories(out_dir);
  const std::string windows_path = out_dir + "/windows.txt";
  const std::string gt_path = out_dir + "/groundtruth.txt";
  const std::string trace_path = out_dir + "/detections.txt";

  const Trajectory gt = generate_ground_truth(config.sim);
  const std::vector<LoopDetection> trace = oracle_detections(gt, config.sim);

  const int n = config.sim.window;
  std::mt19937_64 rng(config.sim.seed);
  DetectionFilter filter(config.filter);
  std::vector<WindowedPoseGraph> stream;
  SimulateResult result;
  result.frames = static_cast<int>(gt.size());
  result.detections = static_cast<int>(trace.size());

  size_t next_detection = 0;
  for (int k = n - 1; k < static_cast<int>(gt.size()); ++k) {
    std::vector<NodeId> frames;
    for (int f = k - n + 1; f <= k; ++f) frames.push_back(f);
    stream.push_back(make_window(gt, frames, config.sim, rng));

    while (next_detection < trace.size() &&
           trace[next_detection].query_frame <= k) {
      const auto candidate = filter.feed(trace[next_detection++]);
      if (candidate && candidate_actionable(*candidate, n)) {
        const auto [w1, w2] = crossed_windows(candidate->i, candidate->j, n);
        stream.push_back(make_window(gt, w1, config.sim, rng));
        stream.push_back(make_window(gt, w2, config.sim, rng));
        ++result.loop_window_pairs;
      }
    }
  }
  result.windows = static_cast<int>(stream.size());

  save_window_stream(stream, n, windows_path);
  save_kitti_poses(gt, gt_path);
  save_detection_trace(trace, trace_path);
  write_manifest(out_dir + "/manifest.json", "simulate",
                 {{"config", config_path}},
                 {{"windows", windows_path},
                  {"ground_truth", gt_path},
                  {"detections", trace_path}},
                 config_to_map(config));
  return result;
}

namespace {

WindowedPoseGraph relax_replace_edges(const WindowedPoseGraph& w,
                                      const LMConfig& lm) {
  const std::vector<Pose> relaxed = relax_window(w, lm);
  WindowedPoseGraph out = w;
  for (int i = 0; i < w.size(); ++i) {
    for (int j = 0; j < w.size(); ++j) {
      if (i == j) continue;
      out = out.with_edge(i, j, relaxed[i].inverse() * relaxed[j]);
    }
  }
  return out;
}

}  // namespace

RunResult run_backend(const std::string& windows_path,
                      const std::string& detections_path,
                      const RunOptions& options, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string est_path = out_dir + "/estimate.txt";
  const std::string g2o_path = out_dir + "/graph.g2o";
  const std::string loops_path = out_dir + "/loops.txt";

  const std::vector<WindowedPoseGraph> stream =
      load_window_stream(windows_path);
  if (stream.empty()) throw io_error(windows_path + ": no windows");
  const int n = stream.front().size();
  const std::vector<LoopDetection> trace =
      load_detection_trace(detections_path);

  LoopVerifier verifier = always_accept_verifier();
  if (!options.verify_gt_path.empty()) {
    verifier = proximity_verifier(load_kitti_poses(options.verify_gt_path),
                                  options.verify_radius);
  }

  GlobalPoseGraph graph;
  DetectionFilter filter(options.filter);
  std::vector<std::pair<NodeId, NodeId>> closed;
  RunResult result;

  const auto optimize_graph = [&](GlobalPoseGraph& g) {
    const GlobalPoseGraph snapshot = g;
    const OptReport report = optimize(g, options.lm);
    ++result.global_optimizations;
    if (report.reason == TerminationReason::numerical_failure) {
      save_g2o(snapshot, g2o_path);
      throw numerical_error(
          "run_backend: optimization failed, pre-failure graph saved to " +
          g2o_path);
    }
    result.final_chi2 = report.chi2_final;
  };

  size_t next_detection = 0;
  size_t idx = 0;
  int appended = 0;
  while (idx < stream.size()) {
    const WindowedPoseGraph& w = stream[idx];
    if (!w.is_sliding()) {
      if (options.loop_closing) {
        throw io_error(windows_path + ": loop window without a candidate (" +
                       "stream position " + std::to_string(idx) + ")");
      }
      ++idx;
      continue;
    }

    graph.append_window(options.window_relax
                            ? relax_replace_edges(w, options.lm)
                            : w);
    ++appended;
    ++idx;
    const NodeId newest = w.frame_ids().back();

    if (options.loop_closing) {
      while (next_detection < trace.size() &&
             trace[next_detection].query_frame <= newest) {
        const auto candidate = filter.feed(trace[next_detection++]);
        if (!candidate || !candidate_actionable(*candidate, n)) continue;
        const auto [f1, f2] = crossed_windows(candidate->i, candidate->j, n);
        if (idx + 1 >= stream.size() || stream[idx].frame_ids() != f1 ||
            stream[idx + 1].frame_ids() != f2) {
          throw io_error(windows_path +
                         ": stream lacks the crossed windows for loop (" +
                         std::to_string(candidate->i) + ", " +
                         std::to_string(candidate->j) + ")");
        }
        WindowedPoseGraph w1 = stream[idx];
        WindowedPoseGraph w2 = stream[idx + 1];
        idx += 2;

        if (!verify_candidate(*candidate, verifier).verified) continue;
        if (options.window_relax) {
          w1 = relax_replace_edges(w1, options.lm);
          w2 = relax_replace_edges(w2, options.lm);
        }

        std::vector<Constraint> loops;
        for (const Constraint& c : build_loop_constraints(w1, w2)) {
          if (c.kind == ConstraintKind::loop) {
            loops.push_back(c);
          } else {
            graph.add_constraint_unless_duplicate(c);
          }
        }
        graph.add_loop_constraints(loops);
        closed.emplace_back(candidate->i, candidate->j);
        ++result.loops_closed;
        optimize_graph(graph);
      }
    }

    if (options.optimize_every > 0 && appended % options.optimize_every == 0) {
      optimize_graph(graph);
    }
  }

  Trajectory estimate;
  for (NodeId id = 0; id < graph.node_count(); ++id) {
    estimate.push_back(graph.node(id));
  }
  result.frames = graph.node_count();
  if (result.global_optimizations == 0) result.final_chi2 = graph.total_chi2();

  save_kitti_poses(estimate, est_path);
  save_g2o(graph, g2o_path);
  save_loop_log(closed, loops_path);

  std::map<std::string, std::string> settings;
  settings["loop_closing"] = options.loop_closing ? "1" : "0";
  settings["window_relax"] = options.window_relax ? "1" : "0";
  settings["optimize_every"] = std::to_string(options.optimize_every);
  settings["verify_gt"] = options.verify_gt_path;
  settings["verify_radius"] = fmt17(options.verify_radius);
  settings["loop_min_consecutive"] =
      std::to_string(options.filter.min_consecutive);
  settings["loop_band"] = std::to_string(options.filter.match_band);
  settings["loop_cooldown"] = std::to_string(options.filter.cooldown_frames);
  settings["loops_closed"] = std::to_string(result.loops_closed);
  settings["global_optimizations"] =
      std::to_string(result.global_optimizations);
  write_manifest(out_dir + "/manifest.json", "run",
                 {{"windows", windows_path}, {"detections", detections_path}},
                 {{"estimate", est_path},
                  {"graph", g2o_path},
                  {"loops", loops_path}},
                 settings);
  return result;
}

namespace {

std::string svg_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_trajectory_plot(
    const std::vector<std::pair<std::string, Trajectory>>& tracks,
    const std::string& svg_path, const std::string& csv_path) {
  if (tracks.empty()) {
    throw std::invalid_argument("write_trajectory_plot: no trajectories");
  }
  for (const auto& [name, t] : tracks) {
    if (t.empty()) {
      throw std::invalid_argument("write_trajectory_plot: trajectory '" +
                                  name + "' is empty");
    }
  }

  double min_x = 1e300, max_x = -1e300, min_z = 1e300, max_z = -1e300;
  for (const auto& [name, t] : tracks) {
    for (const Pose& p : t) {
      min_x = std::min(min_x, p.translation().x());
      max_x = std::max(max_x, p.translation().x());
      min_z = std::min(min_z, p.translation().z());
      max_z = std::max(max_z, p.translation().z());
    }
  }

  constexpr double kCanvas = 1000.0;
  constexpr double kMargin = 60.0;
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_z = std::max(max_z - min_z, 1e-9);
  // One scale for both axes keeps the bird's-eye geometry undistorted.
  const double scale =
      (kCanvas - 2.0 * kMargin) / std::max(span_x, span_z);
  const auto to_px = [&](const Vector3& p) {
    const double x = kMargin + (p.x() - min_x) * scale;
    const double y = kCanvas - kMargin - (p.z() - min_z) * scale;
    return std::make_pair(x, y);
  };

  std::ofstream svg(svg_path);
  if (!svg) throw io_error("write_trajectory_plot: cannot open '" + svg_path + "'");
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" "
         "height=\"1000\" viewBox=\"0 0 1000 1000\">\n";
  svg << "<rect width=\"1000\" height=\"1000\" fill=\"white\"/>\n";
  for (size_t s = 0; s < tracks.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline class=\"traj\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const Pose& p : tracks[s].second) {
      const auto [x, y] = to_px(p.translation());
      if (!first) svg << ' ';
      svg << svg_num(x) << ',' << svg_num(y);
      first = false;
    }
    svg << "\"/>\n";
  }
  for (size_t s = 0; s < tracks.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double y = 24.0 + 22.0 * s;
    svg << "<rect x=\"16\" y=\"" << svg_num(y - 11) << "\" width=\"14\" "
        << "height=\"14\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"36\" y=\"" << svg_num(y)
        << "\" font-family=\"monospace\" font-size=\"15\">"
        << tracks[s].first << "</text>\n";
  }
  svg << "</svg>\n";
  if (!svg) throw io_error("write_trajectory_plot: write failed");

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) {
      throw io_error("write_trajectory_plot: cannot open '" + csv_path + "'");
    }
    csv << "series,frame,x,y,z\n";
    for (const auto& [name, t] : tracks) {
      for (size_t k = 0; k < t.size(); ++k) {
        const Vector3& p = t[k].translation();
        csv << name << ',' << k << ',' << fmt17(p.x()) << ',' << fmt17(p.y())
            << ',' << fmt17(p.z()) << '\n';
      }
    }
  }
}

}  // namespace pgslam
