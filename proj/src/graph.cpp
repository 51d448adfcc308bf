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

#include "pgslam/graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pgslam/errors.hpp"
#include "pgslam/text.hpp"

namespace pgslam {

void GlobalPoseGraph::check_node(NodeId id, const char* what) const {
  if (id < 0 || id >= node_count()) {
    throw std::invalid_argument(std::string(what) + ": unknown node " +
                                std::to_string(id));
  }
}

NodeId GlobalPoseGraph::add_node(const Pose& pose) {
  nodes_.push_back(pose);
  return node_count() - 1;
}

const Pose& GlobalPoseGraph::node(NodeId id) const {
  check_node(id, "node");
  return nodes_[id];
}

void GlobalPoseGraph::set_node(NodeId id, const Pose& pose) {
  check_node(id, "set_node");
  nodes_[id] = pose;
}

void GlobalPoseGraph::fix_node(NodeId id) {
  check_node(id, "fix_node");
  fixed_.insert(id);
}

void GlobalPoseGraph::add_constraint(const Constraint& c) {
  check_node(c.from, "add_constraint");
  check_node(c.to, "add_constraint");
  if (c.from == c.to) {
    throw std::invalid_argument("add_constraint: self edge on node " +
                                std::to_string(c.from));
  }
  constraints_.push_back(c);
}

bool GlobalPoseGraph::add_constraint_unless_duplicate(const Constraint& c) {
  for (const Constraint& existing : constraints_) {
    if (existing.from == c.from && existing.to == c.to &&
        existing.kind == c.kind &&
        Pose::bitwise_equal(existing.relative, c.relative)) {
      return false;
    }
  }
  add_constraint(c);
  return true;
}

int GlobalPoseGraph::node_degree(NodeId id) const {
  check_node(id, "node_degree");
  int degree = 0;
  for (const Constraint& c : constraints_) {
    if (c.from == id || c.to == id) ++degree;
  }
  return degree;
}

void GlobalPoseGraph::append_window(const WindowedPoseGraph& w) {
  const std::vector<NodeId>& frames = w.frame_ids();
  const int n = w.size();

  std::vector<NodeId> fresh;
  for (NodeId f : frames) {
    if (f >= node_count()) fresh.push_back(f);
  }
  std::sort(fresh.begin(), fresh.end());

  if (node_count() == 0) {
    if (fresh.size() != frames.size() || fresh.front() != 0 ||
        fresh.back() != n - 1) {
      throw std::invalid_argument(
          "append_window: bootstrap window must cover frames 0.." +
          std::to_string(n - 1));
    }
  } else if (fresh.size() > 1 ||
             (!fresh.empty() && fresh.front() != node_count())) {
    throw std::invalid_argument(
        "append_window: non-contiguous frame ids (graph has " +
        std::to_string(node_count()) + " nodes, window adds frame " +
        std::to_string(fresh.empty() ? -1 : fresh.back()) + ")");
  }

  // View index per frame, for looking up the chaining edge.
  std::map<NodeId, int> view_of;
  for (int k = 0; k < n; ++k) view_of[frames[k]] = k;

  for (NodeId f : fresh) {
    if (f == 0) {
      add_node(Pose::identity());
      fix_node(0);
      continue;
    }
    const auto prev = view_of.find(f - 1);
    if (prev == view_of.end()) {
      throw std::invalid_argument(
          "append_window: window lacks the chaining edge into frame " +
          std::to_string(f));
    }
    add_node(nodes_[f - 1] * w.edge(prev->second, view_of[f]));
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      add_constraint_unless_duplicate(Constraint{
          frames[i], frames[j], w.edge(i, j), ConstraintKind::local});
    }
  }
}

void GlobalPoseGraph::add_loop_constraints(
    const std::vector<Constraint>& loops) {
  for (const Constraint& c : loops) {
    if (c.kind != ConstraintKind::loop) {
      throw std::invalid_argument(
          "add_loop_constraints: constraint is not a loop edge");
    }
    check_node(c.from, "add_loop_constraints");
    check_node(c.to, "add_loop_constraints");
  }
  for (const Constraint& c : loops) constraints_.push_back(c);
}

Twist GlobalPoseGraph::edge_error(const Constraint& c) const {
  check_node(c.from, "edge_error");
  check_node(c.to, "edge_error");
  return se3_log(c.relative.inverse() * nodes_[c.from].inverse() *
                 nodes_[c.to]);
}

double GlobalPoseGraph::total_chi2() const {
  double chi2 = 0.0;
  for (const Constraint& c : constraints_) {
    chi2 += weights_.of(c.kind) * edge_error(c).squared_norm();
  }
  return chi2;
}

void GlobalPoseGraph::initialize_chain() {
  for (NodeId k = 1; k < node_count(); ++k) {
    const Constraint* chain = nullptr;
    for (const Constraint& c : constraints_) {
      if (c.from == k - 1 && c.to == k) {
        chain = &c;
        break;
      }
    }
    if (chain == nullptr) {
      throw std::invalid_argument(
          "initialize_chain: no constraint between frames " +
          std::to_string(k - 1) + " and " + std::to_string(k));
    }
    nodes_[k] = nodes_[k - 1] * chain->relative;
  }
}

bool GlobalPoseGraph::is_connected() const {
  if (node_count() <= 1) return true;
  std::vector<std::vector<NodeId>> adjacent(node_count());
  for (const Constraint& c : constraints_) {
    adjacent[c.from].push_back(c.to);
    adjacent[c.to].push_back(c.from);
  }
  std::vector<bool> seen(node_count(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  int visited = 1;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    for (NodeId next : adjacent[id]) {
      if (!seen[next]) {
        seen[next] = true;
        ++visited;
        stack.push_back(next);
      }
    }
  }
  return visited == node_count();
}

namespace {

constexpr const char* kIdentityInformation =
    "1 0 0 0 0 0 1 0 0 0 0 1 0 0 0 1 0 0 1 0 1";

void write_pose_fields(std::ostream& out, const Pose& pose) {
  const Vector3& t = pose.translation();
  const Eigen::Quaterniond q = pose.rotation().quaternion();
  out << fmt17(t.x()) << ' ' << fmt17(t.y()) << ' ' << fmt17(t.z()) << ' '
      << fmt17(q.x()) << ' ' << fmt17(q.y()) << ' ' << fmt17(q.z()) << ' '
      << fmt17(q.w());
}

Pose pose_from_fields(const std::vector<std::string>& f, size_t offset,
                      const std::string& ctx) {
  const Vector3 t(parse_double(f[offset], ctx), parse_double(f[offset + 1], ctx),
                  parse_double(f[offset + 2], ctx));
  const Eigen::Quaterniond q(
      parse_double(f[offset + 6], ctx), parse_double(f[offset + 3], ctx),
      parse_double(f[offset + 4], ctx), parse_double(f[offset + 5], ctx));
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw io_error(ctx + ": quaternion is not normalized");
  }
  return Pose(Rotation::from_quaternion(q), t);
}

}  // namespace

void save_g2o(const GlobalPoseGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_g2o: cannot open '" + path + "'");
  for (NodeId id = 0; id < graph.node_count(); ++id) {
    out << "VERTEX_SE3:QUAT " << id << ' ';
    write_pose_fields(out, graph.node(id));
    out << '\n';
  }
  for (NodeId id : graph.fixed_nodes()) {
    out << "FIX " << id << '\n';
  }
  for (const Constraint& c : graph.constraints()) {
    out << "EDGE_SE3:QUAT " << c.from << ' ' << c.to << ' ';
    write_pose_fields(out, c.relative);
    out << ' ' << kIdentityInformation << '\n';
  }
  if (!out) throw io_error("save_g2o: write to '" + path + "' failed");
}

GlobalPoseGraph load_g2o(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_g2o: cannot open '" + path + "'");

  std::map<NodeId, Pose> vertices;
  std::vector<Constraint> constraints;
  std::vector<NodeId> fixed;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> f = split_fields(line);
    if (f.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f[0] == "VERTEX_SE3:QUAT") {
      if (f.size() != 9) throw io_error(ctx + ": expected 9 fields");
      const NodeId id = static_cast<NodeId>(parse_int(f[1], ctx));
      if (!vertices.emplace(id, pose_from_fields(f, 2, ctx)).second) {
        throw io_error(ctx + ": duplicate vertex " + std::to_string(id));
      }
    } else if (f[0] == "EDGE_SE3:QUAT") {
      if (f.size() != 10 + 21) throw io_error(ctx + ": expected 31 fields");
      Constraint c;
      c.from = static_cast<NodeId>(parse_int(f[1], ctx));
      c.to = static_cast<NodeId>(parse_int(f[2], ctx));
      c.relative = pose_from_fields(f, 3, ctx);
      c.kind = ConstraintKind::local;
      for (size_t k = 10; k < f.size(); ++k) parse_double(f[k], ctx);
      constraints.push_back(c);
    } else if (f[0] == "FIX") {
      if (f.size() != 2) throw io_error(ctx + ": expected 2 fields");
      fixed.push_back(static_cast<NodeId>(parse_int(f[1], ctx)));
    } else {
      throw io_error(ctx + ": unknown tag '" + f[0] + "'");
    }
  }

  GlobalPoseGraph graph;
  NodeId expected = 0;
  for (const auto& [id, pose] : vertices) {
    if (id != expected++) {
      throw io_error(path + ": vertex ids are not dense from 0");
    }
    graph.add_node(pose);
  }
  for (NodeId id : fixed) {
    if (id < 0 || id >= graph.node_count()) {
      throw io_error(path + ": FIX references unknown node " +
                     std::to_string(id));
    }
    graph.fix_node(id);
  }
  for (const Constraint& c : constraints) {
    if (c.from < 0 || c.from >= graph.node_count() || c.to < 0 ||
        c.to >= graph.node_count()) {
      throw io_error(path + ": edge references unknown node");
    }
    graph.add_constraint(c);
  }
  return graph;
}

}  // namespace pgslam
