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

#include "pgslam/window.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "pgslam/errors.hpp"
#include "pgslam/graph.hpp"
#include "pgslam/optimizer.hpp"

namespace pgslam {

int WindowedPoseGraph::index(int from_view, int to_view) const {
  if (from_view < 0 || from_view >= n_ || to_view < 0 || to_view >= n_ ||
      from_view == to_view) {
    throw std::invalid_argument("WindowedPoseGraph: bad view pair (" +
                                std::to_string(from_view) + ", " +
                                std::to_string(to_view) + ") for n=" +
                                std::to_string(n_));
  }
  return from_view * (n_ - 1) + (to_view < from_view ? to_view : to_view - 1);
}

WindowedPoseGraph WindowedPoseGraph::build(
    const std::vector<NodeId>& frame_ids,
    const std::vector<WindowEdge>& edges) {
  const int n = static_cast<int>(frame_ids.size());
  if (n < 2) {
    throw std::invalid_argument("WindowedPoseGraph: need at least 2 views");
  }
  if (std::set<NodeId>(frame_ids.begin(), frame_ids.end()).size() !=
      frame_ids.size()) {
    throw std::invalid_argument("WindowedPoseGraph: duplicate frame ids");
  }
  WindowedPoseGraph g;
  g.n_ = n;
  g.frame_ids_ = frame_ids;
  g.edges_.assign(static_cast<size_t>(n) * (n - 1), Pose());

  std::vector<bool> seen(g.edges_.size(), false);
  for (const WindowEdge& e : edges) {
    const int idx = g.index(e.from, e.to);
    if (seen[idx]) {
      throw std::invalid_argument("WindowedPoseGraph: duplicate edge (" +
                                  std::to_string(e.from) + ", " +
                                  std::to_string(e.to) + ")");
    }
    seen[idx] = true;
    g.edges_[idx] = e.motion;
  }
  if (edges.size() != g.edges_.size() ||
      !std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw std::invalid_argument(
        "WindowedPoseGraph: incomplete edge set, expected " +
        std::to_string(g.edges_.size()) + " directed edges, got " +
        std::to_string(edges.size()));
  }
  return g;
}

const Pose& WindowedPoseGraph::edge(int from_view, int to_view) const {
  return edges_[index(from_view, to_view)];
}

WindowedPoseGraph WindowedPoseGraph::with_edge(int from_view, int to_view,
                                               const Pose& motion) const {
  WindowedPoseGraph g = *this;
  g.edges_[index(from_view, to_view)] = motion;
  return g;
}

bool WindowedPoseGraph::is_sliding() const {
  for (int i = 1; i < n_; ++i) {
    if (frame_ids_[i] != frame_ids_[i - 1] + 1) return false;
  }
  return true;
}

namespace {

// Anchoring the smallest member first removes cyclic rotations; the
// remaining members are permuted, which lists (len-1)! orderings per
// member set. Keeping only permutations whose first element is below the
// last drops one of the two traversal directions.
void collect_cycles(int n, int len, bool both_orientations,
                    std::vector<int>& combo, std::vector<Cycle>& out) {
  if (static_cast<int>(combo.size()) == len) {
    std::vector<int> rest(combo.begin() + 1, combo.end());
    do {
      if (!both_orientations && rest.front() > rest.back()) continue;
      Cycle c;
      c.reserve(len);
      c.push_back(combo.front());
      c.insert(c.end(), rest.begin(), rest.end());
      out.push_back(std::move(c));
    } while (std::next_permutation(rest.begin(), rest.end()));
    return;
  }
  const int start = combo.empty() ? 0 : combo.back() + 1;
  for (int v = start; v < n; ++v) {
    combo.push_back(v);
    collect_cycles(n, len, both_orientations, combo, out);
    combo.pop_back();
  }
}

}  // namespace

std::vector<Cycle> enumerate_cycles(int n, const CycleOptions& opts) {
  std::vector<Cycle> cycles;
  if (n < 3) return cycles;
  std::vector<int> combo;
  for (int len = 3; len <= std::min(opts.max_length, n); ++len) {
    collect_cycles(n, len, opts.both_orientations, combo, cycles);
  }
  return cycles;
}

double cycle_consistency_loss(const WindowedPoseGraph& g,
                              const CycleOptions& opts) {
  double loss = 0.0;
  for (const Cycle& c : enumerate_cycles(g.size(), opts)) {
    Pose product = g.edge(c[0], c[1]);
    for (size_t k = 1; k + 1 < c.size(); ++k) {
      product = product * g.edge(c[k], c[k + 1]);
    }
    product = product * g.edge(c.back(), c.front());
    const Eigen::Matrix<double, 3, 4> diff =
        product.matrix3x4() - Pose::identity().matrix3x4();
    loss += diff.cwiseAbs().sum();
  }
  return loss;
}

namespace {

std::vector<Pose> chained_view_poses(const WindowedPoseGraph& g) {
  std::vector<Pose> poses(g.size());
  poses[0] = Pose::identity();
  for (int k = 1; k < g.size(); ++k) {
    poses[k] = poses[k - 1] * g.edge(k - 1, k);
  }
  return poses;
}

}  // namespace

std::vector<Pose> relax_window(const WindowedPoseGraph& g) {
  return relax_window(g, LMConfig{});
}

std::vector<Pose> relax_window(const WindowedPoseGraph& g,
                               const LMConfig& config) {
  const int n = g.size();
  if (n == 2) {
    // Two views carry two estimates of the same motion; average them in
    // the twist domain.
    const Vector6 mean = 0.5 * (se3_log(g.edge(0, 1)).vector() +
                                se3_log(g.edge(1, 0).inverse()).vector());
    return {Pose::identity(), se3_exp(Twist::from_vector(mean))};
  }

  GlobalPoseGraph graph;
  for (const Pose& p : chained_view_poses(g)) graph.add_node(p);
  graph.fix_node(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      graph.add_constraint(
          Constraint{i, j, g.edge(i, j), ConstraintKind::local});
    }
  }
  const OptReport report = optimize(graph, config);
  if (report.reason == TerminationReason::numerical_failure) {
    throw numerical_error("relax_window: optimization failed");
  }
  std::vector<Pose> out(n);
  for (int k = 0; k < n; ++k) out[k] = graph.node(k);
  return out;
}

Pose interframe_motion(const WindowedPoseGraph& g) {
  const std::vector<NodeId>& ids = g.frame_ids();
  int newest = 0, second = -1;
  for (int k = 1; k < g.size(); ++k) {
    if (ids[k] > ids[newest]) newest = k;
  }
  for (int k = 0; k < g.size(); ++k) {
    if (k == newest) continue;
    if (second < 0 || ids[k] > ids[second]) second = k;
  }
  return g.edge(newest, second).inverse();
}

}  // namespace pgslam
