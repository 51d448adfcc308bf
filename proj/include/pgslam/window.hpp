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

#ifndef PGSLAM_WINDOW_HPP_
#define PGSLAM_WINDOW_HPP_

#include <vector>

#include "pgslam/lie.hpp"

namespace pgslam {

struct LMConfig;

/// Dense graph frame index. Node ids in the global graph equal frame
/// indices, 0-based.
using NodeId = int;

/// One directed edge of a windowed pose graph, in window-local view
/// indices (0-based). `motion` is the relative pose T_ab with the
/// convention T_b = T_a * T_ab for consistent absolute poses.
struct WindowEdge {
  int from = 0;
  int to = 0;
  Pose motion;
};

/// The front-end output for one window: n views and all n*(n-1) directed
/// relative-motion edges. Immutable after construction.
class WindowedPoseGraph {
 public:
  /// Validates completeness: every ordered pair of distinct views has
  /// exactly one edge, n >= 2, frame ids distinct.
  static WindowedPoseGraph build(const std::vector<NodeId>& frame_ids,
                                 const std::vector<WindowEdge>& edges);

  int size() const { return n_; }
  int edge_count() const { return n_ * (n_ - 1); }
  const std::vector<NodeId>& frame_ids() const { return frame_ids_; }

  const Pose& edge(int from_view, int to_view) const;

  /// Copy with one edge replaced (used to model perturbed estimates).
  WindowedPoseGraph with_edge(int from_view, int to_view,
                              const Pose& motion) const;

  /// True when frame ids are consecutive and ascending (a sliding
  /// window); loop windows splice a distant frame and are not.
  bool is_sliding() const;

 private:
  WindowedPoseGraph() = default;
  int index(int from_view, int to_view) const;

  int n_ = 0;
  std::vector<NodeId> frame_ids_;
  std::vector<Pose> edges_;
};

/// A cycle is a sequence of distinct view indices, visited in order and
/// closed back to the first.
using Cycle = std::vector<int>;

/// Cycle enumeration is fixed to 3-cycles by default, deduplicated up to
/// cyclic rotation with both orientations kept. Longer cycles and
/// single-orientation enumeration are available for experimentation.
struct CycleOptions {
  int max_length = 3;
  bool both_orientations = true;
};

/// All cycles of length 3..max_length over n views, each class listed
/// once with its smallest view index first. n < 3 yields an empty set.
std::vector<Cycle> enumerate_cycles(int n, const CycleOptions& opts = {});

/// Sum over the cycle set of the elementwise l1 norm of
/// (product of cycle edges - identity), taken over the top 3x4 block.
/// Zero exactly when every cycle product is the identity. Each product
/// starts at the cycle's smallest view index; relabeling views therefore
/// conjugates the products and preserves the value exactly only on the
/// zero set, to first order elsewhere.
double cycle_consistency_loss(const WindowedPoseGraph& g,
                              const CycleOptions& opts = {});

/// Estimates per-view absolute poses (first view = identity) that
/// minimize the edge energy of the window, starting from the chained
/// initialization. Never returns a configuration with higher energy than
/// the chain. For n == 2 the two single-edge estimates are averaged in
/// the twist domain instead.
std::vector<Pose> relax_window(const WindowedPoseGraph& g);
std::vector<Pose> relax_window(const WindowedPoseGraph& g,
                               const LMConfig& config);

/// Forward motion between the window's two most recent frames, taken as
/// the inverse of the stored (newest -> second newest) edge. Chaining
/// T_k = T_{k-1} * interframe_motion(window_k) extends a trajectory.
Pose interframe_motion(const WindowedPoseGraph& g);

}  // namespace pgslam

#endif  // PGSLAM_WINDOW_HPP_
