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

#ifndef PGSLAM_LOOP_HPP_
#define PGSLAM_LOOP_HPP_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgslam/graph.hpp"
#include "pgslam/lie.hpp"
#include "pgslam/window.hpp"

namespace pgslam {

/// One place-recognition hit: the current frame matched an earlier one.
struct LoopDetection {
  NodeId query_frame = 0;
  NodeId match_frame = 0;
  double score = 0.0;  // similarity in [0, 1]
};

struct LoopCandidate {
  NodeId i = 0;  // earlier frame
  NodeId j = 0;  // later frame
  int consecutive_count = 0;
  bool verified = false;
};

struct LoopFilterConfig {
  /// A candidate needs at least this many consecutive detections.
  int min_consecutive = 6;
  /// Detections are consecutive when successive query frames differ by
  /// at most 1 and match frames stay within this band.
  int match_band = 10;
  /// After an accepted candidate, candidates for the same match region
  /// are suppressed for this many query frames.
  int cooldown_frames = 50;
};

/// Streaming filter over a detection trace. Detections must arrive in
/// non-decreasing query-frame order; deterministic given a trace.
class DetectionFilter {
 public:
  explicit DetectionFilter(const LoopFilterConfig& config = {});

  /// Returns a candidate when this detection completes a qualifying run.
  std::optional<LoopCandidate> feed(const LoopDetection& d);

  void reset();

 private:
  LoopFilterConfig config_;
  NodeId last_query_;
  NodeId run_query_;
  NodeId run_match_;
  int run_count_;
  NodeId last_emit_query_;
  NodeId last_emit_match_;
};

using LoopVerifier = std::function<bool(const LoopCandidate&)>;

/// Returns the candidate with `verified` set to the verifier's verdict.
LoopCandidate verify_candidate(const LoopCandidate& c,
                               const LoopVerifier& verifier);

LoopVerifier always_accept_verifier();

/// Ground-truth oracle: accepts when the true positions of the two
/// frames are within `radius` meters.
LoopVerifier proximity_verifier(std::vector<Pose> ground_truth,
                                double radius);

/// The two estimation windows for a loop between frames i < j:
/// <i, j-1, ..., j-n+1> and <j, i-1, ..., i-n+1>. Each splices one
/// distant frame (listed first) into the other end's neighborhood.
/// Requires i >= n-1 and j - i >= n.
std::pair<std::vector<NodeId>, std::vector<NodeId>> crossed_windows(NodeId i,
                                                                    NodeId j,
                                                                    int n);

/// Whether crossed windows can be formed for this candidate.
bool candidate_actionable(const LoopCandidate& c, int n);

/// Converts the two crossed windows into graph constraints: edges
/// incident to each window's spliced frame become loop constraints, the
/// remaining intra-neighborhood edges local ones.
std::vector<Constraint> build_loop_constraints(const WindowedPoseGraph& w1,
                                               const WindowedPoseGraph& w2);

/// Detection trace files: one `query_frame match_frame score` line per
/// detection.
std::vector<LoopDetection> load_detection_trace(const std::string& path);
void save_detection_trace(const std::vector<LoopDetection>& trace,
                          const std::string& path);

/// Accepted-loop log: one `i j` line per closed loop.
void save_loop_log(const std::vector<std::pair<NodeId, NodeId>>& loops,
                   const std::string& path);

}  // namespace pgslam

#endif  // PGSLAM_LOOP_HPP_
