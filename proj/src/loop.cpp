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

#include "pgslam/loop.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "pgslam/errors.hpp"
#include "pgslam/text.hpp"

namespace pgslam {

namespace {
constexpr NodeId kNever = std::numeric_limits<NodeId>::min() / 2;
}

DetectionFilter::DetectionFilter(const LoopFilterConfig& config)
    : config_(config) {
  if (config_.min_consecutive < 1 || config_.match_band < 0 ||
      config_.cooldown_frames < 0) {
    throw std::invalid_argument("DetectionFilter: bad configuration");
  }
  reset();
}

void DetectionFilter::reset() {
  last_query_ = kNever;
  run_query_ = kNever;
  run_match_ = kNever;
  run_count_ = 0;
  last_emit_query_ = kNever;
  last_emit_match_ = kNever;
}

std::optional<LoopCandidate> DetectionFilter::feed(const LoopDetection& d) {
  if (d.match_frame >= d.query_frame) {
    throw std::invalid_argument("DetectionFilter: match frame " +
                                std::to_string(d.match_frame) +
                                " is not older than query frame " +
                                std::to_string(d.query_frame));
  }
  if (!(d.score >= 0.0 && d.score <= 1.0)) {
    throw std::invalid_argument("DetectionFilter: score outside [0, 1]");
  }
  if (last_query_ != kNever && d.query_frame < last_query_) {
    throw std::invalid_argument(
        "DetectionFilter: out-of-order query frame " +
        std::to_string(d.query_frame) + " after " +
        std::to_string(last_query_));
  }
  last_query_ = d.query_frame;

  if (run_count_ > 0 && d.query_frame == run_query_) {
    // Only the first detection of a query frame drives the run; later
    // candidates for the same frame are ignored.
    return std::nullopt;
  }
  if (run_count_ > 0 && d.query_frame - run_query_ <= 1 &&
      std::abs(d.match_frame - run_match_) <= config_.match_band) {
    ++run_count_;
    run_query_ = d.query_frame;
    run_match_ = d.match_frame;
  } else {
    run_query_ = d.query_frame;
    run_match_ = d.match_frame;
    run_count_ = 1;
  }

  if (run_count_ < config_.min_consecutive) return std::nullopt;

  const bool same_region =
      std::abs(run_match_ - last_emit_match_) <= config_.match_band;
  const bool cooling =
      run_query_ - last_emit_query_ < config_.cooldown_frames;
  if (same_region && cooling) return std::nullopt;

  last_emit_query_ = run_query_;
  last_emit_match_ = run_match_;
  return LoopCandidate{run_match_, run_query_, run_count_, false};
}

LoopCandidate verify_candidate(const LoopCandidate& c,
                               const LoopVerifier& verifier) {
  LoopCandidate out = c;
  out.verified = verifier(c);
  return out;
}

LoopVerifier always_accept_verifier() {
  return [](const LoopCandidate&) { return true; };
}

LoopVerifier proximity_verifier(std::vector<Pose> ground_truth,
                                double radius) {
  return [gt = std::move(ground_truth), radius](const LoopCandidate& c) {
    if (c.i < 0 || c.j < 0 || c.i >= static_cast<NodeId>(gt.size()) ||
        c.j >= static_cast<NodeId>(gt.size())) {
      return false;
    }
    return (gt[c.i].translation() - gt[c.j].translation()).norm() < radius;
  };
}

std::pair<std::vector<NodeId>, std::vector<NodeId>> crossed_windows(NodeId i,
                                                                    NodeId j,
                                                                    int n) {
  if (n < 2) throw std::invalid_argument("crossed_windows: n must be >= 2");
  if (i >= j) throw std::invalid_argument("crossed_windows: need i < j");
  if (i < n - 1) {
    throw std::invalid_argument(
        "crossed_windows: frame " + std::to_string(i) +
        " has insufficient history for window size " + std::to_string(n));
  }
  if (j - i < n) {
    throw std::invalid_argument(
        "crossed_windows: loop span shorter than the window size");
  }
  std::vector<NodeId> w1{i}, w2{j};
  for (int k = 1; k < n; ++k) {
    w1.push_back(j - k);
    w2.push_back(i - k);
  }
  return {w1, w2};
}

bool candidate_actionable(const LoopCandidate& c, int n) {
  return c.i >= n - 1 && c.j - c.i >= n;
}

std::vector<Constraint> build_loop_constraints(const WindowedPoseGraph& w1,
                                               const WindowedPoseGraph& w2) {
  std::vector<Constraint> out;
  for (const WindowedPoseGraph* w : {&w1, &w2}) {
    const std::vector<NodeId>& frames = w->frame_ids();
    for (int a = 0; a < w->size(); ++a) {
      for (int b = 0; b < w->size(); ++b) {
        if (a == b) continue;
        const ConstraintKind kind = (a == 0 || b == 0)
                                        ? ConstraintKind::loop
                                        : ConstraintKind::local;
        out.push_back(Constraint{frames[a], frames[b], w->edge(a, b), kind});
      }
    }
  }
  return out;
}

std::vector<LoopDetection> load_detection_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_detection_trace: cannot open '" + path + "'");
  std::vector<LoopDetection> trace;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> f = split_fields(line);
    if (f.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 3) {
      throw io_error(ctx + ": expected 'query match score'");
    }
    LoopDetection d;
    d.query_frame = static_cast<NodeId>(parse_int(f[0], ctx));
    d.match_frame = static_cast<NodeId>(parse_int(f[1], ctx));
    d.score = parse_double(f[2], ctx);
    trace.push_back(d);
  }
  return trace;
}

void save_detection_trace(const std::vector<LoopDetection>& trace,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_detection_trace: cannot open '" + path + "'");
  for (const LoopDetection& d : trace) {
    out << d.query_frame << ' ' << d.match_frame << ' ' << fmt17(d.score)
        << '\n';
  }
  if (!out) throw io_error("save_detection_trace: write failed");
}

void save_loop_log(const std::vector<std::pair<NodeId, NodeId>>& loops,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_loop_log: cannot open '" + path + "'");
  for (const auto& [i, j] : loops) {
    out << i << ' ' << j << '\n';
  }
  if (!out) throw io_error("save_loop_log: write failed");
}

}  // namespace pgslam
