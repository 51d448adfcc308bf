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

#ifndef PGSLAM_GRAPH_HPP_
#define PGSLAM_GRAPH_HPP_

#include <set>
#include <string>
#include <vector>

#include "pgslam/lie.hpp"
#include "pgslam/window.hpp"

namespace pgslam {

enum class ConstraintKind { local, loop };

/// A relative-pose measurement between two nodes. Satisfied when
/// T_to = T_from * relative.
struct Constraint {
  NodeId from = 0;
  NodeId to = 0;
  Pose relative;
  ConstraintKind kind = ConstraintKind::local;
};

/// Scalar weights applied per constraint kind in the energy. The energy
/// is an unweighted sum by default.
struct KindWeights {
  double local = 1.0;
  double loop = 1.0;

  double of(ConstraintKind kind) const {
    return kind == ConstraintKind::local ? local : loop;
  }
};

/// The back-end's global pose graph: one absolute pose per frame (ids
/// dense from 0), relative 6DoF constraints, and a set of gauge-fixed
/// nodes. Multi-edges are allowed; the energy simply sums them.
///
/// Mutation is single-writer; read-only evaluation may run concurrently
/// between mutations.
class GlobalPoseGraph {
 public:
  NodeId add_node(const Pose& pose);
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Pose& node(NodeId id) const;
  void set_node(NodeId id, const Pose& pose);

  void fix_node(NodeId id);
  bool is_fixed(NodeId id) const { return fixed_.count(id) > 0; }
  const std::set<NodeId>& fixed_nodes() const { return fixed_; }

  void add_constraint(const Constraint& c);

  /// Adds the constraint unless one with the same endpoints, kind and
  /// bit-identical relative pose exists. Returns whether it was added.
  /// Re-estimates of the same pair that differ at all are kept as
  /// multi-edges.
  bool add_constraint_unless_duplicate(const Constraint& c);

  const std::vector<Constraint>& constraints() const { return constraints_; }
  int node_degree(NodeId id) const;

  /// Inserts a front-end window. The first window on an empty graph
  /// bootstraps all its frames (they must start at 0); afterwards only
  /// the single next frame may be new, and a gap in frame ids is an
  /// error. New nodes are initialized by chaining the consecutive-frame
  /// window edge onto the preceding node. Window edges become local
  /// constraints, with exact duplicates from the sliding overlap
  /// skipped.
  void append_window(const WindowedPoseGraph& w);

  /// Appends loop constraints verbatim (multiset semantics). Node poses
  /// and the fixed set are untouched. Every constraint must have
  /// kind == loop and existing endpoints.
  void add_loop_constraints(const std::vector<Constraint>& loops);

  /// e = log(T_rel^-1 * T_from^-1 * T_to) under the current node poses.
  Twist edge_error(const Constraint& c) const;

  /// Sum of weighted squared edge-error norms over all constraints.
  double total_chi2() const;

  /// Re-initializes every node after the first by chaining the first
  /// stored (k-1 -> k) constraint. Throws when a consecutive-frame
  /// constraint is missing. Node 0 keeps its current pose.
  void initialize_chain();

  /// Connectivity over constraint endpoints, ignoring direction.
  bool is_connected() const;

  KindWeights& weights() { return weights_; }
  const KindWeights& weights() const { return weights_; }

 private:
  void check_node(NodeId id, const char* what) const;

  std::vector<Pose> nodes_;
  std::vector<Constraint> constraints_;
  std::set<NodeId> fixed_;
  KindWeights weights_;
};

/// g2o-style text format:
///   VERTEX_SE3:QUAT id tx ty tz qx qy qz qw
///   EDGE_SE3:QUAT from to tx ty tz qx qy qz qw i11 ... i66
///   FIX id
/// Information matrices are written as identity (21 upper-triangular
/// entries) and ignored on load; the text format does not carry
/// constraint kinds, so loaded edges are local. Numbers use 17
/// significant digits, making load -> save -> load bit-faithful.
void save_g2o(const GlobalPoseGraph& graph, const std::string& path);
GlobalPoseGraph load_g2o(const std::string& path);

}  // namespace pgslam

#endif  // PGSLAM_GRAPH_HPP_
