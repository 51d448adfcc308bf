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

#ifndef PGSLAM_EVAL_HPP_
#define PGSLAM_EVAL_HPP_

#include <iosfwd>
#include <map>
#include <utility>

#include "pgslam/lie.hpp"
#include "pgslam/sim.hpp"

namespace pgslam {

struct Alignment {
  Pose transform;
  /// Set when either point set is collinear within 1e-9 (the rotation
  /// about the common axis is then unobservable).
  bool degenerate = false;
};

/// Closed-form least-squares rigid alignment (no scaling): the pose G
/// minimizing sum |G * p_est - p_gt|^2 over matched positions.
Alignment align_se3(const Trajectory& est, const Trajectory& gt);

/// Root mean squared translational distance after applying `alignment`
/// to the estimate.
double rmse(const Trajectory& est, const Trajectory& gt,
            const Pose& alignment);

/// Relative errors over the standard 100..800 m segment lengths.
/// For every start frame (stride start_stride) and length L, the end
/// frame is the first whose accumulated ground-truth path length reaches
/// L; the error transform is delta_est^-1 * delta_gt between the two
/// subsequence motions. t errors are percent of L, r errors degrees per
/// 100 m; both pooled over all segments.
struct RelErrors {
  double t_rel_percent = 0.0;
  double r_rel_deg_per_100m = 0.0;
  /// length -> (t error %, r error deg/100m), only lengths with segments.
  std::map<int, std::pair<double, double>> per_length;
  int segment_count = 0;
  /// False when the trajectory is too short for any segment.
  bool valid = false;
};

RelErrors kitti_rel_errors(const Trajectory& est, const Trajectory& gt,
                           int start_stride = 1);

struct EvalReport {
  int frames = 0;
  double t_rel_percent = 0.0;
  double r_rel_deg_per_100m = 0.0;
  double rmse_m = 0.0;
  std::map<int, std::pair<double, double>> per_length;
  Alignment alignment;
  bool rel_valid = false;
};

/// Full evaluation of an estimate against ground truth of equal length.
EvalReport evaluate(const Trajectory& est, const Trajectory& gt);

void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_table(const EvalReport& report, std::ostream& out);

}  // namespace pgslam

#endif  // PGSLAM_EVAL_HPP_
