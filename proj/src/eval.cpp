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

#include "pgslam/eval.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pgslam/text.hpp"

namespace pgslam {

namespace {

constexpr int kLengths[] = {100, 200, 300, 400, 500, 600, 700, 800};

void require_matched(const Trajectory& est, const Trajectory& gt,
                     const char* what) {
  if (est.size() != gt.size()) {
    throw std::invalid_argument(std::string(what) +
                                ": trajectory lengths differ (" +
                                std::to_string(est.size()) + " vs " +
                                std::to_string(gt.size()) + ")");
  }
  if (est.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty trajectories");
  }
}

bool collinear(const Trajectory& t, const Vector3& centroid) {
  Matrix3 cov = Matrix3::Zero();
  for (const Pose& p : t) {
    const Vector3 d = p.translation() - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  const double extent1 = std::sqrt(std::max(eig.eigenvalues()(2), 0.0) /
                                   static_cast<double>(t.size()));
  const double extent2 = std::sqrt(std::max(eig.eigenvalues()(1), 0.0) /
                                   static_cast<double>(t.size()));
  return extent2 < 1e-9 * std::max(1.0, extent1);
}

}  // namespace

Alignment align_se3(const Trajectory& est, const Trajectory& gt) {
  require_matched(est, gt, "align_se3");
  const double n = static_cast<double>(est.size());

  Vector3 c_est = Vector3::Zero(), c_gt = Vector3::Zero();
  for (size_t k = 0; k < est.size(); ++k) {
    c_est += est[k].translation();
    c_gt += gt[k].translation();
  }
  c_est /= n;
  c_gt /= n;

  Matrix3 w = Matrix3::Zero();
  for (size_t k = 0; k < est.size(); ++k) {
    w += (gt[k].translation() - c_gt) *
         (est[k].translation() - c_est).transpose();
  }

  Eigen::JacobiSVD<Matrix3> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 s = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    s(2, 2) = -1.0;
  }
  const Matrix3 r = svd.matrixU() * s * svd.matrixV().transpose();

  Alignment out;
  out.transform = Pose(Rotation::from_matrix(r, 1e-6), c_gt - r * c_est);
  out.degenerate = collinear(est, c_est) || collinear(gt, c_gt);
  return out;
}

double rmse(const Trajectory& est, const Trajectory& gt,
            const Pose& alignment) {
  require_matched(est, gt, "rmse");
  double sum = 0.0;
  for (size_t k = 0; k < est.size(); ++k) {
    sum += (alignment * est[k].translation() - gt[k].translation())
               .squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(est.size()));
}

RelErrors kitti_rel_errors(const Trajectory& est, const Trajectory& gt,
                           int start_stride) {
  require_matched(est, gt, "kitti_rel_errors");
  if (start_stride < 1) {
    throw std::invalid_argument("kitti_rel_errors: stride must be >= 1");
  }

  std::vector<double> dist{0.0};
  for (size_t k = 1; k < gt.size(); ++k) {
    dist.push_back(dist.back() + (gt[k].translation() -
                                  gt[k - 1].translation())
                                     .norm());
  }

  RelErrors out;
  std::map<int, std::pair<double, double>> sums;
  std::map<int, int> counts;

  for (size_t start = 0; start < gt.size(); start += start_stride) {
    for (int length : kLengths) {
      size_t end = start;
      while (end < gt.size() && dist[end] - dist[start] < length) ++end;
      if (end >= gt.size()) break;

      const Pose delta_gt = gt[start].inverse() * gt[end];
      const Pose delta_est = est[start].inverse() * est[end];
      const Pose error = delta_est.inverse() * delta_gt;

      const double t_err =
          error.translation().norm() / length * 100.0;  // percent of L
      // atan2 of the (sin, cos) pair stays exact near zero rotation,
      // where acos would amplify roundoff to ~1e-8.
      const Matrix3& re = error.rotation().matrix();
      const double sin_angle =
          std::min(unskew(0.5 * (re - re.transpose())).norm(), 1.0);
      const double cos_angle = std::clamp(0.5 * (re.trace() - 1.0), -1.0, 1.0);
      const double angle = std::atan2(sin_angle, cos_angle);
      const double r_err =
          angle * 180.0 / kPi / length * 100.0;  // deg per 100 m

      sums[length].first += t_err;
      sums[length].second += r_err;
      counts[length] += 1;
      out.t_rel_percent += t_err;
      out.r_rel_deg_per_100m += r_err;
      ++out.segment_count;
    }
  }

  if (out.segment_count == 0) {
    out.valid = false;
    return out;
  }
  out.valid = true;
  out.t_rel_percent /= out.segment_count;
  out.r_rel_deg_per_100m /= out.segment_count;
  for (const auto& [length, sum] : sums) {
    const int count = counts[length];
    out.per_length[length] = {sum.first / count, sum.second / count};
  }
  return out;
}

EvalReport evaluate(const Trajectory& est, const Trajectory& gt) {
  require_matched(est, gt, "evaluate");
  EvalReport report;
  report.frames = static_cast<int>(est.size());
  report.alignment = align_se3(est, gt);
  report.rmse_m = rmse(est, gt, report.alignment.transform);
  const RelErrors rel = kitti_rel_errors(est, gt);
  report.rel_valid = rel.valid;
  report.t_rel_percent = rel.t_rel_percent;
  report.r_rel_deg_per_100m = rel.r_rel_deg_per_100m;
  report.per_length = rel.per_length;
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "metric,value\n";
  out << "frames," << report.frames << '\n';
  out << "rmse_m," << fmt17(report.rmse_m) << '\n';
  out << "rel_valid," << (report.rel_valid ? 1 : 0) << '\n';
  out << "t_rel_percent," << fmt17(report.t_rel_percent) << '\n';
  out << "r_rel_deg_per_100m," << fmt17(report.r_rel_deg_per_100m) << '\n';
  out << "length_m,t_err_percent,r_err_deg_per_100m\n";
  for (const auto& [length, err] : report.per_length) {
    out << length << ',' << fmt17(err.first) << ',' << fmt17(err.second)
        << '\n';
  }
}

void write_report_table(const EvalReport& report, std::ostream& out) {
  char buf[160];
  out << "trajectory evaluation (" << report.frames << " frames)\n";
  std::snprintf(buf, sizeof(buf), "  rmse   %12.6f m\n", report.rmse_m);
  out << buf;
  if (report.rel_valid) {
    std::snprintf(buf, sizeof(buf), "  t_rel  %12.6f %%\n",
                  report.t_rel_percent);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  r_rel  %12.6f deg/100m\n",
                  report.r_rel_deg_per_100m);
    out << buf;
    out << "  length    t_err(%)    r_err(deg/100m)\n";
    for (const auto& [length, err] : report.per_length) {
      std::snprintf(buf, sizeof(buf), "  %6d  %10.6f  %12.6f\n", length,
                    err.first, err.second);
      out << buf;
    }
  } else {
    out << "  path shorter than 100 m, relative errors unavailable\n";
  }
  const Vector3& t = report.alignment.transform.translation();
  const Eigen::Quaterniond q = report.alignment.transform.rotation()
                                   .quaternion();
  std::snprintf(buf, sizeof(buf),
                "  alignment t [%g %g %g] q [%g %g %g %g]%s\n", t.x(), t.y(),
                t.z(), q.x(), q.y(), q.z(), q.w(),
                report.alignment.degenerate ? " (degenerate)" : "");
  out << buf;
}

}  // namespace pgslam
