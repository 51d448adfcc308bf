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

#include "pgslam/optimizer.hpp"

#include <Eigen/SparseCholesky>
#include <ostream>
#include <stdexcept>

#include "pgslam/errors.hpp"

namespace pgslam {

namespace {

constexpr double kLambdaMax = 1e32;
constexpr double kLambdaMin = 1e-18;

Twist edge_error_between(const Pose& from, const Pose& to,
                         const Pose& relative) {
  return se3_log(relative.inverse() * from.inverse() * to);
}

}  // namespace

void LMConfig::validate() const {
  if (max_iterations <= 0 || initial_lambda <= 0.0 || lambda_up <= 1.0 ||
      lambda_down <= 1.0 || absolute_chi2_tol <= 0.0 ||
      relative_decrease_tol <= 0.0 || step_norm_tol <= 0.0) {
    throw std::invalid_argument("LMConfig: all parameters must be positive, "
                                "lambda factors above 1");
  }
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::converged_chi2:
      return "converged_chi2";
    case TerminationReason::converged_step:
      return "converged_step";
    case TerminationReason::max_iterations:
      return "max_iterations";
    case TerminationReason::numerical_failure:
      return "numerical_failure";
  }
  return "unknown";
}

void OptReport::write_csv(std::ostream& out) const {
  out << "iteration,chi2\n";
  for (size_t i = 0; i < chi2_trace.size(); ++i) {
    out << i << ',' << chi2_trace[i] << '\n';
  }
}

JacobianPair analytic_jacobians(const GlobalPoseGraph& graph,
                                const Constraint& c, JacobianApprox approx) {
  const Twist e = graph.edge_error(c);
  Matrix6 jl_inv_pos, jl_inv_neg;
  if (approx == JacobianApprox::full) {
    jl_inv_pos = se3_left_jacobian_inverse(e);
    jl_inv_neg = se3_left_jacobian_inverse(e.scaled(-1.0));
  } else {
    const Matrix6 half_ad = 0.5 * se3_ad(e);
    jl_inv_pos = Matrix6::Identity() - half_ad;
    jl_inv_neg = Matrix6::Identity() + half_ad;
  }
  JacobianPair out;
  out.d_to = jl_inv_neg;  // Jr^-1(e) = Jl^-1(-e)
  out.d_from = -jl_inv_pos * c.relative.inverse().adjoint();
  return out;
}

JacobianPair numeric_jacobians(const GlobalPoseGraph& graph,
                               const Constraint& c, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("numeric_jacobians: h must be > 0");
  }
  const Pose from = graph.node(c.from);
  const Pose to = graph.node(c.to);
  JacobianPair out;
  for (int k = 0; k < 6; ++k) {
    Vector6 delta = Vector6::Zero();
    delta[k] = h;
    const Pose step = se3_exp(Twist::from_vector(delta));
    const Pose back = se3_exp(Twist::from_vector(-delta));
    out.d_from.col(k) = (edge_error_between(from * step, to, c.relative)
                             .vector() -
                         edge_error_between(from * back, to, c.relative)
                             .vector()) /
                        (2.0 * h);
    out.d_to.col(k) = (edge_error_between(from, to * step, c.relative)
                           .vector() -
                       edge_error_between(from, to * back, c.relative)
                           .vector()) /
                      (2.0 * h);
  }
  return out;
}

Eigen::VectorXd solve_normal_equations(const Eigen::SparseMatrix<double>& H,
                                       const Eigen::VectorXd& b,
                                       double lambda) {
  Eigen::SparseMatrix<double> damped = H;
  for (int k = 0; k < damped.outerSize(); ++k) {
    damped.coeffRef(k, k) *= (1.0 + lambda);
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(damped);
  if (solver.info() != Eigen::Success) {
    throw numerical_error("solve_normal_equations: factorization failed");
  }
  const Eigen::VectorXd step = solver.solve(-b);
  if (solver.info() != Eigen::Success || !step.allFinite()) {
    throw numerical_error("solve_normal_equations: solve failed");
  }
  return step;
}

namespace {

struct LinearSystem {
  Eigen::SparseMatrix<double> hessian;
  Eigen::VectorXd gradient;
};

// Gauss-Newton system over the non-fixed nodes. `column` maps node id to
// its first coordinate, -1 for fixed nodes.
LinearSystem build_system(const GlobalPoseGraph& graph,
                          const std::vector<int>& column, int dimension,
                          JacobianApprox approx) {
  LinearSystem sys;
  sys.gradient = Eigen::VectorXd::Zero(dimension);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.constraints().size() * 144);

  for (const Constraint& c : graph.constraints()) {
    const double w = graph.weights().of(c.kind);
    const Vector6 r = graph.edge_error(c).vector();
    const JacobianPair jac = analytic_jacobians(graph, c, approx);
    const int ci = column[c.from];
    const int cj = column[c.to];

    const auto add_block = [&](int row, int col, const Matrix6& m) {
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          triplets.emplace_back(row + a, col + b, w * m(a, b));
        }
      }
    };

    if (ci >= 0) {
      add_block(ci, ci, jac.d_from.transpose() * jac.d_from);
      sys.gradient.segment<6>(ci) += w * jac.d_from.transpose() * r;
    }
    if (cj >= 0) {
      add_block(cj, cj, jac.d_to.transpose() * jac.d_to);
      sys.gradient.segment<6>(cj) += w * jac.d_to.transpose() * r;
    }
    if (ci >= 0 && cj >= 0) {
      const Matrix6 cross = jac.d_from.transpose() * jac.d_to;
      add_block(ci, cj, cross);
      add_block(cj, ci, cross.transpose());
    }
  }

  sys.hessian.resize(dimension, dimension);
  sys.hessian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

std::vector<Pose> stepped_poses(const GlobalPoseGraph& graph,
                                const std::vector<int>& column,
                                const Eigen::VectorXd& delta) {
  std::vector<Pose> poses(graph.node_count());
  for (NodeId id = 0; id < graph.node_count(); ++id) {
    if (column[id] < 0) {
      poses[id] = graph.node(id);
    } else {
      poses[id] =
          (graph.node(id) *
           se3_exp(Twist::from_vector(delta.segment<6>(column[id]))))
              .renormalized();
    }
  }
  return poses;
}

double chi2_of(const GlobalPoseGraph& graph, const std::vector<Pose>& poses) {
  double chi2 = 0.0;
  for (const Constraint& c : graph.constraints()) {
    chi2 += graph.weights().of(c.kind) *
            edge_error_between(poses[c.from], poses[c.to], c.relative)
                .squared_norm();
  }
  return chi2;
}

}  // namespace

OptReport optimize(GlobalPoseGraph& graph, const LMConfig& config) {
  config.validate();
  if (graph.fixed_nodes().empty()) {
    throw std::invalid_argument("optimize: no fixed node (gauge is free)");
  }
  if (!graph.is_connected()) {
    throw std::invalid_argument("optimize: graph is not connected");
  }

  std::vector<int> column(graph.node_count(), -1);
  int dimension = 0;
  for (NodeId id = 0; id < graph.node_count(); ++id) {
    if (!graph.is_fixed(id)) {
      column[id] = dimension;
      dimension += 6;
    }
  }

  OptReport report;
  double chi2 = graph.total_chi2();
  report.chi2_initial = chi2;
  report.chi2_trace.push_back(chi2);

  if (dimension == 0 || chi2 < config.absolute_chi2_tol) {
    report.chi2_final = chi2;
    report.reason = TerminationReason::converged_chi2;
    return report;
  }

  double lambda = config.initial_lambda;
  bool relinearize = true;
  LinearSystem sys;
  report.reason = TerminationReason::max_iterations;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    report.iterations = iter + 1;
    if (relinearize) {
      sys = build_system(graph, column, dimension, config.jacobian);
      relinearize = false;
    }

    Eigen::VectorXd delta;
    try {
      delta = solve_normal_equations(sys.hessian, sys.gradient, lambda);
    } catch (const numerical_error&) {
      lambda *= config.lambda_up;
      if (lambda > kLambdaMax) {
        report.reason = TerminationReason::numerical_failure;
        break;
      }
      continue;
    }

    const std::vector<Pose> candidate = stepped_poses(graph, column, delta);
    const double new_chi2 = chi2_of(graph, candidate);

    if (new_chi2 < chi2) {
      for (NodeId id = 0; id < graph.node_count(); ++id) {
        if (column[id] >= 0) graph.set_node(id, candidate[id]);
      }
      const double decrease = (chi2 - new_chi2) / chi2;
      chi2 = new_chi2;
      report.chi2_trace.push_back(chi2);
      lambda = std::max(lambda / config.lambda_down, kLambdaMin);
      relinearize = true;
      if (chi2 < config.absolute_chi2_tol ||
          decrease < config.relative_decrease_tol) {
        report.reason = TerminationReason::converged_chi2;
        break;
      }
      if (delta.norm() < config.step_norm_tol) {
        report.reason = TerminationReason::converged_step;
        break;
      }
    } else {
      if (delta.norm() < config.step_norm_tol) {
        report.reason = TerminationReason::converged_step;
        break;
      }
      lambda *= config.lambda_up;
      if (lambda > kLambdaMax) {
        report.reason = TerminationReason::numerical_failure;
        break;
      }
    }
  }

  report.chi2_final = chi2;
  return report;
}

}  // namespace pgslam
