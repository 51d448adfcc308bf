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

#ifndef PGSLAM_OPTIMIZER_HPP_
#define PGSLAM_OPTIMIZER_HPP_

#include <Eigen/SparseCore>
#include <iosfwd>
#include <vector>

#include "pgslam/graph.hpp"
#include "pgslam/lie.hpp"

namespace pgslam {

/// Jacobians of the edge error with respect to right-multiplicative
/// pose perturbations. `first_order` truncates the inverse left Jacobian
/// of the log at I -/+ ad/2, which is exact in the limit of vanishing
/// errors; `full` uses the closed form and matches finite differences
/// for arbitrary error magnitudes.
enum class JacobianApprox { first_order, full };

struct LMConfig {
  int max_iterations = 100;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double absolute_chi2_tol = 1e-12;
  double relative_decrease_tol = 1e-9;
  double step_norm_tol = 1e-10;
  JacobianApprox jacobian = JacobianApprox::first_order;

  void validate() const;
};

enum class TerminationReason {
  converged_chi2,
  converged_step,
  max_iterations,
  numerical_failure,
};

const char* to_string(TerminationReason reason);

struct OptReport {
  int iterations = 0;
  double chi2_initial = 0.0;
  double chi2_final = 0.0;
  /// chi2 at the initial point followed by every accepted step;
  /// non-increasing by construction.
  std::vector<double> chi2_trace;
  TerminationReason reason = TerminationReason::converged_chi2;

  /// Plain CSV iteration log: `iteration,chi2` per line.
  void write_csv(std::ostream& out) const;
};

/// Levenberg-Marquardt minimization of the graph energy over the
/// non-fixed node poses. Updates are right-multiplicative
/// (T <- T * exp(delta)); fixed nodes are never touched. Requires a
/// connected graph with at least one fixed node. The graph is left at
/// the best accepted state even when the reason is numerical_failure.
OptReport optimize(GlobalPoseGraph& graph, const LMConfig& config = {});

struct JacobianPair {
  Matrix6 d_from;  // d e / d delta_from
  Matrix6 d_to;    // d e / d delta_to
};

JacobianPair analytic_jacobians(const GlobalPoseGraph& graph,
                                const Constraint& c,
                                JacobianApprox approx = JacobianApprox::full);

/// Central finite differences of the edge error over the 6 local
/// coordinates of each endpoint; the standard oracle for
/// analytic_jacobians.
JacobianPair numeric_jacobians(const GlobalPoseGraph& graph,
                               const Constraint& c, double h);

/// Solves (H + lambda * diag(H)) * delta = -b with a sparse symmetric
/// factorization (AMD-ordered LDLT). Throws numerical_error when the
/// factorization fails or produces non-finite values.
Eigen::VectorXd solve_normal_equations(const Eigen::SparseMatrix<double>& H,
                                       const Eigen::VectorXd& b,
                                       double lambda);

}  // namespace pgslam

#endif  // PGSLAM_OPTIMIZER_HPP_
