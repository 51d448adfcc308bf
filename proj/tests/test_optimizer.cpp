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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pgslam/errors.hpp"
#include "pgslam/graph.hpp"
#include "pgslam/optimizer.hpp"

using namespace pgslam;

namespace {

GlobalPoseGraph random_constraint_graph(std::mt19937& rng) {
  GlobalPoseGraph g;
  g.add_node(oracle::random_pose(rng, 1.2, 1.5));
  g.add_node(oracle::random_pose(rng, 1.2, 1.5));
  g.add_constraint(Constraint{0, 1, oracle::random_pose(rng, 1.2, 1.5),
                              ConstraintKind::local});
  return g;
}

double relative_jacobian_gap(const JacobianPair& a, const JacobianPair& b) {
  const double scale = std::max(
      1.0, std::max(a.d_from.cwiseAbs().maxCoeff(),
                    a.d_to.cwiseAbs().maxCoeff()));
  return std::max((a.d_from - b.d_from).cwiseAbs().maxCoeff(),
                  (a.d_to - b.d_to).cwiseAbs().maxCoeff()) /
         scale;
}

// Chain of `count` nodes with window-style consistent constraints plus a
// closing loop edge, all derived from the returned ground truth.
std::pair<GlobalPoseGraph, std::vector<Pose>> consistent_graph(
    std::mt19937& rng, int count) {
  std::vector<Pose> truth{Pose::identity()};
  for (int k = 1; k < count; ++k) {
    truth.push_back(truth.back() * oracle::random_pose(rng, 0.35, 1.0));
  }
  GlobalPoseGraph g;
  for (const Pose& p : truth) g.add_node(p);
  g.fix_node(0);
  const auto add = [&](NodeId i, NodeId j, ConstraintKind kind) {
    g.add_constraint(
        Constraint{i, j, truth[i].inverse() * truth[j], kind});
  };
  for (int k = 0; k + 1 < count; ++k) {
    add(k, k + 1, ConstraintKind::local);
    add(k + 1, k, ConstraintKind::local);
  }
  for (int k = 0; k + 2 < count; ++k) {
    add(k, k + 2, ConstraintKind::local);
    add(k + 2, k, ConstraintKind::local);
  }
  add(0, count - 1, ConstraintKind::loop);
  return {std::move(g), std::move(truth)};
}

void perturb_free_nodes(GlobalPoseGraph& g, std::mt19937& rng,
                        double sigma_t, double sigma_r) {
  std::normal_distribution<double> nt(0.0, sigma_t);
  std::normal_distribution<double> nr(0.0, sigma_r);
  for (NodeId id = 0; id < g.node_count(); ++id) {
    if (g.is_fixed(id)) continue;
    Twist noise;
    noise.rho = Vector3(nt(rng), nt(rng), nt(rng));
    noise.phi = Vector3(nr(rng), nr(rng), nr(rng));
    g.set_node(id, g.node(id) * se3_exp(noise));
  }
}

double max_twist_gap(const GlobalPoseGraph& g, const std::vector<Pose>& truth) {
  double worst = 0.0;
  for (NodeId id = 0; id < g.node_count(); ++id) {
    worst = std::max(worst,
                     se3_log(truth[id].inverse() * g.node(id)).norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("analytic jacobians at a satisfied identity constraint") {
  GlobalPoseGraph g;
  g.add_node(Pose::identity());
  g.add_node(Pose::identity());
  const Constraint c{0, 1, Pose::identity(), ConstraintKind::local};

  for (JacobianApprox mode :
       {JacobianApprox::first_order, JacobianApprox::full}) {
    const JacobianPair jac = analytic_jacobians(g, c, mode);
    CHECK((jac.d_to - Matrix6::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((jac.d_from + Matrix6::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("full analytic jacobians match finite differences") {
  std::mt19937 rng(60);
  double worst = 0.0;
  for (int k = 0; k < 300; ++k) {
    const GlobalPoseGraph g = random_constraint_graph(rng);
    const Constraint& c = g.constraints().front();
    const JacobianPair analytic =
        analytic_jacobians(g, c, JacobianApprox::full);
    const JacobianPair numeric = numeric_jacobians(g, c, 1e-6);
    worst = std::max(worst, relative_jacobian_gap(analytic, numeric));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("swapping endpoint roles matches the numeric oracle too") {
  std::mt19937 rng(61);
  for (int k = 0; k < 50; ++k) {
    GlobalPoseGraph g;
    g.add_node(oracle::random_pose(rng, 1.0, 1.0));
    g.add_node(oracle::random_pose(rng, 1.0, 1.0));
    const Pose rel = oracle::random_pose(rng, 1.0, 1.0);
    const Constraint forward{0, 1, rel, ConstraintKind::local};
    const Constraint swapped{1, 0, rel.inverse(), ConstraintKind::local};
    for (const Constraint& c : {forward, swapped}) {
      CHECK(relative_jacobian_gap(
                analytic_jacobians(g, c, JacobianApprox::full),
                numeric_jacobians(g, c, 1e-6)) < 1e-5);
    }
  }
}

TEST_CASE("numeric jacobians converge at second order") {
  std::mt19937 rng(62);
  // Pick a configuration with O(1) error so truncation dominates.
  const GlobalPoseGraph g = random_constraint_graph(rng);
  const Constraint& c = g.constraints().front();
  const JacobianPair truth = analytic_jacobians(g, c, JacobianApprox::full);

  const double err_h = relative_jacobian_gap(
      truth, numeric_jacobians(g, c, 1e-3));
  const double err_h2 = relative_jacobian_gap(
      truth, numeric_jacobians(g, c, 5e-4));
  CHECK(err_h / err_h2 > 2.5);
  CHECK(err_h / err_h2 < 6.0);
}

TEST_CASE("first-order jacobians agree in the small-error limit") {
  std::mt19937 rng(63);
  for (int k = 0; k < 50; ++k) {
    GlobalPoseGraph g;
    const Pose a = oracle::random_pose(rng, 1.0, 1.0);
    const Pose rel = oracle::random_pose(rng, 1.0, 1.0);
    g.add_node(a);
    g.add_node(a * rel * se3_exp(oracle::random_twist(rng, 1e-4, 1e-4)));
    const Constraint c{0, 1, rel, ConstraintKind::local};
    CHECK(relative_jacobian_gap(
              analytic_jacobians(g, c, JacobianApprox::first_order),
              analytic_jacobians(g, c, JacobianApprox::full)) < 1e-7);
  }
}

TEST_CASE("solve_normal_equations on a diagonal system") {
  Eigen::SparseMatrix<double> h(4, 4);
  Eigen::VectorXd b(4);
  for (int k = 0; k < 4; ++k) {
    h.insert(k, k) = 2.0 + k;
    b(k) = 1.0 - 0.5 * k;
  }
  const Eigen::VectorXd d = solve_normal_equations(h, b, 0.0);
  for (int k = 0; k < 4; ++k) {
    CHECK(d(k) == doctest::Approx(-b(k) / (2.0 + k)).epsilon(1e-15));
  }
}

TEST_CASE("damping shrinks the step monotonically") {
  std::mt19937 rng(64);
  auto [g, truth] = consistent_graph(rng, 10);
  perturb_free_nodes(g, rng, 0.3, 0.08);

  // Assemble a Gauss-Newton system directly from the jacobians.
  const int dim = 6 * (g.node_count() - 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  for (const Constraint& c : g.constraints()) {
    const JacobianPair jac = analytic_jacobians(g, c, JacobianApprox::full);
    const Vector6 r = g.edge_error(c).vector();
    const int ci = c.from == 0 ? -1 : 6 * (c.from - 1);
    const int cj = c.to == 0 ? -1 : 6 * (c.to - 1);
    if (ci >= 0) {
      h.block<6, 6>(ci, ci) += jac.d_from.transpose() * jac.d_from;
      b.segment<6>(ci) += jac.d_from.transpose() * r;
    }
    if (cj >= 0) {
      h.block<6, 6>(cj, cj) += jac.d_to.transpose() * jac.d_to;
      b.segment<6>(cj) += jac.d_to.transpose() * r;
    }
    if (ci >= 0 && cj >= 0) {
      h.block<6, 6>(ci, cj) += jac.d_from.transpose() * jac.d_to;
      h.block<6, 6>(cj, ci) += jac.d_to.transpose() * jac.d_from;
    }
  }
  const Eigen::SparseMatrix<double> hs = h.sparseView();

  double previous = 1e300;
  for (double lambda : {1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3}) {
    const double norm = solve_normal_equations(hs, b, lambda).norm();
    CHECK(norm < previous);
    previous = norm;
  }
  CHECK(previous < 1e-2);  // lambda -> infinity drives the step to zero

  // Dense reference solve, independent elimination code.
  for (double lambda : {0.0, 1e-2, 1.0}) {
    Eigen::MatrixXd damped = h;
    for (int k = 0; k < dim; ++k) damped(k, k) *= (1.0 + lambda);
    const Eigen::VectorXd expected = oracle::dense_solve(damped, -b);
    const Eigen::VectorXd ours = solve_normal_equations(hs, b, lambda);
    CHECK((ours - expected).norm() < 1e-10 * std::max(1.0, expected.norm()));
  }
}

TEST_CASE("optimize returns immediately on a consistent initialization") {
  std::mt19937 rng(65);
  auto [g, truth] = consistent_graph(rng, 8);
  const OptReport report = optimize(g);
  CHECK(report.iterations == 0);
  CHECK(report.chi2_initial == report.chi2_final);
  CHECK(report.chi2_final < 1e-12);
  CHECK(report.reason == TerminationReason::converged_chi2);
}

TEST_CASE("optimize recovers a perturbed middle node exactly") {
  std::mt19937 rng(66);
  std::vector<Pose> truth{Pose::identity()};
  truth.push_back(truth.back() * oracle::random_pose(rng, 0.4, 1.0));
  truth.push_back(truth.back() * oracle::random_pose(rng, 0.4, 1.0));

  GlobalPoseGraph g;
  for (const Pose& p : truth) g.add_node(p);
  g.fix_node(0);
  g.fix_node(2);
  g.add_constraint(Constraint{0, 1, truth[0].inverse() * truth[1],
                              ConstraintKind::local});
  g.add_constraint(Constraint{1, 2, truth[1].inverse() * truth[2],
                              ConstraintKind::local});
  // Redundant consistent loop edge.
  g.add_constraint(Constraint{0, 2, truth[0].inverse() * truth[2],
                              ConstraintKind::loop});

  g.set_node(1, g.node(1) * se3_exp(Twist{Vector3(0.2, -0.1, 0.15),
                                          Vector3(0.05, 0.04, -0.06)}));
  const OptReport report = optimize(g);
  CHECK(report.chi2_final < 1e-16);
  CHECK(max_twist_gap(g, truth) < 1e-8);
}

TEST_CASE("optimize on a 50-node perturbed graph") {
  std::mt19937 rng(67);
  auto [g, truth] = consistent_graph(rng, 50);
  perturb_free_nodes(g, rng, 0.5, 0.1);
  CHECK(g.total_chi2() > 1.0);

  const OptReport report = optimize(g);
  CHECK(report.chi2_final < 1e-10);
  CHECK(max_twist_gap(g, truth) < 1e-6);
  CHECK(Pose::bitwise_equal(g.node(0), truth[0]));

  // Accepted-step trace strictly decreases.
  for (size_t k = 1; k < report.chi2_trace.size(); ++k) {
    CHECK(report.chi2_trace[k] < report.chi2_trace[k - 1]);
  }
}

TEST_CASE("fixed nodes never move") {
  std::mt19937 rng(68);
  auto [g, truth] = consistent_graph(rng, 12);
  g.fix_node(5);
  perturb_free_nodes(g, rng, 0.3, 0.08);
  const Pose fixed0 = g.node(0);
  const Pose fixed5 = g.node(5);
  optimize(g);
  CHECK(Pose::bitwise_equal(g.node(0), fixed0));
  CHECK(Pose::bitwise_equal(g.node(5), fixed5));
}

TEST_CASE("gauge equivariance") {
  std::mt19937 rng(69);
  auto [g, truth] = consistent_graph(rng, 10);
  std::mt19937 prng(70);
  perturb_free_nodes(g, prng, 0.3, 0.08);

  GlobalPoseGraph moved = g;
  const Pose gauge = oracle::random_pose(rng, 1.0, 5.0);
  for (NodeId id = 0; id < moved.node_count(); ++id) {
    moved.set_node(id, gauge * moved.node(id));
  }

  optimize(g);
  optimize(moved);
  for (NodeId id = 0; id < g.node_count(); ++id) {
    const double gap =
        se3_log((gauge * g.node(id)).inverse() * moved.node(id)).norm();
    CHECK(gap < 1e-8);
  }
}

TEST_CASE("result is invariant under constraint permutation") {
  std::mt19937 rng(71);
  auto [g, truth] = consistent_graph(rng, 10);
  std::mt19937 prng(72);
  perturb_free_nodes(g, prng, 0.3, 0.08);

  GlobalPoseGraph shuffled;
  for (NodeId id = 0; id < g.node_count(); ++id) shuffled.add_node(g.node(id));
  shuffled.fix_node(0);
  std::vector<Constraint> cs = g.constraints();
  std::shuffle(cs.begin(), cs.end(), rng);
  for (const Constraint& c : cs) shuffled.add_constraint(c);

  optimize(g);
  optimize(shuffled);
  for (NodeId id = 0; id < g.node_count(); ++id) {
    CHECK(se3_log(g.node(id).inverse() * shuffled.node(id)).norm() < 1e-8);
  }
}

TEST_CASE("optimizer cuts drift on a noisy loop-closed sequence") {
  std::mt19937 rng(73);
  std::vector<Pose> truth{Pose::identity()};
  for (int k = 1; k < 60; ++k) {
    truth.push_back(truth.back() *
                    Pose(so3_exp(Vector3(0, 0.1, 0)), Vector3(0, 0, 1)));
  }
  GlobalPoseGraph g;
  for (NodeId k = 0; k < 60; ++k) {
    g.add_node(Pose::identity());
  }
  g.fix_node(0);
  std::normal_distribution<double> nt(0.0, 0.05);
  std::normal_distribution<double> nr(0.0, 0.01);
  for (int k = 0; k + 1 < 60; ++k) {
    Twist noise{Vector3(nt(rng), nt(rng), nt(rng)),
                Vector3(nr(rng), nr(rng), nr(rng))};
    g.add_constraint(Constraint{k, k + 1,
                                (truth[k].inverse() * truth[k + 1]) *
                                    se3_exp(noise),
                                ConstraintKind::local});
  }
  // Exact loop constraints pinning the ends.
  g.add_constraint(Constraint{0, 59, truth[0].inverse() * truth[59],
                              ConstraintKind::loop});
  g.add_constraint(Constraint{0, 30, truth[0].inverse() * truth[30],
                              ConstraintKind::loop});
  g.initialize_chain();

  const double before = g.total_chi2();
  const OptReport report = optimize(g);
  CHECK(report.chi2_final < 0.01 * before);
}

TEST_CASE("unsolvable normal equations raise numerical_error") {
  Eigen::SparseMatrix<double> h(6, 6);  // all zero, singular at any damping
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(6);
  CHECK_THROWS_AS(solve_normal_equations(h, b, 1e-4), numerical_error);
}

TEST_CASE("optimize validates its preconditions") {
  GlobalPoseGraph no_fix;
  no_fix.add_node(Pose::identity());
  no_fix.add_node(Pose::identity());
  no_fix.add_constraint(Constraint{0, 1, Pose::identity(),
                                   ConstraintKind::local});
  CHECK_THROWS_AS(optimize(no_fix), std::invalid_argument);

  GlobalPoseGraph disconnected;
  disconnected.add_node(Pose::identity());
  disconnected.add_node(Pose::identity());
  disconnected.add_node(Pose::identity());
  disconnected.add_constraint(Constraint{0, 1, Pose::identity(),
                                         ConstraintKind::local});
  disconnected.fix_node(0);
  CHECK_THROWS_AS(optimize(disconnected), std::invalid_argument);

  LMConfig bad;
  bad.lambda_up = 0.5;
  GlobalPoseGraph ok;
  ok.add_node(Pose::identity());
  ok.fix_node(0);
  CHECK_THROWS_AS(optimize(ok, bad), std::invalid_argument);
}

TEST_CASE("report serializes as CSV") {
  std::mt19937 rng(74);
  auto [g, truth] = consistent_graph(rng, 6);
  perturb_free_nodes(g, rng, 0.2, 0.05);
  const OptReport report = optimize(g);
  std::ostringstream out;
  report.write_csv(out);
  const std::string csv = out.str();
  CHECK(csv.rfind("iteration,chi2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(report.chi2_trace.size()) + 1);
}
