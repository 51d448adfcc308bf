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
#include <array>
#include <random>

#include "oracles.hpp"
#include "pgslam/graph.hpp"
#include "pgslam/optimizer.hpp"
#include "pgslam/window.hpp"

using namespace pgslam;

namespace {

// Consistent window induced by absolute poses: edge(i, j) = T_i^-1 T_j.
WindowedPoseGraph window_from_absolute(const std::vector<Pose>& absolute,
                                       std::vector<NodeId> frames = {}) {
  const int n = static_cast<int>(absolute.size());
  if (frames.empty()) {
    for (int k = 0; k < n; ++k) frames.push_back(k);
  }
  std::vector<WindowEdge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        edges.push_back(WindowEdge{i, j, absolute[i].inverse() * absolute[j]});
      }
    }
  }
  return WindowedPoseGraph::build(frames, edges);
}

std::vector<Pose> random_absolute(std::mt19937& rng, int n) {
  std::vector<Pose> poses{Pose::identity()};
  for (int k = 1; k < n; ++k) {
    poses.push_back(poses.back() * oracle::random_pose(rng, 0.8, 1.0));
  }
  return poses;
}

WindowedPoseGraph random_inconsistent_window(std::mt19937& rng, int n) {
  std::vector<WindowEdge> edges;
  std::vector<NodeId> frames;
  for (int k = 0; k < n; ++k) frames.push_back(k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        edges.push_back(WindowEdge{i, j, oracle::random_pose(rng, 0.7, 1.0)});
      }
    }
  }
  return WindowedPoseGraph::build(frames, edges);
}

// Independent reimplementation over raw 4x4 arrays, 3-cycles with both
// orientations.
double brute_force_cycle_loss(const WindowedPoseGraph& g) {
  const int n = g.size();
  double loss = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        for (const auto& cyc :
             {std::array<int, 3>{a, b, c}, std::array<int, 3>{a, c, b}}) {
          double p[4][4], q[4][4];
          const Matrix4 e0 = g.edge(cyc[0], cyc[1]).matrix();
          const Matrix4 e1 = g.edge(cyc[1], cyc[2]).matrix();
          const Matrix4 e2 = g.edge(cyc[2], cyc[0]).matrix();
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
              p[i][j] = 0;
              for (int k = 0; k < 4; ++k) p[i][j] += e0(i, k) * e1(k, j);
            }
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
              q[i][j] = 0;
              for (int k = 0; k < 4; ++k) q[i][j] += p[i][k] * e2(k, j);
            }
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j)
              loss += std::abs(q[i][j] - (i == j ? 1.0 : 0.0));
        }
      }
    }
  }
  return loss;
}

}  // namespace

TEST_CASE("build_window validates the edge set") {
  std::mt19937 rng(30);
  const std::vector<Pose> abs3 = random_absolute(rng, 3);
  CHECK(window_from_absolute(abs3).size() == 3);
  CHECK(window_from_absolute(abs3).edge_count() == 6);

  // Missing one edge.
  std::vector<WindowEdge> edges;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j && !(i == 2 && j == 1)) {
        edges.push_back(WindowEdge{i, j, Pose::identity()});
      }
    }
  }
  CHECK_THROWS_AS(WindowedPoseGraph::build({0, 1, 2}, edges),
                  std::invalid_argument);

  // Duplicate edge.
  edges.push_back(WindowEdge{0, 1, Pose::identity()});
  CHECK_THROWS_AS(WindowedPoseGraph::build({0, 1, 2}, edges),
                  std::invalid_argument);

  // Minimal window.
  const WindowedPoseGraph pair = WindowedPoseGraph::build(
      {4, 5}, {WindowEdge{0, 1, Pose::identity()},
               WindowEdge{1, 0, Pose::identity()}});
  CHECK(pair.size() == 2);
  CHECK(pair.edge_count() == 2);

  CHECK_THROWS_AS(WindowedPoseGraph::build({7}, {}), std::invalid_argument);
  CHECK_THROWS_AS(
      WindowedPoseGraph::build({3, 3}, {WindowEdge{0, 1, Pose::identity()},
                                        WindowEdge{1, 0, Pose::identity()}}),
      std::invalid_argument);
}

TEST_CASE("enumerate_cycles counts and contents") {
  CHECK(enumerate_cycles(2).empty());

  const std::vector<Cycle> three = enumerate_cycles(3);
  REQUIRE(three.size() == 2);
  CHECK(three[0] == Cycle{0, 1, 2});
  CHECK(three[1] == Cycle{0, 2, 1});

  CHECK(enumerate_cycles(4).size() == 8);

  CHECK(enumerate_cycles(3, CycleOptions{3, false}).size() == 1);
  CHECK(enumerate_cycles(4, CycleOptions{3, false}).size() == 4);

  // Length-4 cycles add 3! orderings per 4-subset, half of that without
  // orientations.
  CHECK(enumerate_cycles(4, CycleOptions{4, true}).size() == 8 + 6);
  CHECK(enumerate_cycles(4, CycleOptions{4, false}).size() == 4 + 3);
}

TEST_CASE("cycle loss vanishes on consistent windows") {
  std::mt19937 rng(31);
  for (int n : {3, 4, 5}) {
    const WindowedPoseGraph g = window_from_absolute(random_absolute(rng, n));
    CHECK(cycle_consistency_loss(g) < 1e-12);
  }
}

TEST_CASE("single perturbed pair yields exactly 2 epsilon") {
  std::mt19937 rng(32);
  const WindowedPoseGraph g = window_from_absolute(random_absolute(rng, 3));
  const double eps = 1e-3;

  // Perturb the undirected pair (0, 1): the forward edge gains a
  // translation offset, the reverse edge stays its exact inverse. The
  // pair then appears once in each of the two cycles and the rotation
  // blocks cancel.
  const Pose forward = g.edge(0, 1);
  const Pose perturbed(forward.rotation(),
                       forward.translation() + Vector3(eps, 0, 0));
  const WindowedPoseGraph noisy =
      g.with_edge(0, 1, perturbed).with_edge(1, 0, perturbed.inverse());

  CHECK(std::abs(cycle_consistency_loss(noisy) - 2.0 * eps) < 1e-12);
}

TEST_CASE("cycle loss matches brute force on random windows") {
  std::mt19937 rng(33);
  for (int n : {3, 4, 5}) {
    for (int k = 0; k < 20; ++k) {
      const WindowedPoseGraph g = random_inconsistent_window(rng, n);
      const double ours = cycle_consistency_loss(g);
      CHECK(ours >= 0.0);
      CHECK(ours == doctest::Approx(brute_force_cycle_loss(g)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cycle loss under consistent view relabeling") {
  std::mt19937 rng(34);
  const int n = 4;
  const std::vector<int> perm{2, 0, 3, 1};
  const auto relabel = [&](const WindowedPoseGraph& g) {
    std::vector<WindowEdge> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) {
          edges.push_back(WindowEdge{perm[i], perm[j], g.edge(i, j)});
        }
      }
    }
    return WindowedPoseGraph::build(g.frame_ids(), edges);
  };

  // The zero set is preserved exactly.
  const WindowedPoseGraph consistent =
      window_from_absolute(random_absolute(rng, n));
  CHECK(cycle_consistency_loss(relabel(consistent)) < 1e-12);

  // Each cycle product is evaluated from the class's smallest view, so a
  // relabeling conjugates the products; for near-consistent windows the
  // value is preserved to first order.
  WindowedPoseGraph noisy = consistent;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      noisy = noisy.with_edge(
          i, j,
          noisy.edge(i, j) * se3_exp(oracle::random_twist(rng, 1e-4, 1e-4)));
    }
  }
  const double base = cycle_consistency_loss(noisy);
  const double moved = cycle_consistency_loss(relabel(noisy));
  CHECK(base > 0.0);
  CHECK(std::abs(moved - base) < 0.5 * base);
}

TEST_CASE("relax_window reproduces a consistent window exactly") {
  std::mt19937 rng(35);
  const std::vector<Pose> abs = random_absolute(rng, 3);
  const WindowedPoseGraph g = window_from_absolute(abs);
  const std::vector<Pose> relaxed = relax_window(g);

  REQUIRE(relaxed.size() == 3);
  CHECK((relaxed[0].matrix() - Matrix4::Identity()).cwiseAbs().maxCoeff() ==
        0.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(((relaxed[i].inverse() * relaxed[j]).matrix() -
             g.edge(i, j).matrix())
                .cwiseAbs()
                .maxCoeff() < 1e-9);
    }
  }

  GlobalPoseGraph check;
  for (int k = 0; k < 3; ++k) check.add_node(relaxed[k]);
  check.fix_node(0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        check.add_constraint(
            Constraint{i, j, g.edge(i, j), ConstraintKind::local});
  CHECK(check.total_chi2() < 1e-18);
}

TEST_CASE("relax_window beats chaining through a corrupted edge") {
  std::mt19937 rng(36);
  const std::vector<Pose> abs = random_absolute(rng, 3);
  WindowedPoseGraph g = window_from_absolute(abs);

  // Corrupt exactly the edge that chained initialization walks through.
  const Pose bump =
      se3_exp(Twist{Vector3(0.3, -0.2, 0.25), Vector3(0.04, -0.03, 0.05)});
  g = g.with_edge(0, 1, g.edge(0, 1) * bump);

  std::vector<Pose> chained{Pose::identity()};
  chained.push_back(chained[0] * g.edge(0, 1));
  chained.push_back(chained[1] * g.edge(1, 2));

  const std::vector<Pose> relaxed = relax_window(g);

  const auto distance_to_truth = [&](const std::vector<Pose>& poses) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      sum += se3_log(abs[k].inverse() * poses[k]).norm();
    }
    return sum;
  };
  CHECK(distance_to_truth(relaxed) < distance_to_truth(chained));
}

TEST_CASE("relax_window n=2 averages the two estimates in twist space") {
  std::mt19937 rng(37);
  const Pose forward = oracle::random_pose(rng, 0.8, 1.0);
  const Pose backward_inv = oracle::random_pose(rng, 0.8, 1.0);

  const WindowedPoseGraph g = WindowedPoseGraph::build(
      {0, 1}, {WindowEdge{0, 1, forward},
               WindowEdge{1, 0, backward_inv.inverse()}});
  const std::vector<Pose> relaxed = relax_window(g);

  const Pose expected = se3_exp(Twist::from_vector(
      0.5 * (se3_log(forward).vector() + se3_log(backward_inv).vector())));
  REQUIRE(relaxed.size() == 2);
  CHECK((relaxed[0].matrix() - Matrix4::Identity()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((relaxed[1].matrix() - expected.matrix()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("relax_window never increases the window energy") {
  std::mt19937 rng(38);
  for (int k = 0; k < 10; ++k) {
    WindowedPoseGraph g = window_from_absolute(random_absolute(rng, 3));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const Twist noise = oracle::random_twist(rng, 0.05, 0.05);
        g = g.with_edge(i, j, g.edge(i, j) * se3_exp(noise));
      }
    }

    const auto chi2_for = [&](const std::vector<Pose>& poses) {
      GlobalPoseGraph graph;
      for (const Pose& p : poses) graph.add_node(p);
      graph.fix_node(0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (i != j)
            graph.add_constraint(
                Constraint{i, j, g.edge(i, j), ConstraintKind::local});
      return graph.total_chi2();
    };

    std::vector<Pose> chained{Pose::identity()};
    chained.push_back(chained[0] * g.edge(0, 1));
    chained.push_back(chained[1] * g.edge(1, 2));

    CHECK(chi2_for(relax_window(g)) <= chi2_for(chained) + 1e-15);
  }
}

TEST_CASE("interframe_motion is a pure selection") {
  std::mt19937 rng(39);
  WindowedPoseGraph g =
      window_from_absolute(random_absolute(rng, 3), {10, 11, 12});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      g = g.with_edge(
          i, j, g.edge(i, j) * se3_exp(oracle::random_twist(rng, 0.03, 0.02)));
    }
  }
  CHECK(Pose::bitwise_equal(interframe_motion(g), g.edge(2, 1).inverse()));

  const std::vector<Pose> still{Pose::identity(), Pose::identity(),
                                Pose::identity()};
  CHECK(Pose::bitwise_equal(interframe_motion(window_from_absolute(still)),
                            Pose::identity()));
}

TEST_CASE("chained interframe motions rebuild a consistent trajectory") {
  std::mt19937 rng(40);
  std::vector<Pose> truth{Pose::identity()};
  for (int k = 1; k < 20; ++k) {
    truth.push_back(truth.back() * oracle::random_pose(rng, 0.2, 0.5));
  }

  std::vector<Pose> rebuilt{truth[0], truth[1], truth[2]};
  for (int k = 3; k < 20; ++k) {
    const WindowedPoseGraph w = window_from_absolute(
        {truth[k - 2], truth[k - 1], truth[k]}, {k - 2, k - 1, k});
    rebuilt.push_back(rebuilt.back() * interframe_motion(w));
  }
  for (int k = 0; k < 20; ++k) {
    CHECK((rebuilt[k].matrix() - truth[k].matrix()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("interframe_motion picks the newest pair in loop windows") {
  std::mt19937 rng(41);
  // Spliced frame first, as in a crossed loop window.
  const WindowedPoseGraph w =
      window_from_absolute(random_absolute(rng, 3), {100, 499, 498});
  // Newest frame is 499 (view 1), its predecessor 498 (view 2).
  CHECK(Pose::bitwise_equal(interframe_motion(w), w.edge(1, 2).inverse()));
}
