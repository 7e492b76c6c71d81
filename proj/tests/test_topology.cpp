#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gossipeg/topology.hpp"

using namespace gossipeg;

namespace {

Adjacency graph(Eigen::Index M, std::initializer_list<std::pair<int, int>> edges) {
  Adjacency adj = Adjacency::Constant(M, M, false);
  for (auto [i, j] : edges) adj(i, j) = adj(j, i) = true;
  return adj;
}

Adjacency random_connected(std::mt19937_64& rng, Eigen::Index M) {
  Adjacency adj = Adjacency::Constant(M, M, false);
  // random spanning tree, then extra edges
  for (Eigen::Index v = 1; v < M; ++v) {
    std::uniform_int_distribution<Eigen::Index> pick(0, v - 1);
    const Eigen::Index u = pick(rng);
    adj(u, v) = adj(v, u) = true;
  }
  std::bernoulli_distribution extra(0.2);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j)
      if (extra(rng)) adj(i, j) = adj(j, i) = true;
  return adj;
}

double second_modulus_by_eigensolver(const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev[ev.size() - 2];
}

}  // namespace

TEST(Ring, ThreeRingIsComplete) {
  const auto W = ring_matrix(3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(W(i, j), 1.0 / 3.0);
}

TEST(Ring, NineRingRowsAndSpectrum) {
  const auto W = ring_matrix(9);
  for (Eigen::Index i = 0; i < 9; ++i) {
    int nonzeros = 0;
    for (Eigen::Index j = 0; j < 9; ++j)
      if (W(i, j) != 0.0) {
        ++nonzeros;
        EXPECT_DOUBLE_EQ(W(i, j), 1.0 / 3.0);
      }
    EXPECT_EQ(nonzeros, 3);
    EXPECT_NEAR(W.weights().row(i).sum(), 1.0, 1e-15);
  }
  const double expected = (1.0 + 2.0 * std::cos(2.0 * std::numbers::pi / 9.0)) / 3.0;
  EXPECT_NEAR(second_modulus_by_eigensolver(W.weights()), expected, 1e-12);
  EXPECT_NEAR(expected, 0.8440296, 1e-7);
}

TEST(Ring, RejectsSmallRings) { EXPECT_THROW(ring_matrix(2), InvalidArgument); }

TEST(Full, Entries) {
  EXPECT_DOUBLE_EQ(full_matrix(1)(0, 0), 1.0);
  const auto W = full_matrix(4);
  EXPECT_TRUE(W.weights().isApproxToConstant(0.25));
  Eigen::MatrixXd Z = Eigen::MatrixXd::Random(3, 4), out;
  W.gossip(Z, out);
  for (Eigen::Index m = 0; m < 4; ++m) EXPECT_NEAR((out.col(m) - Z.rowwise().mean()).norm(), 0.0, 1e-15);
}

TEST(Laplacian, TwoNodePath) {
  const auto W = laplacian_matrix(graph(2, {{0, 1}}));
  EXPECT_TRUE(W.weights().isApproxToConstant(0.5, 1e-12));
}

TEST(Laplacian, CycleAndStarAreValid) {
  const auto cycle = graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto W = laplacian_matrix(cycle);
  EXPECT_TRUE(check_mixing(W.weights(), cycle).ok());
  EXPECT_EQ(W(0, 2), 0.0);
  EXPECT_EQ(W(1, 3), 0.0);
  const auto star = graph(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto S = laplacian_matrix(star);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(S.weights().row(i).sum(), 1.0, 1e-12);
  EXPECT_TRUE(check_mixing(S.weights(), star).ok());
}

TEST(Laplacian, MatchesEigenDecompositionScaling) {
  const auto star = graph(4, {{0, 1}, {0, 2}, {0, 3}});
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (star(i, j)) {
        L(i, j) = -1;
        L(i, i) += 1;
      }
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues().maxCoeff();
  const Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(4, 4) - L / lmax;
  EXPECT_NEAR((laplacian_matrix(star).weights() - expected).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(Laplacian, RejectsEmptyGraph) {
  EXPECT_THROW(laplacian_matrix(Adjacency::Constant(3, 3, false)), InvalidArgument);
}

TEST(Metropolis, TwoNodePath) {
  const auto W = metropolis_matrix(graph(2, {{0, 1}}));
  EXPECT_DOUBLE_EQ(W(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(W(0, 0), 0.5);
}

TEST(Metropolis, StarWeights) {
  const auto star = graph(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto W = metropolis_matrix(star);
  for (int leaf = 1; leaf < 4; ++leaf) {
    EXPECT_DOUBLE_EQ(W(leaf, 0), 0.25);
    EXPECT_DOUBLE_EQ(W(leaf, leaf), 0.75);
  }
  EXPECT_DOUBLE_EQ(W(0, 0), 0.25);
  EXPECT_TRUE(check_mixing(W.weights(), star).ok());
}

TEST(Metropolis, RandomConnectedGraphsAreValid) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index M = 2 + t % 30;
    const Adjacency adj = random_connected(rng, M);
    EXPECT_TRUE(check_mixing(metropolis_matrix(adj).weights(), adj).ok()) << "graph " << t;
    EXPECT_TRUE(check_mixing(laplacian_matrix(adj).weights(), adj).ok()) << "graph " << t;
  }
}

TEST(Validator, DetectsEachViolation) {
  const Adjacency full = Adjacency::Constant(2, 2, true);
  Eigen::Matrix2d asym;
  asym << 0.6, 0.4, 0.5, 0.5;
  EXPECT_FALSE(check_mixing(asym, full).symmetric);
  Eigen::Matrix2d rows;
  rows << 0.5, 0.6, 0.6, 0.5;
  EXPECT_FALSE(check_mixing(rows, full).rows_sum_to_one);
  Eigen::Matrix2d negative;
  negative << 1.5, -0.5, -0.5, 1.5;
  EXPECT_FALSE(check_mixing(negative, full).entries_in_unit_interval);
  Eigen::Matrix2d off;
  off << 0.5, 0.5, 0.5, 0.5;
  EXPECT_FALSE(check_mixing(off, Adjacency::Constant(2, 2, false)).graph_aligned);
  EXPECT_THROW(MixingMatrix(asym, full), InvalidArgument);
}

TEST(Gossip, PreservesAverageAndContracts) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index M = 3 + t % 20;
    const Adjacency adj = random_connected(rng, M);
    const MixingMatrix W = t % 2 ? metropolis_matrix(adj) : laplacian_matrix(adj);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Random(4, M) * 10.0, out;
    W.gossip(Z, out);
    EXPECT_LE((out.rowwise().mean() - Z.rowwise().mean()).norm(), 1e-12 * (1 + Z.norm()));
    const Eigen::MatrixXd dev_in = Z.colwise() - Z.rowwise().mean();
    const Eigen::MatrixXd dev_out = out.colwise() - out.rowwise().mean();
    const double lambda2 = second_modulus_by_eigensolver(W.weights());
    EXPECT_LE(dev_out.squaredNorm(), lambda2 * lambda2 * dev_in.squaredNorm() + 1e-10);
  }
}

TEST(Gossip, MatchesDenseProduct) {
  const auto W = ring_matrix(7);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Random(5, 7), out;
  W.gossip(Z, out);
  EXPECT_NEAR((out - Z * W.weights().transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(EdgeList, ParsesCommentsAndBlankLines) {
  std::istringstream in("# star\n0 1\n\n0 2\n  # indented comment\n0 3\n");
  const Adjacency adj = read_edge_list(in);
  EXPECT_EQ(adj.rows(), 4);
  EXPECT_TRUE(adj(0, 3) && adj(3, 0));
  EXPECT_FALSE(adj(1, 2));
}

TEST(EdgeList, ReportsLineOfBadEntry) {
  std::istringstream in("0 1\n1 x\n");
  try {
    read_edge_list(in);
    FAIL() << "expected an error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream loop("2 2\n");
  EXPECT_THROW(read_edge_list(loop), InvalidArgument);
  std::istringstream beyond("0 5\n");
  EXPECT_THROW(read_edge_list(beyond, 3), InvalidArgument);
}

TEST(EdgeList, ExplicitNodeCountKeepsIsolatedNodes) {
  std::istringstream in("0 1\n");
  EXPECT_EQ(read_edge_list(in, 5).rows(), 5);
}
