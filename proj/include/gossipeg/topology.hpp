#ifndef GOSSIPEG_TOPOLOGY_HPP_
#define GOSSIPEG_TOPOLOGY_HPP_

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gossipeg/error.hpp"

namespace gossipeg {

using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Outcome of checking a weight matrix against the mixing-matrix definition.
struct MixingCheck {
  bool square = true;
  bool symmetric = true;
  bool rows_sum_to_one = true;
  bool cols_sum_to_one = true;
  bool entries_in_unit_interval = true;
  bool graph_aligned = true;
  double max_asymmetry = 0.0;
  double max_row_defect = 0.0;
  double max_col_defect = 0.0;

  bool ok() const noexcept {
    return square && symmetric && rows_sum_to_one && cols_sum_to_one && entries_in_unit_interval &&
           graph_aligned;
  }
};

/// Symmetry, double stochasticity, [0,1] entries, and W_ij != 0 only on
/// the diagonal or on edges of `mask`.
inline MixingCheck check_mixing(const Eigen::MatrixXd& W, const Adjacency& mask, double tol = 1e-12) {
  MixingCheck r;
  if (W.rows() != W.cols() || mask.rows() != W.rows() || mask.cols() != W.cols()) {
    r.square = false;
    return r;
  }
  const Eigen::Index M = W.rows();
  for (Eigen::Index i = 0; i < M; ++i) {
    r.max_row_defect = std::max(r.max_row_defect, std::abs(W.row(i).sum() - 1.0));
    r.max_col_defect = std::max(r.max_col_defect, std::abs(W.col(i).sum() - 1.0));
    for (Eigen::Index j = 0; j < M; ++j) {
      const double w = W(i, j);
      r.max_asymmetry = std::max(r.max_asymmetry, std::abs(w - W(j, i)));
      if (!(w >= -tol && w <= 1.0 + tol)) r.entries_in_unit_interval = false;
      if (i != j && w != 0.0 && !mask(i, j)) r.graph_aligned = false;
    }
  }
  r.symmetric = r.max_asymmetry <= tol;
  r.rows_sum_to_one = r.max_row_defect <= tol;
  r.cols_sum_to_one = r.max_col_defect <= tol;
  return r;
}

/// Symmetric doubly stochastic gossip matrix aligned with a communication graph.
///
/// Nonzeros are also kept as per-row neighbour lists so a gossip round costs
/// O(nnz) rather than O(M^2).
class MixingMatrix {
 public:
  struct Entry {
    Eigen::Index col;
    double weight;
  };

  /// Validates on construction; throws InvalidArgument on failure.
  MixingMatrix(Eigen::MatrixXd weights, Adjacency mask, double tol = 1e-12)
      : weights_(std::move(weights)), mask_(std::move(mask)) {
    const MixingCheck check = check_mixing(weights_, mask_, tol);
    if (!check.ok()) {
      std::ostringstream os;
      os << "not a valid mixing matrix (symmetric=" << check.symmetric
         << ", row sums=" << check.rows_sum_to_one << ", col sums=" << check.cols_sum_to_one
         << ", entries in [0,1]=" << check.entries_in_unit_interval
         << ", graph aligned=" << check.graph_aligned << ")";
      throw InvalidArgument(os.str());
    }
    build_rows();
  }

  /// Mask derived from the nonzero pattern of `weights`.
  explicit MixingMatrix(Eigen::MatrixXd weights, double tol = 1e-12)
      : MixingMatrix(weights, support(weights), tol) {}

  Eigen::Index size() const noexcept { return weights_.rows(); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Adjacency& mask() const noexcept { return mask_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return weights_(i, j); }
  const std::vector<Entry>& row(Eigen::Index i) const { return rows_[static_cast<std::size_t>(i)]; }

  bool is_identity() const noexcept { return identity_; }

  /// out.col(m) = sum_i W(m, i) * in.col(i). `out` must not alias `in`.
  void gossip(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
    out.resize(in.rows(), in.cols());
    if (identity_) {
      out = in;
      return;
    }
    for (Eigen::Index m = 0; m < size(); ++m) {
      auto dst = out.col(m);
      dst.setZero();
      for (const Entry& e : rows_[static_cast<std::size_t>(m)]) dst += e.weight * in.col(e.col);
    }
  }

  static Adjacency support(const Eigen::MatrixXd& W) {
    Adjacency mask = Adjacency::Constant(W.rows(), W.cols(), false);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) mask(i, j) = (i != j) && W(i, j) != 0.0;
    return mask;
  }

 private:
  void build_rows() {
    const Eigen::Index M = weights_.rows();
    rows_.assign(static_cast<std::size_t>(M), {});
    identity_ = true;
    for (Eigen::Index i = 0; i < M; ++i) {
      for (Eigen::Index j = 0; j < M; ++j) {
        const double w = weights_(i, j);
        if (w != 0.0) rows_[static_cast<std::size_t>(i)].push_back({j, w});
        if (w != (i == j ? 1.0 : 0.0)) identity_ = false;
      }
    }
  }

  Eigen::MatrixXd weights_;
  Adjacency mask_;
  std::vector<std::vector<Entry>> rows_;
  bool identity_ = false;
};

inline MixingMatrix identity_matrix(std::size_t M) {
  detail::require(M >= 1, "identity_matrix: M must be >= 1");
  const auto m = static_cast<Eigen::Index>(M);
  return MixingMatrix(Eigen::MatrixXd::Identity(m, m), Adjacency::Constant(m, m, false));
}

/// Uniform-weight ring: 1/3 on the diagonal and on both neighbours.
inline MixingMatrix ring_matrix(std::size_t M) {
  detail::require(M >= 3, "ring_matrix: M must be >= 3");
  const auto m = static_cast<Eigen::Index>(M);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
  Adjacency mask = Adjacency::Constant(m, m, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index prev = (i + m - 1) % m;
    const Eigen::Index next = (i + 1) % m;
    W(i, i) = 1.0 / 3.0;
    W(i, prev) = 1.0 / 3.0;
    W(i, next) = 1.0 / 3.0;
    mask(i, prev) = mask(i, next) = true;
  }
  return MixingMatrix(std::move(W), std::move(mask));
}

/// Exact averaging (1/M) 1 1^T.
inline MixingMatrix full_matrix(std::size_t M) {
  detail::require(M >= 1, "full_matrix: M must be >= 1");
  const auto m = static_cast<Eigen::Index>(M);
  Adjacency mask = Adjacency::Constant(m, m, true);
  mask.diagonal().setConstant(false);
  return MixingMatrix(Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(M)), std::move(mask));
}

namespace detail {

inline void check_adjacency(const Adjacency& adj) {
  require(adj.rows() == adj.cols(), "adjacency must be square");
  require(adj.rows() >= 1, "adjacency must be non-empty");
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    require(!adj(i, i), "adjacency must not contain self-loops");
    for (Eigen::Index j = 0; j < adj.cols(); ++j)
      require(adj(i, j) == adj(j, i), "adjacency must be symmetric");
  }
}

inline std::vector<Eigen::Index> degrees(const Adjacency& adj) {
  std::vector<Eigen::Index> deg(static_cast<std::size_t>(adj.rows()), 0);
  for (Eigen::Index i = 0; i < adj.rows(); ++i) deg[static_cast<std::size_t>(i)] = adj.row(i).count();
  return deg;
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double power_iteration_max(const Eigen::MatrixXd& A, double rel_tol = 1e-10, int max_iter = 100000) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd v(n);
  // Alternating, slightly irregular start: far from the constant null vector of a Laplacian.
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.013 * static_cast<double>(i) + 0.1 * static_cast<double>(i % 3));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = A * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

inline bool is_connected(const Adjacency& adj) {
  const Eigen::Index M = adj.rows();
  std::vector<bool> seen(static_cast<std::size_t>(M), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  Eigen::Index count = 1;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < M; ++j) {
      if (adj(i, j) && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == M;
}

}  // namespace detail

/// W = I - Lap / lambda_max(Lap).
inline MixingMatrix laplacian_matrix(const Adjacency& adjacency) {
  detail::check_adjacency(adjacency);
  const Eigen::Index M = adjacency.rows();
  if (adjacency.count() == 0) throw InvalidArgument("laplacian_matrix: graph has no edges");
  if (!detail::is_connected(adjacency))
    std::cerr << "warning: laplacian_matrix: graph is not connected\n";

  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < M; ++j)
      if (adjacency(i, j)) {
        lap(i, j) = -1.0;
        lap(i, i) += 1.0;
      }
  const double lambda_max = detail::power_iteration_max(lap);
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(M, M) - lap / lambda_max;
  return MixingMatrix(std::move(W), adjacency);
}

/// Metropolis-Hastings weights: w_ij = 1/(1 + max(deg_i, deg_j)) on edges.
inline MixingMatrix metropolis_matrix(const Adjacency& adjacency) {
  detail::check_adjacency(adjacency);
  const Eigen::Index M = adjacency.rows();
  const auto deg = detail::degrees(adjacency);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < M; ++j) {
      if (!adjacency(i, j)) continue;
      W(i, j) = 1.0 / (1.0 + static_cast<double>(std::max(deg[static_cast<std::size_t>(i)],
                                                          deg[static_cast<std::size_t>(j)])));
      off += W(i, j);
    }
    W(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(W), adjacency);
}

/// Reads an undirected graph from "i j" lines (0-indexed). Blank lines and
/// lines starting with '#' are skipped. `nodes` = 0 infers the node count.
inline Adjacency read_edge_list(std::istream& in, std::size_t nodes = 0) {
  std::vector<std::pair<long long, long long>> edges;
  std::string line;
  std::size_t lineno = 0;
  long long max_node = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long i = -1, j = -1;
    std::string extra;
    if (!(ls >> i >> j) || (ls >> extra) || i < 0 || j < 0)
      throw InvalidArgument("edge list line " + std::to_string(lineno) + ": expected two node indices");
    if (i == j) throw InvalidArgument("edge list line " + std::to_string(lineno) + ": self-loop");
    edges.emplace_back(i, j);
    max_node = std::max({max_node, i, j});
  }
  const auto M = static_cast<Eigen::Index>(nodes == 0 ? static_cast<std::size_t>(max_node + 1) : nodes);
  if (M == 0) throw InvalidArgument("edge list is empty");
  if (max_node >= M) throw InvalidArgument("edge list references a node beyond the node count");
  Adjacency adj = Adjacency::Constant(M, M, false);
  for (const auto& [i, j] : edges) adj(i, j) = adj(j, i) = true;
  return adj;
}

inline Adjacency load_edge_list(const std::string& path, std::size_t nodes = 0) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open edge list '" + path + "'");
  return read_edge_list(in, nodes);
}

}  // namespace gossipeg

#endif  // GOSSIPEG_TOPOLOGY_HPP_
