#ifndef GOSSIPEG_PROBLEM_HPP_
#define GOSSIPEG_PROBLEM_HPP_

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gossipeg/error.hpp"
#include "gossipeg/rng.hpp"

namespace gossipeg {

/// Joint primal-dual point z = (x; y), length 2n.
using Iterate = Eigen::VectorXd;

inline auto primal_block(const Iterate& z) { return z.head(z.size() / 2); }
inline auto dual_block(const Iterate& z) { return z.tail(z.size() / 2); }

/// Constants entering the step-size caps and rate predictors.
struct ProblemConstants {
  double mu = 0.0;      // strong monotonicity modulus
  double L = 0.0;       // Lipschitz constant used for step tuning
  double D = 0.0;       // heterogeneity bound max_m |F_m - F|
  double sigma2 = 0.0;  // oracle noise variance
};

/// Mean operator written as F(z) = jacobian * z + offset.
struct AffineForm {
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd offset;
};

/// What the solver and metrics need from a distributed VI operator.
///
/// `evaluate` is the exact local operator F_m(z); `evaluate_noisy` draws an
/// unbiased sample F_m(z, xi) from the supplied stream.
template <typename Op>
concept VariationalOperator =
    requires(const Op& op, std::size_t m, const Eigen::VectorXd& z, Eigen::VectorXd& out,
             NormalStream& stream) {
      { op.machines() } -> std::convertible_to<std::size_t>;
      { op.dim() } -> std::convertible_to<std::size_t>;
      op.evaluate(m, z, out);
      op.evaluate_noisy(m, z, stream, out);
      { op.constants() } -> std::convertible_to<ProblemConstants>;
      { op.solution() } -> std::convertible_to<std::optional<Iterate>>;
      { op.affine_form() } -> std::convertible_to<std::optional<AffineForm>>;
    };

/// Operators that can evaluate every machine at once (noise-free path).
template <typename Op>
concept BatchedOperator =
    VariationalOperator<Op> && requires(const Op& op, const Eigen::MatrixXd& Z, Eigen::MatrixXd& out) {
      op.evaluate_all(Z, out);
    };

/// F(z) = (1/M) sum_m F_m(z).
template <VariationalOperator Op>
Eigen::VectorXd mean_operator(const Op& op, const Eigen::VectorXd& z) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.dim()));
  Eigen::VectorXd tmp(static_cast<Eigen::Index>(op.dim()));
  for (std::size_t m = 0; m < op.machines(); ++m) {
    op.evaluate(m, z, tmp);
    acc += tmp;
  }
  return acc / static_cast<double>(op.machines());
}

/// Heterogeneous bilinear saddle-point problem
///
///   f_m(x, y) = a/2 |x|^2 + b/2 x^T y - a/2 |y|^2 + c_m^T x,
///
/// with operator F_m(z) = (a x + b/2 y + c_m ; -b/2 x + a y).
class BilinearProblem {
 public:
  BilinearProblem(double a, double b, std::vector<Eigen::VectorXd> offsets, double sigma2)
      : a_(a), b_(b), sigma2_(sigma2), offsets_(std::move(offsets)) {
    detail::require(!offsets_.empty(), "bilinear problem needs at least one machine");
    detail::require(a_ >= 0.0 && std::isfinite(a_), "bilinear problem: a must be finite and >= 0");
    detail::require(std::isfinite(b_), "bilinear problem: b must be finite");
    detail::require(sigma2_ >= 0.0 && std::isfinite(sigma2_), "bilinear problem: sigma2 must be >= 0");
    n_ = offsets_.front().size();
    detail::require(n_ >= 1, "bilinear problem: n must be >= 1");
    for (const auto& c : offsets_)
      detail::require(c.size() == n_, "bilinear problem: offsets must share one dimension");

    c_bar_ = Eigen::VectorXd::Zero(n_);
    for (const auto& c : offsets_) c_bar_ += c;
    c_bar_ /= static_cast<double>(offsets_.size());
    heterogeneity_ = 0.0;
    for (const auto& c : offsets_) heterogeneity_ = std::max(heterogeneity_, (c - c_bar_).norm());

    offset_matrix_ = Eigen::MatrixXd::Zero(2 * n_, static_cast<Eigen::Index>(offsets_.size()));
    for (std::size_t m = 0; m < offsets_.size(); ++m)
      offset_matrix_.col(static_cast<Eigen::Index>(m)).head(n_) = offsets_[m];
    jacobian_ = block_jacobian(a_, b_, n_);
  }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  Eigen::Index n() const noexcept { return n_; }
  std::size_t machines() const noexcept { return offsets_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(2 * n_); }
  double sigma2() const noexcept { return sigma2_; }
  const Eigen::VectorXd& offset(std::size_t m) const { return offsets_.at(m); }
  const std::vector<Eigen::VectorXd>& offsets() const noexcept { return offsets_; }
  const Eigen::VectorXd& c_bar() const noexcept { return c_bar_; }

  /// Realized max_m |c_m - c_bar|.
  double heterogeneity() const noexcept { return heterogeneity_; }
  double mu() const noexcept { return a_; }
  /// L = a^2 + b^2/4 as used for step tuning.
  double lipschitz() const noexcept { return a_ * a_ + b_ * b_ / 4.0; }

  ProblemConstants constants() const {
    return {.mu = mu(), .L = lipschitz(), .D = heterogeneity_, .sigma2 = sigma2_};
  }

  void evaluate(std::size_t m, const Eigen::Ref<const Eigen::VectorXd>& z,
                Eigen::Ref<Eigen::VectorXd> out) const {
    check_machine(m);
    check_dim(z.size());
    const auto x = z.head(n_);
    const auto y = z.tail(n_);
    out.head(n_) = a_ * x + (0.5 * b_) * y + offsets_[m];
    out.tail(n_) = (-0.5 * b_) * x + a_ * y;
  }

  Eigen::VectorXd evaluate(std::size_t m, const Eigen::VectorXd& z) const {
    Eigen::VectorXd out(2 * n_);
    evaluate(m, z, out);
    return out;
  }

  /// F_m(z) plus zero-mean Gaussian noise with E|noise|^2 = sigma2.
  void evaluate_noisy(std::size_t m, const Eigen::Ref<const Eigen::VectorXd>& z, NormalStream& stream,
                      Eigen::Ref<Eigen::VectorXd> out) const {
    evaluate(m, z, out);
    if (sigma2_ == 0.0) return;
    const double sd = std::sqrt(sigma2_ / static_cast<double>(2 * n_));
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sd * stream();
  }

  Eigen::VectorXd evaluate_noisy(std::size_t m, const Eigen::VectorXd& z, NormalStream& stream) const {
    Eigen::VectorXd out(2 * n_);
    evaluate_noisy(m, z, stream, out);
    return out;
  }

  /// Column m of `out` receives F_m(column m of Z).
  void evaluate_all(const Eigen::MatrixXd& Z, Eigen::MatrixXd& out) const {
    out.noalias() = jacobian_ * Z;
    out += offset_matrix_;
  }

  std::optional<AffineForm> affine_form() const {
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(2 * n_);
    offset.head(n_) = c_bar_;
    return AffineForm{jacobian_, offset};
  }

  /// Unique zero of the mean operator; empty when a = b = 0.
  std::optional<Iterate> solution() const {
    if (a_ == 0.0 && b_ == 0.0) return std::nullopt;
    return exact_solution();
  }

  /// Zero of F. Closed form for a > 0, dense LU otherwise.
  Iterate exact_solution() const {
    if (a_ == 0.0 && b_ == 0.0)
      throw Error("exact_solution: mean operator is singular (a = 0 and b = 0)");
    Iterate z(2 * n_);
    if (a_ > 0.0) {
      const Eigen::VectorXd x = (-a_ / (a_ * a_ + b_ * b_ / 4.0)) * c_bar_;
      z.head(n_) = x;
      z.tail(n_) = (b_ / (2.0 * a_)) * x;
      return z;
    }
    const AffineForm form = *affine_form();
    return form.jacobian.partialPivLu().solve(-form.offset);
  }

  static Eigen::MatrixXd block_jacobian(double a, double b, Eigen::Index n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    const auto I = Eigen::MatrixXd::Identity(n, n);
    J.topLeftCorner(n, n) = a * I;
    J.topRightCorner(n, n) = (0.5 * b) * I;
    J.bottomLeftCorner(n, n) = (-0.5 * b) * I;
    J.bottomRightCorner(n, n) = a * I;
    return J;
  }

 private:
  void check_machine(std::size_t m) const {
    if (m >= offsets_.size()) throw InvalidArgument("machine index out of range");
  }
  void check_dim(Eigen::Index size) const {
    if (size != 2 * n_) throw InvalidArgument("iterate has wrong length");
  }

  double a_;
  double b_;
  double sigma2_;
  Eigen::Index n_ = 0;
  std::vector<Eigen::VectorXd> offsets_;
  Eigen::VectorXd c_bar_;
  double heterogeneity_ = 0.0;
  Eigen::MatrixXd offset_matrix_;
  Eigen::MatrixXd jacobian_;
};

static_assert(BatchedOperator<BilinearProblem>);

/// Builds the bilinear instance with heterogeneity exactly D.
///
/// Offsets are c_m = c_bar + d_m. For n >= 2 and M >= 2,
/// d_m = D (cos(2 pi m/M) e1 + sin(2 pi m/M) e2). For n = 1 the offsets alternate
/// +D, -D with a zero inserted when M is odd. A single machine gets d = 0.
/// The construction is deterministic; the seed is unused.
inline BilinearProblem make_bilinear(double a, double b, Eigen::Index n, std::size_t M, double D,
                                     const Eigen::VectorXd& c_bar, double sigma2,
                                     std::uint64_t /*seed*/ = 0) {
  detail::require(n >= 1, "make_bilinear: n must be >= 1");
  detail::require(M >= 1, "make_bilinear: M must be >= 1");
  detail::require(D >= 0.0 && std::isfinite(D), "make_bilinear: D must be >= 0");
  detail::require(a >= 0.0, "make_bilinear: a must be >= 0");
  detail::require(sigma2 >= 0.0, "make_bilinear: sigma2 must be >= 0");
  detail::require(c_bar.size() == n, "make_bilinear: c_bar must have length n");

  std::vector<Eigen::VectorXd> offsets(M, c_bar);
  if (M == 1 || D == 0.0) return BilinearProblem(a, b, std::move(offsets), sigma2);

  if (n >= 2) {
    for (std::size_t m = 0; m < M; ++m) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(M);
      offsets[m][0] += D * std::cos(t);
      offsets[m][1] += D * std::sin(t);
    }
  } else {
    // Odd M: the last machine keeps the zero offset.
    const std::size_t paired = M - (M % 2);
    for (std::size_t m = 0; m < paired; ++m) offsets[m][0] += (m % 2 == 0) ? D : -D;
  }
  return BilinearProblem(a, b, std::move(offsets), sigma2);
}

/// Spectral norm of the operator's Jacobian by power iteration on J^T J.
inline double operator_lipschitz_empirical(const BilinearProblem& problem, double tol = 1e-12,
                                           int max_iter = 10000) {
  // The Jacobian is kron([[a, b/2], [-b/2, a]], I_n); its norm is that of the 2x2 block.
  const Eigen::MatrixXd J = BilinearProblem::block_jacobian(problem.a(), problem.b(), 1);
  const Eigen::MatrixXd G = J.transpose() * J;
  Eigen::Vector2d v(1.0, 0.3);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::Vector2d w = G * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    w /= norm;
    const bool done = std::abs(next - lambda) <= tol * std::max(1.0, next);
    v = w;
    lambda = next;
    if (done) break;
  }
  return std::sqrt(lambda);
}

}  // namespace gossipeg

#endif  // GOSSIPEG_PROBLEM_HPP_
