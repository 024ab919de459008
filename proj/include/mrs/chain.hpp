#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <sstream>
#include <string>
#include <vector>

#include "mrs/types.hpp"

namespace mrs {

/// Row-stochastic n x n matrix.
struct TransitionMatrix {
  Eigen::MatrixXd entries;

  std::size_t nodes() const { return static_cast<std::size_t>(entries.rows()); }
  double operator()(std::size_t r, std::size_t c) const {
    return entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
};

/// dP/dx for one pair, kept sparse: the PageRank form touches four cells.
struct TransitionDerivative {
  struct Cell {
    std::size_t row;
    std::size_t col;
    double value;
  };

  std::size_t n = 0;
  NodePair pair;
  std::vector<Cell> cells;

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& c : cells) {
      out(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col)) += c.value;
    }
    return out;
  }
};

/// Stationary vector plus one derivative row per pair (row k of dpi is
/// d pi / d x for the k-th pair in lexicographic order).
struct StationarySolution {
  Eigen::VectorXd pi;
  Eigen::MatrixXd dpi;

  std::size_t nodes() const { return static_cast<std::size_t>(pi.size()); }
};

/// Mapping from interaction parameters to a transition matrix and its
/// partial derivatives. PageRankModel is the only shipped instance.
template <class M>
concept TransitionModel = requires(const M& model, const InteractionVector& x, NodePair p) {
  { model.transition(x) } -> std::same_as<TransitionMatrix>;
  { model.derivative(x, p) } -> std::same_as<TransitionDerivative>;
};

/// Random-walk chain: from node j pick another node uniformly, move to i
/// with probability x_ij (i < j), otherwise stay.
///   P_ji = x_ij/(n-1),  P_ij = 1/(n-1) - P_ji,  P_ii = 1 - sum_{j!=i} P_ij.
struct PageRankModel {
  TransitionMatrix transition(const InteractionVector& x) const {
    const std::size_t n = x.nodes();
    if (n < 2) throw ConfigError("transition matrix needs at least 2 nodes");
    const double c = 1.0 / static_cast<double>(n - 1);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      for (Eigen::Index j = i + 1; j < static_cast<Eigen::Index>(n); ++j, ++k) {
        p(j, i) = x[k] * c;
        p(i, j) = c - p(j, i);
      }
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      double off = 0.0;
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (j != i) off += p(i, j);
      }
      p(i, i) = 1.0 - off;
    }
    return {std::move(p)};
  }

  TransitionDerivative derivative(std::size_t n, NodePair pair) const {
    (void)pair_index(n, pair);  // validates
    const double c = 1.0 / static_cast<double>(n - 1);
    const auto i = pair.first;
    const auto j = pair.second;
    return {n, pair, {{i, i, c}, {j, i, c}, {i, j, -c}, {j, j, -c}}};
  }

  TransitionDerivative derivative(const InteractionVector& x, NodePair pair) const {
    return derivative(x.nodes(), pair);
  }
};

static_assert(TransitionModel<PageRankModel>);

inline TransitionMatrix build_transition(const InteractionVector& x) { return PageRankModel{}.transition(x); }

inline TransitionDerivative transition_derivative(std::size_t n, NodePair pair) {
  if (n < 2) throw ConfigError("transition derivative needs at least 2 nodes");
  return PageRankModel{}.derivative(n, pair);
}

namespace detail {

inline std::string describe(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols() << " transition matrix";
  if (m.rows() <= 8) {
    Eigen::IOFormat fmt(6, 0, ",", ";", "", "", "[", "]");
    os << " " << m.format(fmt);
  }
  return os.str();
}

}  // namespace detail

/// Factorization of the stationary system. (I - P)^T with its last
/// balance equation replaced by the normalization row; one LU serves the
/// stationary vector and every derivative right-hand side.
class StationarySystem {
 public:
  explicit StationarySystem(const TransitionMatrix& p) : n_(p.entries.rows()) {
    if (n_ < 2 || p.entries.cols() != n_) throw ConfigError("transition matrix must be square with n >= 2");
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n_, n_) - p.entries.transpose();
    a.row(n_ - 1).setOnes();
    lu_.compute(a);

    const auto& u = lu_.matrixLU();
    const double scale = u.diagonal().cwiseAbs().maxCoeff();
    const double smallest = u.diagonal().cwiseAbs().minCoeff();
    if (!std::isfinite(scale) || !(smallest > 1e-13 * std::max(scale, 1.0))) {
      throw NumericalError("singular stationary system (reducible chain?) for " + detail::describe(p.entries));
    }
    inverse_ = lu_.solve(Eigen::MatrixXd::Identity(n_, n_));
    pi_ = inverse_.col(n_ - 1);

    if (!pi_.allFinite() || pi_.minCoeff() < -1e-12) {
      throw NumericalError("stationary solve produced an invalid distribution for " + detail::describe(p.entries));
    }
    const double residual = (pi_.transpose() * p.entries - pi_.transpose()).cwiseAbs().maxCoeff();
    if (residual > 1e-10) {
      throw NumericalError("stationary residual " + std::to_string(residual) + " exceeds 1e-10 for " +
                           detail::describe(p.entries));
    }
  }

  const Eigen::VectorXd& pi() const { return pi_; }

  /// Solves the constrained system for a balance right-hand side; the
  /// normalization component is forced to `total`.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double total = 0.0) const {
    Eigen::VectorXd b = rhs;
    b(n_ - 1) = total;
    return inverse_ * b;
  }

  /// Derivative of pi for a sparse dP: solves dpi (I - P) = pi dP with zero sum.
  Eigen::VectorXd derivative(const TransitionDerivative& dp) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (const auto& cell : dp.cells) {
      const auto col = static_cast<Eigen::Index>(cell.col);
      if (col == n_ - 1) continue;  // row replaced by normalization
      out += (pi_(static_cast<Eigen::Index>(cell.row)) * cell.value) * inverse_.col(col);
    }
    return out;
  }

 private:
  Eigen::Index n_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd inverse_;
  Eigen::VectorXd pi_;
};

/// Stationary distribution by dense direct solve. Throws NumericalError
/// when the system is singular (e.g. several closed classes).
inline Eigen::VectorXd stationary(const TransitionMatrix& p) { return StationarySystem(p).pi(); }

/// pi and d pi/d x_ij for every pair, sharing one factorization.
template <TransitionModel Model = PageRankModel>
StationarySolution stationary_derivatives(const StationarySystem& system, const InteractionVector& x,
                                          const Model& model = {}) {
  const std::size_t n = x.nodes();
  StationarySolution out;
  out.pi = system.pi();
  out.dpi.resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      out.dpi.row(static_cast<Eigen::Index>(k)) = system.derivative(model.derivative(x, NodePair{i, j})).transpose();
    }
  }
  return out;
}

template <TransitionModel Model = PageRankModel>
StationarySolution stationary_derivatives(const TransitionMatrix& p, const Eigen::VectorXd& pi,
                                          const InteractionVector& x, const Model& model = {}) {
  StationarySystem system(p);
  if ((system.pi() - pi).cwiseAbs().maxCoeff() > 1e-8) {
    throw ConfigError("supplied vector is not the stationary distribution of the transition matrix");
  }
  return stationary_derivatives(system, x, model);
}

/// Full solve from interaction parameters.
template <TransitionModel Model = PageRankModel>
StationarySolution solve_chain(const InteractionVector& x, const Model& model = {}) {
  return stationary_derivatives(StationarySystem(model.transition(x)), x, model);
}

struct PowerIterationResult {
  Eigen::VectorXd pi;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Cross-check path: power iteration on the lazy chain (P + I)/2, which has
/// the same stationary vector and is aperiodic even when P is not.
inline PowerIterationResult power_iteration(const TransitionMatrix& p, double tolerance = 1e-13,
                                            std::size_t max_iterations = 1'000'000) {
  const auto n = p.entries.rows();
  const Eigen::MatrixXd lazy = 0.5 * (p.entries + Eigen::MatrixXd::Identity(n, n));
  PowerIterationResult out;
  out.pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    Eigen::VectorXd next = (out.pi.transpose() * lazy).transpose();
    next /= next.sum();
    const double delta = (next - out.pi).cwiseAbs().maxCoeff();
    out.pi = std::move(next);
    if (delta < tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace mrs
