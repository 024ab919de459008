#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mrs/chain.hpp"
#include "mrs/posterior.hpp"

namespace mrs {

/// Default hyperplane shift added inside eta.
inline constexpr double kDefaultEpsilon = 1e-4;

/// Nodes sorted by descending score; ties broken by ascending node index.
/// Scores are compared on a 2^-40 grid so values that differ only by solver
/// rounding (e.g. a symmetric chain) count as tied.
inline std::vector<std::size_t> rank_nodes(const Eigen::VectorXd& score) {
  std::vector<std::size_t> order(static_cast<std::size_t>(score.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<long long> key(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    key[i] = std::llround(std::ldexp(score(static_cast<Eigen::Index>(i)), 40));
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

/// Everything the allocation policies read from a posterior state.
struct PosteriorSummary {
  std::size_t n = 0;
  Eigen::VectorXd pi_hat;
  std::vector<std::size_t> ranking;  // ranking[r] = node at rank r (0 = largest)
  std::vector<double> sigma_sq;      // posterior variance per pair
  // Only filled by full summaries:
  Eigen::MatrixXd dpi;          // pairs x n, d pi / d x at the posterior mean
  std::vector<double> tau_sq;   // normal-approximation variance of each pi_k

  bool has_sensitivities() const { return dpi.size() > 0; }

  /// d_pair(k, l): derivative of pi_<k> - pi_<l> w.r.t. the pair parameter,
  /// with k, l 0-based ranked positions.
  double d(std::size_t pair, std::size_t k, std::size_t l) const {
    const auto row = static_cast<Eigen::Index>(pair);
    return dpi(row, static_cast<Eigen::Index>(ranking[k])) - dpi(row, static_cast<Eigen::Index>(ranking[l]));
  }

  double pi_ranked(std::size_t r) const { return pi_hat(static_cast<Eigen::Index>(ranking[r])); }
};

namespace detail {

inline PosteriorSummary summary_base(const PosteriorState& state, const Eigen::VectorXd& pi) {
  PosteriorSummary s;
  s.n = state.nodes();
  s.pi_hat = pi;
  s.ranking = rank_nodes(pi);
  s.sigma_sq.resize(state.pairs());
  for (std::size_t k = 0; k < state.pairs(); ++k) s.sigma_sq[k] = state.variance(k);
  return s;
}

}  // namespace detail

/// Plug-in summary at the posterior mean: pi, ranking, derivatives, tau^2.
template <TransitionModel Model = PageRankModel>
PosteriorSummary summarize(const PosteriorState& state, const Model& model = {}) {
  const auto x = state.means();
  const StationarySystem system(model.transition(x));
  auto solution = stationary_derivatives(system, x, model);
  auto s = detail::summary_base(state, solution.pi);
  s.dpi = std::move(solution.dpi);
  s.tau_sq.assign(s.n, 0.0);
  for (std::size_t p = 0; p < state.pairs(); ++p) {
    for (std::size_t k = 0; k < s.n; ++k) {
      const double g = s.dpi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
      s.tau_sq[k] += g * g * s.sigma_sq[p];
    }
  }
  return s;
}

/// Summary without sensitivities: enough for ranking, selection and AOA.
template <TransitionModel Model = PageRankModel>
PosteriorSummary summarize_means(const PosteriorState& state, const Model& model = {}) {
  return detail::summary_base(state, stationary(model.transition(state.means())));
}

struct ComparisonMoments {
  double eta;
  double zeta;
};

inline void check_comparison(const PosteriorSummary& s, std::size_t k, std::size_t l) {
  if (!(k < l && l < s.n)) {
    throw ConfigError("comparison requires ranked positions k < l < n (got " + std::to_string(k) + ", " +
                      std::to_string(l) + ")");
  }
}

inline double comparison_eta(const PosteriorSummary& s, std::size_t k, std::size_t l, double epsilon) {
  const double gap = s.pi_ranked(k) - s.pi_ranked(l) + epsilon;
  return gap * gap;
}

/// eta = (pi_<k> - pi_<l> + eps)^2, zeta = sum_pairs (d * sigma)^2, with k
/// in the top-m block and l below it (0-based ranked positions).
inline ComparisonMoments comparison_moments(const PosteriorSummary& s, std::size_t k, std::size_t l,
                                            double epsilon = kDefaultEpsilon) {
  check_comparison(s, k, l);
  if (!s.has_sensitivities()) throw ConfigError("comparison moments need a full summary");
  double zeta = 0.0;
  for (std::size_t p = 0; p < s.sigma_sq.size(); ++p) {
    const double d = s.d(p, k, l);
    zeta += d * d * s.sigma_sq[p];
  }
  return {comparison_eta(s, k, l, epsilon), zeta};
}

/// Squared d values for every (k in top m, l outside) comparison, laid out
/// pairs x comparisons, plus eta and zeta per comparison. Comparison index
/// c = k * (n - m) + (l - m).
struct ComparisonTable {
  std::size_t m = 0;
  Eigen::MatrixXd d_sq;
  Eigen::VectorXd eta;
  Eigen::VectorXd zeta;

  std::size_t comparisons() const { return static_cast<std::size_t>(eta.size()); }
};

inline void check_subset_size(std::size_t n, std::size_t m) {
  if (!(m >= 1 && m < n)) {
    throw ConfigError("subset size m must satisfy 1 <= m < n (m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                      ")");
  }
}

inline ComparisonTable comparison_table(const PosteriorSummary& s, std::size_t m, double epsilon) {
  check_subset_size(s.n, m);
  if (!s.has_sensitivities()) throw ConfigError("comparison table needs a full summary");
  const auto pairs = static_cast<Eigen::Index>(s.sigma_sq.size());
  const auto cols = static_cast<Eigen::Index>(m * (s.n - m));
  ComparisonTable t;
  t.m = m;
  t.d_sq.resize(pairs, cols);
  t.eta.resize(cols);
  Eigen::Index c = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto top = static_cast<Eigen::Index>(s.ranking[k]);
    for (std::size_t l = m; l < s.n; ++l, ++c) {
      const auto low = static_cast<Eigen::Index>(s.ranking[l]);
      t.d_sq.col(c) = (s.dpi.col(top) - s.dpi.col(low)).array().square();
      t.eta(c) = comparison_eta(s, k, l, epsilon);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> sigma(s.sigma_sq.data(), pairs);
  t.zeta = t.d_sq.transpose() * sigma;
  return t;
}

/// min eta/zeta over admissible comparisons; comparisons with zeta == 0 are
/// already decided and skipped. Throws when every comparison is skipped.
inline double ball_radius_sq(const PosteriorSummary& s, std::size_t m, double epsilon = kDefaultEpsilon) {
  const auto t = comparison_table(s, m, epsilon);
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (Eigen::Index c = 0; c < t.eta.size(); ++c) {
    if (t.zeta(c) > 0.0) {
      best = std::min(best, t.eta(c) / t.zeta(c));
      any = true;
    }
  }
  if (!any) throw NumericalError("degenerate state: every comparison has zero variance");
  return best;
}

}  // namespace mrs
