#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "mrs/random.hpp"
#include "mrs/types.hpp"

namespace mrs {

struct NormalApprox {
  double mean;
  double variance;
};

/// Beta(alpha, beta) posterior moments.
inline double beta_mean(double alpha, double beta) { return alpha / (alpha + beta); }

inline double beta_variance(double alpha, double beta) {
  const double s = alpha + beta;
  return alpha * beta / (s * s * (s + 1.0));
}

/// Variance after one more certainty-equivalent observation: the last
/// factor grows from (s + 1) to (s + 2).
inline double beta_lookahead_variance(double alpha, double beta) {
  const double s = alpha + beta;
  return alpha * beta / (s * s * (s + 2.0));
}

/// Beta-Bernoulli posterior over every interaction parameter. Starts from a
/// Beta(prior_alpha, prior_beta) prior on each pair, uniform by default.
class PosteriorState {
 public:
  PosteriorState() = default;

  explicit PosteriorState(std::size_t n, double prior_alpha = 1.0, double prior_beta = 1.0)
      : n_(n), prior_alpha_(prior_alpha), prior_beta_(prior_beta) {
    if (n < 2) throw ConfigError("posterior needs at least 2 nodes, got " + std::to_string(n));
    if (!(prior_alpha > 0.0 && prior_beta > 0.0)) throw ConfigError("prior parameters must be positive");
    alpha_.assign(pair_count(n), prior_alpha);
    beta_.assign(pair_count(n), prior_beta);
    counts_.assign(pair_count(n), 0);
  }

  std::size_t nodes() const { return n_; }
  std::size_t pairs() const { return alpha_.size(); }
  std::uint64_t total() const { return total_; }

  double alpha(std::size_t k) const { return alpha_[k]; }
  double beta(std::size_t k) const { return beta_[k]; }
  std::uint64_t count(std::size_t k) const { return counts_[k]; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  double alpha(NodePair p) const { return alpha_[pair_index(n_, p)]; }
  double beta(NodePair p) const { return beta_[pair_index(n_, p)]; }
  std::uint64_t count(NodePair p) const { return counts_[pair_index(n_, p)]; }

  double prior_alpha() const { return prior_alpha_; }
  double prior_beta() const { return prior_beta_; }

  void update(std::size_t k, bool success) {
    if (k >= alpha_.size()) throw ConfigError("pair index " + std::to_string(k) + " out of range");
    (success ? alpha_[k] : beta_[k]) += 1.0;
    ++counts_[k];
    ++total_;
  }

  void update(NodePair p, bool success) { update(pair_index(n_, p), success); }

  double mean(std::size_t k) const { return beta_mean(alpha_[k], beta_[k]); }
  double variance(std::size_t k) const { return beta_variance(alpha_[k], beta_[k]); }

  /// Posterior means as an interaction vector (the plug-in estimate).
  InteractionVector means() const {
    std::vector<double> v(alpha_.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = mean(k);
    return InteractionVector(n_, std::move(v));
  }

  friend bool operator==(const PosteriorState&, const PosteriorState&) = default;

 private:
  std::size_t n_ = 0;
  double prior_alpha_ = 1.0;
  double prior_beta_ = 1.0;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

inline PosteriorState init_prior(std::size_t n) { return PosteriorState(n); }

/// Value-returning conjugate update.
inline PosteriorState update(PosteriorState state, NodePair pair, bool obs) {
  state.update(pair, obs);
  return state;
}

inline NormalApprox normal_approx(const PosteriorState& state, NodePair pair) {
  const auto k = pair_index(state.nodes(), pair);
  return {state.mean(k), state.variance(k)};
}

/// Variance of `target` if the next sample were allocated to `sampled`.
inline double lookahead_variance(const PosteriorState& state, NodePair target, NodePair sampled) {
  const auto k = pair_index(state.nodes(), target);
  (void)pair_index(state.nodes(), sampled);
  const double a = state.alpha(k);
  const double b = state.beta(k);
  return target == sampled ? beta_lookahead_variance(a, b) : beta_variance(a, b);
}

/// KL(Beta(alpha,beta) || N(mean, variance)) with moment-matched normal, in
/// nats, by adaptive Gauss-Kronrod on (0,1). The interval is split at the
/// mean and at mean +/- 10 sd so the adaptive routine sees the peak.
inline double kl_beta_normal(double alpha, double beta) {
  if (!(alpha >= 1.0 && beta >= 1.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ConfigError("kl_beta_normal requires alpha, beta >= 1 (got " + std::to_string(alpha) + ", " +
                      std::to_string(beta) + ")");
  }
  const double mean = beta_mean(alpha, beta);
  const double var = beta_variance(alpha, beta);
  const double sd = std::sqrt(var);
  const double log_beta_fn = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi * var);

  auto integrand = [&](double x) {
    double log_f = -log_beta_fn;
    if (alpha != 1.0) log_f += (alpha - 1.0) * std::log(x);
    if (beta != 1.0) log_f += (beta - 1.0) * std::log1p(-x);
    if (!std::isfinite(log_f)) return 0.0;
    const double f = std::exp(log_f);
    if (f == 0.0) return 0.0;
    const double z = x - mean;
    const double log_g = -log_norm - z * z / (2.0 * var);
    return f * (log_f - log_g);
  };

  std::vector<double> cuts{0.0, mean - 10.0 * sd, mean, mean + 10.0 * sd, 1.0};
  std::erase_if(cuts, [](double c) { return c < 0.0 || c > 1.0; });
  cuts.insert(cuts.begin(), 0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Segments touching 0 or 1 go to tanh-sinh, which copes with the unbounded
  // slope of the density there; interior segments use Gauss-Kronrod.
  using Interior = boost::math::quadrature::gauss_kronrod<double, 31>;
  boost::math::quadrature::tanh_sinh<double> endpoint;
  double total = 0.0;
  double error_total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    double error = 0.0;
    if (a == 0.0 || b == 1.0) {
      total += endpoint.integrate(integrand, a, b, 1e-10, &error);
    } else {
      total += Interior::integrate(integrand, a, b, 15, 1e-10, &error);
    }
    error_total += error;
  }
  if (!std::isfinite(total) || error_total > 1e-8) {
    throw NumericalError("KL quadrature did not converge for Beta(" + std::to_string(alpha) + ", " +
                         std::to_string(beta) + "), error estimate " + std::to_string(error_total));
  }
  return std::max(total, 0.0);
}

/// One Bernoulli(x) draw; consumes exactly one value from the stream.
inline bool draw_observation(double truth, RandomStream& rng) { return rng.uniform() < truth; }

inline bool draw_observation(const InteractionVector& truth, NodePair pair, RandomStream& rng) {
  return draw_observation(truth.at(pair), rng);
}

}  // namespace mrs
