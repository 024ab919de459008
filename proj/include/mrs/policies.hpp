#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrs/sensitivity.hpp"

namespace mrs {

enum class PolicyKind { EA, AOA, DAM };

inline std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::EA:
      return "EA";
    case PolicyKind::AOA:
      return "AOA";
    case PolicyKind::DAM:
      return "DAM";
  }
  return "?";
}

inline PolicyKind parse_policy(std::string_view name) {
  if (name == "EA") return PolicyKind::EA;
  if (name == "AOA") return PolicyKind::AOA;
  if (name == "DAM") return PolicyKind::DAM;
  throw ConfigError("unknown policy '" + std::string(name) + "' (expected EA, AOA or DAM)");
}

struct PolicyConfig {
  std::size_t m = 1;
  double epsilon = kDefaultEpsilon;
  PolicyKind kind = PolicyKind::DAM;
  // AOA with d-weighted lookahead terms. Exploration only; off by default.
  bool aoa_weighted = false;

  void validate(std::size_t n) const {
    check_subset_size(n, m);
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  }
};

struct AllocationDecision {
  NodePair pair;
  std::uint64_t step = 0;  // t + 1
  std::optional<double> score;
};

/// Round-robin over pairs in lexicographic order.
inline AllocationDecision ea_next(std::uint64_t t, std::size_t n) {
  if (n < 2) throw ConfigError("EA needs at least 2 nodes");
  return {pair_at(n, static_cast<std::size_t>(t % pair_count(n))), t + 1, std::nullopt};
}

namespace detail {

// Scores within a relative 1e-9 of the incumbent count as ties. A tie goes
// to the less-sampled pair, then to the lexicographically smaller one.
inline std::size_t argmax_lex(const std::vector<double>& scores, std::span<const std::uint64_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best] * (1.0 + 1e-9)) {
      best = c;
    } else if (scores[c] >= scores[best] * (1.0 - 1e-9) && counts[c] < counts[best]) {
      best = c;
    }
  }
  return best;
}

inline void check_inputs(const PosteriorState& state, const PosteriorSummary& summary, const PolicyConfig& config) {
  if (summary.n != state.nodes() || summary.sigma_sq.size() != state.pairs()) {
    throw ConfigError("summary does not match posterior state");
  }
  config.validate(state.nodes());
}

}  // namespace detail

/// DAM value function approximation for every candidate pair, in
/// lexicographic candidate order:
///   V(c) = min_{k<=m<l} eta_kl / sum_rq d_rq(k,l)^2 sigma^2_rq(c)
/// where sigma^2_rq(c) is the lookahead variance for rq == c and the current
/// variance otherwise. Only the candidate's term differs from zeta_kl, so
/// each denominator is zeta_kl + d_c(k,l)^2 (lookahead_c - sigma_c^2).
inline std::vector<double> dam_scores(const PosteriorState& state, const PosteriorSummary& summary,
                                      const PolicyConfig& config) {
  detail::check_inputs(state, summary, config);
  const auto table = comparison_table(summary, config.m, config.epsilon);
  if ((table.zeta.array() <= 0.0).all()) {
    throw NumericalError("degenerate state: every comparison has zero variance");
  }
  const std::size_t pairs = state.pairs();
  const auto comparisons = static_cast<Eigen::Index>(table.comparisons());
  std::vector<double> scores(pairs);
  for (std::size_t c = 0; c < pairs; ++c) {
    const double shrink = beta_lookahead_variance(state.alpha(c), state.beta(c)) - summary.sigma_sq[c];
    const auto row = static_cast<Eigen::Index>(c);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < comparisons; ++j) {
      const double denom = table.zeta(j) + table.d_sq(row, j) * shrink;
      if (denom > 0.0) best = std::min(best, table.eta(j) / denom);
    }
    scores[c] = best;
  }
  return scores;
}

inline double dam_vfa(const PosteriorState& state, const PosteriorSummary& summary, NodePair candidate,
                      const PolicyConfig& config) {
  const auto k = pair_index(state.nodes(), candidate);
  return dam_scores(state, summary, config)[k];
}

inline AllocationDecision dam_next(const PosteriorState& state, const PosteriorSummary& summary,
                                   const PolicyConfig& config) {
  const auto scores = dam_scores(state, summary, config);
  const auto best = detail::argmax_lex(scores, state.counts());
  return {pair_at(state.nodes(), best), state.total() + 1, scores[best]};
}

/// AOA scores: min_kl eta_kl / sum_rq sigma^2_rq(c), i.e. the DAM rule with
/// the sensitivity weights dropped. The denominator does not depend on
/// (k,l), so the min reduces to the smallest eta.
inline std::vector<double> aoa_scores(const PosteriorState& state, const PosteriorSummary& summary,
                                      const PolicyConfig& config) {
  if (config.aoa_weighted) return dam_scores(state, summary, config);
  detail::check_inputs(state, summary, config);
  double eta_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < config.m; ++k) {
    for (std::size_t l = config.m; l < summary.n; ++l) {
      eta_min = std::min(eta_min, comparison_eta(summary, k, l, config.epsilon));
    }
  }
  double variance_sum = 0.0;
  for (double v : summary.sigma_sq) variance_sum += v;
  std::vector<double> scores(state.pairs());
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const double denom =
        variance_sum - summary.sigma_sq[c] + beta_lookahead_variance(state.alpha(c), state.beta(c));
    scores[c] = eta_min / denom;
  }
  return scores;
}

inline AllocationDecision aoa_next(const PosteriorState& state, const PosteriorSummary& summary,
                                   const PolicyConfig& config) {
  const auto scores = aoa_scores(state, summary, config);
  const auto best = detail::argmax_lex(scores, state.counts());
  return {pair_at(state.nodes(), best), state.total() + 1, scores[best]};
}

/// Nodes at the first m ranked positions, returned in ascending node order.
inline std::vector<std::size_t> select_top_m(const PosteriorSummary& summary, std::size_t m) {
  check_subset_size(summary.n, m);
  std::vector<std::size_t> out(summary.ranking.begin(), summary.ranking.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mrs
