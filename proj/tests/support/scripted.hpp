#pragma once

#include <random>
#include <vector>

#include "mrs/posterior.hpp"
#include "support/oracle.hpp"

namespace scripted {

struct Outcome {
  mrs::NodePair pair;
  int successes;
  int failures;
};

inline mrs::PosteriorState state(std::size_t n, const std::vector<Outcome>& outcomes) {
  mrs::PosteriorState s(n);
  for (const auto& o : outcomes) {
    for (int i = 0; i < o.successes; ++i) s.update(o.pair, true);
    for (int i = 0; i < o.failures; ++i) s.update(o.pair, false);
  }
  return s;
}

// Every pair gets a random number of observations in [lo, hi].
inline mrs::PosteriorState random_state(std::size_t n, std::mt19937_64& gen, int lo = 0, int hi = 30) {
  mrs::PosteriorState s(n);
  std::uniform_int_distribution<int> count(lo, hi);
  for (std::size_t k = 0; k < s.pairs(); ++k) {
    const int total = count(gen);
    std::uniform_int_distribution<int> wins(0, total);
    const int w = wins(gen);
    for (int i = 0; i < total; ++i) s.update(k, i < w);
  }
  return s;
}

inline std::vector<oracle::Beta> betas(const mrs::PosteriorState& s) {
  std::vector<oracle::Beta> out;
  for (std::size_t k = 0; k < s.pairs(); ++k) out.push_back({s.alpha(k), s.beta(k)});
  return out;
}

// State on relabeled nodes: node v becomes perm[v]. A pair whose order flips
// swaps its success and failure counts.
inline mrs::PosteriorState relabel(const mrs::PosteriorState& s, const std::vector<std::size_t>& perm) {
  const std::size_t n = s.nodes();
  mrs::PosteriorState out(n);
  for (std::size_t k = 0; k < s.pairs(); ++k) {
    const auto [i, j] = mrs::pair_at(n, k);
    const std::size_t a = perm[i], b = perm[j];
    const bool flipped = a > b;
    const mrs::NodePair target{std::min(a, b), std::max(a, b)};
    const int wins = static_cast<int>(s.alpha(k) - 1.0);
    const int losses = static_cast<int>(s.beta(k) - 1.0);
    for (int w = 0; w < wins; ++w) out.update(target, !flipped);
    for (int l = 0; l < losses; ++l) out.update(target, flipped);
  }
  return out;
}

}  // namespace scripted
