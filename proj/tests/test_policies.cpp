#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "mrs/policies.hpp"
#include "support/oracle.hpp"
#include "support/scripted.hpp"

using namespace mrs;

namespace {

PolicyConfig config(std::size_t m, PolicyKind kind = PolicyKind::DAM) { return {m, 1e-4, kind, false}; }

// Six observations spread over a 3-node network.
PosteriorState six_observations() {
  return scripted::state(3, {{{0, 1}, 2, 0}, {{0, 2}, 1, 1}, {{1, 2}, 0, 2}});
}

}  // namespace

TEST(EqualAllocation, RoundRobin) {
  EXPECT_EQ(ea_next(0, 3).pair, (NodePair{0, 1}));
  const std::vector<NodePair> expected{{0, 1}, {0, 2}, {1, 2}, {0, 1}, {0, 2}};
  for (std::uint64_t t = 0; t < expected.size(); ++t) {
    const auto d = ea_next(t, 3);
    EXPECT_EQ(d.pair, expected[t]);
    EXPECT_EQ(d.step, t + 1);
    EXPECT_FALSE(d.score.has_value());
  }
  EXPECT_THROW(ea_next(0, 1), ConfigError);
}

TEST(EqualAllocation, BalanceProperty) {
  std::mt19937_64 gen(5);
  for (int c = 0; c < 250; ++c) {
    const std::size_t n = 2 + gen() % 12;
    const std::uint64_t budget = gen() % 500;
    std::vector<std::uint64_t> counts(pair_count(n), 0);
    for (std::uint64_t t = 0; t < budget; ++t) ++counts[pair_index(n, ea_next(t, n).pair)];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*hi - *lo, 1u);
    if (budget % pair_count(n) == 0) {
      EXPECT_EQ(*hi, *lo);
    }
  }
}

TEST(Dam, TwoNodePrior) {
  const auto state = init_prior(2);
  const auto s = summarize(state);
  EXPECT_NEAR(dam_vfa(state, s, {0, 1}, config(1)), 4e-8, 1e-20);
  const auto d = dam_next(state, s, config(1));
  EXPECT_EQ(d.pair, (NodePair{0, 1}));
  EXPECT_EQ(d.step, 1u);
  ASSERT_TRUE(d.score.has_value());
  EXPECT_NEAR(*d.score, 4e-8, 1e-20);
}

TEST(Dam, ScoresAtLeastBallRadius) {
  std::mt19937_64 gen(12);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 3 + c % 4;
    const auto state = scripted::random_state(n, gen);
    const auto s = summarize(state);
    const std::size_t m = 1 + c % (n - 1);
    const double radius = ball_radius_sq(s, m);
    for (double v : dam_scores(state, s, config(m))) EXPECT_GE(v, radius * (1 - 1e-12));
  }
}

TEST(Dam, SixObservationOracle) {
  const auto state = six_observations();
  const auto s = summarize(state);
  const auto ref = oracle::dam_brute_force(3, scripted::betas(state), 1, 1e-4);
  const auto scores = dam_scores(state, s, config(1));
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(scores[c], ref.scores[c], 1e-12);
    EXPECT_NEAR(scores[c], ref.scores[c], 1e-9 * ref.scores[c]);
  }
  EXPECT_EQ(pair_index(3, dam_next(state, s, config(1)).pair), ref.argmax);
}

TEST(Dam, ScriptedStatesMatchOracle) {
  std::mt19937_64 gen(2024);
  for (int c = 0; c < 40; ++c) {
    const std::size_t n = 3 + c % 2;
    const auto state = c < 2 ? init_prior(n) : scripted::random_state(n, gen, 0, 12);
    const auto s = summarize(state);
    for (std::size_t m = 1; m < n; ++m) {
      const auto ref = oracle::dam_brute_force(n, scripted::betas(state), m, 1e-4);
      const auto scores = dam_scores(state, s, config(m));
      for (std::size_t k = 0; k < scores.size(); ++k) {
        EXPECT_NEAR(scores[k], ref.scores[k], 1e-12) << "case " << c << " m " << m;
        EXPECT_NEAR(scores[k], ref.scores[k], 1e-9 * ref.scores[k]) << "case " << c << " m " << m;
        EXPECT_DOUBLE_EQ(dam_vfa(state, s, pair_at(n, k), config(m)), scores[k]);
      }
      EXPECT_EQ(pair_index(n, dam_next(state, s, config(m)).pair), ref.argmax) << "case " << c << " m " << m;
    }
  }
}

TEST(Dam, CandidateChangesOneVarianceTerm) {
  std::mt19937_64 gen(77);
  const auto state = scripted::random_state(4, gen, 2, 15);
  const auto s = summarize(state);
  const std::size_t m = 2;
  const auto table = comparison_table(s, m, 1e-4);
  const auto scores = dam_scores(state, s, config(m));
  for (std::size_t cand = 0; cand < state.pairs(); ++cand) {
    double best = INFINITY;
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t l = m; l < 4; ++l) {
        double direct = 0.0;
        for (std::size_t p = 0; p < state.pairs(); ++p) {
          const double v = p == cand ? beta_lookahead_variance(state.alpha(p), state.beta(p)) : state.variance(p);
          direct += s.d(p, k, l) * s.d(p, k, l) * v;
        }
        const auto j = static_cast<Eigen::Index>(k * (4 - m) + (l - m));
        const double d = s.d(cand, k, l);
        const double shift =
            d * d * (beta_lookahead_variance(state.alpha(cand), state.beta(cand)) - state.variance(cand));
        EXPECT_NEAR(direct, table.zeta(j) + shift, 1e-15);
        best = std::min(best, table.eta(j) / direct);
      }
    }
    EXPECT_NEAR(scores[cand], best, 1e-12 * best);
  }
}

TEST(Dam, ArgmaxEquivariance) {
  std::mt19937_64 gen(88);
  int checked = 0;
  for (int c = 0; c < 200; ++c) {
    const auto state = scripted::random_state(4, gen, 1, 25);
    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), gen);
    const auto relabeled = scripted::relabel(state, perm);
    const auto a = summarize(state);
    const auto b = summarize(relabeled);
    auto scores = dam_scores(state, a, config(2));
    std::sort(scores.begin(), scores.end(), std::greater<>());
    bool clear = scores[0] > scores[1] * (1 + 1e-6);
    for (std::size_t r = 0; r + 1 < 4; ++r) clear = clear && a.pi_ranked(r) - a.pi_ranked(r + 1) > 1e-9;
    if (!clear) continue;
    ++checked;
    const auto pa = dam_next(state, a, config(2)).pair;
    const auto pb = dam_next(relabeled, b, config(2)).pair;
    const NodePair mapped{std::min(perm[pa.first], perm[pa.second]), std::max(perm[pa.first], perm[pa.second])};
    EXPECT_EQ(pb, mapped);
  }
  EXPECT_GT(checked, 100);
}

TEST(Dam, TieGoesToLeastSampledPair) {
  // Nodes 3 and 4 are untouched, so no single pair improves their comparison.
  const auto state = scripted::state(4, {{{0, 1}, 3, 0}});
  const auto s = summarize(state);
  const auto d = dam_next(state, s, config(2));
  EXPECT_NE(d.pair, (NodePair{0, 1}));
  EXPECT_EQ(state.count(d.pair), 0u);
}

TEST(Dam, DegenerateStateIsReported) {
  const auto state = init_prior(3);
  auto s = summarize(state);
  std::fill(s.sigma_sq.begin(), s.sigma_sq.end(), 0.0);
  EXPECT_THROW(dam_scores(state, s, config(1)), NumericalError);
}

TEST(Aoa, TwoNodeAndPrior) {
  EXPECT_EQ(aoa_next(init_prior(2), summarize_means(init_prior(2)), config(1, PolicyKind::AOA)).pair,
            (NodePair{0, 1}));
  for (std::size_t n = 3; n < 8; ++n) {
    const auto state = init_prior(n);
    const auto scores = aoa_scores(state, summarize_means(state), config(1, PolicyKind::AOA));
    for (double v : scores) EXPECT_DOUBLE_EQ(v, scores[0]);
    EXPECT_EQ(aoa_next(state, summarize_means(state), config(1, PolicyKind::AOA)).pair, (NodePair{0, 1}));
  }
}

TEST(Aoa, PicksLargestVarianceReduction) {
  const auto state = scripted::state(3, {{{0, 1}, 25, 25}, {{1, 2}, 30, 20}});
  ASSERT_EQ(state.count(NodePair{0, 2}), 0u);
  const auto d = aoa_next(state, summarize_means(state), config(1, PolicyKind::AOA));
  EXPECT_EQ(d.pair, (NodePair{0, 2}));

  // Direct evaluation of the printed rule.
  const auto s = summarize_means(state);
  double eta = INFINITY;
  for (std::size_t l = 1; l < 3; ++l) eta = std::min(eta, std::pow(s.pi_ranked(0) - s.pi_ranked(l) + 1e-4, 2));
  const auto scores = aoa_scores(state, s, config(1, PolicyKind::AOA));
  for (std::size_t c = 0; c < 3; ++c) {
    double denom = 0.0;
    for (std::size_t p = 0; p < 3; ++p)
      denom += p == c ? beta_lookahead_variance(state.alpha(p), state.beta(p)) : state.variance(p);
    EXPECT_NEAR(scores[c], eta / denom, 1e-12 * scores[c]);
  }
}

TEST(Aoa, WeightedVariantMatchesDam) {
  std::mt19937_64 gen(3);
  const auto state = scripted::random_state(5, gen);
  const auto s = summarize(state);
  PolicyConfig weighted = config(2, PolicyKind::AOA);
  weighted.aoa_weighted = true;
  EXPECT_EQ(aoa_scores(state, s, weighted), dam_scores(state, s, config(2)));
}

TEST(Policies, Deterministic) {
  std::mt19937_64 gen(21);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 3 + c % 5;
    const auto state = scripted::random_state(n, gen);
    const std::size_t m = 1 + c % (n - 1);
    const auto a = dam_next(state, summarize(state), config(m));
    const auto b = dam_next(state, summarize(state), config(m));
    EXPECT_EQ(a.pair, b.pair);
    EXPECT_EQ(a.score, b.score);
    EXPECT_EQ(aoa_next(state, summarize_means(state), config(m, PolicyKind::AOA)).pair,
              aoa_next(state, summarize_means(state), config(m, PolicyKind::AOA)).pair);
  }
}

TEST(Policies, ValidateInputs) {
  const auto state = init_prior(3);
  const auto s = summarize(state);
  EXPECT_THROW(dam_next(state, s, config(3)), ConfigError);
  EXPECT_THROW(dam_next(state, s, config(0)), ConfigError);
  EXPECT_THROW(dam_next(state, s, {1, 0.0, PolicyKind::DAM, false}), ConfigError);
  EXPECT_THROW(dam_next(init_prior(4), s, config(1)), ConfigError);
  EXPECT_THROW(parse_policy("OCBA"), ConfigError);
  EXPECT_EQ(parse_policy("AOA"), PolicyKind::AOA);
  EXPECT_EQ(to_string(PolicyKind::EA), "EA");
}

TEST(SelectTopM, Examples) {
  const auto reference = scripted::state(3, {{{0, 1}, 6, 2}, {{0, 2}, 6, 12}, {{1, 2}, 5, 3}});
  const auto s = summarize_means(reference);
  EXPECT_EQ(select_top_m(s, 1), (std::vector<std::size_t>{2}));
  EXPECT_EQ(select_top_m(s, 2), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(select_top_m(summarize_means(init_prior(2)), 1), (std::vector<std::size_t>{0}));
  EXPECT_THROW(select_top_m(s, 3), ConfigError);
}
