#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mrs/policies.hpp"
#include "mrs/random.hpp"

namespace mrs {

/// Ground-truth network together with its true top-m subset.
struct InteractionTruth {
  InteractionVector x;
  std::size_t m = 0;
  Eigen::VectorXd pi;
  std::vector<std::size_t> top_m;  // ascending node order
};

/// Smallest accepted gap between the m-th and (m+1)-th true stationary probabilities.
inline constexpr double kTruthSeparation = 1e-6;

inline InteractionTruth make_truth(InteractionVector x, std::size_t m) {
  check_subset_size(x.nodes(), m);
  InteractionTruth t;
  t.pi = stationary(build_transition(x));
  const auto order = rank_nodes(t.pi);
  const double gap = t.pi(static_cast<Eigen::Index>(order[m - 1])) - t.pi(static_cast<Eigen::Index>(order[m]));
  if (!(gap >= kTruthSeparation)) {
    throw ConfigError("true stationary probabilities at ranks " + std::to_string(m) + " and " +
                      std::to_string(m + 1) + " are not separated (gap " + std::to_string(gap) +
                      "); the correct subset is ill-defined");
  }
  t.top_m.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(t.top_m.begin(), t.top_m.end());
  t.x = std::move(x);
  t.m = m;
  return t;
}

/// x_ij = base + slope * (j - i).
inline InteractionVector linear_gap_interactions(std::size_t n, double base, double slope) {
  if (n < 2) throw ConfigError("node count must be at least 2");
  std::vector<double> v;
  v.reserve(pair_count(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) v.push_back(base + slope * static_cast<double>(j - i));
  }
  return InteractionVector(n, std::move(v));
}

inline InteractionTruth make_truth_example1(std::size_t m = 3) {
  return make_truth(linear_gap_interactions(10, 0.5, 0.03), m);
}

/// Interactions drawn i.i.d. U[0,1]; `attempt` selects the attempt-th block
/// of draws from the seeded stream (attempt 0 is the first block).
inline InteractionVector uniform_interactions(std::size_t n, std::uint64_t seed, std::size_t attempt = 0) {
  if (n < 2) throw ConfigError("node count must be at least 2");
  RandomStream rng(seed);
  std::vector<double> v(pair_count(n));
  for (std::size_t a = 0; a <= attempt; ++a) {
    for (auto& value : v) value = rng.uniform();
  }
  return InteractionVector(n, std::move(v));
}

/// Uniform random truth, redrawn (same stream) until ranks m and m+1 separate.
inline InteractionTruth make_truth_uniform(std::size_t n, std::size_t m, std::uint64_t seed) {
  check_subset_size(n, m);
  RandomStream rng(seed);
  std::vector<double> v(pair_count(n));
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (auto& value : v) value = rng.uniform();
    try {
      return make_truth(InteractionVector(n, v), m);
    } catch (const ConfigError&) {
      continue;
    }
  }
  throw NumericalError("no separated uniform truth after 100 attempts (n=" + std::to_string(n) +
                       ", seed=" + std::to_string(seed) + ")");
}

/// One step of an allocation run, reported to trace observers.
struct TraceStep {
  std::uint64_t step;  // t + 1
  NodePair pair;
  bool observation;
  std::optional<double> score;
};

struct ReplicationResult {
  std::vector<bool> correct;                          // per budget checkpoint
  std::vector<std::vector<std::size_t>> selections;   // selected subset per checkpoint
  std::vector<std::vector<std::uint64_t>> counts;     // pair counts per checkpoint
};

class ReplicationError : public NumericalError {
 public:
  ReplicationError(const std::string& what, std::uint64_t seed)
      : NumericalError(what + " [replication seed " + std::to_string(seed) + "]"), seed_(seed) {}
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

namespace detail {

inline void check_budgets(const std::vector<std::uint64_t>& budgets) {
  if (budgets.empty()) throw ConfigError("at least one budget checkpoint is required");
  for (std::size_t b = 1; b < budgets.size(); ++b) {
    if (budgets[b] <= budgets[b - 1]) throw ConfigError("budgets must be strictly ascending");
  }
}

}  // namespace detail

/// Sample-allocate-select loop from the uniform prior. Selection at budget b
/// uses exactly b samples. `observer`, when set, sees every step.
inline ReplicationResult run_replication(const InteractionTruth& truth, const PolicyConfig& config,
                                         const std::vector<std::uint64_t>& budgets, RandomStream& rng,
                                         const std::function<void(const TraceStep&, const PosteriorState&)>& observer = {}) {
  const std::size_t n = truth.x.nodes();
  config.validate(n);
  if (config.m != truth.m) throw ConfigError("policy subset size differs from the truth's m");
  detail::check_budgets(budgets);

  PosteriorState state(n);
  ReplicationResult out;
  const std::uint64_t horizon = budgets.back();
  std::size_t next_checkpoint = 0;
  const bool needs_sensitivities =
      config.kind == PolicyKind::DAM || (config.kind == PolicyKind::AOA && config.aoa_weighted);

  for (std::uint64_t t = 0;; ++t) {
    std::optional<PosteriorSummary> summary;
    auto current_summary = [&]() -> const PosteriorSummary& {
      if (!summary) summary = needs_sensitivities ? summarize(state) : summarize_means(state);
      return *summary;
    };

    while (next_checkpoint < budgets.size() && budgets[next_checkpoint] == t) {
      auto selected = select_top_m(current_summary(), config.m);
      out.correct.push_back(selected == truth.top_m);
      out.selections.push_back(std::move(selected));
      out.counts.emplace_back(state.counts().begin(), state.counts().end());
      ++next_checkpoint;
    }
    if (t == horizon) break;

    AllocationDecision decision;
    switch (config.kind) {
      case PolicyKind::EA:
        decision = ea_next(t, n);
        break;
      case PolicyKind::AOA:
        decision = aoa_next(state, current_summary(), config);
        break;
      case PolicyKind::DAM:
        decision = dam_next(state, current_summary(), config);
        break;
    }
    const bool obs = draw_observation(truth.x, decision.pair, rng);
    state.update(decision.pair, obs);
    if (observer) observer({decision.step, decision.pair, obs, decision.score}, state);
  }
  return out;
}

struct ExperimentConfig {
  InteractionTruth truth;
  std::vector<PolicyKind> policies;
  double epsilon = kDefaultEpsilon;
  bool aoa_weighted = false;
  std::vector<std::uint64_t> budgets;
  std::size_t replications = 1;
  std::uint64_t base_seed = 0;

  std::size_t m() const { return truth.m; }

  PolicyConfig policy_config(PolicyKind kind) const { return {truth.m, epsilon, kind, aoa_weighted}; }

  void validate() const {
    if (policies.empty()) throw ConfigError("at least one policy is required");
    for (std::size_t a = 0; a < policies.size(); ++a) {
      for (std::size_t b = a + 1; b < policies.size(); ++b) {
        if (policies[a] == policies[b]) throw ConfigError("policy listed twice: " + std::string(to_string(policies[a])));
      }
    }
    detail::check_budgets(budgets);
    if (budgets.front() == 0) throw ConfigError("budgets must be positive");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    for (auto kind : policies) policy_config(kind).validate(truth.x.nodes());
  }
};

struct PcsPoint {
  PolicyKind policy;
  std::uint64_t budget;
  double pcs;
  double stderr_;
  std::size_t replications;
};

/// Rows ordered by policy name, then ascending budget.
struct PcsCurve {
  std::vector<PcsPoint> points;

  std::optional<PcsPoint> find(PolicyKind policy, std::uint64_t budget) const {
    for (const auto& p : points) {
      if (p.policy == policy && p.budget == budget) return p;
    }
    return std::nullopt;
  }

  double pcs(PolicyKind policy, std::uint64_t budget) const {
    const auto p = find(policy, budget);
    if (!p) throw ConfigError("no PCS estimate for " + std::string(to_string(policy)) + " at budget " +
                              std::to_string(budget));
    return p->pcs;
  }
};

inline double pcs_standard_error(double p, std::size_t replications) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(replications));
}

/// Monte Carlo PCS per policy and budget. Replication r of every policy uses
/// the stream seeded with base_seed + r; results do not depend on `workers`.
inline PcsCurve estimate_pcs(const ExperimentConfig& config, std::size_t workers = 1) {
  config.validate();
  const std::size_t policies = config.policies.size();
  const std::size_t reps = config.replications;
  const std::size_t checkpoints = config.budgets.size();
  const std::size_t jobs = policies * reps;

  std::vector<unsigned char> correct(jobs * checkpoints, 0);
  std::vector<std::string> failures(jobs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t policy = job / reps;
      const std::size_t rep = job % reps;
      const std::uint64_t seed = config.base_seed + rep;
      try {
        auto rng = RandomStream::for_replication(config.base_seed, rep);
        const auto result =
            run_replication(config.truth, config.policy_config(config.policies[policy]), config.budgets, rng);
        for (std::size_t b = 0; b < checkpoints; ++b) correct[job * checkpoints + b] = result.correct[b] ? 1 : 0;
      } catch (const std::exception& e) {
        failures[job] = std::string(to_string(config.policies[policy])) + " replication " + std::to_string(rep) +
                        " (seed " + std::to_string(seed) + "): " + e.what();
      }
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, jobs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::size_t failed = 0;
  std::string report;
  for (const auto& f : failures) {
    if (f.empty()) continue;
    if (failed < 5) report += "\n  " + f;
    ++failed;
  }
  if (failed > 0) {
    throw NumericalError(std::to_string(failed) + " replication(s) failed:" + report);
  }

  std::vector<std::size_t> order(policies);
  for (std::size_t p = 0; p < policies; ++p) order[p] = p;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return to_string(config.policies[a]) < to_string(config.policies[b]); });

  PcsCurve curve;
  for (std::size_t p : order) {
    for (std::size_t b = 0; b < checkpoints; ++b) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < reps; ++r) hits += correct[(p * reps + r) * checkpoints + b];
      const double pcs = static_cast<double>(hits) / static_cast<double>(reps);
      curve.points.push_back({config.policies[p], config.budgets[b], pcs, pcs_standard_error(pcs, reps), reps});
    }
  }
  return curve;
}

}  // namespace mrs
