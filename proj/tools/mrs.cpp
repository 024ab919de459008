// mrs: solve PageRank-style chains, check the Beta/normal approximation,
// trace single allocation runs and estimate PCS curves.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "mrs/mrs.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

template <class Row>
void write_row(std::ostream& out, const Row& row) {
  for (Eigen::Index k = 0; k < row.size(); ++k) out << (k ? "," : "") << fixed6(row(k));
  out << "\n";
}

std::string node_list(const std::vector<std::size_t>& nodes) {
  std::string out;
  for (auto v : nodes) out += (out.empty() ? "" : " ") + std::to_string(v + 1);
  return out;
}

// Output stream that is stdout unless a path is given.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw mrs::IoError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::size_t default_workers() {
  if (const char* env = std::getenv("MRS_WORKERS")) {
    std::size_t w = 0;
    if (mrs::detail::parse_number(env, w) && w > 0) return w;
    throw mrs::ConfigError("MRS_WORKERS must be a positive integer, got '" + std::string(env) + "'");
  }
  return 1;
}

void cmd_solve(const std::string& spec_path, bool derivatives, const std::string& output) {
  const auto spec = mrs::parse_network_spec(mrs::read_file(spec_path), spec_path);
  const auto x = mrs::interactions_for(spec, std::filesystem::path(spec_path).parent_path());
  const auto p = mrs::build_transition(x);
  const mrs::StationarySystem system(p);

  Output out(output);
  auto& os = out.stream();
  os << "# transition matrix\n";
  for (Eigen::Index r = 0; r < p.entries.rows(); ++r) write_row(os, p.entries.row(r));
  os << "# stationary\n";
  write_row(os, system.pi());
  if (derivatives) {
    const auto solution = mrs::stationary_derivatives(system, x);
    os << "# derivatives: one row per pair (1,2),(1,3),...,(n-1,n)\n";
    for (Eigen::Index k = 0; k < solution.dpi.rows(); ++k) write_row(os, solution.dpi.row(k));
  }
}

void cmd_kl_check(double alpha, double beta) { std::cout << fixed6(mrs::kl_beta_normal(alpha, beta)) << "\n"; }

void cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& policy_name,
                  std::uint64_t steps, const std::string& output) {
  const auto doc = mrs::load_experiment(config_path);
  const auto& cfg = doc.config;
  const auto kind = policy_name.empty() ? cfg.policies.front() : mrs::parse_policy(policy_name);
  const std::vector<std::uint64_t> budgets{steps ? steps : cfg.budgets.back()};

  Output out(output);
  auto& os = out.stream();
  os << "step,i,j,observation,top_m\n";
  auto rng = mrs::RandomStream(seed);
  const auto result = mrs::run_replication(
      cfg.truth, cfg.policy_config(kind), budgets, rng,
      [&](const mrs::TraceStep& step, const mrs::PosteriorState& state) {
        const auto selected = mrs::select_top_m(mrs::summarize_means(state), cfg.m());
        os << step.step << "," << step.pair.first + 1 << "," << step.pair.second + 1 << ","
           << (step.observation ? 1 : 0) << "," << node_list(selected) << "\n";
      });
  os << "# policy=" << mrs::to_string(kind) << " seed=" << seed << " selected=" << node_list(result.selections.back())
     << " truth=" << node_list(cfg.truth.top_m) << " correct=" << (result.correct.back() ? 1 : 0) << "\n";
}

void cmd_pcs(const std::string& config_path, const std::string& output, std::size_t workers) {
  const auto doc = mrs::load_experiment(config_path);
  const auto curve = mrs::estimate_pcs(doc.config, workers);
  if (output.empty()) {
    mrs::write_pcs_csv(curve, std::cout);
  } else {
    mrs::write_pcs_csv(curve, output);
  }
  // Summaries go to stdout unless the CSV itself is on stdout.
  std::ostream& summary = output.empty() ? std::cerr : std::cout;
  std::string current;
  for (const auto& p : curve.points) {
    const std::string name(mrs::to_string(p.policy));
    if (name != current) {
      if (!current.empty()) summary << "\n";
      summary << name << ":";
      current = name;
    }
    summary << " " << p.budget << "=" << fixed6(p.pcs);
  }
  if (!current.empty()) summary << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-m node selection in random networks"};
  app.require_subcommand(1);

  std::string spec_path, config_path, output, policy;
  bool derivatives = false;
  double alpha = 0, beta = 0;
  std::uint64_t seed = 0, steps = 0;
  std::size_t workers = 0;

  auto* solve = app.add_subcommand("solve", "Print transition matrix, stationary vector and derivatives");
  solve->add_option("--spec", spec_path, "Network spec file")->required();
  solve->add_flag("--derivatives", derivatives, "Also print d pi / d x for every pair");
  solve->add_option("--output,-o", output, "Write CSV here instead of stdout");

  auto* kl = app.add_subcommand("kl-check", "KL divergence of Beta(alpha,beta) from its moment-matched normal");
  kl->add_option("--alpha,alpha", alpha)->required();
  kl->add_option("--beta,beta", beta)->required();

  auto* simulate = app.add_subcommand("simulate", "Trace one replication");
  simulate->add_option("--config", config_path, "Experiment config file")->required();
  simulate->add_option("--seed", seed, "Stream seed");
  simulate->add_option("--policy", policy, "EA, AOA or DAM (default: first configured policy)");
  simulate->add_option("--steps", steps, "Number of samples (default: largest budget)");
  simulate->add_option("--output,-o", output, "Write trace here instead of stdout");

  auto* pcs = app.add_subcommand("pcs", "Estimate PCS curves");
  pcs->add_option("--config", config_path, "Experiment config file")->required();
  pcs->add_option("--output,-o", output, "Write CSV here instead of stdout");
  pcs->add_option("--workers", workers, "Worker threads (default: MRS_WORKERS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve) cmd_solve(spec_path, derivatives, output);
    if (*kl) cmd_kl_check(alpha, beta);
    if (*simulate) cmd_simulate(config_path, seed, policy, steps, output);
    if (*pcs) cmd_pcs(config_path, output, workers ? workers : default_workers());
  } catch (const mrs::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mrs::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
