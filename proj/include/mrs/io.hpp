#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mrs/experiment.hpp"

namespace mrs {

class IoError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// ---------------------------------------------------------------------------
// Edge counts
// ---------------------------------------------------------------------------

/// Directed interaction counts, keyed by 0-based (from, to).
struct EdgeCountTable {
  std::size_t n = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> counts;

  std::uint64_t count(std::size_t from, std::size_t to) const {
    const auto it = counts.find({from, to});
    return it == counts.end() ? 0 : it->second;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    // std::from_chars for double is incomplete on some toolchains.
    std::string buffer(text);
    char* end = nullptr;
    out = std::strtod(buffer.c_str(), &end);
    return end == buffer.c_str() + buffer.size() && std::isfinite(out);
  } else {
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), last, out);
    return ec == std::errc() && ptr == last;
  }
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// CSV `from,to,count`, node ids 1-based. An optional header row, blank
/// lines and `#` comments are skipped. When `n` is 0 the node count is the
/// largest id seen.
inline EdgeCountTable parse_edge_counts(std::istream& in, const std::string& source = "<input>",
                                        std::size_t n = 0) {
  EdgeCountTable table;
  std::size_t max_id = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  auto fail = [&](const std::string& why) {
    throw ConfigError(source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = detail::split(text, ',');
    if (fields.size() != 3) fail("expected 3 fields 'from,to,count', got " + std::to_string(fields.size()));
    if (std::exchange(first_row, false) && detail::trim(fields[0]) == "from") continue;
    std::size_t from = 0, to = 0;
    std::uint64_t count = 0;
    if (!detail::parse_number(fields[0], from) || !detail::parse_number(fields[1], to)) fail("node ids must be positive integers");
    if (!detail::parse_number(fields[2], count)) fail("count must be a nonnegative integer");
    if (from == 0 || to == 0) fail("node ids are 1-based");
    if (n != 0 && (from > n || to > n)) fail("node id out of range 1.." + std::to_string(n));
    if (from == to) fail("self-interaction " + std::to_string(from) + " -> " + std::to_string(to));
    if (!table.counts.emplace(std::pair{from - 1, to - 1}, count).second) {
      fail("duplicate row for " + std::to_string(from) + " -> " + std::to_string(to));
    }
    max_id = std::max({max_id, from, to});
  }
  table.n = n != 0 ? n : max_id;
  if (table.n < 2) throw ConfigError(source + ": edge-count table needs at least 2 nodes");
  return table;
}

inline EdgeCountTable load_edge_counts(const std::filesystem::path& path, std::size_t n = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge-count file " + path.string());
  return parse_edge_counts(in, path.string(), n);
}

/// x_ij = c_ij / (c_ij + c_ji), where c_ij counts visits from j into i
/// (rows `j,i,count`). Pairs without evidence get 0.5.
inline InteractionVector interactions_from_edge_counts(const EdgeCountTable& table) {
  std::vector<double> v;
  v.reserve(pair_count(table.n));
  for (std::size_t i = 0; i < table.n; ++i) {
    for (std::size_t j = i + 1; j < table.n; ++j) {
      const auto into_i = table.count(j, i);
      const auto into_j = table.count(i, j);
      const auto total = into_i + into_j;
      v.push_back(total == 0 ? 0.5 : static_cast<double>(into_i) / static_cast<double>(total));
    }
  }
  return InteractionVector(table.n, std::move(v));
}

inline InteractionTruth truth_from_edge_counts(const EdgeCountTable& table, std::size_t m) {
  return make_truth(interactions_from_edge_counts(table), m);
}

// ---------------------------------------------------------------------------
// Key-value documents
// ---------------------------------------------------------------------------

/// Whitespace-separated `key=value` tokens; `#` starts a comment. Keys are
/// consumed by the parsers so leftovers can be reported.
class KeyValueDocument {
 public:
  struct Entry {
    std::string value;
    std::size_t line;
    bool used = false;
  };

  static KeyValueDocument parse(std::string_view text, std::string source = "<config>") {
    KeyValueDocument doc;
    doc.source_ = std::move(source);
    std::size_t line_no = 0;
    for (auto raw : detail::split(text, '\n')) {
      ++line_no;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      std::istringstream tokens{std::string(raw)};
      std::string token;
      while (tokens >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == token.size()) {
          throw ConfigError(doc.source_ + ":" + std::to_string(line_no) + ": expected key=value, got '" + token + "'");
        }
        auto key = token.substr(0, eq);
        if (doc.entries_.contains(key)) {
          throw ConfigError(doc.source_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        doc.entries_.emplace(std::move(key), Entry{token.substr(eq + 1), line_no});
      }
    }
    return doc;
  }

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return entries_.contains(key); }

  std::string get(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
    it->second.used = true;
    return it->second.value;
  }

  std::optional<std::string> get_optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return get(key);
  }

  template <class T>
  T get_number(const std::string& key) {
    const auto text = get(key);
    T value{};
    if (!detail::parse_number(text, value)) {
      throw ConfigError(location(key) + ": key '" + key + "' has non-numeric value '" + text + "'");
    }
    return value;
  }

  template <class T>
  std::vector<T> get_list(const std::string& key) {
    const auto text = get(key);
    std::vector<T> out;
    for (auto item : detail::split(text, ',')) {
      T value{};
      if (!detail::parse_number(item, value)) {
        throw ConfigError(location(key) + ": key '" + key + "' has non-numeric item '" + std::string(item) + "'");
      }
      out.push_back(value);
    }
    return out;
  }

  std::string location(const std::string& key) const {
    const auto it = entries_.find(key);
    return source_ + (it == entries_.end() ? "" : ":" + std::to_string(it->second.line));
  }

  /// Rejects keys no parser consumed.
  void check_all_used() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.used) throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------
// Network specs
// ---------------------------------------------------------------------------

struct LinearGapSpec {
  std::size_t n;
  double base;
  double slope;
  friend bool operator==(const LinearGapSpec&, const LinearGapSpec&) = default;
};

struct UniformRandomSpec {
  std::size_t n;
  std::uint64_t seed;
  friend bool operator==(const UniformRandomSpec&, const UniformRandomSpec&) = default;
};

struct EdgeCountsSpec {
  std::string file;
  std::size_t n = 0;  // 0: infer from the file
  friend bool operator==(const EdgeCountsSpec&, const EdgeCountsSpec&) = default;
};

/// Literal parameters, lexicographic pair order.
struct ExplicitSpec {
  std::size_t n;
  std::vector<double> x;
  friend bool operator==(const ExplicitSpec&, const ExplicitSpec&) = default;
};

using NetworkSpec = std::variant<LinearGapSpec, UniformRandomSpec, EdgeCountsSpec, ExplicitSpec>;

inline NetworkSpec parse_network_spec(KeyValueDocument& doc) {
  const auto kind = doc.get("kind");
  auto node_count = [&] {
    const auto n = doc.get_number<std::size_t>("n");
    if (n < 2) throw ConfigError(doc.location("n") + ": key 'n' must be at least 2");
    return n;
  };
  if (kind == "linear-gap") {
    return LinearGapSpec{node_count(), doc.get_number<double>("base"), doc.get_number<double>("slope")};
  }
  if (kind == "uniform-random") {
    return UniformRandomSpec{node_count(), doc.get_number<std::uint64_t>("seed")};
  }
  if (kind == "edge-counts") {
    EdgeCountsSpec spec{doc.get("file")};
    if (doc.has("n")) spec.n = node_count();
    return spec;
  }
  if (kind == "explicit") {
    ExplicitSpec spec{node_count(), doc.get_list<double>("x")};
    if (spec.x.size() != pair_count(spec.n)) {
      throw ConfigError(doc.location("x") + ": key 'x' needs " + std::to_string(pair_count(spec.n)) + " values for n=" +
                        std::to_string(spec.n));
    }
    for (double v : spec.x) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(doc.location("x") + ": key 'x' values must lie in [0,1], got " + std::to_string(v));
      }
    }
    return spec;
  }
  throw ConfigError(doc.location("kind") + ": unknown network kind '" + kind +
                    "' (expected linear-gap, uniform-random, edge-counts or explicit)");
}

inline NetworkSpec parse_network_spec(std::string_view text, std::string source = "<spec>") {
  auto doc = KeyValueDocument::parse(text, std::move(source));
  auto spec = parse_network_spec(doc);
  doc.check_all_used();
  return spec;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string print_network_spec(const NetworkSpec& spec) {
  struct Printer {
    std::string operator()(const LinearGapSpec& s) const {
      return "kind=linear-gap n=" + std::to_string(s.n) + " base=" + detail::format_double(s.base) +
             " slope=" + detail::format_double(s.slope);
    }
    std::string operator()(const UniformRandomSpec& s) const {
      return "kind=uniform-random n=" + std::to_string(s.n) + " seed=" + std::to_string(s.seed);
    }
    std::string operator()(const EdgeCountsSpec& s) const {
      return "kind=edge-counts file=" + s.file + (s.n ? " n=" + std::to_string(s.n) : std::string{});
    }
    std::string operator()(const ExplicitSpec& s) const {
      std::string out = "kind=explicit n=" + std::to_string(s.n) + " x=";
      for (std::size_t k = 0; k < s.x.size(); ++k) out += (k ? "," : "") + detail::format_double(s.x[k]);
      return out;
    }
  };
  return std::visit(Printer{}, spec);
}

/// Parameters for the spec. Relative edge-count paths resolve against
/// `base_dir`. Uniform-random specs return their first draw.
inline InteractionVector interactions_for(const NetworkSpec& spec, const std::filesystem::path& base_dir = {}) {
  struct Builder {
    const std::filesystem::path& base_dir;
    InteractionVector operator()(const LinearGapSpec& s) const { return linear_gap_interactions(s.n, s.base, s.slope); }
    InteractionVector operator()(const UniformRandomSpec& s) const { return uniform_interactions(s.n, s.seed); }
    InteractionVector operator()(const EdgeCountsSpec& s) const {
      std::filesystem::path path = s.file;
      if (path.is_relative()) path = base_dir / path;
      return interactions_from_edge_counts(load_edge_counts(path, s.n));
    }
    InteractionVector operator()(const ExplicitSpec& s) const { return InteractionVector(s.n, s.x); }
  };
  return std::visit(Builder{base_dir}, spec);
}

/// Ground truth for an experiment with subset size m. Uniform-random specs
/// redraw until the top-m boundary is separated.
inline InteractionTruth truth_for(const NetworkSpec& spec, std::size_t m, const std::filesystem::path& base_dir = {}) {
  if (const auto* u = std::get_if<UniformRandomSpec>(&spec)) return make_truth_uniform(u->n, m, u->seed);
  return make_truth(interactions_for(spec, base_dir), m);
}

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

struct ExperimentDocument {
  NetworkSpec network;
  ExperimentConfig config;
};

/// Network keys plus `policies`, `m`, `budgets`, `replications`,
/// `base_seed`, `epsilon` and `aoa_weighted`.
inline ExperimentDocument parse_experiment(std::string_view text, std::string source = "<config>",
                                           const std::filesystem::path& base_dir = {}) {
  auto doc = KeyValueDocument::parse(text, std::move(source));
  ExperimentDocument out{parse_network_spec(doc), {}};
  auto& cfg = out.config;
  const auto m = doc.get_number<std::size_t>("m");
  for (auto name : detail::split(doc.get("policies"), ',')) cfg.policies.push_back(parse_policy(detail::trim(name)));
  cfg.budgets = doc.get_list<std::uint64_t>("budgets");
  cfg.replications = doc.has("replications") ? doc.get_number<std::size_t>("replications") : 2000;
  cfg.base_seed = doc.has("base_seed") ? doc.get_number<std::uint64_t>("base_seed") : 0;
  cfg.epsilon = doc.has("epsilon") ? doc.get_number<double>("epsilon") : kDefaultEpsilon;
  if (auto flag = doc.get_optional("aoa_weighted")) {
    if (*flag != "true" && *flag != "false") {
      throw ConfigError(doc.location("aoa_weighted") + ": key 'aoa_weighted' must be true or false");
    }
    cfg.aoa_weighted = *flag == "true";
  }
  doc.check_all_used();
  cfg.truth = truth_for(out.network, m, base_dir);
  cfg.validate();
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentDocument load_experiment(const std::filesystem::path& path) {
  return parse_experiment(read_file(path), path.string(), path.parent_path());
}

// ---------------------------------------------------------------------------
// PCS output
// ---------------------------------------------------------------------------

inline void write_pcs_csv(const PcsCurve& curve, std::ostream& out) {
  out << "policy,budget,pcs,stderr,replications\n";
  char buf[128];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.6f,%zu\n", std::string(to_string(p.policy)).c_str(),
                  static_cast<unsigned long long>(p.budget), p.pcs, p.stderr_, p.replications);
    out << buf;
  }
}

inline void write_pcs_csv(const PcsCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_pcs_csv(curve, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mrs
