#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mrs {

// Configuration or input problems (bad spec, bad indices, malformed files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures: singular chains, degenerate policy scores, quadrature.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unordered node pair stored with first < second. Nodes are 0-based
/// internally; everything user-facing prints them 1-based.
struct NodePair {
  std::size_t first = 0;
  std::size_t second = 1;

  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

inline std::string to_string(NodePair p) {
  return "(" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")";
}

inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

/// Position of (i,j) in lexicographic order over all i < j.
inline std::size_t pair_index(std::size_t n, NodePair p) {
  if (p.first >= p.second || p.second >= n) {
    throw ConfigError("invalid node pair " + to_string(p) + " for n=" + std::to_string(n));
  }
  // Rows 0..i-1 contribute (n-1) + (n-2) + ... + (n-i) entries.
  const std::size_t i = p.first;
  return i * (2 * n - i - 1) / 2 + (p.second - i - 1);
}

inline NodePair pair_at(std::size_t n, std::size_t index) {
  std::size_t i = 0;
  std::size_t row = n - 1;
  while (index >= row) {
    index -= row;
    ++i;
    --row;
    if (row == 0) {
      throw ConfigError("pair index out of range for n=" + std::to_string(n));
    }
  }
  return {i, i + 1 + index};
}

/// All pairs of an n-node network in lexicographic order.
inline std::vector<NodePair> all_pairs(std::size_t n) {
  std::vector<NodePair> out;
  out.reserve(pair_count(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.push_back({i, j});
  }
  return out;
}

/// Interaction parameters x_ij, one per unordered pair, each in [0,1].
class InteractionVector {
 public:
  InteractionVector() = default;

  InteractionVector(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (n < 2) throw ConfigError("node count must be at least 2, got " + std::to_string(n));
    if (values_.size() != pair_count(n)) {
      throw ConfigError("expected " + std::to_string(pair_count(n)) + " interaction values for n=" +
                        std::to_string(n) + ", got " + std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double v = values_[k];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("interaction value for pair " + to_string(pair_at(n, k)) + " is " +
                          std::to_string(v) + ", outside [0,1]");
      }
    }
  }

  static InteractionVector constant(std::size_t n, double value) {
    return InteractionVector(n, std::vector<double>(n < 2 ? 0 : pair_count(n), value));
  }

  std::size_t nodes() const { return n_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t k) const { return values_[k]; }
  double at(NodePair p) const { return values_[pair_index(n_, p)]; }
  std::span<const double> values() const { return values_; }

  /// Copy with one entry replaced; the result is validated like any other vector.
  InteractionVector with(std::size_t k, double value) const {
    auto v = values_;
    v.at(k) = value;
    return InteractionVector(n_, std::move(v));
  }

  friend bool operator==(const InteractionVector&, const InteractionVector&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

}  // namespace mrs
