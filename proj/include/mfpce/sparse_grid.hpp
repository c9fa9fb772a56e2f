#pragma once

// Isotropic Smolyak sparse grids built from Gauss rules with the 2m+1 growth rule.
// Levels are counted from 0: level l uses growth(l) = 2^(l+1) - 1 points.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mfpce/orthopoly.hpp"

namespace mfpce {

/// n-tuple of non-negative integers; serves both as a polynomial degree vector and
/// as a sparse-grid level vector.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t n, int fill = 0) : entries_(n, fill) {}
  MultiIndex(std::initializer_list<int> entries) : entries_(entries) {}
  explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {}

  std::size_t size() const { return entries_.size(); }
  int operator[](std::size_t i) const { return entries_[i]; }
  int& operator[](std::size_t i) { return entries_[i]; }

  int sum() const { return std::accumulate(entries_.begin(), entries_.end(), 0); }
  bool is_zero() const {
    return std::all_of(entries_.begin(), entries_.end(), [](int v) { return v == 0; });
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const std::vector<int>& entries() const { return entries_; }

  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> entries_;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& idx) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (int v : idx) h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

/// Number of 1D Gauss points at a level: 1, 3, 7, 15, ...
inline int growth(int level) {
  if (level < 0) throw std::invalid_argument("growth: level must be >= 0");
  return (1 << (level + 1)) - 1;
}

struct LevelTerm {
  MultiIndex levels;
  int coeff;
};

namespace detail {

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Visits every multi-index of length n with entry sum in [lo, hi], lexicographically.
inline void for_each_bounded_sum(std::size_t n, int lo, int hi,
                                 const std::function<void(const MultiIndex&)>& visit) {
  MultiIndex idx(n);
  std::function<void(std::size_t, int)> rec = [&](std::size_t dim, int used) {
    if (dim == n) {
      if (used >= lo) visit(idx);
      return;
    }
    for (int v = 0; used + v <= hi; ++v) {
      idx[dim] = v;
      rec(dim + 1, used + v);
    }
    idx[dim] = 0;
  };
  rec(0, 0);
}

}  // namespace detail

/// Smolyak combination terms of the level-w grid in n dimensions, sorted by levels.
inline std::vector<LevelTerm> level_terms(int n, int w) {
  if (n < 1 || w < 0) throw std::invalid_argument("level_terms: need n >= 1 and w >= 0");
  std::vector<LevelTerm> terms;
  detail::for_each_bounded_sum(static_cast<std::size_t>(n), std::max(0, w - n + 1), w,
                               [&](const MultiIndex& l) {
                                 const int k = w - l.sum();
                                 const long long c = detail::binomial(n - 1, k);
                                 terms.push_back({l, static_cast<int>(k % 2 == 0 ? c : -c)});
                               });
  return terms;
}

/// Deduplication key of a node in standard coordinates (coordinates rounded to 1e-12).
using NodeKey = std::vector<std::int64_t>;

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& key) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto v : key) {
      h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

inline NodeKey node_key(std::span<const double> x) {
  NodeKey key(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) key[i] = std::llround(x[i] * 1e12);
  return key;
}

/// Deduplicated node/weight set in standard coordinates.
class QuadratureGrid {
 public:
  QuadratureGrid() = default;
  explicit QuadratureGrid(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }

  std::span<const double> node(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  const NodeKey& key(std::size_t i) const { return keys_[i]; }

  /// Index of the node with this key, or size() when absent.
  std::size_t find(const NodeKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? size() : it->second;
  }

  /// Adds weight at x, merging with an existing node of the same key. Returns its index.
  std::size_t accumulate(std::span<const double> x, double weight) {
    NodeKey key = node_key(x);
    auto [it, inserted] = index_.try_emplace(key, size());
    if (inserted) {
      coords_.insert(coords_.end(), x.begin(), x.end());
      weights_.push_back(weight);
      keys_.push_back(std::move(key));
    } else {
      weights_[it->second] += weight;
    }
    return it->second;
  }

  /// Node i mapped to physical coordinates.
  std::vector<double> physical(std::size_t i, std::span<const VariableSpec> specs) const {
    std::vector<double> xi(dim_);
    const auto x = node(i);
    for (std::size_t j = 0; j < dim_; ++j) xi[j] = specs[j].from_standard(x[j]);
    return xi;
  }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += weights_[i] * f(node(i));
    return sum;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
  std::vector<NodeKey> keys_;
  std::unordered_map<NodeKey, std::size_t, NodeKeyHash> index_;
};

/// The 1D rules of a tensor grid, one per dimension.
inline std::vector<const GaussRule*> tensor_rules(const MultiIndex& levels,
                                                  std::span<const VariableSpec> specs) {
  if (levels.size() != specs.size()) {
    throw std::invalid_argument("tensor_grid: one level per variable required");
  }
  std::vector<const GaussRule*> rules;
  rules.reserve(specs.size());
  for (std::size_t j = 0; j < specs.size(); ++j) {
    rules.push_back(&gauss_rule(specs[j].family(), growth(levels[j])));
  }
  return rules;
}

/// Calls visit(x, weight) for every tensor node in row-major order (last dimension fastest).
template <class Visit>
void for_each_tensor_node(std::span<const GaussRule* const> rules, Visit&& visit) {
  const std::size_t n = rules.size();
  std::vector<std::size_t> pos(n, 0);
  std::vector<double> x(n);
  while (true) {
    double w = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = rules[j]->points[pos[j]];
      w *= rules[j]->weights[pos[j]];
    }
    visit(std::span<const double>(x), w);
    std::size_t j = n;
    while (j > 0) {
      --j;
      if (++pos[j] < rules[j]->size()) break;
      pos[j] = 0;
      if (j == 0) return;
    }
    if (n == 0) return;
  }
}

inline QuadratureGrid tensor_grid(const MultiIndex& levels, std::span<const VariableSpec> specs) {
  const auto rules = tensor_rules(levels, specs);
  QuadratureGrid grid(specs.size());
  for_each_tensor_node(std::span<const GaussRule* const>(rules),
                       [&](std::span<const double> x, double w) { grid.accumulate(x, w); });
  return grid;
}

/// Level-w Smolyak grid: union of the combination terms' tensor grids with
/// coefficient-weighted, deduplicated weights.
inline QuadratureGrid smolyak_grid(int n, int w, std::span<const VariableSpec> specs) {
  if (static_cast<std::size_t>(n) != specs.size()) {
    throw std::invalid_argument("smolyak_grid: n must equal the number of variables");
  }
  QuadratureGrid grid(specs.size());
  for (const auto& term : level_terms(n, w)) {
    const auto rules = tensor_rules(term.levels, specs);
    for_each_tensor_node(std::span<const GaussRule* const>(rules),
                         [&](std::span<const double> x, double wt) {
                           grid.accumulate(x, term.coeff * wt);
                         });
  }
  return grid;
}

}  // namespace mfpce
