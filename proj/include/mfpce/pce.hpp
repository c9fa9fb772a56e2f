#pragma once

/**
 * @file pce.hpp
 * @brief Polynomial chaos expansions built by spectral projection on Smolyak grids.
 *
 * project() assembles the sparse expansion subspace by subspace: every Smolyak
 * combination term (l, c) contributes its own tensor-product pseudo-spectral
 * projection, truncated to degrees phi_j <= growth(l_j) - 1 so that psi_phi^2 is
 * integrated exactly by that term's Gauss rule, and the partial tables are summed
 * with the combination coefficients. The resulting support is the union of those
 * boxes, Gamma_{w,n}.
 */

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mfpce/orthopoly.hpp"
#include "mfpce/sparse_grid.hpp"

namespace mfpce {

enum class Provenance { HF, LF, Correction, Combined };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::HF: return "HF";
    case Provenance::LF: return "LF";
    case Provenance::Correction: return "CR";
    case Provenance::Combined: return "MF";
  }
  return "?";
}

struct ExpansionTerm {
  double coeff;
  double norm_sq;  // E[psi_phi^2], product of the 1D norms
};

/// Coefficient table over a multi-index set together with the basis norms.
class Expansion {
 public:
  using TermMap = std::map<MultiIndex, ExpansionTerm>;

  Expansion(std::vector<VariableSpec> specs, Provenance provenance)
      : specs_(std::move(specs)), provenance_(provenance) {
    add(MultiIndex(specs_.size()), 0.0);
  }

  std::size_t dim() const { return specs_.size(); }
  const std::vector<VariableSpec>& specs() const { return specs_; }
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  bool contains(const MultiIndex& phi) const { return terms_.count(phi) != 0; }

  double coeff(const MultiIndex& phi) const {
    auto it = terms_.find(phi);
    return it == terms_.end() ? 0.0 : it->second.coeff;
  }

  /// Adds delta to the coefficient of phi, creating the term (and its norm) if needed.
  void add(const MultiIndex& phi, double delta) {
    if (phi.size() != dim()) throw std::invalid_argument("Expansion: multi-index length mismatch");
    auto it = terms_.find(phi);
    if (it == terms_.end()) {
      double norm = 1.0;
      for (std::size_t j = 0; j < dim(); ++j) norm *= norm_sq(specs_[j].family(), phi[j]);
      terms_.emplace(phi, ExpansionTerm{delta, norm});
    } else {
      it->second.coeff += delta;
    }
  }

 private:
  std::vector<VariableSpec> specs_;
  Provenance provenance_;
  TermMap terms_;
};

struct TensorProduct {
  MultiIndex orders;
};
struct TotalOrder {
  int order;
};
struct SparseGridBasis {
  int level;
};
using IndexMode = std::variant<TensorProduct, TotalOrder, SparseGridBasis>;

namespace detail {

inline void for_each_in_box(const MultiIndex& upper, const std::function<void(const MultiIndex&)>& visit) {
  const std::size_t n = upper.size();
  MultiIndex idx(n);
  while (true) {
    visit(idx);
    std::size_t j = n;
    while (true) {
      if (j == 0) return;
      --j;
      if (idx[j] < upper[j]) {
        ++idx[j];
        break;
      }
      idx[j] = 0;
    }
  }
}

inline MultiIndex degree_cap(const MultiIndex& levels) {
  MultiIndex cap(levels.size());
  for (std::size_t j = 0; j < levels.size(); ++j) cap[j] = growth(levels[j]) - 1;
  return cap;
}

}  // namespace detail

/// Basis multi-indices for the given truncation, sorted.
inline std::vector<MultiIndex> index_set(const IndexMode& mode, int n) {
  if (n < 1) throw std::invalid_argument("index_set: n must be >= 1");
  std::set<MultiIndex> out;
  if (const auto* tp = std::get_if<TensorProduct>(&mode)) {
    if (tp->orders.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("index_set: tensor orders must have n entries");
    }
    detail::for_each_in_box(tp->orders, [&](const MultiIndex& phi) { out.insert(phi); });
  } else if (const auto* to = std::get_if<TotalOrder>(&mode)) {
    detail::for_each_bounded_sum(static_cast<std::size_t>(n), 0, to->order,
                                 [&](const MultiIndex& phi) { out.insert(phi); });
  } else {
    const int w = std::get<SparseGridBasis>(mode).level;
    for (const auto& term : level_terms(n, w)) {
      detail::for_each_in_box(detail::degree_cap(term.levels),
                              [&](const MultiIndex& phi) { out.insert(phi); });
    }
  }
  return {out.begin(), out.end()};
}

namespace detail {

// Tensor pseudo-spectral projection of values laid out row-major over the rules'
// Cartesian product. Returns coefficients in the same row-major layout, indexed by phi.
inline std::vector<double> tensor_projection(std::span<const GaussRule* const> rules,
                                             std::span<const PolyFamily> families,
                                             std::vector<double> data) {
  const std::size_t n = rules.size();
  std::vector<double> scratch(data.size());
  std::vector<long double> psi;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& rule = *rules[j];
    const std::size_t m = rule.size();
    // A[k][i] = w_i psi_k(x_i) / E[psi_k^2]
    std::vector<double> a(m * m);
    psi.assign(m, 0.0L);
    for (std::size_t i = 0; i < m; ++i) {
      eval_poly_upto<long double>(families[j], rule.points[i], psi);
      long double norm = 1.0L;
      for (std::size_t k = 0; k < m; ++k) {
        if (k > 0) norm = families[j] == PolyFamily::Legendre ? 1.0L / (2.0L * k + 1.0L) : norm * k;
        a[k * m + i] = static_cast<double>(rule.weights[i] * psi[k] / norm);
      }
    }
    std::size_t inner = 1;
    for (std::size_t t = j + 1; t < n; ++t) inner *= rules[t]->size();
    const std::size_t outer = data.size() / (m * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      const double* src = data.data() + o * m * inner;
      double* dst = scratch.data() + o * m * inner;
      for (std::size_t k = 0; k < m; ++k) {
        double* row = dst + k * inner;
        std::fill(row, row + inner, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          const double aki = a[k * m + i];
          const double* col = src + i * inner;
          for (std::size_t r = 0; r < inner; ++r) row[r] += aki * col[r];
        }
      }
    }
    data.swap(scratch);
  }
  return data;
}

}  // namespace detail

/// Model values looked up by node: (standard coordinates, dedup key) -> value.
using NodeValueFn = std::function<double(std::span<const double>, const NodeKey&)>;

/// Spectral projection on the level-w Smolyak grid with values supplied per node.
inline Expansion project_with(int n, int w, std::span<const VariableSpec> specs,
                              const NodeValueFn& value_at, Provenance provenance = Provenance::HF) {
  if (static_cast<std::size_t>(n) != specs.size()) {
    throw std::invalid_argument("project: n must equal the number of variables");
  }
  std::vector<PolyFamily> families;
  for (const auto& s : specs) families.push_back(s.family());

  std::unordered_map<MultiIndex, double, MultiIndexHash> acc;
  for (const auto& phi : index_set(SparseGridBasis{w}, n)) acc.emplace(phi, 0.0);

  // level_terms() is sorted by levels, so the reduction order is fixed.
  for (const auto& term : level_terms(n, w)) {
    const auto rules = tensor_rules(term.levels, specs);
    std::vector<double> data;
    for_each_tensor_node(std::span<const GaussRule* const>(rules),
                         [&](std::span<const double> x, double) {
                           data.push_back(value_at(x, node_key(x)));
                         });
    const auto coeffs = detail::tensor_projection(rules, families, std::move(data));
    std::size_t flat = 0;
    detail::for_each_in_box(detail::degree_cap(term.levels), [&](const MultiIndex& phi) {
      acc[phi] += term.coeff * coeffs[flat++];
    });
  }

  Expansion e(std::vector<VariableSpec>(specs.begin(), specs.end()), provenance);
  for (const auto& [phi, c] : acc) e.add(phi, c);
  return e;
}

/// Spectral projection from values given in smolyak_grid(n, w, specs) node order.
inline Expansion project(std::span<const double> grid_values, int n, int w,
                         std::span<const VariableSpec> specs, Provenance provenance = Provenance::HF) {
  const QuadratureGrid grid = smolyak_grid(n, w, specs);
  if (grid_values.size() != grid.size()) {
    throw std::invalid_argument("project: got " + std::to_string(grid_values.size()) +
                                " values for a grid of " + std::to_string(grid.size()) + " nodes");
  }
  return project_with(
      n, w, specs,
      [&](std::span<const double>, const NodeKey& key) {
        const std::size_t i = grid.find(key);
        if (i == grid.size()) throw std::logic_error("project: tensor node missing from Smolyak grid");
        return grid_values[i];
      },
      provenance);
}

/// Evaluates expansions at many points, reusing 1D polynomial tables per point.
class ExpansionEvaluator {
 public:
  explicit ExpansionEvaluator(const Expansion& e) : specs_(e.specs()) {
    const std::size_t n = e.dim();
    max_degree_.assign(n, 0);
    for (const auto& [phi, term] : e.terms()) {
      std::vector<int> entries(phi.begin(), phi.end());
      indices_.push_back(std::move(entries));
      coeffs_.push_back(term.coeff);
      for (std::size_t j = 0; j < n; ++j) max_degree_[j] = std::max(max_degree_[j], phi[j]);
    }
  }

  double operator()(std::span<const double> xi_physical) const {
    const std::size_t n = specs_.size();
    if (xi_physical.size() != n) throw std::invalid_argument("evaluate: point has the wrong dimension");
    std::vector<std::vector<double>> table(n);
    for (std::size_t j = 0; j < n; ++j) {
      table[j].resize(static_cast<std::size_t>(max_degree_[j]) + 1);
      eval_poly_upto(specs_[j].family(), specs_[j].to_standard(xi_physical[j]), table[j]);
    }
    // Terms are in lexicographic order; prefix[j] holds the product over dims < j.
    std::vector<double> prefix(n + 1, 1.0);
    const std::vector<int>* prev = nullptr;
    double sum = 0.0;
    for (std::size_t t = 0; t < indices_.size(); ++t) {
      const auto& phi = indices_[t];
      std::size_t d = 0;
      if (prev) {
        while (d < n && (*prev)[d] == phi[d]) ++d;
      }
      for (std::size_t j = d; j < n; ++j) prefix[j + 1] = prefix[j] * table[j][static_cast<std::size_t>(phi[j])];
      sum += coeffs_[t] * prefix[n];
      prev = &phi;
    }
    return sum;
  }

 private:
  std::vector<VariableSpec> specs_;
  std::vector<std::vector<int>> indices_;
  std::vector<double> coeffs_;
  std::vector<int> max_degree_;
};

inline double evaluate(const Expansion& e, std::span<const double> xi_physical) {
  return ExpansionEvaluator(e)(xi_physical);
}

inline double mean(const Expansion& e) { return e.coeff(MultiIndex(e.dim())); }

/// Sum of coeff^2 * E[psi^2] over the non-constant terms.
inline double variance(const Expansion& e) {
  double v = 0.0;
  for (const auto& [phi, term] : e.terms()) {
    if (!phi.is_zero()) v += term.coeff * term.coeff * term.norm_sq;
  }
  return v;
}

}  // namespace mfpce
