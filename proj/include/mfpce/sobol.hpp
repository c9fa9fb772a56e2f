#pragma once

/**
 * @file sobol.hpp
 * @brief Sobol indices from PCE coefficients, and a Monte Carlo pick-freeze oracle.
 *
 * Given an expansion with variance D = sum_{phi != 0} a_phi^2 E[psi_phi^2], the
 * index of a variable subset u is the share of D carried by the multi-indices whose
 * non-zero entries are exactly u. The total index of variable i collects every
 * multi-index with phi_i != 0.
 */

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfpce/errors.hpp"
#include "mfpce/models.hpp"
#include "mfpce/pce.hpp"
#include "mfpce/random.hpp"

namespace mfpce {

/// Sorted, 0-based variable positions.
using Subset = std::vector<int>;

struct SobolReport {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::map<Subset, double> subset_indices;  // absent subsets read as 0
  std::vector<double> total_indices;
  // Filled by mc_sobol only.
  std::vector<double> first_order_se;
  std::vector<double> total_se;

  double subset(const Subset& u) const {
    auto it = subset_indices.find(u);
    return it == subset_indices.end() ? 0.0 : it->second;
  }
  double first_order(int i) const { return subset({i}); }
};

namespace detail {

}  // namespace detail

/// True when the variance is zero up to the rounding noise of the projection,
/// i.e. the standard deviation is below 1e-12 of the mean's magnitude.
inline bool has_zero_variance(const Expansion& e) {
  const double d = variance(e);
  return !(d > 0.0) || std::sqrt(d) <= 1e-12 * std::abs(mean(e));
}

namespace detail {

inline double checked_variance(const Expansion& e) {
  if (has_zero_variance(e)) throw DegenerateError("Sobol indices are undefined for a zero-variance expansion");
  return variance(e);
}

inline Subset support(const MultiIndex& phi) {
  Subset u;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (phi[k] > 0) u.push_back(static_cast<int>(k));
  }
  return u;
}

}  // namespace detail

inline double subset_index(const Expansion& e, const Subset& subset) {
  if (subset.empty()) throw std::invalid_argument("subset_index: subset must be non-empty");
  const double d = detail::checked_variance(e);
  double partial = 0.0;
  for (const auto& [phi, term] : e.terms()) {
    if (detail::support(phi) == subset) partial += term.coeff * term.coeff * term.norm_sq;
  }
  return partial / d;
}

inline std::vector<double> total_indices(const Expansion& e) {
  const double d = detail::checked_variance(e);
  std::vector<double> totals(e.dim(), 0.0);
  for (const auto& [phi, term] : e.terms()) {
    const double part = term.coeff * term.coeff * term.norm_sq;
    for (std::size_t i = 0; i < e.dim(); ++i) {
      if (phi[i] != 0) totals[i] += part;
    }
  }
  for (double& t : totals) t /= d;
  return totals;
}

/// Every subset with a non-negligible share (>= 1e-15 D), plus totals and moments.
inline SobolReport all_indices(const Expansion& e) {
  const double d = detail::checked_variance(e);
  SobolReport report;
  report.n = e.dim();
  report.mean = mean(e);
  report.variance = d;
  std::map<Subset, double> partials;
  for (const auto& [phi, term] : e.terms()) {
    if (phi.is_zero()) continue;
    partials[detail::support(phi)] += term.coeff * term.coeff * term.norm_sq;
  }
  for (const auto& [u, part] : partials) {
    if (part >= 1e-15 * d) report.subset_indices.emplace(u, part / d);
  }
  report.total_indices = total_indices(e);
  return report;
}

/// Pick-freeze estimates from two N x n base matrices A and B and the n mixed
/// matrices AB_i (A with column i taken from B), using Jansen's estimators:
///   V_i   = V - E[(f(B) - f(AB_i))^2] / 2
///   V_T,i = E[(f(A) - f(AB_i))^2] / 2
/// Uses N (n + 2) model evaluations. Standard errors treat the variance as known.
inline SobolReport mc_sobol(const Model& model, std::span<const VariableSpec> specs, std::size_t samples,
                            std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("mc_sobol: need at least 2 samples");
  const std::size_t n = specs.size();
  const CounterRng rng(seed);
  const auto a = sample_points(specs, samples, rng, 0);
  const auto b = sample_points(specs, samples, rng, n);
  const auto fa = evaluate_direct(model, a);
  const auto fb = evaluate_direct(model, b);

  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r = 0; r < samples; ++r) {
    sum += fa[r] + fb[r];
  }
  const double mu = sum / (2.0 * samples);
  for (std::size_t r = 0; r < samples; ++r) {
    sum_sq += (fa[r] - mu) * (fa[r] - mu) + (fb[r] - mu) * (fb[r] - mu);
  }
  const double var = sum_sq / (2.0 * samples - 1.0);
  if (!(var > 0.0)) throw DegenerateError("mc_sobol: model output has zero variance");

  SobolReport report;
  report.n = n;
  report.mean = mu;
  report.variance = var;
  report.total_indices.assign(n, 0.0);
  report.first_order_se.assign(n, 0.0);
  report.total_se.assign(n, 0.0);

  std::vector<std::vector<double>> ab(samples, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < samples; ++r) {
      ab[r] = a[r];
      ab[r][i] = b[r][i];
    }
    const auto fab = evaluate_direct(model, ab);
    double s1 = 0.0, s1_sq = 0.0, st = 0.0, st_sq = 0.0;
    for (std::size_t r = 0; r < samples; ++r) {
      const double first = 0.5 * (fb[r] - fab[r]) * (fb[r] - fab[r]);
      const double total = 0.5 * (fa[r] - fab[r]) * (fa[r] - fab[r]);
      s1 += first;
      s1_sq += first * first;
      st += total;
      st_sq += total * total;
    }
    const double nd = static_cast<double>(samples);
    const double m1 = s1 / nd;
    const double mt = st / nd;
    const double var1 = std::max(0.0, (s1_sq / nd - m1 * m1) * nd / (nd - 1.0));
    const double vart = std::max(0.0, (st_sq / nd - mt * mt) * nd / (nd - 1.0));
    report.subset_indices[{static_cast<int>(i)}] = 1.0 - m1 / var;
    report.total_indices[i] = mt / var;
    report.first_order_se[i] = std::sqrt(var1 / nd) / var;
    report.total_se[i] = std::sqrt(vart / nd) / var;
  }
  return report;
}

}  // namespace mfpce
