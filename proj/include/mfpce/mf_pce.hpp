#pragma once

/**
 * @file mf_pce.hpp
 * @brief Additive multi-fidelity PCE.
 *
 * The LF model is projected on the level-w grid, the correction HF - LF on the
 * level-(w - q) grid, and the two coefficient tables are merged: on the common basis
 * Gamma_{w-q,n} the coefficients add, on Gamma_{w,n} \ Gamma_{w-q,n} the LF
 * coefficient stands alone.
 */

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfpce/errors.hpp"
#include "mfpce/models.hpp"
#include "mfpce/pce.hpp"
#include "mfpce/sparse_grid.hpp"

namespace mfpce {

struct MfConfig {
  int w = 0;  // LF sparse level
  int q = 0;  // level offset of the correction grid

  int correction_level() const { return w - q; }

  void validate() const {
    if (w < 0 || q < 0 || q > w) {
      throw ConfigError("MF config requires 0 <= q <= w (got w=" + std::to_string(w) + ", q=" + std::to_string(q) + ")");
    }
  }
};

inline std::vector<double> correction_values(std::span<const double> hf, std::span<const double> lf) {
  if (hf.size() != lf.size()) {
    throw std::invalid_argument("correction_values: " + std::to_string(hf.size()) + " HF values vs " +
                                std::to_string(lf.size()) + " LF values");
  }
  std::vector<double> cr(hf.size());
  for (std::size_t i = 0; i < hf.size(); ++i) cr[i] = hf[i] - lf[i];
  return cr;
}

/// Physical coordinates of every node of the level-w grid, in grid order.
inline std::vector<std::vector<double>> grid_points(const QuadratureGrid& grid, std::span<const VariableSpec> specs) {
  std::vector<std::vector<double>> pts;
  pts.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back(grid.physical(i, specs));
  return pts;
}

/// Single-fidelity PCE of a model at level w, with evaluations routed through the cache.
inline Expansion project_model(const Model& model, int w, std::span<const VariableSpec> specs, EvalCache& cache,
                               Provenance provenance, int threads = 1) {
  const int n = static_cast<int>(specs.size());
  const QuadratureGrid grid = smolyak_grid(n, w, specs);
  const auto values = evaluate_points(model, grid_points(grid, specs), cache, threads);
  return project(values, n, w, specs, provenance);
}

/// Merges an LF expansion and a correction expansion into the combined MF expansion.
inline Expansion combine(const Expansion& lf, const Expansion& correction) {
  if (lf.specs() != correction.specs()) throw std::invalid_argument("combine: expansions use different variables");
  Expansion out = lf;
  out.set_provenance(Provenance::Combined);
  for (const auto& [phi, term] : correction.terms()) {
    if (!lf.contains(phi)) throw std::logic_error("combine: correction basis is not contained in the LF basis");
    out.add(phi, term.coeff);
  }
  return out;
}

struct MfResult {
  Expansion lf;
  Expansion correction;
  Expansion combined;
  long n_hf = 0;  // distinct HF evaluations made for this build
  long n_lf = 0;  // distinct LF evaluations made for this build
};

inline MfResult build_mf(const Model& lf_model, const Model& hf_model, std::span<const VariableSpec> specs,
                         const MfConfig& cfg, EvalCache& cache, int threads = 1) {
  cfg.validate();
  const int n = static_cast<int>(specs.size());
  const long hf_before = cache.count(hf_model.id);
  const long lf_before = cache.count(lf_model.id);

  Expansion lf = project_model(lf_model, cfg.w, specs, cache, Provenance::LF, threads);

  const int wc = cfg.correction_level();
  const QuadratureGrid cgrid = smolyak_grid(n, wc, specs);
  const auto pts = grid_points(cgrid, specs);
  const auto hf_vals = evaluate_points(hf_model, pts, cache, threads);
  const auto lf_vals = evaluate_points(lf_model, pts, cache, threads);
  Expansion cr = project(correction_values(hf_vals, lf_vals), n, wc, specs, Provenance::Correction);

  Expansion combined = combine(lf, cr);
  MfResult result{std::move(lf), std::move(cr), std::move(combined)};
  result.n_hf = cache.count(hf_model.id) - hf_before;
  result.n_lf = cache.count(lf_model.id) - lf_before;
  if (hf_model.id == lf_model.id) result.n_lf = result.n_hf;
  return result;
}

}  // namespace mfpce
