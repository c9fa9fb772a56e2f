#pragma once

/**
 * @file study.hpp
 * @brief Error metrics, cost accounting and convergence sweeps over PCE schemes.
 *
 * A sweep runs every scheme at every level of the configured range against one
 * reference SobolReport. Each (scheme, level) cell gets a fresh accounting window
 * on the shared evaluation cache, so n_hf / n_lf count the distinct evaluations
 * that cell needed, while values are never computed twice in one study.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfpce/errors.hpp"
#include "mfpce/mf_pce.hpp"
#include "mfpce/models.hpp"
#include "mfpce/pce.hpp"
#include "mfpce/random.hpp"
#include "mfpce/sobol.hpp"

namespace mfpce {

// ---------------------------------------------------------------------------
// Metrics

struct Similarity {
  double r2 = 0.0;
  double mare = 0.0;
  std::size_t skipped = 0;  // reference values too close to zero for a relative error
};

namespace detail {

inline double squared_correlation(std::span<const double> x, std::span<const double> y) {
  const double nd = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= nd;
  my /= nd;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateError("correlation is undefined for a constant sample");
  const double r = sxy / std::sqrt(sxx * syy);
  return r * r;
}

}  // namespace detail

/// Mean of |approx - reference| / |reference|. Reference values with |y| < 1e-300
/// are left out of the average and counted in `skipped`.
inline double mean_abs_relative_error(std::span<const double> approx, std::span<const double> reference,
                                      std::size_t* skipped = nullptr) {
  if (approx.size() != reference.size()) throw std::invalid_argument("MARE: length mismatch");
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    if (std::abs(reference[i]) < 1e-300) continue;
    acc += std::abs((approx[i] - reference[i]) / reference[i]);
    ++used;
  }
  if (skipped) *skipped = approx.size() - used;
  return used ? acc / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
}

/// r^2 and MARE of `approx` against `reference`.
inline Similarity similarity(std::span<const double> approx, std::span<const double> reference) {
  if (approx.size() != reference.size()) throw std::invalid_argument("similarity: length mismatch");
  if (approx.size() < 2) throw std::invalid_argument("similarity: need at least 2 samples");
  Similarity s;
  s.r2 = detail::squared_correlation(reference, approx);
  s.mare = mean_abs_relative_error(approx, reference, &s.skipped);
  return s;
}

/// LF-vs-HF similarity (r^2_lh, MARE_lh).
inline Similarity lf_hf_similarity(std::span<const double> y_l, std::span<const double> y_h) {
  return similarity(y_l, y_h);
}

/// Surrogate prediction quality (r^2, MARE) against the true responses.
inline Similarity prediction_error(std::span<const double> y_true, std::span<const double> y_pred) {
  return similarity(y_pred, y_true);
}

struct SobolErrors {
  double e = 0.0;    // summed over all 2^n - 1 subset indices
  double e_t = 0.0;  // summed over the n total indices
};

inline SobolErrors sobol_errors(const SobolReport& report, const SobolReport& reference) {
  if (report.n != reference.n || report.total_indices.size() != reference.total_indices.size()) {
    throw std::invalid_argument("sobol_errors: dimension mismatch");
  }
  SobolErrors err;
  // Subsets absent from both maps contribute |0 - 0|.
  std::map<Subset, std::pair<double, double>> merged;
  for (const auto& [u, v] : report.subset_indices) merged[u].first = v;
  for (const auto& [u, v] : reference.subset_indices) merged[u].second = v;
  for (const auto& [u, pair] : merged) err.e += std::abs(pair.first - pair.second);
  for (std::size_t i = 0; i < report.total_indices.size(); ++i) {
    err.e_t += std::abs(report.total_indices[i] - reference.total_indices[i]);
  }
  return err;
}

/// Closed-form variance decomposition of sin x1 + a sin^2 x2 + b x3^4 sin x1 with
/// x ~ U[-pi, pi]^3.
inline SobolReport ishigami_analytic(double a, double b) {
  const double pi4 = std::pow(std::numbers::pi, 4);
  const double pi8 = pi4 * pi4;
  const double d1 = b * pi4 / 5.0 + b * b * pi8 / 50.0 + 0.5;
  const double d2 = a * a / 8.0;
  const double d13 = 8.0 * b * b * pi8 / 225.0;
  const double d = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi8 / 18.0 + 0.5;
  if (!(d > 0.0)) throw DegenerateError("ishigami_analytic: zero variance");

  SobolReport r;
  r.n = 3;
  r.mean = a / 2.0;
  r.variance = d;
  if (d1 != 0.0) r.subset_indices[{0}] = d1 / d;
  if (d2 != 0.0) r.subset_indices[{1}] = d2 / d;
  if (d13 != 0.0) r.subset_indices[{0, 2}] = d13 / d;
  r.total_indices = {(d1 + d13) / d, d2 / d, d13 / d};
  return r;
}

/// Sobol report of an expansion; a zero-variance expansion yields all-zero indices
/// instead of an error, so that coarse levels still produce an error figure.
inline SobolReport indices_or_zero(const Expansion& e) {
  if (!has_zero_variance(e)) return all_indices(e);
  SobolReport r;
  r.n = e.dim();
  r.mean = mean(e);
  r.variance = 0.0;
  r.total_indices.assign(e.dim(), 0.0);
  return r;
}

// ---------------------------------------------------------------------------
// Coefficient decay

struct DecayRow {
  std::string label;
  std::size_t rank;  // 1-based
  double abs_coeff;
};

/// Per expansion, |coefficients| sorted in descending order.
inline std::vector<DecayRow> decay_report(std::span<const Expansion> expansions,
                                          std::span<const std::string> labels = {}) {
  if (expansions.empty()) throw std::invalid_argument("decay_report: need at least one expansion");
  std::vector<DecayRow> rows;
  for (std::size_t k = 0; k < expansions.size(); ++k) {
    const std::string label = k < labels.size() ? labels[k] : to_string(expansions[k].provenance());
    std::vector<double> mags;
    mags.reserve(expansions[k].size());
    for (const auto& [phi, term] : expansions[k].terms()) mags.push_back(std::abs(term.coeff));
    std::stable_sort(mags.begin(), mags.end(), std::greater<>());
    for (std::size_t i = 0; i < mags.size(); ++i) rows.push_back({label, i + 1, mags[i]});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Convergence sweeps

enum class SchemeKind { HF, LF, MF };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::HF: return "HF";
    case SchemeKind::LF: return "LF";
    case SchemeKind::MF: return "MF";
  }
  return "?";
}

struct SchemeSpec {
  SchemeKind kind = SchemeKind::HF;
  int w = 0;
  int q = 0;               // MF only
  std::string hf_model;    // model ids
  std::string lf_model;    // LF and MF schemes
  std::optional<double> rt;

  void validate() const {
    if (w < 0) throw ConfigError("scheme: w must be >= 0");
    if (kind == SchemeKind::MF && (q < 0 || q > w)) throw ConfigError("scheme: MF requires 0 <= q <= w");
    if (rt && !(*rt > 0.0 && *rt <= 1.0)) throw ConfigError("scheme: rt must lie in (0, 1]");
  }

  /// "HF", "LF[lf]", "MF[lf]" with an "@rt=<value>" suffix when a cost ratio applies.
  std::string label() const {
    std::string s = to_string(kind);
    if (kind != SchemeKind::HF) s += "[" + lf_model + "]";
    if (rt) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "@rt=%.6g", *rt);
      s += buf;
    }
    return s;
  }
};

struct ConvergenceRow {
  SchemeSpec scheme;
  long n_hf = 0;
  long n_lf = 0;
  long n_e = 0;
  double n_tot = 0.0;
  double mare = 0.0;
  double r2 = 0.0;
  double e = 0.0;
  double e_t = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct AnalyticReference {
  double a = 7.0;
  double b = 0.1;
};
struct PceReference {
  std::string model;
  int level = 0;
};
struct McReference {
  std::string model;
  std::size_t samples = 65536;
  std::uint64_t seed = 0;
};
using ReferenceSpec = std::variant<AnalyticReference, PceReference, McReference>;

/// A scheme family swept over the level range. For MF schemes q is fixed and levels
/// below q are skipped.
struct SchemeTemplate {
  SchemeKind kind = SchemeKind::HF;
  int q = 0;
  std::string hf_model;
  std::string lf_model;
};

struct StudyDefinition {
  std::vector<VariableSpec> specs;
  std::map<std::string, Model> models;
  std::vector<SchemeTemplate> schemes;
  int level_min = 1;
  int level_max = 1;
  ReferenceSpec reference = AnalyticReference{};
  std::size_t validation_count = 10000;
  std::uint64_t validation_seed = 1;
  std::vector<double> rt_values;  // MF/LF rows are repeated per value; empty uses the LF cost_unit
  int threads = 1;

  const Model& model(const std::string& id) const {
    auto it = models.find(id);
    if (it == models.end()) throw ConfigError("unknown model id '" + id + "'");
    return it->second;
  }

  void validate() const {
    if (specs.empty()) throw ConfigError("study needs at least one variable");
    if (models.empty()) throw ConfigError("study needs at least one model");
    if (schemes.empty()) throw ConfigError("study needs at least one scheme");
    if (level_min < 0 || level_max < level_min) throw ConfigError("study level range is invalid");
    for (const auto& s : schemes) {
      model(s.hf_model);
      if (s.kind != SchemeKind::HF) model(s.lf_model);
      if (s.q < 0) throw ConfigError("scheme q must be >= 0");
    }
    for (double rt : rt_values) {
      if (!(rt > 0.0 && rt <= 1.0)) throw ConfigError("rt values must lie in (0, 1]");
    }
    if (const auto* p = std::get_if<PceReference>(&reference)) model(p->model);
    if (const auto* m = std::get_if<McReference>(&reference)) model(m->model);
  }
};

/// Builds the reference report named by the study.
inline SobolReport build_reference(const StudyDefinition& study, EvalCache& cache) {
  return std::visit(
      [&](const auto& ref) -> SobolReport {
        using T = std::decay_t<decltype(ref)>;
        if constexpr (std::is_same_v<T, AnalyticReference>) {
          if (study.specs.size() != 3) throw ConfigError("analytic reference is only defined for the 3-D Ishigami function");
          return ishigami_analytic(ref.a, ref.b);
        } else if constexpr (std::is_same_v<T, PceReference>) {
          return all_indices(project_model(study.model(ref.model), ref.level, study.specs, cache, Provenance::HF,
                                           study.threads));
        } else {
          return mc_sobol(study.model(ref.model), study.specs, ref.samples, ref.seed);
        }
      },
      study.reference);
}

/// Result of one (scheme, level) cell before cost-ratio expansion.
struct CellResult {
  Expansion expansion;
  std::optional<MfResult> mf;
  long n_hf = 0;
  long n_lf = 0;
};

inline CellResult run_cell(const StudyDefinition& study, const SchemeTemplate& scheme, int w, EvalCache& cache) {
  cache.reset_counters();
  const Model& hf = study.model(scheme.hf_model);
  switch (scheme.kind) {
    case SchemeKind::HF: {
      auto e = project_model(hf, w, study.specs, cache, Provenance::HF, study.threads);
      return {std::move(e), std::nullopt, cache.count(hf.id), 0};
    }
    case SchemeKind::LF: {
      const Model& lf = study.model(scheme.lf_model);
      auto e = project_model(lf, w, study.specs, cache, Provenance::LF, study.threads);
      return {std::move(e), std::nullopt, 0, cache.count(lf.id)};
    }
    case SchemeKind::MF: {
      const Model& lf = study.model(scheme.lf_model);
      auto mf = build_mf(lf, hf, study.specs, MfConfig{w, scheme.q}, cache, study.threads);
      Expansion combined = mf.combined;
      const long n_hf = mf.n_hf;
      const long n_lf = mf.n_lf;
      return {std::move(combined), std::move(mf), n_hf, n_lf};
    }
  }
  throw std::logic_error("unreachable");
}

/// Runs every scheme over the level range. Rows come out in scheme order, then level,
/// then cost ratio.
inline std::vector<ConvergenceRow> run_convergence(const StudyDefinition& study, EvalCache& cache) {
  study.validate();
  const SobolReport reference = build_reference(study, cache);

  const CounterRng rng(study.validation_seed);
  const auto validation = sample_points(study.specs, study.validation_count, rng);
  std::map<std::string, std::vector<double>> truth;

  std::vector<ConvergenceRow> rows;
  for (const auto& scheme : study.schemes) {
    const Model& hf = study.model(scheme.hf_model);
    if (!truth.count(hf.id)) truth[hf.id] = evaluate_direct(hf, validation);
    const auto& y_true = truth[hf.id];

    for (int w = study.level_min; w <= study.level_max; ++w) {
      if (scheme.kind == SchemeKind::MF && w < scheme.q) continue;
      std::optional<CellResult> cell_result;
      try {
        cell_result.emplace(run_cell(study, scheme, w, cache));
      } catch (const ModelError& ex) {
        throw ModelError(std::string(to_string(scheme.kind)) + " scheme at w=" + std::to_string(w) + ": " + ex.what());
      }

      const CellResult& cell = *cell_result;
      const ExpansionEvaluator surrogate(cell.expansion);
      std::vector<double> y_pred;
      y_pred.reserve(validation.size());
      for (const auto& p : validation) y_pred.push_back(surrogate(p));

      ConvergenceRow base;
      base.scheme = SchemeSpec{scheme.kind, w, scheme.kind == SchemeKind::MF ? scheme.q : 0, scheme.hf_model,
                               scheme.lf_model, std::nullopt};
      base.n_hf = cell.n_hf;
      base.n_lf = cell.n_lf;
      base.n_e = scheme.kind == SchemeKind::LF ? cell.n_lf : cell.n_hf;
      base.mean = mean(cell.expansion);
      base.std = std::sqrt(variance(cell.expansion));
      if (validation.size() >= 2) {
        try {
          const auto pe = prediction_error(y_true, y_pred);
          base.r2 = pe.r2;
          base.mare = pe.mare;
        } catch (const DegenerateError&) {
          base.r2 = std::numeric_limits<double>::quiet_NaN();
          base.mare = mean_abs_relative_error(y_pred, y_true);
        }
      }
      const auto err = sobol_errors(indices_or_zero(cell.expansion), reference);
      base.e = err.e;
      base.e_t = err.e_t;

      if (scheme.kind == SchemeKind::HF) {
        base.n_tot = static_cast<double>(base.n_hf);
        rows.push_back(base);
        continue;
      }
      std::vector<std::optional<double>> ratios;
      if (study.rt_values.empty()) {
        ratios.push_back(std::nullopt);
      } else {
        for (double rt : study.rt_values) ratios.emplace_back(rt);
      }
      const double unit_ratio = study.model(scheme.lf_model).cost_unit / hf.cost_unit;
      for (const auto& rt : ratios) {
        ConvergenceRow row = base;
        row.scheme.rt = rt;
        const double ratio = rt.value_or(unit_ratio);
        row.n_tot = static_cast<double>(row.n_hf) + ratio * static_cast<double>(row.n_lf);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
  out << "scheme,w,q,n_hf,n_lf,n_e,n_tot,mare,r2,e,e_t,mean,std\n";
  for (const auto& r : rows) {
    out << r.scheme.label() << ',' << r.scheme.w << ',' << r.scheme.q << ',' << r.n_hf << ',' << r.n_lf << ','
        << r.n_e << ',' << detail::fmt12(r.n_tot) << ',' << detail::fmt12(r.mare) << ',' << detail::fmt12(r.r2)
        << ',' << detail::fmt12(r.e) << ',' << detail::fmt12(r.e_t) << ',' << detail::fmt12(r.mean) << ','
        << detail::fmt12(r.std) << '\n';
  }
}

inline void write_decay_csv(std::ostream& out, std::span<const DecayRow> rows) {
  out << "provenance,rank,abs_coeff\n";
  for (const auto& r : rows) out << r.label << ',' << r.rank << ',' << detail::fmt12(r.abs_coeff) << '\n';
}

}  // namespace mfpce
