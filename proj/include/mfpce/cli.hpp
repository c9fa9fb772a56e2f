#pragma once

// Command-line front end: subcommands sobol, converge, decay and mc-check.
//
// Exit status: 0 success, 2 configuration error, 3 model-evaluation error,
// 4 numerical degeneracy (for example a zero-variance output). Other failures give 1.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfpce/config.hpp"
#include "mfpce/mfpce.hpp"

namespace mfpce::cli {

enum ExitCode : int { Ok = 0, Failure = 1, BadConfig = 2, ModelFailure = 3, Degenerate = 4 };

struct GlobalOptions {
  std::string config;
  std::optional<std::string> out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

/// Which expansion a command builds: scheme `index` of the config at level w.
struct Selection {
  std::size_t scheme = 0;
  std::optional<int> w;
  std::optional<int> q;
};

struct Session {
  StudyConfig config;
  StudyDefinition study;
  std::filesystem::path out_dir;
  EvalCache cache;

  explicit Session(const GlobalOptions& opts) : config(load_config(opts.config)) {
    if (opts.seed) {
      config.validation_seed = *opts.seed;
      if (auto* mc = std::get_if<McReference>(&config.reference)) mc->seed = *opts.seed;
    }
    if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
    study = resolve(config, opts.threads);
    out_dir = opts.out.value_or(config.output);
    std::filesystem::create_directories(out_dir);
    if (config.cache_file) {
      const auto parent = std::filesystem::path(*config.cache_file).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      cache.load(*config.cache_file);
      cache.persist_to(*config.cache_file);
    }
  }

  SchemeTemplate scheme(const Selection& sel) const {
    if (sel.scheme >= study.schemes.size()) {
      throw ConfigError("--scheme " + std::to_string(sel.scheme) + " is out of range (config has " +
                        std::to_string(study.schemes.size()) + " schemes)");
    }
    SchemeTemplate s = study.schemes[sel.scheme];
    if (sel.q) s.q = *sel.q;
    return s;
  }

  int level(const Selection& sel) const { return sel.w.value_or(study.level_max); }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out_dir / name);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return f;
  }
};

inline std::vector<int> one_based(const Subset& u) {
  std::vector<int> v;
  for (int i : u) v.push_back(i + 1);
  return v;
}

/// Builds the selected expansion and writes sobol_report.json and sobol_totals.csv.
inline SobolReport cmd_sobol(Session& s, const Selection& sel) {
  const SchemeTemplate scheme = s.scheme(sel);
  const int w = s.level(sel);
  if (scheme.kind == SchemeKind::MF) MfConfig{w, scheme.q}.validate();
  const CellResult cell = run_cell(s.study, scheme, w, s.cache);
  const SobolReport report = all_indices(cell.expansion);

  nlohmann::json subsets = nlohmann::json::array();
  for (const auto& [u, value] : report.subset_indices) {
    nlohmann::json names = nlohmann::json::array();
    for (int i : u) names.push_back(s.study.specs[i].name());
    subsets.push_back({{"subset", one_based(u)}, {"names", names}, {"index", value}});
  }
  nlohmann::json doc = {{"scheme", SchemeSpec{scheme.kind, w, scheme.q, scheme.hf_model, scheme.lf_model, {}}.label()},
                        {"w", w},
                        {"q", scheme.kind == SchemeKind::MF ? scheme.q : 0},
                        {"n_hf", cell.n_hf},
                        {"n_lf", cell.n_lf},
                        {"mean", report.mean},
                        {"variance", report.variance},
                        {"subsets", subsets},
                        {"totals", report.total_indices}};
  s.open("sobol_report.json") << doc.dump(2) << '\n';

  auto csv = s.open("sobol_totals.csv");
  csv << "variable,name,first_order,total\n";
  for (std::size_t i = 0; i < report.n; ++i) {
    csv << i + 1 << ',' << s.study.specs[i].name() << ',' << detail::fmt12(report.first_order(static_cast<int>(i)))
        << ',' << detail::fmt12(report.total_indices[i]) << '\n';
  }
  return report;
}

inline std::vector<ConvergenceRow> cmd_converge(Session& s) {
  const auto rows = run_convergence(s.study, s.cache);
  auto csv = s.open("convergence.csv");
  write_convergence_csv(csv, rows);
  return rows;
}

/// HF expansion at level w next to the LF and correction parts of MF(w, q).
inline std::vector<DecayRow> cmd_decay(Session& s, const Selection& sel) {
  const SchemeTemplate scheme = s.scheme(sel);
  if (scheme.kind != SchemeKind::MF) throw ConfigError("decay needs an MF scheme");
  const int w = s.level(sel);
  const Model& hf = s.study.model(scheme.hf_model);
  const Model& lf = s.study.model(scheme.lf_model);
  const auto mf = build_mf(lf, hf, s.study.specs, MfConfig{w, scheme.q}, s.cache, s.study.threads);
  const Expansion hf_pce = project_model(hf, w, s.study.specs, s.cache, Provenance::HF, s.study.threads);
  const std::vector<Expansion> series{hf_pce, mf.lf, mf.correction};
  const auto rows = decay_report(series);
  auto csv = s.open("decay.csv");
  write_decay_csv(csv, rows);
  return rows;
}

struct McCheckRow {
  int variable = 0;
  double pce_first = 0.0, mc_first = 0.0, se_first = 0.0;
  double pce_total = 0.0, mc_total = 0.0, se_total = 0.0;
  double z_first() const { return se_first > 0.0 ? (pce_first - mc_first) / se_first : 0.0; }
  double z_total() const { return se_total > 0.0 ? (pce_total - mc_total) / se_total : 0.0; }
};

/// PCE indices of the scheme's HF model against the pick-freeze Monte Carlo estimate.
inline std::vector<McCheckRow> cmd_mc_check(Session& s, const Selection& sel, std::size_t samples,
                                            std::uint64_t seed) {
  const SchemeTemplate scheme = s.scheme(sel);
  const int w = s.level(sel);
  const Model& hf = s.study.model(scheme.hf_model);
  const SobolReport pce =
      all_indices(project_model(hf, w, s.study.specs, s.cache, Provenance::HF, s.study.threads));
  const SobolReport mc = mc_sobol(hf, s.study.specs, samples, seed);

  std::vector<McCheckRow> rows;
  auto csv = s.open("mc_check.csv");
  csv << "variable,pce_first,mc_first,se_first,z_first,pce_total,mc_total,se_total,z_total\n";
  for (std::size_t i = 0; i < pce.n; ++i) {
    const int v = static_cast<int>(i);
    McCheckRow r{v + 1, pce.first_order(v), mc.first_order(v), mc.first_order_se[i],
                 pce.total_indices[i], mc.total_indices[i], mc.total_se[i]};
    csv << r.variable << ',' << detail::fmt12(r.pce_first) << ',' << detail::fmt12(r.mc_first) << ','
        << detail::fmt12(r.se_first) << ',' << detail::fmt12(r.z_first()) << ',' << detail::fmt12(r.pce_total)
        << ',' << detail::fmt12(r.mc_total) << ',' << detail::fmt12(r.se_total) << ','
        << detail::fmt12(r.z_total()) << '\n';
    rows.push_back(r);
  }
  return rows;
}

/// Runs `body` and maps the error taxonomy onto exit codes.
template <class Body>
int guarded(Body&& body, std::ostream& err = std::cerr) {
  try {
    body();
    return Ok;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << '\n';
    return BadConfig;
  } catch (const ModelError& ex) {
    err << "model error: " << ex.what() << '\n';
    return ModelFailure;
  } catch (const DegenerateError& ex) {
    err << "degenerate: " << ex.what() << '\n';
    return Degenerate;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return Failure;
  }
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Single- and multi-fidelity PCE sensitivity studies"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Study config (JSON)")->required()->envname("MFPCE_CONFIG");
  app.add_option("--out", g.out, "Output directory (overrides the config)")->envname("MFPCE_OUT");
  app.add_option("--threads", g.threads, "Worker threads for model evaluation")->envname("MFPCE_THREADS");
  app.add_option("--seed", g.seed, "Seed for validation and Monte Carlo sampling")->envname("MFPCE_SEED");

  Selection sel;
  auto add_selection = [&](CLI::App* sub) {
    sub->add_option("--scheme", sel.scheme, "Scheme index in the config (0-based)");
    sub->add_option("-w,--level", sel.w, "Sparse level (default: the config's maximum level)");
    sub->add_option("-q,--offset", sel.q, "Level offset for MF schemes");
  };
  auto* sobol = app.add_subcommand("sobol", "Sobol indices of one expansion");
  add_selection(sobol);
  auto* converge = app.add_subcommand("converge", "Convergence table for every scheme and level");
  auto* decay = app.add_subcommand("decay", "Coefficient decay of the HF, LF and correction expansions");
  add_selection(decay);
  auto* mc = app.add_subcommand("mc-check", "Compare PCE indices against Monte Carlo estimates");
  add_selection(mc);
  std::size_t samples = 65536;
  mc->add_option("--samples", samples, "Monte Carlo base sample size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? Ok : BadConfig;
  }

  return guarded([&] {
    Session session(g);
    if (*sobol) {
      const auto r = cmd_sobol(session, sel);
      for (std::size_t i = 0; i < r.n; ++i) {
        std::printf("%-8s S=%.4f  ST=%.4f\n", session.study.specs[i].name().c_str(),
                    r.first_order(static_cast<int>(i)), r.total_indices[i]);
      }
    } else if (*converge) {
      const auto rows = cmd_converge(session);
      std::printf("%zu rows written to %s\n", rows.size(), (session.out_dir / "convergence.csv").c_str());
    } else if (*decay) {
      const auto rows = cmd_decay(session, sel);
      std::printf("%zu rows written to %s\n", rows.size(), (session.out_dir / "decay.csv").c_str());
    } else if (*mc) {
      const auto rows = cmd_mc_check(session, sel, samples, g.seed.value_or(session.config.validation_seed));
      for (const auto& r : rows) {
        std::printf("x%-3d z(S)=%+.2f  z(ST)=%+.2f\n", r.variable, r.z_first(), r.z_total());
      }
    }
  });
}

}  // namespace mfpce::cli
