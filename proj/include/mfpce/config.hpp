#pragma once

/**
 * @file config.hpp
 * @brief Study configuration files (JSON) and their resolution into a StudyDefinition.
 *
 * Grammar (all keys lower case; see README for a worked example):
 *
 *   benchmark   : "borehole" | "ishigami" | "short_column"   (optional; supplies variables)
 *   variables   : [ {name, dist: "uniform", a, b} | {name, dist: "normal", mu, sigma} ]
 *   models      : [ {id, builtin, fidelity: "hf" | "lfK", cost_unit?}
 *                 | {id, command, protocol: "oneshot" | "streaming", fidelity?, cost_unit?} ]
 *   schemes     : [ {kind: "HF" | "LF" | "MF", hf, lf?, q?} ]
 *   levels      : {min, max}
 *   reference   : {kind: "analytic", a?, b?} | {kind: "pce", model, level}
 *                 | {kind: "mc", model, samples?, seed?}
 *   validation  : {count, seed}
 *   rt_values   : [real]
 *   output      : directory
 *   cache_file  : path (optional)
 *
 * Either `benchmark` or `variables` must be present; `variables` wins when both are.
 */

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mfpce/errors.hpp"
#include "mfpce/external_model.hpp"
#include "mfpce/models.hpp"
#include "mfpce/study.hpp"

namespace mfpce {

struct ModelBinding {
  std::string id;
  std::string builtin;  // benchmark name; empty for external models
  Fidelity fidelity = Fidelity::hf();
  std::string command;  // external models
  ProtocolMode protocol = ProtocolMode::Oneshot;
  double cost_unit = 1.0;

  bool is_external() const { return builtin.empty(); }
  friend bool operator==(const ModelBinding&, const ModelBinding&) = default;
};

struct StudyConfig {
  std::optional<std::string> benchmark;
  std::vector<VariableSpec> variables;
  std::vector<ModelBinding> models;
  std::vector<SchemeTemplate> schemes;
  int level_min = 1;
  int level_max = 1;
  ReferenceSpec reference = AnalyticReference{};
  std::size_t validation_count = 10000;
  std::uint64_t validation_seed = 1;
  std::vector<double> rt_values;
  std::string output = "out";
  std::optional<std::string> cache_file;
};

namespace detail {

using nlohmann::json;

inline Fidelity parse_fidelity(const std::string& text, const std::string& where) {
  if (text == "hf") return Fidelity::hf();
  if (text.size() > 2 && text.rfind("lf", 0) == 0) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(text.substr(2), &used);
      if (used == text.size() - 2 && v >= 1) return Fidelity::lf(v);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(where + ": fidelity must be \"hf\" or \"lf<k>\", got \"" + text + "\"");
}

inline SchemeKind parse_kind(const std::string& text, const std::string& where) {
  if (text == "HF") return SchemeKind::HF;
  if (text == "LF") return SchemeKind::LF;
  if (text == "MF") return SchemeKind::MF;
  throw ConfigError(where + ": kind must be HF, LF or MF, got \"" + text + "\"");
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return get<T>(obj, key, where);
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace detail

inline StudyConfig parse_config(const std::string& text) {
  using detail::get;
  using detail::get_or;
  using nlohmann::json;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError("config parse error at line " + std::to_string(detail::line_of(text, ex.byte)) + ": " +
                      ex.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  StudyConfig cfg;
  if (root.contains("benchmark")) {
    cfg.benchmark = get<std::string>(root, "benchmark", "config");
    if (!find_benchmark(*cfg.benchmark)) throw ConfigError("config.benchmark: unknown benchmark '" + *cfg.benchmark + "'");
  }

  if (root.contains("variables")) {
    const auto& vars = root.at("variables");
    if (!vars.is_array()) throw ConfigError("config.variables: must be an array");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const std::string where = "variables[" + std::to_string(i) + "]";
      const auto& v = vars[i];
      const auto name = get<std::string>(v, "name", where);
      const auto dist = get<std::string>(v, "dist", where);
      if (dist == "uniform") {
        cfg.variables.push_back(VariableSpec::uniform(name, get<double>(v, "a", where), get<double>(v, "b", where)));
      } else if (dist == "normal") {
        cfg.variables.push_back(
            VariableSpec::normal(name, get<double>(v, "mu", where), get<double>(v, "sigma", where)));
      } else {
        throw ConfigError(where + ".dist: must be \"uniform\" or \"normal\"");
      }
    }
  }

  if (!root.contains("models") || !root.at("models").is_array()) {
    throw ConfigError("config.models: missing or not an array");
  }
  const auto& models = root.at("models");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string where = "models[" + std::to_string(i) + "]";
    const auto& m = models[i];
    ModelBinding b;
    b.id = get<std::string>(m, "id", where);
    b.fidelity = detail::parse_fidelity(get_or<std::string>(m, "fidelity", "hf", where), where);
    b.cost_unit = get_or<double>(m, "cost_unit", 1.0, where);
    if (!(b.cost_unit > 0.0)) throw ConfigError(where + ".cost_unit: must be positive");
    if (m.contains("builtin")) {
      b.builtin = get<std::string>(m, "builtin", where);
      const auto bench = find_benchmark(b.builtin);
      if (!bench) throw ConfigError(where + ".builtin: unknown benchmark '" + b.builtin + "'");
      if (!b.fidelity.is_hf() && b.fidelity.variant > bench->lf_variants) {
        throw ConfigError(where + ": " + b.builtin + " has no LF variant " + std::to_string(b.fidelity.variant));
      }
    } else if (m.contains("command")) {
      b.command = get<std::string>(m, "command", where);
      const auto mode = get_or<std::string>(m, "protocol", "oneshot", where);
      if (mode == "oneshot") {
        b.protocol = ProtocolMode::Oneshot;
      } else if (mode == "streaming") {
        b.protocol = ProtocolMode::Streaming;
      } else {
        throw ConfigError(where + ".protocol: must be \"oneshot\" or \"streaming\"");
      }
    } else {
      throw ConfigError(where + ": needs either 'builtin' or 'command'");
    }
    for (const auto& other : cfg.models) {
      if (other.id == b.id) throw ConfigError(where + ": duplicate model id '" + b.id + "'");
    }
    cfg.models.push_back(std::move(b));
  }

  if (!root.contains("schemes") || !root.at("schemes").is_array()) {
    throw ConfigError("config.schemes: missing or not an array");
  }
  const auto& schemes = root.at("schemes");
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const std::string where = "schemes[" + std::to_string(i) + "]";
    const auto& s = schemes[i];
    SchemeTemplate t;
    t.kind = detail::parse_kind(get<std::string>(s, "kind", where), where);
    t.hf_model = get<std::string>(s, "hf", where);
    if (t.kind != SchemeKind::HF) t.lf_model = get<std::string>(s, "lf", where);
    if (t.kind == SchemeKind::MF) t.q = get<int>(s, "q", where);
    if (t.q < 0) throw ConfigError(where + ".q: must be >= 0");
    cfg.schemes.push_back(std::move(t));
  }

  if (root.contains("levels")) {
    const auto& l = root.at("levels");
    cfg.level_min = get<int>(l, "min", "levels");
    cfg.level_max = get<int>(l, "max", "levels");
  }

  if (root.contains("reference")) {
    const auto& r = root.at("reference");
    const auto kind = get<std::string>(r, "kind", "reference");
    if (kind == "analytic") {
      cfg.reference = AnalyticReference{get_or<double>(r, "a", 7.0, "reference"), get_or<double>(r, "b", 0.1, "reference")};
    } else if (kind == "pce") {
      cfg.reference = PceReference{get<std::string>(r, "model", "reference"), get<int>(r, "level", "reference")};
    } else if (kind == "mc") {
      cfg.reference = McReference{get<std::string>(r, "model", "reference"),
                                  get_or<std::size_t>(r, "samples", 65536, "reference"),
                                  get_or<std::uint64_t>(r, "seed", 0, "reference")};
    } else {
      throw ConfigError("reference.kind: must be analytic, pce or mc");
    }
  }

  if (root.contains("validation")) {
    const auto& v = root.at("validation");
    cfg.validation_count = get<std::size_t>(v, "count", "validation");
    cfg.validation_seed = get<std::uint64_t>(v, "seed", "validation");
  }
  if (root.contains("rt_values")) cfg.rt_values = get<std::vector<double>>(root, "rt_values", "config");
  cfg.output = get_or<std::string>(root, "output", "out", "config");
  if (root.contains("cache_file")) cfg.cache_file = get<std::string>(root, "cache_file", "config");

  // Cross-references.
  if (cfg.variables.empty() && !cfg.benchmark) throw ConfigError("config: needs 'variables' or 'benchmark'");
  if (cfg.models.empty()) throw ConfigError("config.models: at least one model is required");
  if (cfg.schemes.empty()) throw ConfigError("config.schemes: at least one scheme is required");
  auto known = [&](const std::string& id) {
    for (const auto& m : cfg.models) {
      if (m.id == id) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
    const auto& s = cfg.schemes[i];
    const std::string where = "schemes[" + std::to_string(i) + "]";
    if (!known(s.hf_model)) throw ConfigError(where + ".hf: unknown model id '" + s.hf_model + "'");
    if (s.kind != SchemeKind::HF && !known(s.lf_model)) {
      throw ConfigError(where + ".lf: unknown model id '" + s.lf_model + "'");
    }
  }
  if (const auto* p = std::get_if<PceReference>(&cfg.reference); p && !known(p->model)) {
    throw ConfigError("reference.model: unknown model id '" + p->model + "'");
  }
  if (const auto* m = std::get_if<McReference>(&cfg.reference); m && !known(m->model)) {
    throw ConfigError("reference.model: unknown model id '" + m->model + "'");
  }
  if (cfg.level_min < 0 || cfg.level_max < cfg.level_min) throw ConfigError("levels: need 0 <= min <= max");
  for (double rt : cfg.rt_values) {
    if (!(rt > 0.0 && rt <= 1.0)) throw ConfigError("rt_values: each value must lie in (0, 1]");
  }
  return cfg;
}

inline StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline nlohmann::json to_json(const StudyConfig& cfg) {
  using nlohmann::json;
  json root = json::object();
  if (cfg.benchmark) root["benchmark"] = *cfg.benchmark;
  if (!cfg.variables.empty()) {
    json vars = json::array();
    for (const auto& v : cfg.variables) {
      if (const auto* u = std::get_if<Uniform>(&v.dist())) {
        vars.push_back({{"name", v.name()}, {"dist", "uniform"}, {"a", u->a}, {"b", u->b}});
      } else {
        const auto& n = std::get<Normal>(v.dist());
        vars.push_back({{"name", v.name()}, {"dist", "normal"}, {"mu", n.mu}, {"sigma", n.sigma}});
      }
    }
    root["variables"] = vars;
  }
  json models = json::array();
  for (const auto& m : cfg.models) {
    json j = {{"id", m.id}, {"fidelity", m.fidelity.label()}, {"cost_unit", m.cost_unit}};
    if (m.is_external()) {
      j["command"] = m.command;
      j["protocol"] = to_string(m.protocol);
    } else {
      j["builtin"] = m.builtin;
    }
    models.push_back(j);
  }
  root["models"] = models;
  json schemes = json::array();
  for (const auto& s : cfg.schemes) {
    json j = {{"kind", to_string(s.kind)}, {"hf", s.hf_model}};
    if (s.kind != SchemeKind::HF) j["lf"] = s.lf_model;
    if (s.kind == SchemeKind::MF) j["q"] = s.q;
    schemes.push_back(j);
  }
  root["schemes"] = schemes;
  root["levels"] = {{"min", cfg.level_min}, {"max", cfg.level_max}};
  std::visit(
      [&](const auto& ref) {
        using T = std::decay_t<decltype(ref)>;
        if constexpr (std::is_same_v<T, AnalyticReference>) {
          root["reference"] = {{"kind", "analytic"}, {"a", ref.a}, {"b", ref.b}};
        } else if constexpr (std::is_same_v<T, PceReference>) {
          root["reference"] = {{"kind", "pce"}, {"model", ref.model}, {"level", ref.level}};
        } else {
          root["reference"] = {{"kind", "mc"}, {"model", ref.model}, {"samples", ref.samples}, {"seed", ref.seed}};
        }
      },
      cfg.reference);
  root["validation"] = {{"count", cfg.validation_count}, {"seed", cfg.validation_seed}};
  root["rt_values"] = cfg.rt_values;
  root["output"] = cfg.output;
  if (cfg.cache_file) root["cache_file"] = *cfg.cache_file;
  return root;
}

inline std::string serialize_config(const StudyConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

/// Variables of the config: the explicit list, or the named benchmark's.
inline std::vector<VariableSpec> config_variables(const StudyConfig& cfg) {
  if (!cfg.variables.empty()) return cfg.variables;
  return find_benchmark(*cfg.benchmark)->specs;
}

inline Model bind_model(const ModelBinding& b) {
  if (b.is_external()) return external_model(b.id, b.command, b.fidelity, b.protocol, b.cost_unit);
  Model m = find_benchmark(b.builtin)->model(b.fidelity);
  m.id = b.id;
  m.cost_unit = b.cost_unit;
  return m;
}

/// Resolves bindings into runnable models.
inline StudyDefinition resolve(const StudyConfig& cfg, int threads = 1) {
  StudyDefinition study;
  study.specs = config_variables(cfg);
  for (const auto& b : cfg.models) {
    if (!b.is_external()) {
      const auto expected = find_benchmark(b.builtin)->specs.size();
      if (expected != study.specs.size()) {
        throw ConfigError("model '" + b.id + "': builtin " + b.builtin + " takes " + std::to_string(expected) +
                          " inputs but the config declares " + std::to_string(study.specs.size()) + " variables");
      }
    }
    study.models.emplace(b.id, bind_model(b));
  }
  study.schemes = cfg.schemes;
  study.level_min = cfg.level_min;
  study.level_max = cfg.level_max;
  study.reference = cfg.reference;
  study.validation_count = cfg.validation_count;
  study.validation_seed = cfg.validation_seed;
  study.rt_values = cfg.rt_values;
  study.threads = threads;
  study.validate();
  return study;
}

}  // namespace mfpce
