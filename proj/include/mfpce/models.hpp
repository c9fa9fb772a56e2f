#pragma once

/**
 * @file models.hpp
 * @brief Benchmark models, the model abstraction, and the shared evaluation cache.
 *
 * Builtin benchmarks: the 8-D borehole function (one LF variant), the 3-D Ishigami
 * function (three LF variants) and the 5-D short column (five LF variants). Inputs are
 * always physical coordinates in the order of the benchmark's variable list.
 */

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mfpce/errors.hpp"
#include "mfpce/orthopoly.hpp"

namespace mfpce {

struct Fidelity {
  enum class Kind { HF, LF };
  Kind kind = Kind::HF;
  int variant = 0;  // LF variant number, 1-based; 0 for HF

  static Fidelity hf() { return {Kind::HF, 0}; }
  static Fidelity lf(int variant) { return {Kind::LF, variant}; }
  bool is_hf() const { return kind == Kind::HF; }

  std::string label() const { return is_hf() ? "hf" : "lf" + std::to_string(variant); }
  friend bool operator==(const Fidelity&, const Fidelity&) = default;
};

using ModelFn = std::function<double(std::span<const double>)>;

/// A deterministic scalar model of the physical inputs.
struct Model {
  std::string id;
  Fidelity fidelity;
  ModelFn eval;
  double cost_unit = 1.0;  // relative cost; HF = 1
};

/// Renders coordinates at 17 significant digits, space separated.
inline std::string format_point(std::span<const double> xi) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < xi.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", xi[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Borehole: xi = (r_w, r_a, T_u, H_u, T_l, H_l, L, K_w)

inline double borehole(Fidelity fidelity, std::span<const double> xi) {
  if (xi.size() != 8) throw ModelError("borehole: expected 8 inputs");
  const double rw = xi[0], ra = xi[1], tu = xi[2], hu = xi[3];
  const double tl = xi[4], hl = xi[5], len = xi[6], kw = xi[7];
  if (!(rw > 0.0) || !(ra > 0.0)) throw ModelError("borehole: radii must be positive at (" + format_point(xi) + ")");
  const double log_ratio = std::log(ra / rw);
  if (!(log_ratio > 0.0) || tl == 0.0 || kw == 0.0) {
    throw ModelError("borehole: domain error at (" + format_point(xi) + ")");
  }
  const bool high = fidelity.is_hf();
  if (!high && fidelity.variant != 1) throw ModelError("borehole: only LF variant 1 exists");
  const double numer = (high ? 2.0 * std::numbers::pi : 5.0) * tu * (hu - hl);
  const double denom =
      log_ratio * ((high ? 1.0 : 1.5) + 2.0 * len * tu / (log_ratio * rw * rw * kw) + tu / tl);
  return numer / denom;
}

// ---------------------------------------------------------------------------
// Ishigami: sin x1 + a sin^2 x2 + b x3^4 sin x1 (+ shift)

inline double ishigami_ab(double a, double b, std::span<const double> xi) {
  const double s1 = std::sin(xi[0]);
  const double s2 = std::sin(xi[1]);
  const double x3sq = xi[2] * xi[2];
  return s1 + a * s2 * s2 + b * x3sq * x3sq * s1;
}

inline double ishigami(Fidelity fidelity, std::span<const double> xi) {
  if (xi.size() != 3) throw ModelError("ishigami: expected 3 inputs");
  if (fidelity.is_hf()) return ishigami_ab(7.0, 0.1, xi);
  switch (fidelity.variant) {
    case 1: return ishigami_ab(7.3, 0.08, xi);
    case 2: return ishigami_ab(7.3, 0.04, xi);
    case 3: return ishigami_ab(7.3, 0.04, xi) + 0.02;
    default: throw ModelError("ishigami: LF variant must be 1..3");
  }
}

// ---------------------------------------------------------------------------
// Short column: xi = (b, h, P, M, Y)

inline double short_column(Fidelity fidelity, std::span<const double> xi) {
  if (xi.size() != 5) throw ModelError("short_column: expected 5 inputs");
  const double b = xi[0], h = xi[1], p = xi[2], m = xi[3], y = xi[4];
  if (b == 0.0 || h == 0.0 || y == 0.0) {
    throw ModelError("short_column: zero denominator at (" + format_point(xi) + ")");
  }
  const double bhy = b * h * y;
  const double bh2y = b * h * h * y;
  const double hf = 1.0 - 4.0 * m / bh2y - (p / bhy) * (p / bhy);
  if (fidelity.is_hf()) return hf;
  switch (fidelity.variant) {
    case 1: return 1.0 - 4.0 * p / bh2y - (p / bhy) * (p / bhy);
    case 2: return 1.0 - 4.0 * m / bh2y - (m / bhy) * (m / bhy);
    case 3: return hf - 4.0 * (p - m) / bhy;
    case 4: return hf - 0.4 * (p - m) / bhy;
    case 5: return hf - 40.0 * (p - m) / bhy;
    default: throw ModelError("short_column: LF variant must be 1..5");
  }
}

// ---------------------------------------------------------------------------

/// A builtin test case: its input variables and its models.
struct Benchmark {
  std::string name;
  std::vector<VariableSpec> specs;
  int lf_variants;
  int default_q;

  Model model(Fidelity fidelity) const {
    if (!fidelity.is_hf() && (fidelity.variant < 1 || fidelity.variant > lf_variants)) {
      throw ConfigError(name + ": no LF variant " + std::to_string(fidelity.variant));
    }
    ModelFn fn;
    if (name == "borehole") {
      fn = [fidelity](std::span<const double> x) { return borehole(fidelity, x); };
    } else if (name == "ishigami") {
      fn = [fidelity](std::span<const double> x) { return ishigami(fidelity, x); };
    } else {
      fn = [fidelity](std::span<const double> x) { return short_column(fidelity, x); };
    }
    return Model{name + "/" + fidelity.label(), fidelity, std::move(fn), 1.0};
  }
};

inline Benchmark borehole_benchmark() {
  return {"borehole",
          {VariableSpec::uniform("r_w", 0.05, 0.15), VariableSpec::uniform("r_a", 100, 50000),
           VariableSpec::uniform("T_u", 63700, 115600), VariableSpec::uniform("H_u", 990, 1110),
           VariableSpec::uniform("T_l", 63.1, 116), VariableSpec::uniform("H_l", 700, 820),
           VariableSpec::uniform("L", 1120, 1680), VariableSpec::uniform("K_w", 9855, 12045)},
          1,
          1};
}

inline Benchmark ishigami_benchmark() {
  const double pi = std::numbers::pi;
  return {"ishigami",
          {VariableSpec::uniform("x1", -pi, pi), VariableSpec::uniform("x2", -pi, pi),
           VariableSpec::uniform("x3", -pi, pi)},
          3,
          2};
}

/// Normal parameters are (mean, standard deviation).
inline Benchmark short_column_benchmark() {
  return {"short_column",
          {VariableSpec::uniform("b", 5, 15), VariableSpec::uniform("h", 15, 25),
           VariableSpec::normal("P", 500, 100), VariableSpec::normal("M", 2000, 400),
           VariableSpec::normal("Y", 5, 0.5)},
          5,
          2};
}

inline std::optional<Benchmark> find_benchmark(const std::string& name) {
  if (name == "borehole") return borehole_benchmark();
  if (name == "ishigami") return ishigami_benchmark();
  if (name == "short_column") return short_column_benchmark();
  return std::nullopt;
}

// ---------------------------------------------------------------------------

/// Memoizes (model id, node) -> value and counts distinct evaluations per model.
///
/// Values survive reset_counters(); counters only track which pairs the current
/// accounting window has requested. Entries loaded from a persistence file are
/// reused but still counted the first time a window requests them.
class EvalCache {
 public:
  EvalCache() = default;
  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  double evaluate(const Model& model, std::span<const double> xi) {
    const std::string key = model.id + '\t' + format_point(xi);
    std::shared_future<double> fut;
    bool owner = false;
    std::promise<double> promise;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (touched_.insert(key).second) ++counters_[model.id];
      auto it = store_.find(key);
      if (it != store_.end()) {
        fut = it->second;
      } else {
        fut = promise.get_future().share();
        store_.emplace(key, fut);
        owner = true;
      }
    }
    if (owner) {
      try {
        const double y = model.eval(xi);
        if (!std::isfinite(y)) {
          throw ModelError("model '" + model.id + "' returned a non-finite value at (" + format_point(xi) + ")");
        }
        promise.set_value(y);
        persist(key, y);
      } catch (const ModelError&) {
        promise.set_exception(std::current_exception());
      } catch (const std::exception& ex) {
        promise.set_exception(std::make_exception_ptr(
            ModelError("model '" + model.id + "' failed at (" + format_point(xi) + "): " + ex.what())));
      }
    }
    return fut.get();
  }

  /// Distinct evaluations of the model requested since the last reset.
  long count(const std::string& model_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = counters_.find(model_id);
    return it == counters_.end() ? 0 : it->second;
  }

  void reset_counters() {
    std::lock_guard<std::mutex> lock(mutex_);
    counters_.clear();
    touched_.clear();
  }

  std::size_t stored() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return store_.size();
  }

  /// Reads `model_id<TAB>x1 x2 ... xn<TAB>y` records. Returns the number loaded.
  std::size_t load(const std::string& path) {
    std::ifstream in(path);
    if (!in) return 0;
    std::size_t loaded = 0;
    std::string line;
    std::lock_guard<std::mutex> lock(mutex_);
    while (std::getline(in, line)) {
      const auto t1 = line.find('\t');
      const auto t2 = line.rfind('\t');
      if (t1 == std::string::npos || t2 == t1) continue;
      const std::string id = line.substr(0, t1);
      std::istringstream coords(line.substr(t1 + 1, t2 - t1 - 1));
      std::vector<double> xi;
      for (double v; coords >> v;) xi.push_back(v);
      double y = 0.0;
      try {
        y = std::stod(line.substr(t2 + 1));
      } catch (const std::exception&) {
        continue;
      }
      std::promise<double> p;
      p.set_value(y);
      if (store_.emplace(id + '\t' + format_point(xi), p.get_future().share()).second) ++loaded;
    }
    return loaded;
  }

  /// Appends every new evaluation to the file from now on.
  void persist_to(const std::string& path) {
    std::lock_guard<std::mutex> lock(file_mutex_);
    sink_ = std::make_unique<std::ofstream>(path, std::ios::app);
    if (!*sink_) throw ConfigError("cannot open cache file '" + path + "'");
  }

 private:
  void persist(const std::string& key, double y) {
    std::lock_guard<std::mutex> lock(file_mutex_);
    if (!sink_) return;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", y);
    *sink_ << key << '\t' << buf << '\n';
    sink_->flush();
  }

  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_future<double>> store_;
  std::unordered_set<std::string> touched_;
  std::map<std::string, long> counters_;
  std::mutex file_mutex_;
  std::unique_ptr<std::ofstream> sink_;
};

/// Evaluates the model at every point through the cache, with up to `threads` workers.
/// Results are returned in point order regardless of scheduling.
inline std::vector<double> evaluate_points(const Model& model, const std::vector<std::vector<double>>& points,
                                           EvalCache& cache, int threads = 1) {
  std::vector<double> out(points.size());
  if (threads <= 1 || points.size() < 2) {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = cache.evaluate(model, points[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        out[i] = cache.evaluate(model, points[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), points.size());
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Direct (uncached) evaluation, for validation samples.
inline std::vector<double> evaluate_direct(const Model& model, const std::vector<std::vector<double>>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const double y = model.eval(p);
    if (!std::isfinite(y)) {
      throw ModelError("model '" + model.id + "' returned a non-finite value at (" + format_point(p) + ")");
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace mfpce
