#pragma once

/**
 * @file orthopoly.hpp
 * @brief One-dimensional orthogonal polynomial families and Gauss rules.
 *
 * Everything here lives in probabilists' normalization: the Legendre family is
 * orthogonal with respect to the uniform density 1/2 on [-1, 1] and the Hermite
 * family (He_k, not the physicists' H_k) with respect to the standard normal
 * density. Gauss weights therefore sum to one and already absorb the density.
 *
 * Polynomials are evaluated unnormalized (P_k(1) = 1, He_k monic); the squared
 * norms E[psi_k^2] are tracked separately by norm_sq().
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mfpce/errors.hpp"

namespace mfpce {

enum class PolyFamily { Legendre, Hermite };

inline const char* to_string(PolyFamily family) {
  return family == PolyFamily::Legendre ? "Legendre" : "Hermite";
}

struct Uniform {
  double a;
  double b;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct Normal {
  double mu;
  double sigma;
  friend bool operator==(const Normal&, const Normal&) = default;
};

using Distribution = std::variant<Uniform, Normal>;

/// One independent input random variable.
class VariableSpec {
 public:
  VariableSpec(std::string name, Distribution dist) : name_(std::move(name)), dist_(dist) {
    if (const auto* u = std::get_if<Uniform>(&dist_)) {
      if (!std::isfinite(u->a) || !std::isfinite(u->b) || !(u->a < u->b)) {
        throw ConfigError("variable '" + name_ + "': Uniform requires finite a < b");
      }
    } else {
      const auto& n = std::get<Normal>(dist_);
      if (!std::isfinite(n.mu) || !std::isfinite(n.sigma) || !(n.sigma > 0.0)) {
        throw ConfigError("variable '" + name_ + "': Normal requires finite mu and sigma > 0");
      }
    }
  }

  static VariableSpec uniform(std::string name, double a, double b) {
    return VariableSpec(std::move(name), Uniform{a, b});
  }
  static VariableSpec normal(std::string name, double mu, double sigma) {
    return VariableSpec(std::move(name), Normal{mu, sigma});
  }

  const std::string& name() const { return name_; }
  const Distribution& dist() const { return dist_; }

  PolyFamily family() const {
    return std::holds_alternative<Uniform>(dist_) ? PolyFamily::Legendre : PolyFamily::Hermite;
  }

  /// Affine map from the physical variable onto the family's standard support.
  double to_standard(double xi) const {
    if (const auto* u = std::get_if<Uniform>(&dist_)) {
      return (2.0 * xi - u->a - u->b) / (u->b - u->a);
    }
    const auto& n = std::get<Normal>(dist_);
    return (xi - n.mu) / n.sigma;
  }

  double from_standard(double x) const {
    if (const auto* u = std::get_if<Uniform>(&dist_)) {
      return 0.5 * (u->a + u->b) + 0.5 * (u->b - u->a) * x;
    }
    const auto& n = std::get<Normal>(dist_);
    return n.mu + n.sigma * x;
  }

  double mean() const {
    if (const auto* u = std::get_if<Uniform>(&dist_)) return 0.5 * (u->a + u->b);
    return std::get<Normal>(dist_).mu;
  }

  double stddev() const {
    if (const auto* u = std::get_if<Uniform>(&dist_)) return (u->b - u->a) / std::sqrt(12.0);
    return std::get<Normal>(dist_).sigma;
  }

  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;

 private:
  std::string name_;
  Distribution dist_;
};

inline double to_standard(const VariableSpec& spec, double xi) { return spec.to_standard(xi); }
inline double from_standard(const VariableSpec& spec, double x) { return spec.from_standard(x); }

/// Value of the degree-k polynomial of the family at x (P_k with P_k(1) = 1, or He_k).
inline double eval_poly(PolyFamily family, int degree, double x) {
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < degree; ++k) {
    double next = 0.0;
    if (family == PolyFamily::Legendre) {
      next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
    } else {
      next = x * cur - k * prev;
    }
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Fills out[k] = psi_k(x) for k = 0 .. out.size()-1.
template <class Real>
void eval_poly_upto(PolyFamily family, Real x, std::span<Real> out) {
  if (out.empty()) return;
  out[0] = 1;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    const Real kd = static_cast<Real>(k);
    out[k + 1] = family == PolyFamily::Legendre ? ((2 * kd + 1) * x * out[k] - kd * out[k - 1]) / (kd + 1)
                                                : x * out[k] - kd * out[k - 1];
  }
}

inline void eval_poly_upto(PolyFamily family, double x, std::span<double> out) {
  eval_poly_upto<double>(family, x, out);
}

/// E[psi_k^2] under the family's probability density: 1/(2k+1) for Legendre, k! for Hermite.
inline double norm_sq(PolyFamily family, int degree) {
  if (family == PolyFamily::Legendre) return 1.0 / (2.0 * degree + 1.0);
  return std::tgamma(static_cast<double>(degree) + 1.0);
}

struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

namespace detail {

// Off-diagonal entries of the monic recurrence psi_{k+1} = x psi_k - beta_k psi_{k-1}.
inline double recurrence_beta(PolyFamily family, int k) {
  if (family == PolyFamily::Legendre) {
    const double kd = k;
    return kd * kd / (4.0 * kd * kd - 1.0);
  }
  return static_cast<double>(k);
}

// Eigenvalues of the symmetric tridiagonal matrix with zero diagonal and the given
// off-diagonal, by implicit QL with Wilkinson shifts. offdiag[i] couples rows i and i+1.
inline std::vector<double> symmetric_tridiagonal_eigenvalues(std::vector<double> diag,
                                                             std::vector<double> offdiag) {
  const std::size_t n = diag.size();
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = offdiag[i];

  for (std::size_t l = 0; l < n; ++l) {
    int iterations = 0;
    std::size_t m = l;
    while (true) {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m == l) break;
      if (++iterations > 60) {
        throw NumericalError("tridiagonal QL iteration did not converge");
      }
      double g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = diag[m] - diag[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      bool underflow = false;
      for (std::size_t ii = m; ii-- > l;) {
        double f = s * e[ii];
        const double b = c * e[ii];
        r = std::hypot(f, g);
        e[ii + 1] = r;
        if (r == 0.0) {
          diag[ii + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = diag[ii + 1] - p;
        r = (diag[ii] - g) * s + 2.0 * c * b;
        p = s * r;
        diag[ii + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      diag[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
  std::sort(diag.begin(), diag.end());
  return diag;
}

// Orthonormal polynomial values p_0..p_{m-1} at x; returns (p_m(x), p_m'(x)) and the
// Christoffel sum sum_{k<m} p_k(x)^2.
// Newton polish and weights run in extended precision so that the rounded double
// nodes and weights are accurate to the last bit.
using wide = long double;

struct OrthonormalEval {
  wide value;
  wide derivative;
  wide christoffel;
};

inline OrthonormalEval orthonormal_eval(PolyFamily family, int m, wide x) {
  wide p_prev = 0.0L;
  wide p = 1.0L;
  wide d_prev = 0.0L;
  wide d = 0.0L;
  wide christoffel = 0.0L;
  wide sqrt_beta_prev = 0.0L;
  for (int k = 0; k < m; ++k) {
    christoffel += p * p;
    const int kk = k + 1;
    const wide beta = family == PolyFamily::Legendre
                          ? static_cast<wide>(kk) * kk / (4.0L * kk * kk - 1.0L)
                          : static_cast<wide>(kk);
    const wide sqrt_beta = std::sqrt(beta);
    const wide p_next = (x * p - sqrt_beta_prev * p_prev) / sqrt_beta;
    const wide d_next = (p + x * d - sqrt_beta_prev * d_prev) / sqrt_beta;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
    sqrt_beta_prev = sqrt_beta;
  }
  return {p, d, christoffel};
}

inline GaussRule compute_gauss_rule(PolyFamily family, int m) {
  std::vector<double> diag(static_cast<std::size_t>(m), 0.0);
  std::vector<double> offdiag;
  offdiag.reserve(static_cast<std::size_t>(m));
  for (int k = 1; k < m; ++k) offdiag.push_back(std::sqrt(recurrence_beta(family, k)));
  std::vector<double> nodes = symmetric_tridiagonal_eigenvalues(std::move(diag), std::move(offdiag));

  // Newton polish on the orthonormal recurrence, then Christoffel weights. The eigensolve
  // alone loses relative accuracy in the tiny tail weights of wide Hermite rules.
  const std::size_t n = nodes.size();
  std::vector<wide> points(n);
  std::vector<wide> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    wide x = nodes[i];
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const auto ev = orthonormal_eval(family, m, x);
      const wide dx = ev.value / ev.derivative;
      x -= dx;
      if (std::abs(dx) <= 1e-14L * std::max<wide>(1.0L, std::abs(x))) {
        // One more step settles the last extended-precision bits.
        const auto fin = orthonormal_eval(family, m, x);
        x -= fin.value / fin.derivative;
        converged = true;
        break;
      }
    }
    if (!converged || !std::isfinite(static_cast<double>(x))) {
      throw NumericalError(std::string("Gauss-") + to_string(family) + " root " + std::to_string(i) +
                           " of " + std::to_string(m) + " did not converge");
    }
    points[i] = x;
    weights[i] = 1.0L / orthonormal_eval(family, m, x).christoffel;
  }

  // Both densities are even: enforce exact symmetry and an exact center node.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const wide x = 0.5L * (points[j] - points[i]);
    const wide w = 0.5L * (weights[i] + weights[j]);
    points[i] = -x;
    points[j] = x;
    weights[i] = w;
    weights[j] = w;
  }
  if (n % 2 == 1) points[n / 2] = 0.0L;

  wide total = 0.0L;
  for (wide w : weights) total += w;
  GaussRule rule;
  for (std::size_t i = 0; i < n; ++i) {
    rule.points.push_back(static_cast<double>(points[i]));
    rule.weights.push_back(static_cast<double>(weights[i] / total));
  }
  return rule;
}

}  // namespace detail

/// m-point Gauss rule for the family's probability density, exact to degree 2m-1.
/// Rules are memoized; the returned reference stays valid for the program's lifetime.
inline const GaussRule& gauss_rule(PolyFamily family, int m) {
  if (m < 1) throw std::invalid_argument("gauss_rule: m must be >= 1");
  static std::mutex mutex;
  static std::map<std::pair<PolyFamily, int>, GaussRule> rules;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = rules.find({family, m});
  if (it == rules.end()) {
    it = rules.emplace(std::pair{family, m}, detail::compute_gauss_rule(family, m)).first;
  }
  return it->second;
}

}  // namespace mfpce
