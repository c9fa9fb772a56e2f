#pragma once

// Counter-based deterministic sampling: every draw is a pure function of
// (seed, stream, index), so results do not depend on evaluation order or threading.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "mfpce/orthopoly.hpp"

namespace mfpce {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const {
    return mix(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)) + index);
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    return (static_cast<double>(bits(stream, index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two counter draws.
  double normal(std::uint64_t stream, std::uint64_t index) const {
    const double u1 = uniform(stream, 2 * index);
    const double u2 = uniform(stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

/// Draw `index` of variable `spec`, taken from the given stream.
inline double sample_variable(const VariableSpec& spec, const CounterRng& rng, std::uint64_t stream,
                              std::uint64_t index) {
  if (const auto* u = std::get_if<Uniform>(&spec.dist())) {
    return u->a + (u->b - u->a) * rng.uniform(stream, index);
  }
  const auto& n = std::get<Normal>(spec.dist());
  return n.mu + n.sigma * rng.normal(stream, index);
}

/// count x n sample matrix (row-major). Variable j uses stream base_stream + j.
inline std::vector<std::vector<double>> sample_points(std::span<const VariableSpec> specs, std::size_t count,
                                                      const CounterRng& rng, std::uint64_t base_stream = 0) {
  std::vector<std::vector<double>> pts(count, std::vector<double>(specs.size()));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < specs.size(); ++j) {
      pts[i][j] = sample_variable(specs[j], rng, base_stream + j, i);
    }
  }
  return pts;
}

}  // namespace mfpce
