#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "mfpce/models.hpp"
#include "mfpce/sparse_grid.hpp"

using namespace mfpce;

namespace {

std::vector<VariableSpec> uniforms(int n) {
  std::vector<VariableSpec> specs;
  for (int j = 0; j < n; ++j) specs.push_back(VariableSpec::uniform("u" + std::to_string(j), -1, 1));
  return specs;
}

std::vector<VariableSpec> mixed(int n) {
  std::vector<VariableSpec> specs;
  for (int j = 0; j < n; ++j) {
    if (j % 2 == 0) {
      specs.push_back(VariableSpec::uniform("u" + std::to_string(j), -1, 1));
    } else {
      specs.push_back(VariableSpec::normal("g" + std::to_string(j), 0, 1));
    }
  }
  return specs;
}

using Integrand = std::function<double(std::span<const double>)>;

// Tensor quadrature with the given 1D point counts (0 points means the empty rule).
double tensor_integral(const std::vector<int>& counts, const std::vector<VariableSpec>& specs, const Integrand& f) {
  std::vector<const GaussRule*> rules;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) return 0.0;
    rules.push_back(&gauss_rule(specs[j].family(), counts[j]));
  }
  double s = 0.0;
  for_each_tensor_node(std::span<const GaussRule* const>(rules),
                       [&](std::span<const double> x, double w) { s += w * f(x); });
  return s;
}

// Difference form: sum over |l| <= w of the tensor product of (Q_l - Q_{l-1}),
// expanded into signed plain tensor rules.
double difference_form(int n, int w, const std::vector<VariableSpec>& specs, const Integrand& f) {
  double total = 0.0;
  detail::for_each_bounded_sum(n, 0, w, [&](const MultiIndex& l) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<int> counts(n);
      int sign = 1;
      for (int j = 0; j < n; ++j) {
        if (mask & (1u << j)) {
          counts[j] = l[j] == 0 ? 0 : growth(l[j] - 1);
          sign = -sign;
        } else {
          counts[j] = growth(l[j]);
        }
      }
      total += sign * tensor_integral(counts, specs, f);
    }
  });
  return total;
}

std::vector<Integrand> test_functions() {
  return {
      [](std::span<const double>) { return 1.0; },
      [](std::span<const double> x) {
        double p = 1.0;
        for (double v : x) p *= v * v;
        return p;
      },
      [](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += std::pow(x[j], static_cast<int>(j) + 3);
        return s;
      },
      [](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (j + 1) * 0.3 * x[j];
        return std::exp(0.4 * std::sin(s));
      },
      [](std::span<const double> x) {
        double s = 1.0;
        for (double v : x) s += v * v;
        return 1.0 / s;
      },
  };
}

}  // namespace

TEST(Growth, SpecExamples) {
  EXPECT_EQ(growth(0), 1);
  EXPECT_EQ(growth(1), 3);
  EXPECT_EQ(growth(3), 15);
  for (int l = 1; l < 10; ++l) EXPECT_EQ(growth(l), 2 * growth(l - 1) + 1);
  EXPECT_THROW(growth(-1), std::invalid_argument);
}

TEST(LevelTerms, OneDimensionIsTheTopRule) {
  const auto t = level_terms(1, 2);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].levels, MultiIndex({2}));
  EXPECT_EQ(t[0].coeff, 1);
}

TEST(LevelTerms, TwoDimensionsLevelOne) {
  const auto t = level_terms(2, 1);
  ASSERT_EQ(t.size(), 3u);
  std::map<MultiIndex, int> got;
  for (const auto& term : t) got[term.levels] = term.coeff;
  EXPECT_EQ(got.at(MultiIndex({0, 1})), 1);
  EXPECT_EQ(got.at(MultiIndex({1, 0})), 1);
  EXPECT_EQ(got.at(MultiIndex({0, 0})), -1);
}

TEST(LevelTerms, RootOnly) {
  const auto t = level_terms(3, 0);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].levels, MultiIndex({0, 0, 0}));
  EXPECT_EQ(t[0].coeff, 1);
}

TEST(LevelTerms, CoefficientsSumToOne) {
  for (int n = 1; n <= 8; ++n) {
    for (int w = 0; w <= 5; ++w) {
      int sum = 0;
      for (const auto& term : level_terms(n, w)) {
        sum += term.coeff;
        EXPECT_LE(term.levels.sum(), w);
        EXPECT_GE(term.levels.sum(), std::max(0, w - n + 1));
      }
      EXPECT_EQ(sum, 1) << "n=" << n << " w=" << w;
    }
  }
}

TEST(LevelTerms, SortedByLevels) {
  const auto t = level_terms(3, 3);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t[i - 1].levels, t[i].levels);
}

TEST(LevelTerms, RejectsBadArguments) {
  EXPECT_THROW(level_terms(0, 1), std::invalid_argument);
  EXPECT_THROW(level_terms(2, -1), std::invalid_argument);
}

TEST(TensorGrid, RootLevel) {
  const auto specs = uniforms(2);
  const auto g = tensor_grid(MultiIndex({0, 0}), specs);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.node(0)[0], 0.0);
  EXPECT_EQ(g.node(0)[1], 0.0);
  EXPECT_DOUBLE_EQ(g.weight(0), 1.0);
}

TEST(TensorGrid, OneByZero) {
  const auto specs = uniforms(2);
  const auto g = tensor_grid(MultiIndex({1, 0}), specs);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g.weight(0), 5.0 / 18, 1e-15);
  EXPECT_NEAR(g.weight(1), 8.0 / 18, 1e-15);
  EXPECT_NEAR(g.weight(2), 5.0 / 18, 1e-15);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.node(i)[1], 0.0);
}

TEST(TensorGrid, OuterProductWeights) {
  const auto specs = uniforms(2);
  const auto g = tensor_grid(MultiIndex({1, 1}), specs);
  ASSERT_EQ(g.size(), 9u);
  const auto& r = gauss_rule(PolyFamily::Legendre, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t k = i * 3 + j;
      EXPECT_DOUBLE_EQ(g.node(k)[0], r.points[i]);
      EXPECT_DOUBLE_EQ(g.node(k)[1], r.points[j]);
      EXPECT_NEAR(g.weight(k), r.weights[i] * r.weights[j], 1e-16);
    }
  }
}

TEST(TensorGrid, RejectsArityMismatch) {
  const auto specs = uniforms(2);
  EXPECT_THROW(tensor_grid(MultiIndex({1}), specs), std::invalid_argument);
}

TEST(SmolyakGrid, NodeCounts) {
  EXPECT_EQ(smolyak_grid(2, 0, uniforms(2)).size(), 1u);
  const auto cross = smolyak_grid(2, 1, uniforms(2));
  EXPECT_EQ(cross.size(), 5u);
  for (std::size_t i = 0; i < cross.size(); ++i) {
    EXPECT_TRUE(cross.node(i)[0] == 0.0 || cross.node(i)[1] == 0.0);
  }
  EXPECT_EQ(smolyak_grid(8, 1, borehole_benchmark().specs).size(), 17u);
}

TEST(SmolyakGrid, WeightsSumToOneAndKeysAreUnique) {
  for (int n = 1; n <= 4; ++n) {
    for (int w = 0; w <= 4; ++w) {
      const auto specs = mixed(n);
      const auto g = smolyak_grid(n, w, specs);
      double total = 0.0;
      std::set<NodeKey> keys;
      for (std::size_t i = 0; i < g.size(); ++i) {
        total += g.weight(i);
        keys.insert(g.key(i));
        EXPECT_EQ(g.find(g.key(i)), i);
      }
      EXPECT_NEAR(total, 1.0, 1e-10) << "n=" << n << " w=" << w;
      EXPECT_EQ(keys.size(), g.size());
    }
  }
}

TEST(SmolyakGrid, MatchesDifferenceForm) {
  for (int n = 1; n <= 3; ++n) {
    for (int w = 0; w <= 3; ++w) {
      for (const auto& specs : {uniforms(n), mixed(n)}) {
        const auto g = smolyak_grid(n, w, specs);
        for (const auto& f : test_functions()) {
          EXPECT_NEAR(g.integrate(f), difference_form(n, w, specs, f), 1e-12) << "n=" << n << " w=" << w;
        }
      }
    }
  }
}

TEST(SmolyakGrid, DeduplicationPreservesWeightedSums) {
  for (int n = 2; n <= 4; ++n) {
    const auto specs = mixed(n);
    const int w = 3;
    const auto g = smolyak_grid(n, w, specs);
    for (const auto& f : test_functions()) {
      double raw = 0.0;
      for (const auto& term : level_terms(n, w)) {
        const auto rules = tensor_rules(term.levels, specs);
        for_each_tensor_node(std::span<const GaussRule* const>(rules),
                             [&](std::span<const double> x, double wt) { raw += term.coeff * wt * f(x); });
      }
      EXPECT_NEAR(g.integrate(f), raw, 1e-12);
    }
  }
}

TEST(SmolyakGrid, ExactForLowOrderPolynomials) {
  // A level-w grid integrates every monomial of total degree <= 2w + 1 exactly.
  const auto specs = uniforms(3);
  const auto g = smolyak_grid(3, 3, specs);
  auto moment = [](int d) { return d % 2 ? 0.0 : 1.0 / (d + 1); };
  for (int a = 0; a <= 7; ++a) {
    for (int b = 0; a + b <= 7; ++b) {
      for (int c = 0; a + b + c <= 7; ++c) {
        const double v = g.integrate([&](std::span<const double> x) {
          return std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c);
        });
        EXPECT_NEAR(v, moment(a) * moment(b) * moment(c), 1e-13) << a << b << c;
      }
    }
  }
}

TEST(SmolyakGrid, PhysicalCoordinates) {
  const std::vector<VariableSpec> specs{VariableSpec::uniform("a", 10, 20), VariableSpec::normal("b", 5, 2)};
  const auto g = smolyak_grid(2, 2, specs);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto xi = g.physical(i, specs);
    EXPECT_NEAR(xi[0], 15 + 5 * g.node(i)[0], 1e-12);
    EXPECT_NEAR(xi[1], 5 + 2 * g.node(i)[1], 1e-12);
  }
}

TEST(MultiIndex, OrderingAndSum) {
  const MultiIndex a{0, 2, 1};
  const MultiIndex b{1, 0, 0};
  EXPECT_EQ(a.sum(), 3);
  EXPECT_LT(a, b);
  EXPECT_TRUE(MultiIndex(3).is_zero());
  EXPECT_FALSE(a.is_zero());
  EXPECT_EQ(MultiIndexHash{}(a), MultiIndexHash{}(MultiIndex({0, 2, 1})));
}
