#include <gtest/gtest.h>

#include <algorithm>

#include "mfpce/mf_pce.hpp"
#include "mfpce/sobol.hpp"

using namespace mfpce;

namespace {

struct Pair {
  std::string bench;
  int lf_variant;
};

std::vector<Pair> all_pairs() {
  std::vector<Pair> out;
  for (const char* name : {"borehole", "ishigami", "short_column"}) {
    const auto b = *find_benchmark(name);
    for (int v = 1; v <= b.lf_variants; ++v) out.push_back({name, v});
  }
  return out;
}

void expect_same_coefficients(const Expansion& a, const Expansion& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [phi, term] : a.terms()) {
    ASSERT_TRUE(b.contains(phi));
    EXPECT_NEAR(term.coeff, b.coeff(phi), tol * std::max(1.0, std::abs(term.coeff)));
  }
}

}  // namespace

TEST(CorrectionValues, Examples) {
  const std::vector<double> a{1, 2}, b{1, 2}, c{3}, d{1};
  EXPECT_EQ(correction_values(a, b), (std::vector<double>{0, 0}));
  EXPECT_EQ(correction_values(c, d), (std::vector<double>{2}));
  EXPECT_THROW(correction_values(a, c), std::invalid_argument);
}

TEST(CorrectionValues, BoreholeMidpoint) {
  const auto bench = borehole_benchmark();
  std::vector<double> mid;
  for (const auto& s : bench.specs) mid.push_back(s.mean());
  const std::vector<double> hf{borehole(Fidelity::hf(), mid)};
  const std::vector<double> lf{borehole(Fidelity::lf(1), mid)};
  // Direct evaluation of both formulas at the midpoint.
  const double rw = 0.1, r = 25050, tu = 89650, hu = 1050, tl = 89.55, hl = 760, l = 1400, kw = 10950;
  const double lr = std::log(r / rw);
  const double fh = 2 * std::numbers::pi * tu * (hu - hl) / (lr * (1 + 2 * l * tu / (lr * rw * rw * kw) + tu / tl));
  const double fl = 5 * tu * (hu - hl) / (lr * (1.5 + 2 * l * tu / (lr * rw * rw * kw) + tu / tl));
  EXPECT_NEAR(correction_values(hf, lf)[0], fh - fl, 1e-9);
}

TEST(MfConfig, Validation) {
  EXPECT_NO_THROW((MfConfig{3, 0}.validate()));
  EXPECT_NO_THROW((MfConfig{3, 3}.validate()));
  EXPECT_THROW((MfConfig{2, 3}.validate()), ConfigError);
  EXPECT_THROW((MfConfig{2, -1}.validate()), ConfigError);
  EXPECT_THROW((MfConfig{-1, 0}.validate()), ConfigError);
  EXPECT_EQ((MfConfig{5, 2}.correction_level()), 3);
}

TEST(BasisContainment, LowerLevelIsSubset) {
  for (int n = 1; n <= 8; ++n) {
    for (int w = 0; w <= (n > 5 ? 4 : 5); ++w) {
      const auto upper = index_set(SparseGridBasis{w}, n);
      for (int q = 0; q <= w; ++q) {
        const auto lower = index_set(SparseGridBasis{w - q}, n);
        EXPECT_TRUE(std::includes(upper.begin(), upper.end(), lower.begin(), lower.end()))
            << "n=" << n << " w=" << w << " q=" << q;
      }
    }
  }
}

TEST(BuildMf, IdenticalModelsReduceToSingleFidelity) {
  const auto bench = ishigami_benchmark();
  const auto hf = bench.model(Fidelity::hf());
  for (int w = 1; w <= 4; ++w) {
    for (int q = 0; q <= w; ++q) {
      EvalCache cache;
      const auto mf = build_mf(hf, hf, bench.specs, MfConfig{w, q}, cache);
      const auto single = project_model(hf, w, bench.specs, cache, Provenance::HF);
      expect_same_coefficients(mf.combined, single, 1e-12);
      for (const auto& [phi, term] : mf.correction.terms()) EXPECT_EQ(term.coeff, 0.0);
      EXPECT_EQ(mf.combined.provenance(), Provenance::Combined);
    }
  }
}

TEST(BuildMf, ConstantOffsetOnlyShiftsTheMean) {
  const auto bench = ishigami_benchmark();
  const auto lf = bench.model(Fidelity::lf(1));
  Model hf{"offset", Fidelity::hf(), [&](std::span<const double> x) { return lf.eval(x) + 2.5; }};
  EvalCache cache;
  const auto mf = build_mf(lf, hf, bench.specs, MfConfig{4, 2}, cache);
  EXPECT_NEAR(mean(mf.combined), mean(mf.lf) + 2.5, 1e-12);
  for (const auto& [phi, term] : mf.combined.terms()) {
    if (!phi.is_zero()) {
      EXPECT_NEAR(term.coeff, mf.lf.coeff(phi), 1e-12);
    }
  }
}

TEST(BuildMf, ZeroOffsetEqualsHighFidelityProjection) {
  for (const auto& p : all_pairs()) {
    const auto bench = *find_benchmark(p.bench);
    const auto hf = bench.model(Fidelity::hf());
    const auto lf = bench.model(Fidelity::lf(p.lf_variant));
    const int w = p.bench == "borehole" ? 2 : 3;
    EvalCache cache;
    const auto mf = build_mf(lf, hf, bench.specs, MfConfig{w, 0}, cache);
    const auto single = project_model(hf, w, bench.specs, cache, Provenance::HF);
    expect_same_coefficients(mf.combined, single, 1e-12);
  }
}

TEST(BuildMf, CombinedSupportAndMomentFormulas) {
  for (const auto& p : all_pairs()) {
    const auto bench = *find_benchmark(p.bench);
    const auto hf = bench.model(Fidelity::hf());
    const auto lf = bench.model(Fidelity::lf(p.lf_variant));
    const int w = p.bench == "borehole" ? 3 : 4;
    const int q = p.bench == "borehole" ? 1 : 2;
    EvalCache cache;
    const auto mf = build_mf(lf, hf, bench.specs, MfConfig{w, q}, cache);
    const int n = static_cast<int>(bench.specs.size());

    const auto full = index_set(SparseGridBasis{w}, n);
    const auto low = index_set(SparseGridBasis{w - q}, n);
    ASSERT_EQ(mf.combined.size(), full.size());
    ASSERT_EQ(mf.correction.size(), low.size());

    // Explicit MF moments from the separate LF and correction tables.
    const MultiIndex zero(bench.specs.size());
    const double mf_mean = mf.lf.coeff(zero) + mf.correction.coeff(zero);
    double mf_var = 0.0;
    for (const auto& [phi, term] : mf.lf.terms()) {
      if (phi.is_zero()) continue;
      const double a = mf.correction.contains(phi) ? term.coeff + mf.correction.coeff(phi) : term.coeff;
      mf_var += a * a * term.norm_sq;
    }
    EXPECT_NEAR(mean(mf.combined), mf_mean, 1e-12 * std::max(1.0, std::abs(mf_mean)));
    EXPECT_NEAR(variance(mf.combined), mf_var, 1e-12 * std::max(1.0, mf_var));
  }
}

TEST(BuildMf, EvaluationCounts) {
  const auto bench = borehole_benchmark();
  const auto hf = bench.model(Fidelity::hf());
  const auto lf = bench.model(Fidelity::lf(1));
  EvalCache cache;
  const auto mf = build_mf(lf, hf, bench.specs, MfConfig{3, 1}, cache);
  const auto lf_grid = smolyak_grid(8, 3, bench.specs);
  const auto hf_grid = smolyak_grid(8, 2, bench.specs);
  EXPECT_EQ(mf.n_hf, static_cast<long>(hf_grid.size()));
  // LF values on the correction grid reuse LF grid points only where nodes coincide.
  std::size_t shared = 0;
  for (std::size_t i = 0; i < hf_grid.size(); ++i) shared += lf_grid.find(hf_grid.key(i)) != lf_grid.size();
  EXPECT_EQ(mf.n_lf, static_cast<long>(lf_grid.size() + hf_grid.size() - shared));
}

TEST(BuildMf, BoreholeBeatsTheHighFidelityGridItConsumed) {
  const auto bench = borehole_benchmark();
  const auto hf = bench.model(Fidelity::hf());
  const auto lf = bench.model(Fidelity::lf(1));
  EvalCache cache;
  const auto reference = all_indices(project_model(hf, 5, bench.specs, cache, Provenance::HF));
  const auto mf = all_indices(build_mf(lf, hf, bench.specs, MfConfig{3, 1}, cache).combined);
  const auto hf2 = all_indices(project_model(hf, 2, bench.specs, cache, Provenance::HF));
  double et_mf = 0.0, et_hf = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    et_mf = std::max(et_mf, std::abs(mf.total_indices[i] - reference.total_indices[i]));
    et_hf = std::max(et_hf, std::abs(hf2.total_indices[i] - reference.total_indices[i]));
  }
  EXPECT_LT(et_mf, et_hf);
}

TEST(BuildMf, ModelFailureNamesTheNode) {
  const auto bench = ishigami_benchmark();
  const auto lf = bench.model(Fidelity::lf(1));
  Model bad{"bad", Fidelity::hf(), [](std::span<const double> x) {
              if (x[0] > 0.5) throw std::runtime_error("solver diverged");
              return 1.0;
            }};
  EvalCache cache;
  try {
    build_mf(lf, bad, bench.specs, MfConfig{3, 1}, cache);
    FAIL() << "expected ModelError";
  } catch (const ModelError& ex) {
    const std::string msg = ex.what();
    EXPECT_NE(msg.find("bad"), std::string::npos);
    EXPECT_NE(msg.find("solver diverged"), std::string::npos);
    EXPECT_NE(msg.find("("), std::string::npos);
  }
}
