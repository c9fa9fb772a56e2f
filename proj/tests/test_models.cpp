#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mfpce/models.hpp"
#include "mfpce/random.hpp"
#include "mfpce/study.hpp"

using namespace mfpce;

namespace {

std::vector<double> midpoint(const Benchmark& b) {
  std::vector<double> mid;
  for (const auto& s : b.specs) mid.push_back(s.mean());
  return mid;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mfpce_test_models";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::filesystem::remove(path);
  return path;
}

}  // namespace

TEST(Borehole, MidpointFixture) {
  const auto b = borehole_benchmark();
  const auto mid = midpoint(b);
  // Frozen from a 30-digit evaluation of both formulas.
  EXPECT_NEAR(borehole(Fidelity::hf(), mid), 70.8729139846481922, 1e-11);
  EXPECT_NEAR(borehole(Fidelity::lf(1), mid), 56.3987208684193260, 1e-11);
}

TEST(Borehole, EqualHeadsGiveZeroFlow) {
  auto x = midpoint(borehole_benchmark());
  x[3] = x[5] = 800;
  EXPECT_EQ(borehole(Fidelity::hf(), x), 0.0);
  EXPECT_EQ(borehole(Fidelity::lf(1), x), 0.0);
}

TEST(Borehole, DomainErrors) {
  auto x = midpoint(borehole_benchmark());
  x[1] = x[0];
  EXPECT_THROW(borehole(Fidelity::hf(), x), ModelError);
  x = midpoint(borehole_benchmark());
  x[0] = -0.1;
  EXPECT_THROW(borehole(Fidelity::hf(), x), ModelError);
  EXPECT_THROW(borehole(Fidelity::hf(), std::vector<double>(7, 1.0)), ModelError);
  EXPECT_THROW(borehole(Fidelity::lf(2), midpoint(borehole_benchmark())), ModelError);
}

TEST(Ishigami, Examples) {
  const double pi = std::numbers::pi;
  EXPECT_EQ(ishigami(Fidelity::hf(), std::vector<double>{0, 0, 0}), 0.0);
  EXPECT_NEAR(ishigami(Fidelity::hf(), std::vector<double>{0, pi / 2, 0}), 7.0, 1e-14);
  EXPECT_NEAR(ishigami(Fidelity::lf(1), std::vector<double>{0, pi / 2, 0}), 7.3, 1e-14);
  const std::vector<double> x{0.4, -1.3, 2.2};
  EXPECT_NEAR(ishigami(Fidelity::lf(3), x) - ishigami(Fidelity::lf(2), x), 0.02, 1e-14);
  const double s1 = std::sin(0.4), s2 = std::sin(-1.3), x34 = std::pow(2.2, 4);
  EXPECT_NEAR(ishigami(Fidelity::hf(), x), s1 + 7 * s2 * s2 + 0.1 * x34 * s1, 1e-13);
  EXPECT_NEAR(ishigami(Fidelity::lf(1), x), s1 + 7.3 * s2 * s2 + 0.08 * x34 * s1, 1e-13);
  EXPECT_THROW(ishigami(Fidelity::lf(4), x), ModelError);
}

TEST(ShortColumn, Examples) {
  const std::vector<double> x{10, 20, 500, 2000, 5};
  EXPECT_NEAR(short_column(Fidelity::hf(), x), 0.35, 1e-14);
  EXPECT_NEAR(short_column(Fidelity::lf(3), x), 6.35, 1e-13);
  EXPECT_NEAR(short_column(Fidelity::lf(4), x), 0.95, 1e-13);
  EXPECT_NEAR(short_column(Fidelity::lf(5), x), 60.35, 1e-12);
  // LF1: 1 - 4P/(b h^2 Y) - (P/(b h Y))^2 ; LF2: 1 - 4M/(b h^2 Y) - (M/(b h Y))^2
  EXPECT_NEAR(short_column(Fidelity::lf(1), x), 1 - 0.1 - 0.25, 1e-14);
  EXPECT_NEAR(short_column(Fidelity::lf(2), x), 1 - 0.4 - 4.0, 1e-13);
}

TEST(ShortColumn, ZeroDenominator) {
  EXPECT_THROW(short_column(Fidelity::hf(), std::vector<double>{0, 20, 500, 2000, 5}), ModelError);
  EXPECT_THROW(short_column(Fidelity::lf(1), std::vector<double>{10, 20, 500, 2000, 0}), ModelError);
}

TEST(Benchmark, Lookup) {
  EXPECT_TRUE(find_benchmark("borehole"));
  EXPECT_FALSE(find_benchmark("rosenbrock"));
  const auto b = short_column_benchmark();
  EXPECT_EQ(b.specs.size(), 5u);
  EXPECT_EQ(b.lf_variants, 5);
  EXPECT_THROW(b.model(Fidelity::lf(6)), ConfigError);
  EXPECT_EQ(b.model(Fidelity::lf(2)).id, "short_column/lf2");
}

TEST(Distributions, SampleMeansWithinFourStandardErrors) {
  const CounterRng rng(2024);
  for (const char* name : {"borehole", "ishigami", "short_column"}) {
    const auto b = *find_benchmark(name);
    const std::size_t n = 1'000'000;
    for (std::size_t j = 0; j < b.specs.size(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += sample_variable(b.specs[j], rng, j, i);
      const double se = b.specs[j].stddev() / std::sqrt(static_cast<double>(n));
      EXPECT_LE(std::abs(sum / n - b.specs[j].mean()), 4 * se) << name << " " << b.specs[j].name();
    }
  }
}

// r^2_lh over 1e5 draws against the reference similarity tables.
TEST(Similarity, CorrelationMatchesTables) {
  struct Row {
    const char* bench;
    int variant;
    double r2;
  };
  const Row rows[] = {{"borehole", 1, 0.999},    {"ishigami", 1, 0.9875},     {"ishigami", 2, 0.8826},
                      {"ishigami", 3, 0.8826},   {"short_column", 1, 0.9234}, {"short_column", 2, 0.7612},
                      {"short_column", 3, 0.4780}, {"short_column", 4, 0.6931}, {"short_column", 5, 0.5914}};
  for (const auto& row : rows) {
    const auto b = *find_benchmark(row.bench);
    const auto pts = sample_points(b.specs, 100000, CounterRng(1));
    const auto yh = evaluate_direct(b.model(Fidelity::hf()), pts);
    const auto yl = evaluate_direct(b.model(Fidelity::lf(row.variant)), pts);
    EXPECT_NEAR(lf_hf_similarity(yl, yh).r2, row.r2, 0.01) << row.bench << " LF" << row.variant;
  }
}

TEST(Similarity, BoreholeMareMatchesTable) {
  const auto b = borehole_benchmark();
  const auto pts = sample_points(b.specs, 100000, CounterRng(1));
  const auto s = lf_hf_similarity(evaluate_direct(b.model(Fidelity::lf(1)), pts),
                                  evaluate_direct(b.model(Fidelity::hf()), pts));
  EXPECT_NEAR(s.mare, 0.204, 0.05 * 0.204);
  EXPECT_EQ(s.skipped, 0u);
}

TEST(Similarity, ShortColumnMareScalesWithTheOffsetCoefficient) {
  const auto b = short_column_benchmark();
  const auto pts = sample_points(b.specs, 20000, CounterRng(5));
  const auto yh = evaluate_direct(b.model(Fidelity::hf()), pts);
  auto mare = [&](int v) { return lf_hf_similarity(evaluate_direct(b.model(Fidelity::lf(v)), pts), yh).mare; };
  const double m3 = mare(3), m4 = mare(4), m5 = mare(5);
  EXPECT_NEAR(m3 / m4, 10.0, 1e-9);
  EXPECT_NEAR(m5 / m3, 10.0, 1e-9);
}

TEST(EvalCache, IdempotentAndCounted) {
  std::atomic<int> calls{0};
  Model m{"m", Fidelity::hf(), [&](std::span<const double> x) {
            ++calls;
            return std::exp(x[0]) / 3.0;
          }};
  Model other{"other", Fidelity::lf(1), [](std::span<const double> x) { return x[0]; }};
  EvalCache cache;
  const std::vector<double> p{0.3}, q{0.7};
  const double a = cache.evaluate(m, p);
  const double b = cache.evaluate(m, p);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(cache.count("m"), 1);
  cache.evaluate(m, q);
  cache.evaluate(other, p);
  EXPECT_EQ(cache.count("m"), 2);
  EXPECT_EQ(cache.count("other"), 1);
  EXPECT_EQ(cache.count("missing"), 0);

  cache.reset_counters();
  EXPECT_EQ(cache.count("m"), 0);
  EXPECT_EQ(cache.evaluate(m, p), a);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(cache.count("m"), 1);
  EXPECT_EQ(cache.stored(), 3u);
}

TEST(EvalCache, NonFiniteAndThrowingModels) {
  EvalCache cache;
  Model nan_model{"nan", Fidelity::hf(), [](std::span<const double>) { return std::nan(""); }};
  Model thrower{"thrower", Fidelity::hf(), [](std::span<const double>) -> double { throw std::runtime_error("boom"); }};
  const std::vector<double> p{1.5, -2.0};
  try {
    cache.evaluate(nan_model, p);
    FAIL();
  } catch (const ModelError& ex) {
    EXPECT_NE(std::string(ex.what()).find("non-finite"), std::string::npos);
    EXPECT_NE(std::string(ex.what()).find("1.5 -2"), std::string::npos);
  }
  try {
    cache.evaluate(thrower, p);
    FAIL();
  } catch (const ModelError& ex) {
    EXPECT_NE(std::string(ex.what()).find("thrower"), std::string::npos);
    EXPECT_NE(std::string(ex.what()).find("boom"), std::string::npos);
  }
  EXPECT_THROW(evaluate_direct(nan_model, {p}), ModelError);
}

TEST(EvalCache, PersistenceRoundTrip) {
  const auto path = temp_file("roundtrip.tsv");
  const auto b = ishigami_benchmark();
  const auto hf = b.model(Fidelity::hf());
  const auto pts = sample_points(b.specs, 50, CounterRng(3));
  std::vector<double> first;
  {
    EvalCache cache;
    cache.persist_to(path.string());
    first = evaluate_points(hf, pts, cache);
  }
  Model forbidden{hf.id, hf.fidelity, [](std::span<const double>) -> double { throw std::runtime_error("called"); }};
  EvalCache cache;
  EXPECT_EQ(cache.load(path.string()), 50u);
  const auto second = evaluate_points(forbidden, pts, cache);
  EXPECT_EQ(first, second);
  EXPECT_EQ(cache.count(hf.id), 50);
  EXPECT_EQ(cache.load((path.parent_path() / "absent.tsv").string()), 0u);
}

TEST(EvalCache, PersistenceFileFormat) {
  const auto path = temp_file("format.tsv");
  {
    EvalCache cache;
    cache.persist_to(path.string());
    Model m{"id", Fidelity::hf(), [](std::span<const double>) { return 0.1; }};
    cache.evaluate(m, std::vector<double>{1.0, 0.25});
  }
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "id\t1 0.25\t0.10000000000000001");
}

TEST(EvaluatePoints, ThreadedMatchesSerialAndEvaluatesOnce) {
  std::atomic<int> calls{0};
  const auto b = short_column_benchmark();
  const auto base = b.model(Fidelity::hf());
  Model counted{base.id, base.fidelity, [&](std::span<const double> x) {
                  ++calls;
                  return base.eval(x);
                }};
  auto pts = sample_points(b.specs, 400, CounterRng(11));
  const std::vector<std::vector<double>> repeats(pts.begin(), pts.begin() + 100);
  pts.insert(pts.end(), repeats.begin(), repeats.end());
  EvalCache serial_cache, threaded_cache;
  const auto serial = evaluate_points(counted, pts, serial_cache, 1);
  calls = 0;
  const auto threaded = evaluate_points(counted, pts, threaded_cache, 8);
  EXPECT_EQ(serial, threaded);
  EXPECT_EQ(calls, 400);
  EXPECT_EQ(threaded_cache.count(base.id), 400);
}
