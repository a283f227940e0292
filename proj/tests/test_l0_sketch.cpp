#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "lowrank/l0_sketch.hpp"

using namespace lowrank;

namespace {

/// Random F_q vector of length n with exactly `support` nonzeros.
std::vector<int> sparse_vector(Rng& rng, std::size_t n, std::size_t support, int q) {
  std::vector<int> x(n, 0);
  std::size_t placed = 0;
  while (placed < support) {
    const auto j = rng.below(n);
    if (x[j]) continue;
    x[j] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(q - 1)));
    ++placed;
  }
  return x;
}

}  // namespace

TEST(L0Params, DefaultConstants) {
  const L0SketchParams p;
  EXPECT_EQ(p.tau(), 4096u);
  EXPECT_DOUBLE_EQ(p.c_prime_value(), 1024.0);
  // ceil(1024 / 0.25^8) = 2^26 is below (4 tau)^2 = 2^28.
  EXPECT_EQ(p.buckets(), std::uint64_t{1} << 28);
  L0SketchParams loose;
  loose.eps = 0.5;
  loose.c = 1.0;
  EXPECT_EQ(loose.tau(), 16u);
  EXPECT_EQ(loose.buckets(), 4096u);
  L0SketchParams bad;
  bad.eps = 1.5;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = {};
  bad.instances = 0;
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(L0Params, LevelCountIsCeilLog2) {
  EXPECT_EQ(l0_levels(1), 1u);
  EXPECT_EQ(l0_levels(2), 1u);
  EXPECT_EQ(l0_levels(3), 2u);
  EXPECT_EQ(l0_levels(64), 6u);
  EXPECT_EQ(l0_levels(1000), 10u);
  EXPECT_EQ(l0_levels(1024), 10u);
  EXPECT_EQ(l0_levels(1025), 11u);
}

TEST(L0Hash, PrimeAndRange) {
  EXPECT_EQ(least_prime_at_least(1024), 1031u);
  EXPECT_EQ(least_prime_at_least(64), 67u);
  EXPECT_EQ(least_prime_at_least(2), 2u);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = AffineHash::draw(100, 37, rng);
    EXPECT_EQ(h.prime, 101u);
    EXPECT_GE(h.a, 1u);
    EXPECT_LT(h.a, h.prime);
    EXPECT_LT(h.b, h.prime);
    for (std::uint64_t j = 0; j < 100; ++j) {
      EXPECT_LT(h(j), 37u);
      EXPECT_EQ(h(j), ((h.a * j + h.b) % h.prime) % 37);
    }
  }
}

TEST(L0Sampler, LevelsAreNestedAndMatchUniforms) {
  Rng rng(2);
  const NestedSampler s(64, rng);
  ASSERT_EQ(s.levels(), 6u);
  for (std::size_t j = 0; j < 64; ++j) {
    EXPECT_TRUE(s.in_level(j, 0));
    for (std::size_t i = 0; i < s.levels(); ++i)
      EXPECT_EQ(s.in_level(j, i), s.uniforms()[j] < std::ldexp(1.0, -static_cast<int>(i)));
  }
  EXPECT_DOUBLE_EQ(NestedSampler::probability(3), 0.125);
}

TEST(L0Estimator, DefinitionExamples) {
  EXPECT_DOUBLE_EQ(est({{10, 6, 2}}, 4), 12.0);
  EXPECT_DOUBLE_EQ(est({{3, 1}}, 4), 3.0);
  EXPECT_DOUBLE_EQ(est({{10, 6, 5}}, 4), 20.0);
  // Strict threshold: a count equal to gamma does not qualify.
  EXPECT_DOUBLE_EQ(est({{10, 4}}, 4), 10.0);
  EXPECT_THROW(est({{1}}, 0.0), ParameterError);
}

TEST(L0Counts, ZeroAndUnitVectors) {
  const FiniteField f(3);
  Rng rng(3);
  const L0SketchInstance inst(64, 4096, rng);
  const std::vector<int> zero(64, 0);
  const auto z = inst.level_counts(zero, f);
  for (std::size_t i = 0; i < inst.levels(); ++i) {
    EXPECT_EQ(z.hashed.counts[i], 0u);
    EXPECT_EQ(z.unhashed.counts[i], 0u);
  }
  for (std::size_t j : {0u, 17u, 63u}) {
    std::vector<int> e(64, 0);
    e[j] = 2;
    const auto c = inst.level_counts(e, f);
    for (std::size_t i = 0; i < inst.levels(); ++i) {
      const std::size_t want = inst.sampler().in_level(j, i) ? 1 : 0;
      EXPECT_EQ(c.hashed.counts[i], want);
      EXPECT_EQ(c.unhashed.counts[i], want);
    }
  }
  EXPECT_THROW(inst.level_counts(std::vector<int>(10, 0), f), DimensionError);
}

TEST(L0Counts, UnhashedMatchesDirectRecount) {
  const FiniteField f(5);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const L0SketchInstance inst(64, 1u << 20, rng);
    const auto x = sparse_vector(rng, 64, 8, 5);
    const auto c = inst.level_counts(x, f);
    EXPECT_EQ(c.unhashed.counts[0], 8u);
    for (std::size_t i = 0; i < inst.levels(); ++i) {
      std::size_t direct = 0;
      for (std::size_t j = 0; j < 64; ++j) direct += x[j] != 0 && inst.sampler().uniforms()[j] < std::ldexp(1.0, -static_cast<int>(i));
      EXPECT_EQ(c.unhashed.counts[i], direct);
    }
  }
}

TEST(L0Counts, NestedAndHashNeverInflates) {
  const FiniteField f(2);
  Rng rng(5);
  // Few buckets so that collisions actually happen.
  const L0SketchInstance inst(128, 16, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = sparse_vector(rng, 128, 1 + rng.below(128), 2);
    const auto c = inst.level_counts(x, f);
    for (std::size_t i = 0; i < inst.levels(); ++i) {
      EXPECT_LE(c.hashed.counts[i], c.unhashed.counts[i]);
      EXPECT_LE(c.hashed.counts[i], 16u);
      if (i) {
        EXPECT_LE(c.unhashed.counts[i], c.unhashed.counts[i - 1]);
      }
    }
  }
}

TEST(L0Counts, SketchIsLinear) {
  for (int q : {3, 4}) {
    const FiniteField f(q);
    Rng rng(6);
    const L0SketchInstance inst(50, 8, rng);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<int> x(50), y(50), s(50);
      for (std::size_t j = 0; j < 50; ++j) {
        x[j] = static_cast<int>(rng.below(static_cast<std::uint64_t>(q)));
        y[j] = static_cast<int>(rng.below(static_cast<std::uint64_t>(q)));
        s[j] = f.add(x[j], y[j]);
      }
      const auto sx = inst.sketch(x, f);
      const auto sy = inst.sketch(y, f);
      const auto ss = inst.sketch(s, f);
      for (std::size_t i = 0; i < inst.levels(); ++i)
        for (std::size_t b = 0; b < inst.slots(i); ++b) EXPECT_EQ(ss[i][b], f.add(sx[i][b], sy[i][b]));
    }
  }
}

TEST(L0Bank, PerfectHashGivesExactCount) {
  Rng rng(7);
  const L0SketchBank bank(1024, 3, {}, 11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = sparse_vector(rng, 1024, 1 + rng.below(200), 3);
    std::size_t support = 0;
    for (int v : x) support += v != 0;
    const auto est = estimate_l0(bank, x);
    for (std::size_t i = 0; i < bank.size(); ++i) {
      std::set<std::uint64_t> buckets;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j]) buckets.insert(bank[i].hash()(j));
      // Support below tau, so the estimator reads level 0.
      if (buckets.size() == support) {
        EXPECT_EQ(est[i], static_cast<double>(support));
      }
    }
  }
  const std::vector<int> zero(1024, 0);
  for (double e : estimate_l0(bank, zero)) EXPECT_EQ(e, 0.0);
}

TEST(L0Bank, DeterministicBySeed) {
  const L0SketchBank a(200, 2, {}, 5);
  const L0SketchBank b(200, 2, {}, 5);
  ASSERT_EQ(a.size(), 9u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hash().a, b[i].hash().a);
    EXPECT_EQ(a[i].hash().b, b[i].hash().b);
    for (std::size_t j = 0; j < 200; ++j) EXPECT_EQ(a[i].sampler().uniforms()[j], b[i].sampler().uniforms()[j]);
  }
}

TEST(L0Bank, LevelEstimatorWithSmallThreshold) {
  // tau = 256 forces the estimator off level 0 for large supports.
  L0SketchParams p;
  p.eps = 0.5;
  p.instances = 9;
  Rng rng(8);
  for (std::size_t support : {10u, 100u, 500u}) {
    int good = 0;
    for (std::uint64_t b = 0; b < 30; ++b) {
      const L0SketchBank bank(1024, 2, p, 100 + b);
      const auto x = sparse_vector(rng, 1024, support, 2);
      const double m = med_l0(bank, x);
      good += std::abs(m - static_cast<double>(support)) <= 0.3 * static_cast<double>(support);
    }
    EXPECT_GE(good, 21) << "support " << support;
  }
}

TEST(L0Bank, TailBound) {
  // Pr[E > M ||x||_0] <= 1/M at M = 4, checked against 0.35.
  L0SketchParams p;
  p.eps = 0.5;
  p.c = 1.0;
  p.instances = 200;
  const L0SketchBank bank(1024, 2, p, 9);
  Rng rng(10);
  const auto x = sparse_vector(rng, 1024, 100, 2);
  const auto est = estimate_l0(bank, x);
  int exceed = 0;
  for (double e : est) exceed += e > 4.0 * 100.0;
  EXPECT_LE(exceed, 70);
}
