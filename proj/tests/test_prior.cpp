#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "nvdesign/parallel.hpp"
#include "nvdesign/prior.hpp"
#include "nvdesign/spin_model.hpp"

using namespace nvdesign;

TEST(Rng, DerivedSeedsDifferAndRepeat) {
  const Seed s{123};
  EXPECT_EQ(derive_seed(s, {1, 2}).value, derive_seed(s, {1, 2}).value);
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(s, {a, b}).value);
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_NE(derive_seed(s, {1, 2}).value, derive_seed(s, {2, 1}).value);
  EXPECT_NE(derive_seed(s, {1}).value, derive_seed(s, {1, 0}).value);
}

TEST(Rng, UniformHelpers) {
  SplitMix64 eng(Seed{5});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70'000; ++i) {
    const double u = uniform01(eng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = uniform_int(eng, 3, 9);
    ASSERT_GE(k, 3);
    ASSERT_LE(k, 9);
    ++counts[static_cast<std::size_t>(k - 3)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10'000, 500);
  EXPECT_EQ(uniform_real(eng, 2.5, 2.5), 2.5);
}

TEST(Prior, CollapsedCount) {
  PriorConfig p;
  p.n_min = p.n_max = 1;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto c = sample_cluster(p, Seed{k});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_TRUE(p.az_range.contains(c.spins[0].a_par));
    EXPECT_TRUE(p.aperp_range.contains(c.spins[0].a_perp));
  }
}

TEST(Prior, LargeSampleMoments) {
  const PriorConfig p;
  double sum_az = 0.0, sum_ap = 0.0, sum_n = 0.0;
  std::size_t spins = 0;
  const std::size_t draws = 100'000;
  PriorConfig one = p;
  one.n_min = one.n_max = 1;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto c = sample_cluster(one, derive_seed(Seed{77}, {k}));
    sum_az += c.spins[0].a_par;
    sum_ap += c.spins[0].a_perp;
    ++spins;
  }
  EXPECT_NEAR(sum_az / static_cast<double>(spins), 0.0, 500.0);
  EXPECT_NEAR(sum_ap / static_cast<double>(spins), 41'000.0, 500.0);
  for (std::size_t k = 0; k < 20'000; ++k) sum_n += static_cast<double>(sample_cluster(p, Seed{k}).size());
  EXPECT_NEAR(sum_n / 20'000.0, 25.5, 0.5);
}

TEST(Prior, Deterministic) {
  const PriorConfig p;
  const auto a = sample_cluster(p, Seed{2024});
  const auto b = sample_cluster(p, Seed{2024});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sample_cluster(p, Seed{2025}));
}

TEST(Prior, Validation) {
  PriorConfig p;
  p.n_min = 0;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.n_min = 5;
  p.n_max = 4;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.aperp_range = {-1.0, 2.0};
  EXPECT_THROW(p.validate(), DomainError);
  BathConfig b;
  b.n_configs = 0;
  EXPECT_THROW(b.validate(), DomainError);
}

TEST(Bath, ConfigsAreDeterministic) {
  BathConfig b;
  b.n_configs = 8;
  b.spins_per_config = 50;
  const auto x = sample_bath_configs(b, Seed{1});
  ASSERT_EQ(x.size(), 8u);
  EXPECT_EQ(x, sample_bath_configs(b, Seed{1}));
  for (const auto& c : x) {
    ASSERT_EQ(c.size(), 50u);
    for (const auto& s : c.spins) {
      EXPECT_TRUE(b.az_range.contains(s.a_par));
      EXPECT_TRUE(b.aperp_range.contains(s.a_perp));
    }
  }
}

TEST(Bath, EmptyAndSingleSpin) {
  const auto field = FieldConfig::from_gauss(404.0);
  const auto grid = make_grid_ns(32, 10'000, 10'400, 4);
  const auto ones = bath_modulation({}, grid, field);
  for (double v : ones) EXPECT_EQ(v, 1.0);

  const HyperfineCoupling s{units::khz(1.2), units::khz(1.7)};
  const auto one = bath_modulation({{s}}, grid, field);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(one[k], modulation_term(s, {32, grid.tau_s(k)}, field), 1e-12);
  }
}

TEST(Bath, CacheMatchesRecomputation) {
  BathConfig b;
  b.n_configs = 3;
  b.spins_per_config = 200;
  const auto field = FieldConfig::from_gauss(404.0);
  const auto grid = make_grid_ns(256, 10'000, 12'000, 4);
  const auto configs = sample_bath_configs(b, Seed{4});
  const BathModulationCache cache(configs, grid, field);
  ASSERT_EQ(cache.size(), 3u);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto direct = bath_modulation(configs[i], grid, field);
    const auto cached = cache[i];
    ASSERT_TRUE(std::equal(direct.begin(), direct.end(), cached.begin(), cached.end()));
  }
}

TEST(Draw, BathIndexInRangeAndStable) {
  const PriorConfig p;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto d = draw_sample(p, 16, Seed{8}, i);
    EXPECT_GE(d.bath_index, 0);
    EXPECT_LT(d.bath_index, 16);
    EXPECT_EQ(d.cluster, draw_sample(p, 16, Seed{8}, i).cluster);
  }
  EXPECT_EQ(draw_sample(p, 0, Seed{8}, 3).bath_index, -1);
}

TEST(Parallel, OrderedConsumptionAndErrors) {
  for (unsigned w : {1u, 3u, 8u}) {
    std::vector<std::size_t> seen;
    ordered_parallel(
        100, w, [](std::size_t i) { return i * i; }, [&](std::size_t i, std::size_t v) {
          EXPECT_EQ(v, i * i);
          seen.push_back(i);
        });
    ASSERT_EQ(seen.size(), 100u);
    for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i);
  }
  EXPECT_THROW(ordered_parallel(
                   50, 4,
                   [](std::size_t i) {
                     if (i == 17) throw DomainError("boom");
                     return i;
                   },
                   [](std::size_t, std::size_t) {}),
               DomainError);
}
