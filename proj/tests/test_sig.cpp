#include <cmath>

#include <gtest/gtest.h>

#include "nvdesign/sig.hpp"
#include "nvdesign/spin_model.hpp"

using namespace nvdesign;

namespace {

SigProblem small_problem(std::uint64_t seed, std::size_t n_samples) {
  SigProblem pb;
  pb.prior.n_max = 6;
  BathConfig bath;
  bath.n_configs = 4;
  bath.spins_per_config = 30;
  pb.bath = bath;
  pb.n_samples = n_samples;
  pb.seed = Seed{seed};
  return pb;
}

AcquisitionGrid short_grid(int n) { return make_grid_ns(n, 10'000, 10'800, 4); }

}  // namespace

TEST(Sig, MatchesTwoPassVarianceOfExplicitDraws) {
  const auto pb = small_problem(31, 300);
  const auto grid = short_grid(32);
  const auto curve = sig_curve(pb, grid);
  ASSERT_EQ(curve.n_samples, 300u);

  // Rebuild every signal with the scalar model and take a textbook two-pass variance.
  const auto configs = sample_bath_configs(*pb.bath, bath_seed(pb.seed));
  std::vector<std::vector<double>> signals;
  for (std::size_t i = 0; i < pb.n_samples; ++i) {
    const auto d = draw_sample(pb.prior, pb.bath->n_configs, pb.seed, i);
    SpinCluster all = d.cluster;
    const auto& b = configs[static_cast<std::size_t>(d.bath_index)].spins;
    all.spins.insert(all.spins.end(), b.begin(), b.end());
    std::vector<double> s(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      s[k] = survival_probability(all, {32, grid.tau_s(k)}, pb.field, pb.decoherence);
    }
    signals.push_back(std::move(s));
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double mean = 0.0;
    for (const auto& s : signals) mean += s[k];
    mean /= static_cast<double>(signals.size());
    double var = 0.0;
    for (const auto& s : signals) var += (s[k] - mean) * (s[k] - mean);
    var /= static_cast<double>(signals.size());
    ASSERT_NEAR(curve.mean[k], mean, 1e-9);
    ASSERT_NEAR(curve.variance[k], var, 1e-9);
    ASSERT_GE(curve.variance[k], 0.0);
    ASSERT_LE(curve.variance[k], 0.25);
  }
}

TEST(Sig, TwoSampleVariance) {
  const AcquisitionGrid g{32, {1000, 2000}, "N32"};
  const std::vector<std::vector<double>> s{{0.9, 0.5}, {0.3, 0.5}};
  const auto c = sig_curve_of(g, s);
  EXPECT_NEAR(c.variance[0], 0.3 * 0.3, 1e-15);
  EXPECT_EQ(c.variance[1], 0.0);
  EXPECT_THROW(sig_curve_of(g, std::span(s).first(1)), DomainError);
}

TEST(Sig, DegeneratePriorHasZeroVariance) {
  SigProblem pb;
  pb.prior.n_min = pb.prior.n_max = 2;
  pb.prior.az_range = {1e4, 1e4};
  pb.prior.aperp_range = {3e4, 3e4};
  pb.n_samples = 100;
  const auto c = sig_curve(pb, short_grid(32));
  for (double v : c.variance) EXPECT_EQ(v, 0.0);
  const auto e = expected_outcome_sig(pb, short_grid(32));
  for (double v : e.variance) EXPECT_EQ(v, 0.0);
}

TEST(Sig, ExpectedOutcomeIdentity) {
  double worst = 0.0;
  for (std::uint64_t c = 0; c < 100; ++c) {
    auto pb = small_problem(1000 + c, 20 + c % 7);
    if (c % 3 == 0) pb.bath.reset();
    const auto grid = make_grid_ns(c % 2 ? 256 : 32, 6'000 + 100 * static_cast<std::int64_t>(c), 6'400 + 100 * static_cast<std::int64_t>(c), 4);
    const auto a = sig_curve(pb, grid);
    const auto b = expected_outcome_sig(pb, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, std::abs(a.variance[k] - b.variance[k]));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Sig, SameBitsForAnyWorkerCount) {
  auto pb = small_problem(5, 1500);
  const auto grid = short_grid(256);
  pb.workers = 1;
  const auto one = sig_curve(pb, grid);
  for (unsigned w : {2u, 8u}) {
    pb.workers = w;
    const auto many = sig_curve(pb, grid);
    EXPECT_EQ(one.variance, many.variance);
    EXPECT_EQ(one.mean, many.mean);
  }
}

TEST(Sig, RejectsTooFewSamples) {
  auto pb = small_problem(5, 1);
  EXPECT_THROW(sig_curve(pb, short_grid(32)), DomainError);
}

TEST(Select, TopVariances) {
  SigCurve c{AcquisitionGrid{32, {10, 20, 30}, "N32"}, {0, 0, 0}, {0.1, 0.3, 0.2}, 2};
  const auto s = select_top(c, 2);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_FALSE(s.truncated);
  EXPECT_EQ(s.selected_grid().taus_ns, (std::vector<std::int64_t>{20, 30}));
}

TEST(Select, TiesPreferEarlierPoints) {
  SigCurve c{make_grid_ns(32, 10, 100, 10), {}, std::vector<double>(10, 0.05), 2};
  EXPECT_EQ(select_top(c, 3).indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Select, OversizedRequestSelectsAll) {
  SigCurve c{make_grid_ns(32, 10, 50, 10), {}, {0.2, 0.1, 0.3, 0.0, 0.05}, 2};
  const auto s = select_top(c, 99);
  EXPECT_TRUE(s.truncated);
  EXPECT_EQ(s.indices.size(), 5u);
  const std::vector<Selection> sel{s};
  const Design d = design_from_selection(sel, {});
  EXPECT_EQ(measurement_time(d).total_ns, measurement_time(Design{{c.grid}, {}}).total_ns);
  EXPECT_THROW(select_top(c, 0), DomainError);
}

TEST(Select, IndicesStrictlyIncreasing) {
  const auto pb = small_problem(77, 200);
  const auto curve = sig_curve(pb, short_grid(32));
  const auto s = select_top(curve, 50);
  ASSERT_EQ(s.indices.size(), 50u);
  for (std::size_t i = 1; i < s.indices.size(); ++i) EXPECT_LT(s.indices[i - 1], s.indices[i]);
  double min_kept = 1.0;
  for (std::size_t i : s.indices) min_kept = std::min(min_kept, curve.variance[i]);
  std::size_t above = 0;
  for (double v : curve.variance) above += v > min_kept;
  EXPECT_LE(above, 50u);
}
