#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nvdesign/errors.hpp"
#include "nvdesign/grid_evaluator.hpp"
#include "nvdesign/rng.hpp"
#include "nvdesign/spin_types.hpp"
#include "nvdesign/units.hpp"

namespace nvdesign {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  double width() const noexcept { return hi - lo; }
  double mid() const noexcept { return 0.5 * (lo + hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Prior over target clusters: spin count uniform on [n_min, n_max], each
/// coupling component uniform and independent.
struct PriorConfig {
  int n_min = 1;
  int n_max = 50;
  Interval az_range{units::khz(-50.0), units::khz(50.0)};
  Interval aperp_range{units::khz(2.0), units::khz(80.0)};

  void validate() const {
    if (n_min < 1 || n_min > n_max) throw DomainError("prior needs 1 <= n_min <= n_max");
    for (const Interval* r : {&az_range, &aperp_range}) {
      if (!std::isfinite(r->lo) || !std::isfinite(r->hi) || r->lo > r->hi) {
        throw DomainError("prior coupling range must be finite with lo <= hi");
      }
    }
    if (aperp_range.lo < 0.0) throw DomainError("prior a_perp range must be non-negative");
  }
};

/// Weakly coupled bath: n_configs precomputed crystal configurations, each
/// with spins_per_config spins.
struct BathConfig {
  bool enabled = true;
  int n_configs = 16;
  int spins_per_config = 1000;
  Interval az_range{units::khz(-2.0), units::khz(2.0)};
  Interval aperp_range{units::khz(0.0), units::khz(2.0)};

  void validate() const {
    if (n_configs < 1) throw DomainError("bath needs n_configs >= 1");
    if (spins_per_config < 0) throw DomainError("bath spins_per_config must be >= 0");
    if (aperp_range.lo < 0.0 || aperp_range.lo > aperp_range.hi || az_range.lo > az_range.hi) {
      throw DomainError("invalid bath coupling ranges");
    }
  }
};

namespace seed_stream {
// Labels of the independent streams hanging off one seed.
inline constexpr std::uint64_t kSpinCount = 0;
inline constexpr std::uint64_t kSpin = 1;
inline constexpr std::uint64_t kBathPick = 2;
inline constexpr std::uint64_t kShotNoise = 3;
inline constexpr std::uint64_t kSample = 10;
inline constexpr std::uint64_t kBath = 11;
}  // namespace seed_stream

namespace detail {
inline HyperfineCoupling draw_coupling(Seed seed, const Interval& az, const Interval& aperp) {
  SplitMix64 eng(seed);
  const double a_par = uniform_real(eng, az.lo, az.hi);
  const double a_perp = uniform_real(eng, aperp.lo, aperp.hi);
  return {a_par, a_perp};
}
}  // namespace detail

inline SpinCluster sample_cluster(const PriorConfig& prior, Seed seed) {
  prior.validate();
  SplitMix64 count_eng(derive_seed(seed, {seed_stream::kSpinCount}));
  const auto n = uniform_int(count_eng, prior.n_min, prior.n_max);
  SpinCluster c;
  c.spins.reserve(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    c.spins.push_back(detail::draw_coupling(
        derive_seed(seed, {seed_stream::kSpin, static_cast<std::uint64_t>(j)}), prior.az_range,
        prior.aperp_range));
  }
  return c;
}

inline std::vector<SpinCluster> sample_bath_configs(const BathConfig& bath, Seed seed) {
  bath.validate();
  std::vector<SpinCluster> out(static_cast<std::size_t>(bath.n_configs));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& spins = out[i].spins;
    spins.reserve(static_cast<std::size_t>(bath.spins_per_config));
    for (int j = 0; j < bath.spins_per_config; ++j) {
      spins.push_back(detail::draw_coupling(derive_seed(seed, {i, static_cast<std::uint64_t>(j)}),
                                            bath.az_range, bath.aperp_range));
    }
  }
  return out;
}

/// Per-tau product of the bath spins' modulation terms (no decoherence).
inline std::vector<double> bath_modulation(const SpinCluster& bath_cluster,
                                           const AcquisitionGrid& grid, const FieldConfig& field) {
  DecoherenceModel none;
  none.enabled = false;
  const GridEvaluator ev(grid, field, none);
  std::vector<double> m(ev.size());
  ev.modulation_product(bath_cluster, m);
  return m;
}

/// Bath modulation vectors of every precomputed configuration on one grid.
/// Immutable once built; safe to share between workers.
class BathModulationCache {
 public:
  BathModulationCache() = default;

  BathModulationCache(std::span<const SpinCluster> configs, const AcquisitionGrid& grid,
                      const FieldConfig& field) {
    vectors_.reserve(configs.size());
    for (const auto& c : configs) vectors_.push_back(bath_modulation(c, grid, field));
  }

  std::size_t size() const noexcept { return vectors_.size(); }
  bool empty() const noexcept { return vectors_.empty(); }
  std::span<const double> operator[](std::size_t i) const { return vectors_.at(i); }

 private:
  std::vector<std::vector<double>> vectors_;
};

/// One draw of the generative model: target cluster, bath configuration,
/// and the seed all further randomness for this sample hangs off.
struct SampleDraw {
  std::uint64_t index = 0;
  Seed seed;
  SpinCluster cluster;
  int bath_index = -1;  // -1 when no bath is used
};

inline Seed sample_seed(Seed master, std::uint64_t index) {
  return derive_seed(master, {seed_stream::kSample, index});
}

inline Seed bath_seed(Seed master) { return derive_seed(master, {seed_stream::kBath}); }

/// Sample `index` of the stream rooted at `master`. `n_bath_configs` = 0
/// disables the bath pick.
inline SampleDraw draw_sample(const PriorConfig& prior, int n_bath_configs, Seed master,
                              std::uint64_t index) {
  SampleDraw d;
  d.index = index;
  d.seed = sample_seed(master, index);
  d.cluster = sample_cluster(prior, d.seed);
  if (n_bath_configs > 0) {
    SplitMix64 eng(derive_seed(d.seed, {seed_stream::kBathPick}));
    d.bath_index = static_cast<int>(uniform_int(eng, 0, n_bath_configs - 1));
  }
  return d;
}

}  // namespace nvdesign
