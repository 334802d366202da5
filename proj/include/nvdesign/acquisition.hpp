#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nvdesign/errors.hpp"
#include "nvdesign/rng.hpp"

namespace nvdesign {

/// Pulse count plus strictly increasing inter-pulse delays. Delays are kept
/// as integer nanoseconds so that grids built from (lo, hi, step) never drift.
struct AcquisitionGrid {
  int n_pulses = 0;
  std::vector<std::int64_t> taus_ns;
  std::string label;

  std::size_t size() const noexcept { return taus_ns.size(); }
  double tau_s(std::size_t k) const noexcept { return static_cast<double>(taus_ns[k]) * 1e-9; }

  /// Smallest spacing between consecutive delays, or 0 for a single point.
  std::int64_t min_step_ns() const noexcept {
    std::int64_t step = 0;
    for (std::size_t k = 1; k < taus_ns.size(); ++k) {
      const std::int64_t d = taus_ns[k] - taus_ns[k - 1];
      if (step == 0 || d < step) step = d;
    }
    return step;
  }

  void validate() const {
    if (n_pulses < 1) throw DomainError("grid '" + label + "': pulse count must be >= 1");
    if (taus_ns.empty()) throw DomainError("grid '" + label + "' is empty");
    if (taus_ns.front() <= 0) throw DomainError("grid '" + label + "': delays must be > 0");
    for (std::size_t k = 1; k < taus_ns.size(); ++k) {
      if (taus_ns[k] <= taus_ns[k - 1]) {
        throw DomainError("grid '" + label + "': delays must be strictly increasing");
      }
    }
  }

  friend bool operator==(const AcquisitionGrid&, const AcquisitionGrid&) = default;
};

inline std::string default_grid_label(int n_pulses) { return "N" + std::to_string(n_pulses); }

/// Delays lo, lo + step, ... up to and including hi when hi is on the lattice.
inline AcquisitionGrid make_grid_ns(int n_pulses, std::int64_t lo_ns, std::int64_t hi_ns,
                                    std::int64_t step_ns, std::string label = {}) {
  if (n_pulses < 1) throw DomainError("pulse count must be >= 1");
  if (step_ns <= 0) throw DomainError("grid step must be positive");
  if (lo_ns <= 0) throw DomainError("grid delays must be positive");
  if (lo_ns >= hi_ns) throw DomainError("empty grid: tau_lo must be below tau_hi");
  AcquisitionGrid g;
  g.n_pulses = n_pulses;
  g.label = label.empty() ? default_grid_label(n_pulses) : std::move(label);
  const std::int64_t count = (hi_ns - lo_ns) / step_ns + 1;
  g.taus_ns.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) g.taus_ns.push_back(lo_ns + k * step_ns);
  return g;
}

namespace detail {
inline std::int64_t seconds_to_whole_ns(double s, const char* what) {
  const double ns = s * 1e9;
  const double r = std::round(ns);
  if (!std::isfinite(ns) || std::abs(ns - r) > 1e-6 * std::max(1.0, std::abs(r))) {
    throw DomainError(std::string(what) + " must be a whole number of nanoseconds");
  }
  return static_cast<std::int64_t>(r);
}
}  // namespace detail

/// Same as make_grid_ns with arguments in seconds (each must be a whole
/// number of nanoseconds).
inline AcquisitionGrid make_grid(int n_pulses, double tau_lo, double tau_hi, double dtau,
                                 std::string label = {}) {
  if (!(dtau > 0.0)) throw DomainError("grid step must be positive");
  if (!(tau_lo < tau_hi)) throw DomainError("empty grid: tau_lo must be below tau_hi");
  return make_grid_ns(n_pulses, detail::seconds_to_whole_ns(tau_lo, "tau_lo"),
                      detail::seconds_to_whole_ns(tau_hi, "tau_hi"),
                      detail::seconds_to_whole_ns(dtau, "dtau"), std::move(label));
}

struct ShotNoiseConfig {
  int n_m = 250;
  bool enabled = true;

  void validate() const {
    if (n_m < 1) throw DomainError("repetitions per point n_m must be >= 1");
  }
};

struct Design {
  std::vector<AcquisitionGrid> grids;
  ShotNoiseConfig shot;

  void validate() const {
    if (grids.empty()) throw DomainError("design needs at least one grid");
    for (const auto& g : grids) g.validate();
    shot.validate();
  }
};

/// Averages of n_m projective readouts per point. Point k draws from its own
/// stream derive_seed(seed, {k}) so the result does not depend on the order
/// in which points are visited.
inline std::vector<double> noisy_signal(std::span<const double> ideal, const ShotNoiseConfig& shot,
                                        Seed seed) {
  shot.validate();
  for (double p : ideal) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("probability outside [0, 1]: " + std::to_string(p));
    }
  }
  std::vector<double> out(ideal.begin(), ideal.end());
  if (!shot.enabled) return out;
  const double inv = 1.0 / shot.n_m;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double p = ideal[k];
    if (p == 0.0 || p == 1.0) continue;
    SplitMix64 eng(derive_seed(seed, {k}));
    std::binomial_distribution<int> draw(shot.n_m, p);
    out[k] = draw(eng) * inv;
  }
  return out;
}

struct GridTime {
  std::string label;
  int n_pulses = 0;
  std::size_t points = 0;
  std::int64_t time_ns = 0;
  double seconds() const noexcept { return static_cast<double>(time_ns) * 1e-9; }
  double hours() const noexcept { return seconds() / 3600.0; }
};

/// Acquisition time t = sum over grids and delays of 2 tau N n_m.
/// Initialisation and readout are not counted. Totals are integer
/// nanoseconds, so scaling n_m scales the result exactly.
struct MeasurementTime {
  std::vector<GridTime> per_grid;
  std::int64_t total_ns = 0;

  double seconds() const noexcept { return static_cast<double>(total_ns) * 1e-9; }
  double hours() const noexcept { return seconds() / 3600.0; }
};

inline MeasurementTime measurement_time(const Design& design) {
  design.validate();
  MeasurementTime t;
  for (const auto& g : design.grids) {
    std::int64_t sum_ns = 0;
    for (std::int64_t tau : g.taus_ns) sum_ns += tau;
    GridTime gt{g.label, g.n_pulses, g.size(),
                2 * static_cast<std::int64_t>(g.n_pulses) * design.shot.n_m * sum_ns};
    t.total_ns += gt.time_ns;
    t.per_grid.push_back(std::move(gt));
  }
  return t;
}

}  // namespace nvdesign
