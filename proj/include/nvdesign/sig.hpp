#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "nvdesign/acquisition.hpp"
#include "nvdesign/grid_evaluator.hpp"
#include "nvdesign/moments.hpp"
#include "nvdesign/parallel.hpp"
#include "nvdesign/prior.hpp"

namespace nvdesign {

/// Surrogate information gain per delay: the variance of the ideal signal
/// P_x(tau | A) over prior draws of A.
struct SigCurve {
  AcquisitionGrid grid;
  std::vector<double> mean;
  std::vector<double> variance;
  std::size_t n_samples = 0;
};

/// Shared inputs of a Monte Carlo run over the prior.
struct SigProblem {
  PriorConfig prior;
  std::optional<BathConfig> bath;  // disengaged, or enabled == false: no bath
  FieldConfig field = FieldConfig::from_gauss(404.0);
  DecoherenceModel decoherence;
  std::size_t n_samples = 50'000;
  Seed seed;
  unsigned workers = 1;

  bool uses_bath() const noexcept { return bath && bath->enabled; }
};

/// Samples accumulated per work unit. Fixed independently of the worker
/// count so that merge order, and hence every bit of the result, is too.
inline constexpr std::size_t kSigChunk = 256;

namespace detail {

struct SignalMomentsPair {
  VectorMoments p;
  VectorMoments q;  // moments of 1 - P_x, only when requested
};

inline SignalMomentsPair accumulate_prior_signals(const SigProblem& pb, const AcquisitionGrid& grid,
                                                  bool with_complement) {
  if (pb.n_samples < 2) throw DomainError("SIG needs at least 2 samples");
  pb.prior.validate();
  const GridEvaluator ev(grid, pb.field, pb.decoherence);
  BathModulationCache bath_cache;
  if (pb.uses_bath()) {
    const auto configs = sample_bath_configs(*pb.bath, bath_seed(pb.seed));
    bath_cache = BathModulationCache(configs, grid, pb.field);
  }
  const int n_bath = static_cast<int>(bath_cache.size());
  const std::size_t dim = ev.size();
  const std::size_t n_chunks = (pb.n_samples + kSigChunk - 1) / kSigChunk;

  SignalMomentsPair total{VectorMoments(dim), VectorMoments(with_complement ? dim : 0)};
  ordered_parallel(
      n_chunks, pb.workers,
      [&](std::size_t chunk) {
        SignalMomentsPair acc{VectorMoments(dim), VectorMoments(with_complement ? dim : 0)};
        std::vector<double> prod(dim), signal(dim), complement(with_complement ? dim : 0);
        const std::size_t lo = chunk * kSigChunk;
        const std::size_t hi = std::min(pb.n_samples, lo + kSigChunk);
        for (std::size_t i = lo; i < hi; ++i) {
          const SampleDraw d = draw_sample(pb.prior, n_bath, pb.seed, i);
          if (d.bath_index >= 0) {
            const auto b = bath_cache[static_cast<std::size_t>(d.bath_index)];
            std::copy(b.begin(), b.end(), prod.begin());
          } else {
            std::fill(prod.begin(), prod.end(), 1.0);
          }
          for (const auto& spin : d.cluster.spins) ev.multiply_modulation(spin, prod);
          ev.survival(prod, signal);
          acc.p.add(signal);
          if (with_complement) {
            for (std::size_t k = 0; k < dim; ++k) complement[k] = 1.0 - signal[k];
            acc.q.add(complement);
          }
        }
        return acc;
      },
      [&](std::size_t, SignalMomentsPair acc) {
        total.p.merge(acc.p);
        if (with_complement) total.q.merge(acc.q);
      });
  return total;
}

inline SigCurve expected_outcome_from(const AcquisitionGrid& grid, const VectorMoments& p,
                                      const VectorMoments& q) {
  SigCurve c{grid, p.mean(), {}, p.count()};
  const auto vp = p.variance();
  const auto vq = q.variance();
  c.variance.resize(vp.size());
  for (std::size_t k = 0; k < vp.size(); ++k) {
    const double px = p.mean()[k];
    c.variance[k] = px * vp[k] + (1.0 - px) * vq[k];
  }
  return c;
}

}  // namespace detail

/// Monte Carlo SIG(tau) on one grid: streaming variance of the ideal
/// survival probability over n_samples prior draws (bath included when
/// configured, shot noise never).
inline SigCurve sig_curve(const SigProblem& problem, const AcquisitionGrid& grid) {
  auto m = detail::accumulate_prior_signals(problem, grid, false);
  return SigCurve{grid, m.p.mean(), m.p.variance(), m.p.count()};
}

/// The two-outcome form p(x) Var[P_x] + (1 - p(x)) Var[1 - P_x] evaluated on
/// the same draws as sig_curve. Equal to sig_curve up to rounding.
inline SigCurve expected_outcome_sig(const SigProblem& problem, const AcquisitionGrid& grid) {
  auto m = detail::accumulate_prior_signals(problem, grid, true);
  return detail::expected_outcome_from(grid, m.p, m.q);
}

/// SIG of an explicit set of signals (rows are samples, one value per grid point).
inline SigCurve sig_curve_of(const AcquisitionGrid& grid, std::span<const std::vector<double>> signals) {
  if (signals.size() < 2) throw DomainError("SIG needs at least 2 samples");
  VectorMoments m(grid.size());
  for (const auto& s : signals) m.add(s);
  return SigCurve{grid, m.mean(), m.variance(), m.count()};
}

inline SigCurve expected_outcome_sig_of(const AcquisitionGrid& grid,
                                        std::span<const std::vector<double>> signals) {
  if (signals.size() < 2) throw DomainError("SIG needs at least 2 samples");
  VectorMoments p(grid.size()), q(grid.size());
  std::vector<double> comp(grid.size());
  for (const auto& s : signals) {
    p.add(s);
    for (std::size_t k = 0; k < s.size(); ++k) comp[k] = 1.0 - s[k];
    q.add(comp);
  }
  return detail::expected_outcome_from(grid, p, q);
}

/// The n_p most informative points of one grid.
struct Selection {
  AcquisitionGrid grid;              // the full grid selected from
  std::vector<std::size_t> indices;  // strictly increasing
  std::size_t n_p = 0;               // as requested
  bool truncated = false;            // n_p exceeded the grid size

  AcquisitionGrid selected_grid() const {
    AcquisitionGrid g;
    g.n_pulses = grid.n_pulses;
    g.label = grid.label;
    g.taus_ns.reserve(indices.size());
    for (std::size_t i : indices) g.taus_ns.push_back(grid.taus_ns[i]);
    return g;
  }
};

/// Indices of the n_p largest variances; equal variances prefer the
/// smaller delay. When n_p exceeds the grid every point is selected and
/// `truncated` is set.
inline Selection select_top(const SigCurve& curve, std::size_t n_p) {
  if (n_p < 1) throw DomainError("n_p must be >= 1");
  const std::size_t n = curve.variance.size();
  Selection s{curve.grid, {}, n_p, n_p > n};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min(n_p, n);
  const auto& v = curve.variance;
  auto better = [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  s.indices = std::move(order);
  return s;
}

inline Design design_from_selection(std::span<const Selection> selections, const ShotNoiseConfig& shot) {
  Design d;
  d.shot = shot;
  for (const auto& s : selections) d.grids.push_back(s.selected_grid());
  d.validate();
  return d;
}

}  // namespace nvdesign
