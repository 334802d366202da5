#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nvdesign/image.hpp"
#include "nvdesign/spin_types.hpp"

namespace nvdesign {

struct DetectedPeak {
  double a_par = 0.0;   // Hz
  double a_perp = 0.0;  // Hz
  double intensity = 0.0;
};

namespace detail {
/// Vertex offset of the parabola through (-1, l), (0, c), (1, r).
inline double parabolic_offset(double l, double c, double r) {
  const double den = l - 2.0 * c + r;
  if (den >= 0.0) return 0.0;
  return std::clamp(0.5 * (l - r) / den, -0.5, 0.5);
}
}  // namespace detail

/// Strict 8-neighbourhood maxima at or above `threshold`, refined to
/// sub-pixel precision by a three-point parabola along each axis and mapped
/// back to couplings. Border pixels use only the neighbours that exist.
inline std::vector<DetectedPeak> extract_peaks(const Image& img, const ImageSpec& spec, double threshold) {
  spec.validate();
  if (img.height != spec.height || img.width != spec.width) {
    throw DomainError("image dimensions do not match the image spec");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("peak threshold must lie in (0, 1]");
  std::vector<DetectedPeak> peaks;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double v = img.at(r, c);
      if (!(v >= threshold)) continue;
      bool is_max = true;
      for (int dr = -1; dr <= 1 && is_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if ((dr == 0 && dc == 0) || r + dr < 0 || r + dr >= img.height || c + dc < 0 || c + dc >= img.width) {
            continue;
          }
          if (img.at(r + dr, c + dc) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      double fr = r, fc = c;
      if (r > 0 && r + 1 < img.height) fr += detail::parabolic_offset(img.at(r - 1, c), v, img.at(r + 1, c));
      if (c > 0 && c + 1 < img.width) fc += detail::parabolic_offset(img.at(r, c - 1), v, img.at(r, c + 1));
      peaks.push_back({spec.a_par_of(fr), spec.a_perp_of(fc), v});
    }
  }
  return peaks;
}

struct MatchPair {
  std::size_t truth = 0;
  std::size_t pred = 0;
  double distance = 0.0;  // Hz
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchPair> pairs;  // sorted by truth index

  double total_distance() const {
    double s = 0.0;
    for (const auto& p : pairs) s += p.distance;
    return s;
  }
};

/// Rectangular min-cost assignment (Hungarian method with potentials).
/// Returns, for every row, the assigned column. Requires rows <= cols.
inline std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost[0].size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

inline double coupling_distance(double az1, double ap1, double az2, double ap2) {
  return std::hypot(az1 - az2, ap1 - ap2);
}

/// One-to-one truth/prediction matching restricted to pairs within
/// `radius` (Hz, Euclidean in the (A_par, A_perp) plane). Among matchings
/// with the most pairs, the one with the least total distance is returned.
inline MatchResult match_peaks(const SpinCluster& truth, std::span<const DetectedPeak> pred, double radius) {
  if (!(radius > 0.0)) throw DomainError("matching radius must be positive");
  const std::size_t nt = truth.size();
  const std::size_t np = pred.size();
  MatchResult res;
  if (nt > 0 && np > 0) {
    // Forbidden pairs cost more than any feasible matching can, so the
    // optimum first maximises the pair count, then minimises distance.
    const double forbidden = radius * static_cast<double>(std::min(nt, np) + 1) * 4.0;
    const std::size_t dim = std::max(nt, np);
    std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, forbidden));
    for (std::size_t i = 0; i < nt; ++i) {
      for (std::size_t j = 0; j < np; ++j) {
        const double d = coupling_distance(truth.spins[i].a_par, truth.spins[i].a_perp, pred[j].a_par, pred[j].a_perp);
        if (d <= radius) cost[i][j] = d;
      }
    }
    const auto assign = solve_assignment(cost);
    for (std::size_t i = 0; i < nt; ++i) {
      const std::size_t j = assign[i];
      if (j < np && cost[i][j] < forbidden) res.pairs.push_back({i, j, cost[i][j]});
    }
  }
  res.tp = res.pairs.size();
  res.fp = np - res.tp;
  res.fn = nt - res.tp;
  return res;
}

struct DetectionScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1. A denominator of zero gives 0, except the
/// vacuous case (no truths, no predictions) which scores 1 throughout.
inline DetectionScores prf1(const MatchResult& m) {
  if (m.tp == 0 && m.fp == 0 && m.fn == 0) return {1.0, 1.0, 1.0};
  const double tp = static_cast<double>(m.tp);
  const double p = (m.tp + m.fp) ? tp / static_cast<double>(m.tp + m.fp) : 0.0;
  const double r = (m.tp + m.fn) ? tp / static_cast<double>(m.tp + m.fn) : 0.0;
  const double f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return {p, r, f};
}

struct CouplingMae {
  double a_par = 0.0;   // Hz
  double a_perp = 0.0;  // Hz
};

/// Mean absolute coupling error over matched pairs; nullopt when nothing matched.
inline std::optional<CouplingMae> mae(const MatchResult& m, const SpinCluster& truth,
                                      std::span<const DetectedPeak> pred) {
  if (m.tp == 0) return std::nullopt;
  CouplingMae e;
  for (const auto& p : m.pairs) {
    e.a_par += std::abs(truth.spins.at(p.truth).a_par - pred[p.pred].a_par);
    e.a_perp += std::abs(truth.spins.at(p.truth).a_perp - pred[p.pred].a_perp);
  }
  e.a_par /= static_cast<double>(m.tp);
  e.a_perp /= static_cast<double>(m.tp);
  return e;
}

/// Per-sample scores averaged over samples that share the same true spin
/// count. MAE averages skip samples with no matched spin.
class MetricsByCount {
 public:
  struct Row {
    std::size_t n_spins = 0;
    std::size_t samples = 0;
    double f1 = 0.0;
    std::optional<double> mae_a_par;
    std::optional<double> mae_a_perp;
  };

  void add(std::size_t n_spins, const DetectionScores& s, const std::optional<CouplingMae>& e) {
    auto& a = acc_[n_spins];
    ++a.samples;
    a.f1 += s.f1;
    if (e) {
      ++a.with_mae;
      a.mae_par += e->a_par;
      a.mae_perp += e->a_perp;
    }
  }

  std::vector<Row> rows() const {
    std::vector<Row> out;
    for (const auto& [n, a] : acc_) {
      Row r{n, a.samples, a.f1 / static_cast<double>(a.samples), std::nullopt, std::nullopt};
      if (a.with_mae) {
        r.mae_a_par = a.mae_par / static_cast<double>(a.with_mae);
        r.mae_a_perp = a.mae_perp / static_cast<double>(a.with_mae);
      }
      out.push_back(r);
    }
    return out;
  }

 private:
  struct Acc {
    std::size_t samples = 0;
    std::size_t with_mae = 0;
    double f1 = 0.0;
    double mae_par = 0.0;
    double mae_perp = 0.0;
  };
  std::map<std::size_t, Acc> acc_;
};

}  // namespace nvdesign
