#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "nvdesign/acquisition.hpp"
#include "nvdesign/spin_model.hpp"

namespace nvdesign {

/// Evaluates modulation products and survival probabilities of many
/// clusters on one fixed grid.
///
/// Everything that depends only on tau (the Larmor phase and the decoherence
/// envelope) is tabulated once. The grid is cut into blocks of kBlock points;
/// on a block of equally spaced delays the spin phase omega_tilde*tau is
/// formed from one exact sin/cos at the block start plus a per-spin table of
/// step rotations, and the remaining arithmetic runs branch-free over the
/// block. Agreement with modulation_term is at the 1e-11 level.
class GridEvaluator {
 public:
  static constexpr std::size_t kBlock = 64;

  GridEvaluator(const AcquisitionGrid& grid, const FieldConfig& field, const DecoherenceModel& dec)
      : grid_(grid), field_(field) {
    grid_.validate();
    if (dec.enabled) dec.validate();
    const std::size_t n = grid_.size();
    tau_.resize(n);
    cos_b_.resize(n);
    sin_b_.resize(n);
    one_minus_cos_b_.resize(n);
    envelope_.resize(n);
    const double t_n = dec.enabled ? coherence_time(grid_.n_pulses, dec) : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      tau_[k] = grid_.tau_s(k);
      const double beta = field_.omega_l() * tau_[k];
      cos_b_[k] = std::cos(beta);
      sin_b_[k] = std::sin(beta);
      one_minus_cos_b_[k] = 1.0 - cos_b_[k];
      envelope_[k] = dec.enabled ? std::exp(-tau_[k] / t_n) : 1.0;
    }

    step_ns_ = grid_.size() > 1 ? grid_.taus_ns[1] - grid_.taus_ns[0] : 0;
    for (std::size_t b = 0; b < n; b += kBlock) {
      const std::size_t e = std::min(n, b + kBlock);
      bool uniform = step_ns_ > 0;
      for (std::size_t k = b + 1; k < e && uniform; ++k) {
        uniform = grid_.taus_ns[k] - grid_.taus_ns[b] == static_cast<std::int64_t>(k - b) * step_ns_;
      }
      uniform_block_.push_back(uniform);
    }
  }

  const AcquisitionGrid& grid() const noexcept { return grid_; }
  const FieldConfig& field() const noexcept { return field_; }
  std::size_t size() const noexcept { return grid_.size(); }
  std::span<const double> envelope() const noexcept { return envelope_; }

  /// product[k] *= M_j(tau_k) for one spin.
  void multiply_modulation(const HyperfineCoupling& spin, std::span<double> product) const {
    check_size(product.size());
    const SpinAxis axis = SpinAxis::of(spin, field_.omega_l());
    if (axis.m_x == 0.0) return;
    const int n_pulses = grid_.n_pulses;
    if (n_pulses % 2 != 0) {
      for (std::size_t k = 0; k < size(); ++k) {
        product[k] *= modulation_term(spin, PulseSequence{n_pulses, tau_[k]}, field_);
      }
      return;
    }

    const double wt = axis.omega_tilde;
    const double mz = axis.m_z;
    const double mx2 = axis.m_x * axis.m_x;

    // cos/sin of m * omega_tilde * step for m in [0, kBlock)
    std::array<double, kBlock> rot_c{}, rot_s{};
    if (step_ns_ > 0) {
      const double delta = wt * static_cast<double>(step_ns_) * 1e-9;
      const double dc = std::cos(delta), ds = std::sin(delta);
      rot_c[0] = 1.0;
      rot_s[0] = 0.0;
      for (std::size_t m = 1; m < kBlock; ++m) {
        if (m % 16 == 0) {
          rot_c[m] = std::cos(static_cast<double>(m) * delta);
          rot_s[m] = std::sin(static_cast<double>(m) * delta);
        } else {
          rot_c[m] = rot_c[m - 1] * dc - rot_s[m - 1] * ds;
          rot_s[m] = rot_s[m - 1] * dc + rot_c[m - 1] * ds;
        }
      }
    }

    alignas(64) std::array<double, kBlock> ca, sa, re, im, acc_re, acc_im, den;
    for (std::size_t b = 0, blk = 0; b < size(); b += kBlock, ++blk) {
      const std::size_t len = std::min(kBlock, size() - b);
      if (uniform_block_[blk]) {
        const double a0 = wt * tau_[b];
        const double c0 = std::cos(a0), s0 = std::sin(a0);
        for (std::size_t m = 0; m < len; ++m) {
          ca[m] = c0 * rot_c[m] - s0 * rot_s[m];
          sa[m] = s0 * rot_c[m] + c0 * rot_s[m];
        }
      } else {
        for (std::size_t m = 0; m < len; ++m) {
          const double a = wt * tau_[b + m];
          ca[m] = std::cos(a);
          sa[m] = std::sin(a);
        }
      }

      const double* cb = cos_b_.data() + b;
      const double* sb = sin_b_.data() + b;
      for (std::size_t m = 0; m < len; ++m) {
        const double c = ca[m] * cb[m] - mz * sa[m] * sb[m];
        den[m] = 1.0 + c;
        re[m] = c;
        im[m] = std::sqrt(std::max(0.0, (1.0 - c) * den[m]));
        acc_re[m] = 1.0;
        acc_im[m] = 0.0;
      }
      // acc = exp(i phi)^N by binary powering, lane-parallel over the block
      for (unsigned e = static_cast<unsigned>(n_pulses);;) {
        if (e & 1U) {
          for (std::size_t m = 0; m < len; ++m) {
            const double t = acc_re[m] * re[m] - acc_im[m] * im[m];
            acc_im[m] = acc_re[m] * im[m] + acc_im[m] * re[m];
            acc_re[m] = t;
          }
        }
        e >>= 1U;
        if (e == 0) break;
        for (std::size_t m = 0; m < len; ++m) {
          const double t = re[m] * re[m] - im[m] * im[m];
          im[m] = 2.0 * re[m] * im[m];
          re[m] = t;
        }
      }

      const double* omcb = one_minus_cos_b_.data() + b;
      double* out = product.data() + b;
      for (std::size_t m = 0; m < len; ++m) {
        const double s2 = 0.5 * (1.0 - acc_re[m]);
        const double mval = 1.0 - mx2 * (1.0 - ca[m]) * omcb[m] / den[m] * s2;
        re[m] = std::min(1.0, std::max(-1.0, mval));
      }
      const double min_den = *std::min_element(den.begin(), den.begin() + len);
      if (min_den < kSingularDenominator) {
        for (std::size_t m = 0; m < len; ++m) {
          if (std::abs(den[m]) < kSingularDenominator) {
            re[m] = modulation_term(spin, PulseSequence{n_pulses, tau_[b + m]}, field_);
          }
        }
      }
      for (std::size_t m = 0; m < len; ++m) out[m] *= re[m];
    }
  }

  /// out[k] = prod_j M_j(tau_k) over the cluster.
  void modulation_product(const SpinCluster& cluster, std::span<double> out) const {
    check_size(out.size());
    std::fill(out.begin(), out.end(), 1.0);
    for (const auto& spin : cluster.spins) multiply_modulation(spin, out);
  }

  /// out[k] = (1 + product[k] * envelope[k]) / 2, clamped to [0, 1].
  void survival(std::span<const double> product, std::span<double> out) const {
    check_size(product.size());
    check_size(out.size());
    for (std::size_t k = 0; k < size(); ++k) {
      out[k] = std::clamp(0.5 * (1.0 + product[k] * envelope_[k]), 0.0, 1.0);
    }
  }

  std::vector<double> survival(const SpinCluster& cluster) const {
    std::vector<double> prod(size());
    modulation_product(cluster, prod);
    std::vector<double> out(size());
    survival(prod, out);
    return out;
  }

 private:
  void check_size(std::size_t n) const {
    if (n != size()) throw DomainError("buffer length does not match grid size");
  }

  AcquisitionGrid grid_;
  FieldConfig field_;
  std::vector<double> tau_;
  std::vector<double> cos_b_;
  std::vector<double> sin_b_;
  std::vector<double> one_minus_cos_b_;
  std::vector<double> envelope_;
  std::int64_t step_ns_ = 0;
  std::vector<bool> uniform_block_;
};

}  // namespace nvdesign
