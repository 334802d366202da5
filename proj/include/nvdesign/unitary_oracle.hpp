#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "nvdesign/spin_types.hpp"

namespace nvdesign {

namespace detail {

/// exp(-i t w.I) for a spin-1/2 I = sigma/2 and field vector w (rad/s).
inline Eigen::Matrix2cd spin_half_propagator(double wx, double wz, double t) {
  const double w = std::hypot(wx, wz);
  using C = std::complex<double>;
  if (w == 0.0) return Eigen::Matrix2cd::Identity();
  const double half = 0.5 * w * t;
  const double c = std::cos(half);
  const double s = std::sin(half);
  const double nx = wx / w;
  const double nz = wz / w;
  Eigen::Matrix2cd u;
  u << C(c, -s * nz), C(0.0, -s * nx),
       C(0.0, -s * nx), C(c, s * nz);
  return u;
}

}  // namespace detail

/// Brute-force electron coherence factor for one nuclear spin.
///
/// The nuclear spin precesses about omega_L z when the electron sits in the
/// uncoupled level and about (A_perp, 0, omega_L + A_par) in the coupled one.
/// Each pi pulse swaps the two branches. Starting from |x> on the electron and
/// a fully mixed nucleus, the surviving coherence is Re Tr(U_b^dagger U_a) / 2.
inline double unitary_oracle(const HyperfineCoupling& spin, const PulseSequence& seq,
                             const FieldConfig& field) {
  spin.validate();
  seq.validate();
  const double wl = field.omega_l();
  const double az = units::hz_to_rad(spin.a_par);
  const double ax = units::hz_to_rad(spin.a_perp);
  if (std::hypot(az + wl, ax) == 0.0) {
    throw DomainError("effective nuclear frequency vanishes (A_perp = 0, A_par = -omega_L)");
  }

  const Eigen::Matrix2cd free0 = detail::spin_half_propagator(0.0, wl, seq.tau);
  const Eigen::Matrix2cd free1 = detail::spin_half_propagator(ax, wl + az, seq.tau);
  const Eigen::Matrix2cd* step[2] = {&free0, &free1};

  Eigen::Matrix2cd ua = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd ub = Eigen::Matrix2cd::Identity();
  int branch_a = 0;
  for (int p = 0; p < seq.n_pulses; ++p) {
    // tau, pi, tau: the branch flips at the pulse
    ua = (*step[1 - branch_a]) * (*step[branch_a]) * ua;
    ub = (*step[branch_a]) * (*step[1 - branch_a]) * ub;
    branch_a = 1 - branch_a;
  }
  return 0.5 * (ub.adjoint() * ua).trace().real();
}

}  // namespace nvdesign
