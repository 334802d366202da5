#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "nvdesign/spin_types.hpp"
#include "nvdesign/unitary_oracle.hpp"

namespace nvdesign {

/// Slack tolerated before clamping M and P_x into their ranges.
inline constexpr double kRangeSlack = 1e-12;
/// Below this the closed-form denominator is treated as singular and the
/// propagator path is used instead.
inline constexpr double kSingularDenominator = 1e-15;

namespace detail {

inline double clamp_checked(double v, double lo, double hi, const char* what) {
  if (!(v >= lo - kRangeSlack && v <= hi + kRangeSlack)) {
    throw DomainError(std::string(what) + " out of range: " + std::to_string(v));
  }
  return std::clamp(v, lo, hi);
}

}  // namespace detail

/// Geometry of one spin in the rotating frame: effective precession
/// frequency omega_tilde and the direction cosines m_z, m_x of its axis.
struct SpinAxis {
  double omega_tilde;
  double m_z;
  double m_x;

  static SpinAxis of(const HyperfineCoupling& spin, double omega_l) {
    const double az = units::hz_to_rad(spin.a_par);
    const double ax = units::hz_to_rad(spin.a_perp);
    const double wt = std::hypot(az + omega_l, ax);
    if (wt == 0.0) {
      throw DomainError("effective nuclear frequency vanishes (A_perp = 0, A_par = -omega_L)");
    }
    return {wt, (az + omega_l) / wt, ax / wt};
  }
};

/// Closed-form CPMG modulation M_j of one nuclear spin.
///
///   M = 1 - m_x^2 (1 - cos a)(1 - cos b) / (1 + cos a cos b - m_z sin a sin b) * sin^2(N phi / 2)
///   cos phi = cos a cos b - m_z sin a sin b,   a = omega_tilde tau,  b = omega_L tau
///
/// The expression assumes the train is built from N/2 symmetric units, so it
/// only holds for even N. Odd N is evaluated by explicit propagation.
inline double modulation_term(const HyperfineCoupling& spin, const PulseSequence& seq,
                              const FieldConfig& field) {
  spin.validate();
  seq.validate();
  const SpinAxis axis = SpinAxis::of(spin, field.omega_l());
  if (axis.m_x == 0.0 || seq.tau == 0.0) return 1.0;
  if (seq.n_pulses % 2 != 0) {
    return detail::clamp_checked(unitary_oracle(spin, seq, field), -1.0, 1.0, "modulation term");
  }

  const double alpha = axis.omega_tilde * seq.tau;
  const double beta = field.omega_l() * seq.tau;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cos_phi = ca * cb - axis.m_z * sa * sb;
  const double den = 1.0 + cos_phi;
  if (std::abs(den) < kSingularDenominator) {
    return detail::clamp_checked(unitary_oracle(spin, seq, field), -1.0, 1.0, "modulation term");
  }
  const double phi = std::acos(std::clamp(cos_phi, -1.0, 1.0));
  const double s = std::sin(0.5 * seq.n_pulses * phi);
  const double m = 1.0 - axis.m_x * axis.m_x * (1.0 - ca) * (1.0 - cb) / den * s * s;
  return detail::clamp_checked(m, -1.0, 1.0, "modulation term");
}

/// exp(-tau / T(N)), or 1 when decoherence is disabled.
inline double decoherence_envelope(const PulseSequence& seq, const DecoherenceModel& dec) {
  if (!dec.enabled) return 1.0;
  return std::exp(-seq.tau / coherence_time(seq.n_pulses, dec));
}

/// Survival probability of the NV |x> state from an already-formed
/// modulation product M.
inline double survival_from_modulation(double m_total, double envelope) {
  return detail::clamp_checked(0.5 * (1.0 + m_total * envelope), 0.0, 1.0, "survival probability");
}

/// P_x = (1 + prod_j M_j * exp(-tau / T^N)) / 2; the envelope factor is
/// dropped when decoherence is disabled.
inline double survival_probability(const SpinCluster& cluster, const PulseSequence& seq,
                                   const FieldConfig& field, const DecoherenceModel& dec) {
  double m = 1.0;
  for (const auto& spin : cluster.spins) m *= modulation_term(spin, seq, field);
  return survival_from_modulation(m, decoherence_envelope(seq, dec));
}

}  // namespace nvdesign
