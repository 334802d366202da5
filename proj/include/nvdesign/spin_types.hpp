#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nvdesign/errors.hpp"
#include "nvdesign/units.hpp"

namespace nvdesign {

/// Electron-nuclear hyperfine coupling of one target spin, in Hz.
/// `a_par` is the component along the NV axis, `a_perp` the transverse one.
struct HyperfineCoupling {
  double a_par = 0.0;
  double a_perp = 0.0;

  void validate() const {
    if (!std::isfinite(a_par) || !std::isfinite(a_perp)) {
      throw DomainError("hyperfine coupling must be finite");
    }
    if (a_perp < 0.0) throw DomainError("a_perp must be non-negative");
  }

  friend bool operator==(const HyperfineCoupling&, const HyperfineCoupling&) = default;
};

/// Nuclear spins coupled to a single NV centre. May be empty.
struct SpinCluster {
  std::vector<HyperfineCoupling> spins;

  std::size_t size() const noexcept { return spins.size(); }
  bool empty() const noexcept { return spins.empty(); }

  friend bool operator==(const SpinCluster&, const SpinCluster&) = default;
};

/// Static field along the NV axis. Build through make() so that
/// omega_l stays equal to gamma_n * b_z.
class FieldConfig {
 public:
  /// @param b_z_tesla field magnitude, must be > 0
  /// @param gamma_n   nuclear gyromagnetic ratio in rad/(s T)
  static FieldConfig make(double b_z_tesla,
                          double gamma_n = units::hz_to_rad(units::carbon13_gamma_hz_per_tesla)) {
    if (!(b_z_tesla > 0.0) || !std::isfinite(b_z_tesla)) {
      throw DomainError("magnetic field must be positive, got " + std::to_string(b_z_tesla));
    }
    if (!(gamma_n > 0.0) || !std::isfinite(gamma_n)) {
      throw DomainError("gyromagnetic ratio must be positive");
    }
    return FieldConfig(b_z_tesla, gamma_n);
  }

  static FieldConfig from_gauss(double b_z_gauss) { return make(units::gauss_to_tesla(b_z_gauss)); }

  double b_z() const noexcept { return b_z_; }
  double gamma_n() const noexcept { return gamma_n_; }
  /// Larmor angular frequency, rad/s.
  double omega_l() const noexcept { return omega_l_; }

 private:
  FieldConfig(double b, double g) : b_z_(b), gamma_n_(g), omega_l_(g * b) {}
  double b_z_;
  double gamma_n_;
  double omega_l_;
};

inline double larmor_frequency(const FieldConfig& field) {
  if (!(field.b_z() > 0.0)) throw DomainError("magnetic field must be positive");
  return field.gamma_n() * field.b_z();
}

/// Stretched coherence-time model T(N) = t_ref * (N / n_ref)^eta and the
/// envelope exp(-tau / T(N)) it induces on the NV coherence.
struct DecoherenceModel {
  double t_ref = 3e-3;
  int n_ref = 4;
  double eta = 0.8;
  bool enabled = true;

  void validate() const {
    if (!(t_ref > 0.0)) throw DomainError("decoherence t_ref must be positive");
    if (n_ref < 1) throw DomainError("decoherence n_ref must be >= 1");
    if (!(eta > 0.0 && eta < 2.0)) throw DomainError("decoherence eta must lie in (0, 2)");
  }
};

inline double coherence_time(int n_pulses, const DecoherenceModel& dec) {
  if (n_pulses < 1) throw DomainError("pulse count must be >= 1");
  dec.validate();
  return dec.t_ref * std::pow(static_cast<double>(n_pulses) / dec.n_ref, dec.eta);
}

/// CPMG train (tau - pi - tau)^N. `tau` is in seconds; zero is accepted as
/// the no-evolution limit.
struct PulseSequence {
  int n_pulses = 1;
  double tau = 0.0;

  void validate() const {
    if (n_pulses < 1) throw DomainError("pulse count must be >= 1");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("tau must be finite and >= 0");
  }
};

}  // namespace nvdesign
