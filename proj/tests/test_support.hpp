#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "nvdesign/spin_types.hpp"
#include "nvdesign/units.hpp"

namespace nvtest {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("nvdesign-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

// Kronecker product of two 2x2 blocks, electron first.
inline Eigen::Matrix4cd kroneckerish(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

/// Survival probability from propagating the full electron (two levels) plus
/// nuclear spin density matrix, without the branch decomposition used by the
/// library. No decoherence.
inline double full_system_survival(const nvdesign::HyperfineCoupling& spin, int n_pulses, double tau,
                                   double omega_l) {
  using C = std::complex<double>;
  using M4 = Eigen::Matrix4cd;
  const double az = nvdesign::units::hz_to_rad(spin.a_par);
  const double ax = nvdesign::units::hz_to_rad(spin.a_perp);
  Eigen::Matrix2cd ix, iz, p0, p1, sx;
  ix << 0, 0.5, 0.5, 0;
  iz << 0.5, 0, 0, -0.5;
  p0 << 1, 0, 0, 0;
  p1 << 0, 0, 0, 1;
  sx << 0, 1, 1, 0;
  const Eigen::Matrix2cd h0 = omega_l * iz;
  const Eigen::Matrix2cd h1 = (omega_l + az) * iz + ax * ix;
  M4 h = kroneckerish(p0, h0) + kroneckerish(p1, h1);

  Eigen::SelfAdjointEigenSolver<M4> es(h);
  Eigen::Vector4cd phase;
  for (int k = 0; k < 4; ++k) phase(k) = std::exp(C(0.0, -es.eigenvalues()(k) * tau));
  const M4 free = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  const M4 pulse = kroneckerish(sx, Eigen::Matrix2cd::Identity());
  const M4 unit = free * pulse * free;
  M4 u = M4::Identity();
  for (int p = 0; p < n_pulses; ++p) u = unit * u;

  Eigen::Matrix2cd plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  const M4 rho0 = kroneckerish(plus, 0.5 * Eigen::Matrix2cd::Identity());
  const M4 proj = kroneckerish(plus, Eigen::Matrix2cd::Identity());
  return (proj * u * rho0 * u.adjoint()).trace().real();
}

}  // namespace nvtest
