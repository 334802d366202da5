#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace nvdesign {

/// Element-wise running mean and second central moment of equally long
/// vectors (Welford update, Chan et al. pairwise merge). Variances are
/// population variances, M2 / n.
class VectorMoments {
 public:
  VectorMoments() = default;
  explicit VectorMoments(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  std::size_t dim() const noexcept { return mean_.size(); }
  std::size_t count() const noexcept { return n_; }

  void add(std::span<const double> x) {
    if (x.size() != dim()) throw std::invalid_argument("VectorMoments::add: dimension mismatch");
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double delta = x[k] - mean_[k];
      mean_[k] += delta * inv;
      m2_[k] += delta * (x[k] - mean_[k]);
    }
  }

  void merge(const VectorMoments& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    if (other.dim() != dim()) throw std::invalid_argument("VectorMoments::merge: dimension mismatch");
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    for (std::size_t k = 0; k < dim(); ++k) {
      const double delta = other.mean_[k] - mean_[k];
      mean_[k] += delta * (nb / n);
      m2_[k] += other.m2_[k] + delta * delta * (na * nb / n);
    }
    n_ += other.n_;
  }

  const std::vector<double>& mean() const noexcept { return mean_; }

  std::vector<double> variance() const {
    std::vector<double> v(dim(), 0.0);
    if (n_ == 0) return v;
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < dim(); ++k) v[k] = m2_[k] > 0.0 ? m2_[k] * inv : 0.0;
    return v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

}  // namespace nvdesign
