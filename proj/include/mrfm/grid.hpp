#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "mrfm/schedule.hpp"  // for pi

namespace mrfm {

/// Uniform z grid, z_j = z_min + j*dz, j = 0..n-1 (z_max excluded; the
/// spectral kinetic step treats the interval as periodic). n must be a power
/// of two.
struct GridSpec {
  double z_min;
  double z_max;
  std::size_t n_points;

  GridSpec(double z_min_, double z_max_, std::size_t n_points_)
      : z_min(z_min_), z_max(z_max_), n_points(n_points_) {
    if (!(z_min < z_max)) throw std::invalid_argument("grid: z_min must be < z_max");
    if (n_points < 2 || (n_points & (n_points - 1)) != 0)
      throw std::invalid_argument("grid: n_points must be a power of two >= 2 (got " +
                                  std::to_string(n_points) + ")");
  }

  double dz() const { return (z_max - z_min) / static_cast<double>(n_points); }
  double z(std::size_t j) const { return z_min + static_cast<double>(j) * dz(); }

  /// FFT-ordered momentum of bin j.
  double momentum(std::size_t j) const {
    const double dk = 2.0 * pi / (z_max - z_min);
    const auto n = static_cast<std::ptrdiff_t>(n_points);
    auto sj = static_cast<std::ptrdiff_t>(j);
    if (sj >= n / 2) sj -= n;
    return dk * static_cast<double>(sj);
  }

  double max_resolved_momentum() const { return pi / dz(); }

  /// dz must satisfy dz < pi / p_max for the caller's momentum bound.
  void require_resolves_momentum(double p_max) const {
    if (!(max_resolved_momentum() > p_max))
      throw std::invalid_argument("grid: dz too coarse for momentum bound " +
                                  std::to_string(p_max));
  }

  bool operator==(const GridSpec&) const = default;
};

}  // namespace mrfm
