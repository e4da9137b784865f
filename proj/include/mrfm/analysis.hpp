// Observables and structure extraction from spinor snapshots: densities,
// moments, reduced spin density matrix, two-peak decomposition with the
// kappa spin-ratio fit, branching ratios, and the cantilever phase fit used
// for spin readout.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mrfm/model.hpp"
#include "mrfm/spinor_field.hpp"

namespace mrfm {

struct Observables {
  double tau;
  double mean_z;
  double std_z;
  std::array<double, 3> spin_expect;
  double pop_up;
  double pop_down;
};

/// Reduced 2x2 spin density matrix entries (rho11, rho22 real; rho21 =
/// integral psi2 conj(psi1) dz).
struct SpinDensity {
  double rho11;
  double rho22;
  Complex rho21;

  std::array<double, 3> bloch() const {
    return {rho21.real(), rho21.imag(), 0.5 * (rho11 - rho22)};
  }
};

inline SpinDensity spin_density(const SpinorField& s, std::size_t lo, std::size_t hi) {
  SpinDensity d{0.0, 0.0, {0.0, 0.0}};
  for (std::size_t j = lo; j <= hi; ++j) {
    d.rho11 += std::norm(s.psi1[j]);
    d.rho22 += std::norm(s.psi2[j]);
    d.rho21 += s.psi2[j] * std::conj(s.psi1[j]);
  }
  const double dz = s.grid.dz();
  d.rho11 *= dz;
  d.rho22 *= dz;
  d.rho21 *= dz;
  return d;
}

inline SpinDensity spin_density(const SpinorField& s) {
  return spin_density(s, 0, s.grid.n_points - 1);
}

inline Observables observables(const SpinorField& s) {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < s.grid.n_points; ++j) {
    const double dens = std::norm(s.psi1[j]) + std::norm(s.psi2[j]);
    const double z = s.grid.z(j);
    m0 += dens;
    m1 += dens * z;
    m2 += dens * z * z;
  }
  const double dz = s.grid.dz();
  m0 *= dz;
  m1 *= dz;
  m2 *= dz;
  const auto d = spin_density(s);
  Observables o;
  o.tau = s.tau;
  o.mean_z = m1 / m0;
  o.std_z = std::sqrt(std::max(0.0, m2 / m0 - o.mean_z * o.mean_z));
  o.spin_expect = d.bloch();
  o.pop_up = d.rho11;
  o.pop_down = d.rho22;
  return o;
}

struct Density {
  std::vector<double> total;  // |psi1|^2 + |psi2|^2
  std::vector<double> p1;
  std::vector<double> p2;
};

inline Density density(const SpinorField& s) {
  Density d;
  const std::size_t n = s.grid.n_points;
  d.total.resize(n);
  d.p1.resize(n);
  d.p2.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    d.p1[j] = std::norm(s.psi1[j]);
    d.p2[j] = std::norm(s.psi2[j]);
    d.total[j] = d.p1[j] + d.p2[j];
  }
  return d;
}

struct PeakSupport {
  std::size_t lo;  // inclusive grid indices
  std::size_t hi;
  double z_lo;
  double z_hi;
  double weight;    // integral of P over the support
  double centroid;  // weight-averaged z
};

/// Connected components of {P > threshold_frac * max P}, components closer
/// than 3 grid points merged, sorted by descending weight. Empty for an
/// all-zero density.
inline std::vector<PeakSupport> detect_peaks(const std::vector<double>& P, const GridSpec& grid,
                                             double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0))
    throw std::invalid_argument("detect_peaks: threshold_frac must be in (0, 1)");
  if (P.size() != grid.n_points)
    throw std::invalid_argument("detect_peaks: density size does not match grid");
  const double pmax = *std::max_element(P.begin(), P.end());
  if (!(pmax > 0.0)) return {};
  const double thr = threshold_frac * pmax;

  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t j = 0; j < P.size();) {
    if (P[j] > thr) {
      std::size_t k = j;
      while (k + 1 < P.size() && P[k + 1] > thr) ++k;
      if (!runs.empty() && j - runs.back().second - 1 < 3)
        runs.back().second = k;  // fewer than 3 sub-threshold points between
      else
        runs.emplace_back(j, k);
      j = k + 1;
    } else {
      ++j;
    }
  }

  std::vector<PeakSupport> peaks;
  const double dz = grid.dz();
  for (auto [lo, hi] : runs) {
    PeakSupport p{lo, hi, grid.z(lo), grid.z(hi), 0.0, 0.0};
    for (std::size_t j = lo; j <= hi; ++j) {
      p.weight += P[j];
      p.centroid += P[j] * grid.z(j);
    }
    p.centroid /= p.weight;
    p.weight *= dz;
    peaks.push_back(p);
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const PeakSupport& a, const PeakSupport& b) { return a.weight > b.weight; });
  return peaks;
}

/// Two-branch structure Psi = Psi_b chi_b + Psi_s chi_s. kappa is the fitted
/// spin-component ratio psi1_s/psi2_s on the small-peak support (the paper's
/// z-independent real function); kappa_big_check fits -psi2_b/psi1_b on the
/// big support. Residuals are relative rms, never hidden.
struct PeakDecomposition {
  int n_peaks = 0;
  PeakSupport big{};
  PeakSupport small{};
  double w_big = 0.0;
  double w_small = 0.0;
  double kappa = 0.0;
  double kappa_residual = 0.0;
  double kappa_im_fraction = 0.0;
  double kappa_big_check = 0.0;
  double kappa_big_residual = 0.0;
  std::array<Complex, 2> chi_big{};
  std::array<Complex, 2> chi_small{};
  std::array<double, 3> spin_big{};
  std::array<double, 3> spin_small{};
};

namespace detail {

/// Dominant eigenvector of the restricted 2x2 spin density matrix; the phase
/// convention makes the largest component real positive.
inline std::array<Complex, 2> dominant_spinor(const SpinDensity& d) {
  const double tr = d.rho11 + d.rho22;
  const double gap = std::sqrt(0.25 * (d.rho11 - d.rho22) * (d.rho11 - d.rho22) +
                               std::norm(d.rho21));
  const double lambda = 0.5 * tr + gap;
  // ((rho21)*, lambda - rho11) solves ([[rho11, rho21*],[rho21, rho22]] - lambda) v = 0
  std::array<Complex, 2> v{std::conj(d.rho21), Complex{lambda - d.rho11, 0.0}};
  double nrm = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
  if (nrm == 0.0) {
    v = {Complex{1.0, 0.0}, Complex{0.0, 0.0}};
    nrm = 1.0;
  }
  const std::size_t big = std::norm(v[0]) >= std::norm(v[1]) ? 0 : 1;
  const Complex phase = std::abs(v[big]) > 0.0 ? v[big] / std::abs(v[big]) : Complex{1.0, 0.0};
  return {v[0] / (nrm * phase), v[1] / (nrm * phase)};
}

inline std::array<double, 3> spin_of(const std::array<Complex, 2>& chi) {
  const Complex w = std::conj(chi[0]) * chi[1];
  return {w.real(), w.imag(), 0.5 * (std::norm(chi[0]) - std::norm(chi[1]))};
}

struct RatioFit {
  Complex ratio;
  double residual;  // relative rms of (num - Re(ratio) * den)
};

/// Least-squares ratio num ~= ratio * den over [lo, hi]; residual uses the
/// real part, so z-dependence and any imaginary part both count against it.
inline RatioFit fit_ratio(const std::vector<Complex>& num, const std::vector<Complex>& den,
                          std::size_t lo, std::size_t hi) {
  Complex cross{};
  double den2 = 0.0, num2 = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    cross += num[j] * std::conj(den[j]);
    den2 += std::norm(den[j]);
    num2 += std::norm(num[j]);
  }
  if (den2 == 0.0 || num2 == 0.0) return {Complex{}, 0.0};
  const Complex ratio = cross / den2;
  const double r = ratio.real();
  double resid2 = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) resid2 += std::norm(num[j] - r * den[j]);
  return {ratio, std::sqrt(resid2 / num2)};
}

}  // namespace detail

/// Decompose a post-split state over exactly two disjoint peak supports.
/// A small peak holding less than 1e-14 of the total norm degenerates to a
/// single-peak marker (n_peaks = 1).
inline PeakDecomposition decompose(const SpinorField& s, const std::vector<PeakSupport>& peaks) {
  if (peaks.size() != 2)
    throw std::invalid_argument("decompose: exactly two peak supports required");
  const PeakSupport& big = peaks[0].weight >= peaks[1].weight ? peaks[0] : peaks[1];
  const PeakSupport& small = peaks[0].weight >= peaks[1].weight ? peaks[1] : peaks[0];
  if (big.lo <= small.hi && small.lo <= big.hi)
    throw std::invalid_argument("decompose: peak supports overlap");

  PeakDecomposition d;
  d.big = big;
  d.w_big = big.weight;
  const auto rho_b = spin_density(s, big.lo, big.hi);
  d.chi_big = detail::dominant_spinor(rho_b);
  d.spin_big = detail::spin_of(d.chi_big);

  if (!(small.weight > 1e-14 * (big.weight + small.weight))) {
    d.n_peaks = 1;
    return d;
  }
  d.n_peaks = 2;
  d.small = small;
  d.w_small = small.weight;
  const auto rho_s = spin_density(s, small.lo, small.hi);
  d.chi_small = detail::dominant_spinor(rho_s);
  d.spin_small = detail::spin_of(d.chi_small);

  // kappa = psi1_s / psi2_s on the small support (better conditioned there);
  // the big support provides the reciprocal consistency check -psi2_b/psi1_b.
  const auto fs = detail::fit_ratio(s.psi1, s.psi2, small.lo, small.hi);
  d.kappa = fs.ratio.real();
  d.kappa_residual = fs.residual;
  d.kappa_im_fraction =
      std::abs(fs.ratio) > 0.0 ? std::abs(fs.ratio.imag()) / std::abs(fs.ratio) : 0.0;
  auto fb = detail::fit_ratio(s.psi2, s.psi1, big.lo, big.hi);
  d.kappa_big_check = -fb.ratio.real();
  d.kappa_big_residual = fb.residual;
  return d;
}

/// w_small / w_big; zero for a single-peak decomposition.
inline double branching_ratio(const PeakDecomposition& d) {
  return d.n_peaks == 2 ? d.w_small / d.w_big : 0.0;
}

/// Populations of the field-aligned and anti-aligned spin branches,
/// (w_along, w_opposite). This is the branching ratio observable in the
/// static regime where no spatial splitting can occur.
inline std::pair<double, double> spin_branch_weights(const SpinorField& s,
                                                     const EffectiveField& b) {
  const auto rho = spin_density(s);
  auto project = [&rho](const std::array<Complex, 2>& chi) {
    // chi^dag rho chi
    const Complex r12 = std::conj(rho.rho21);
    return std::real(std::conj(chi[0]) * (rho.rho11 * chi[0] + r12 * chi[1]) +
                     std::conj(chi[1]) * (rho.rho21 * chi[0] + rho.rho22 * chi[1]));
  };
  return {project(field_eigenspinor(b, true)), project(field_eigenspinor(b, false))};
}

struct PhaseFit {
  double amplitude;
  double phase;  // radians in (-pi, pi]
  double amplitude_drift;
  double window_begin;
  double window_end;
  double residual_rms;
};

/// Least-squares fit of z(tau) ~= A (1 + b (tau - tau_mid)) cos(tau + phi0)
/// over the window. Requires >= 3 cantilever periods and >= 20 samples per
/// period inside the window.
inline PhaseFit fit_phase(const std::vector<std::pair<double, double>>& series, double tau_a,
                          double tau_b) {
  const double span = tau_b - tau_a;
  if (!(span >= 6.0 * pi * (1.0 - 1e-12)))
    throw std::invalid_argument("fit_phase: window must span at least 3 periods (6 pi)");
  std::vector<std::pair<double, double>> w;
  for (const auto& s : series)
    if (s.first >= tau_a && s.first <= tau_b) w.push_back(s);
  const double required = 20.0 * span / (2.0 * pi);
  if (static_cast<double>(w.size()) < required)
    throw std::invalid_argument("fit_phase: need >= 20 samples per period in the window");

  const double tau_mid = 0.5 * (tau_a + tau_b);
  Eigen::MatrixXd M(w.size(), 4);
  Eigen::VectorXd y(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = w[i].first;
    const double u = t - tau_mid;
    M(static_cast<Eigen::Index>(i), 0) = std::cos(t);
    M(static_cast<Eigen::Index>(i), 1) = std::sin(t);
    M(static_cast<Eigen::Index>(i), 2) = u * std::cos(t);
    M(static_cast<Eigen::Index>(i), 3) = u * std::sin(t);
    y(static_cast<Eigen::Index>(i)) = w[i].second;
  }
  Eigen::Vector4d c = (M.transpose() * M).ldlt().solve(M.transpose() * y);
  PhaseFit f;
  f.amplitude = std::hypot(c(0), c(1));
  f.phase = std::atan2(-c(1), c(0));
  if (f.phase <= -pi) f.phase = pi;
  f.amplitude_drift =
      f.amplitude > 0.0 ? (c(0) * c(2) + c(1) * c(3)) / (f.amplitude * f.amplitude) : 0.0;
  f.window_begin = tau_a;
  f.window_end = tau_b;
  f.residual_rms = std::sqrt((M * c - y).squaredNorm() / static_cast<double>(w.size()));
  return f;
}

/// Angle difference wrapped into [0, pi].
inline double wrapped_angle_difference(double a, double b) {
  double d = std::fmod(a - b, 2.0 * pi);
  if (d < -pi) d += 2.0 * pi;
  if (d > pi) d -= 2.0 * pi;
  return std::abs(d);
}

inline double angle_between(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("angle_between: zero vector");
  double c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

/// Per-period maxima of |value|: one entry per full period-length window.
inline std::vector<std::pair<double, double>> envelope_maxima(
    const std::vector<std::pair<double, double>>& series, double period = 2.0 * pi) {
  std::vector<std::pair<double, double>> env;
  if (series.empty()) return env;
  double w0 = series.front().first;
  double best = 0.0;
  bool have = false;
  for (const auto& [t, v] : series) {
    while (t >= w0 + period) {
      if (have) env.emplace_back(w0 + 0.5 * period, best);
      w0 += period;
      best = 0.0;
      have = false;
    }
    best = std::max(best, std::abs(v));
    have = true;
  }
  return env;
}

}  // namespace mrfm
