// Independent verification oracle: the same dynamics in the truncated
// oscillator number basis. The Hamiltonian is built from ladder-operator
// forms of z and p and integrated as a dense ODE; the result is synthesized
// back onto the position grid through Hermite functions. Intended for small
// |alpha| and short runs.

#pragma once

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mrfm/model.hpp"
#include "mrfm/spinor_field.hpp"

namespace mrfm {

struct TruncationError : std::runtime_error {
  double tau;
  explicit TruncationError(double tau_, const std::string& what)
      : std::runtime_error(what + " (tau = " + std::to_string(tau_) + ")"), tau(tau_) {}
};

struct FockResult {
  std::vector<Complex> a1;  // number-basis amplitudes, s_z = +1/2
  std::vector<Complex> a2;
  SpinorField field;        // grid synthesis of the final state
};

namespace detail {

/// Hermite functions phi_n(z) via the stable normalized recurrence.
inline void hermite_accumulate(double z, const std::vector<Complex>& a1,
                               const std::vector<Complex>& a2, Complex& out1, Complex& out2) {
  const std::size_t levels = a1.size();
  double prev = 0.0;
  double cur = std::pow(pi, -0.25) * std::exp(-0.5 * z * z);
  out1 = a1[0] * cur;
  out2 = a2[0] * cur;
  for (std::size_t n = 1; n < levels; ++n) {
    const double nd = static_cast<double>(n);
    const double next = std::sqrt(2.0 / nd) * z * cur - std::sqrt((nd - 1.0) / nd) * prev;
    prev = cur;
    cur = next;
    out1 += a1[n] * cur;
    out2 += a2[n] * cur;
  }
}

}  // namespace detail

/// Propagate in the truncated number basis (levels 0..n_max per spin
/// component). Throws TruncationError if the initial coherent state leaks
/// more than leak_threshold past n_max, or if the top level becomes occupied
/// above it during evolution.
inline FockResult oracle_propagate_fock(const CoherentInit& c, const SpinInit& s,
                                        const SimParams& p, std::size_t n_max, double t_target,
                                        double rel_tol = 1e-11, double abs_tol = 1e-13,
                                        double leak_threshold = 1e-10) {
  namespace ode = boost::numeric::odeint;
  if (t_target > p.schedule.t_end() * (1.0 + 1e-12))
    throw std::invalid_argument("oracle: t_target outside schedule range");
  const std::size_t levels = n_max + 1;

  // initial coherent-state amplitudes A_n = alpha^n / sqrt(n!) e^{-|alpha|^2/2}
  std::vector<Complex> coeff(levels);
  coeff[0] = std::exp(-0.5 * std::norm(c.alpha));
  for (std::size_t n = 1; n < levels; ++n)
    coeff[n] = coeff[n - 1] * c.alpha / std::sqrt(static_cast<double>(n));
  double kept = 0.0;
  for (const auto& a : coeff) kept += std::norm(a);
  if (1.0 - kept > leak_threshold)
    throw TruncationError(0.0, "oracle: initial truncation leakage " +
                                   std::to_string(1.0 - kept) + " exceeds threshold");

  // state layout: [re1 | im1 | re2 | im2], each block of size `levels`
  std::vector<double> y(4 * levels, 0.0);
  const auto spin = s.amplitudes(p);
  for (std::size_t n = 0; n < levels; ++n) {
    const Complex v1 = coeff[n] * spin[0];
    const Complex v2 = coeff[n] * spin[1];
    y[n] = v1.real();
    y[levels + n] = v1.imag();
    y[2 * levels + n] = v2.real();
    y[3 * levels + n] = v2.imag();
  }

  std::vector<double> zoff(levels);  // <n+1|z|n> = sqrt((n+1)/2)
  for (std::size_t n = 0; n < levels; ++n)
    zoff[n] = std::sqrt(0.5 * static_cast<double>(n + 1));

  // H = diag(n+1/2) + (dphi/dtau) S_z - eps S_x - 2 eta z S_z, all real;
  // dRe = H Im, dIm = -H Re.
  auto apply_h = [&](const double* x1, const double* x2, double* y1, double* y2, double dphi,
                     double eps) {
    const double eta = p.eta;
    for (std::size_t n = 0; n < levels; ++n) {
      const double diag = static_cast<double>(n) + 0.5;
      double v1 = (diag + 0.5 * dphi) * x1[n] - 0.5 * eps * x2[n];
      double v2 = (diag - 0.5 * dphi) * x2[n] - 0.5 * eps * x1[n];
      if (n > 0) {
        v1 -= eta * zoff[n - 1] * x1[n - 1];
        v2 += eta * zoff[n - 1] * x2[n - 1];
      }
      if (n + 1 < levels) {
        v1 -= eta * zoff[n] * x1[n + 1];
        v2 += eta * zoff[n] * x2[n + 1];
      }
      y1[n] = v1;
      y2[n] = v2;
    }
  };

  auto system = [&](const std::vector<double>& x, std::vector<double>& dxdt, double tau) {
    const auto sp = p.schedule.at(tau);
    dxdt.resize(x.size());
    const double* re1 = x.data();
    const double* im1 = x.data() + levels;
    const double* re2 = x.data() + 2 * levels;
    const double* im2 = x.data() + 3 * levels;
    // dRe = +H Im
    apply_h(im1, im2, dxdt.data(), dxdt.data() + 2 * levels, sp.dphi_dtau, sp.epsilon);
    // dIm = -H Re
    std::vector<double> tmp(2 * levels);
    apply_h(re1, re2, tmp.data(), tmp.data() + levels, sp.dphi_dtau, sp.epsilon);
    for (std::size_t n = 0; n < levels; ++n) {
      dxdt[levels + n] = -tmp[n];
      dxdt[3 * levels + n] = -tmp[levels + n];
    }
  };

  auto top_occupancy = [&](const std::vector<double>& x) {
    const std::size_t n = levels - 1;
    return x[n] * x[n] + x[levels + n] * x[levels + n] + x[2 * levels + n] * x[2 * levels + n] +
           x[3 * levels + n] * x[3 * levels + n];
  };

  auto stepper =
      ode::make_controlled(abs_tol, rel_tol, ode::runge_kutta_dopri5<std::vector<double>>());
  double t = 0.0;
  double dt = 1e-4;
  while (t_target - t > 1e-14 * std::max(1.0, t_target)) {
    double trial = std::min(dt, t_target - t);
    if (stepper.try_step(system, y, t, trial) == ode::success) {
      dt = trial;
      if (top_occupancy(y) > leak_threshold)
        throw TruncationError(t, "oracle: top-level occupancy exceeds threshold during evolution");
    } else {
      dt = trial;
      if (dt < 1e-13) throw TruncationError(t, "oracle: step control failed");
    }
  }

  FockResult r{std::vector<Complex>(levels), std::vector<Complex>(levels),
               SpinorField(p.grid)};
  for (std::size_t n = 0; n < levels; ++n) {
    r.a1[n] = {y[n], y[levels + n]};
    r.a2[n] = {y[2 * levels + n], y[3 * levels + n]};
  }
  for (std::size_t j = 0; j < p.grid.n_points; ++j)
    detail::hermite_accumulate(p.grid.z(j), r.a1, r.a2, r.field.psi1[j], r.field.psi2[j]);
  r.field.tau = t_target;
  return r;
}

/// Fidelity |<a|b>|^2 with both states normalized by quadrature.
inline double fidelity(const SpinorField& a, const SpinorField& b) {
  if (a.grid != b.grid) throw std::invalid_argument("fidelity: grid mismatch");
  Complex ov{};
  for (std::size_t j = 0; j < a.grid.n_points; ++j)
    ov += std::conj(a.psi1[j]) * b.psi1[j] + std::conj(a.psi2[j]) * b.psi2[j];
  const double dz = a.grid.dz();
  const double na = a.total_norm();
  const double nb = b.total_norm();
  return std::norm(ov * dz) / (na * nb);
}

}  // namespace mrfm
