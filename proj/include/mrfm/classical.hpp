// Classical limit of the coupled dynamics: a classical oscillator driven by
// the spin projection, and a classical average spin precessing about the
// effective field,
//   d2z/dtau2 + z = 2 eta Sz,   dS/dtau = S x B_eff(tau, z).
// Adaptive Dormand-Prince integration; the spin norm is never renormalized
// (its drift is a quality metric).

#pragma once

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mrfm/model.hpp"

namespace mrfm {

struct ClassicalState {
  double z = 0.0;
  double p = 0.0;                          // dz/dtau
  std::array<double, 3> spin{0.0, 0.0, 0.5};

  double spin_norm() const {
    return std::sqrt(spin[0] * spin[0] + spin[1] * spin[1] + spin[2] * spin[2]);
  }
};

inline ClassicalState rhs(const ClassicalState& s, const SimParams& p, double tau) {
  const auto b = effective_field(p, tau, s.z);
  ClassicalState d;
  d.z = s.p;
  d.p = -s.z + 2.0 * p.eta * s.spin[2];
  d.spin = {s.spin[1] * b.bz - s.spin[2] * b.by, s.spin[2] * b.bx - s.spin[0] * b.bz,
            s.spin[0] * b.by - s.spin[1] * b.bx};
  return d;
}

struct StiffnessError : std::runtime_error {
  double tau;
  explicit StiffnessError(double tau_)
      : std::runtime_error("classical integration step control failed at tau = " +
                           std::to_string(tau_)),
        tau(tau_) {}
};

struct TrajectoryPoint {
  double tau;
  ClassicalState state;
};

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double initial_dt = 1e-3;
  double min_dt = 1e-13;
};

/// Integrate to t_target, sampling at multiples of sample_dt (plus t_target).
/// Pulse-train schedules flip (Sx, Sy, Sz) -> (Sx, -Sy, -Sz) at pulse times.
inline std::vector<TrajectoryPoint> integrate(const ClassicalState& init, const SimParams& p,
                                              double t_target, double sample_dt,
                                              IntegratorOptions opts = {}) {
  namespace ode = boost::numeric::odeint;
  using Vec = std::array<double, 5>;
  if (!(sample_dt > 0.0)) throw std::invalid_argument("integrate: sample_dt must be > 0");
  if (!(t_target >= 0.0) || t_target > p.schedule.t_end() * (1.0 + 1e-12))
    throw std::invalid_argument("integrate: t_target outside schedule range");

  auto system = [&p](const Vec& y, Vec& dydt, double tau) {
    const ClassicalState s{y[0], y[1], {y[2], y[3], y[4]}};
    const ClassicalState d = rhs(s, p, tau);
    dydt = {d.z, d.p, d.spin[0], d.spin[1], d.spin[2]};
  };

  const double tol = 1e-9 * std::max(1.0, t_target);
  std::vector<double> boundaries;
  for (double t = sample_dt; t < t_target - tol; t += sample_dt) boundaries.push_back(t);
  for (double tp : p.schedule.pulse_times())
    if (tp > tol && tp < t_target - tol) boundaries.push_back(tp);
  boundaries.push_back(t_target);
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end(),
                               [tol](double a, double b) { return std::abs(a - b) <= tol; }),
                   boundaries.end());

  auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol,
                                      ode::runge_kutta_dopri5<Vec>());
  Vec y{init.z, init.p, init.spin[0], init.spin[1], init.spin[2]};
  double t = 0.0;
  double dt = opts.initial_dt;
  std::vector<TrajectoryPoint> out;
  auto record = [&out](double tau, const Vec& v) {
    out.push_back({tau, {v[0], v[1], {v[2], v[3], v[4]}}});
  };
  auto is_pulse = [&p, tol](double tau) {
    for (double tp : p.schedule.pulse_times())
      if (std::abs(tp - tau) <= tol) return true;
    return false;
  };
  auto is_sample = [sample_dt, tol](double tau) {
    const double r = std::fmod(tau, sample_dt);
    return std::min(r, sample_dt - r) <= tol;
  };

  record(0.0, y);
  for (double boundary : boundaries) {
    // integrate to the boundary exactly (up to rounding of t itself)
    while (boundary - t > 1e-14 * std::max(1.0, std::abs(boundary))) {
      double trial = std::min(dt, boundary - t);
      if (stepper.try_step(system, y, t, trial) == ode::success) {
        dt = trial;  // accepted; trial now holds the suggested next size
      } else {
        dt = trial;
        if (dt < opts.min_dt) throw StiffnessError(t);
      }
    }
    t = boundary;
    if (is_pulse(boundary)) {
      if (is_sample(boundary)) record(boundary, y);
      y[3] = -y[3];
      y[4] = -y[4];
    } else {
      record(boundary, y);
    }
  }
  return out;
}

/// Integrate the schedule to tau = Q_c, take the trailing-period envelope of
/// z, and convert to meters with the physical length scale (the tau = Q_c
/// stationary-amplitude heuristic).
inline double stationary_amplitude(const SimParams& p, const PhysicalParams& pp,
                                   const ClassicalState& init) {
  if (!(pp.quality_factor > 0.0))
    throw std::invalid_argument("stationary_amplitude: quality factor must be > 0");
  const double qc = pp.quality_factor;
  if (p.schedule.t_end() < qc * (1.0 - 1e-12))
    throw std::invalid_argument("stationary_amplitude: schedule must cover tau = Q_c");
  const auto traj = integrate(init, p, qc, 2.0 * pi / 64.0);
  double env = 0.0;
  for (const auto& tp : traj)
    if (tp.tau >= qc - 2.0 * pi) env = std::max(env, std::abs(tp.state.z));
  return env * from_physical(pp).length_per_z;
}

}  // namespace mrfm
