// Dimensionless model shared by the quantum and classical solvers: run
// parameters, the rotating-frame effective field, adiabaticity diagnostic,
// and conversion from laboratory (SI) cantilever/spin parameters.

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mrfm/grid.hpp"
#include "mrfm/schedule.hpp"

namespace mrfm {

/// Dimensionless effective magnetic field (epsilon, 0, -dphi/dtau + 2 eta z).
/// The spin Hamiltonian is -B.S; the classical spin obeys dS/dtau = S x B.
struct EffectiveField {
  double bx;
  double by;  // identically zero in this model
  double bz;

  double magnitude() const { return std::hypot(bx, bz); }
  std::array<double, 3> unit() const {
    const double m = magnitude();
    if (m == 0.0) throw std::domain_error("effective field vanishes; no direction");
    return {bx / m, by / m, bz / m};
  }
};

/// Complete dimensionless run configuration. Immutable after construction.
struct SimParams {
  double epsilon_scale;  // rf amplitude reference (epsilon when constant)
  double eta;            // spin-cantilever coupling
  DriveSchedule schedule;
  double t_end;
  GridSpec grid;
  double dt;

  /// z_amplitude_bound: caller's bound on max |<z>| over the run; the grid
  /// must hold that excursion plus five widths of the initial coherent state
  /// (sigma_z = 1/sqrt(2)).
  SimParams(double epsilon_scale_, double eta_, DriveSchedule schedule_, double t_end_,
            GridSpec grid_, double dt_, double z_amplitude_bound)
      : epsilon_scale(epsilon_scale_),
        eta(eta_),
        schedule(std::move(schedule_)),
        t_end(t_end_),
        grid(grid_),
        dt(dt_) {
    if (!(eta >= 0.0)) throw std::invalid_argument("params: eta must be >= 0");
    if (!(epsilon_scale > 0.0)) throw std::invalid_argument("params: epsilon_scale must be > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("params: t_end must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("params: dt must be > 0");
    if (schedule.t_end() < t_end * (1.0 - 1e-12))
      throw std::invalid_argument("params: schedule ends before t_end");
    const double margin = z_amplitude_bound + 5.0 / std::sqrt(2.0);
    if (grid.z_max < margin || grid.z_min > -margin)
      throw std::invalid_argument(
          "params: grid [" + std::to_string(grid.z_min) + ", " + std::to_string(grid.z_max) +
          "] cannot hold amplitude bound " + std::to_string(z_amplitude_bound) +
          " plus 5 coherent-state widths");
  }
};

inline EffectiveField effective_field(const SimParams& p, double tau, double z) {
  const auto s = p.schedule.at(tau);
  return {s.epsilon, 0.0, -s.dphi_dtau + 2.0 * p.eta * z};
}

inline double adiabaticity_margin(const SimParams& p, double tau) {
  return p.schedule.adiabaticity_margin(tau);
}

/// Laboratory-frame cantilever and spin parameters (SI units).
struct PhysicalParams {
  double g_factor;
  double magneton;        // J/T
  double b0;              // T, permanent field
  double b1;              // T, rotating rf field
  double field_gradient;  // T/m, dBz/dZ at the spin
  double effective_mass;  // kg
  double omega_c;         // rad/s
  double quality_factor;

  static constexpr double hbar = 1.054571817e-34;  // J s

  double gamma() const { return g_factor * magneton / hbar; }  // rad/(s T)
  double omega_l() const { return gamma() * b0; }
  double omega_rabi() const { return gamma() * b1; }
};

/// Dimensionless parameters and unit scales derived from PhysicalParams:
/// Z = z * length_per_z, t = tau * time_per_tau.
struct UnitScales {
  double epsilon;
  double eta;
  double length_per_z;  // m
  double time_per_tau;  // s
};

inline UnitScales from_physical(const PhysicalParams& pp) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw std::invalid_argument(std::string("physical params: ") + name + " must be > 0");
  };
  positive(pp.g_factor, "g_factor");
  positive(pp.magneton, "magneton");
  positive(pp.b0, "b0");
  positive(pp.b1, "b1");
  positive(pp.field_gradient, "field_gradient");
  positive(pp.effective_mass, "effective_mass");
  positive(pp.omega_c, "omega_c");
  const double hbar = PhysicalParams::hbar;
  UnitScales s;
  s.epsilon = pp.omega_rabi() / pp.omega_c;
  s.eta = pp.g_factor * pp.magneton * pp.field_gradient /
          (2.0 * std::sqrt(pp.effective_mass * pp.omega_c * pp.omega_c * pp.omega_c * hbar));
  s.length_per_z = std::sqrt(hbar / (pp.effective_mass * pp.omega_c));
  s.time_per_tau = 1.0 / pp.omega_c;
  if (!std::isfinite(s.eta) || !(s.eta > 0.0))
    throw std::invalid_argument("physical params: derived eta is not finite and positive");
  return s;
}

}  // namespace mrfm
