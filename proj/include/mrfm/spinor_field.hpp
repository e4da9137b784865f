// Two-component wavefunction on the z grid and its initial conditions:
// coherent-state oscillator part, spin part on the Bloch sphere (including
// the eigenstates of the initial effective field).

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mrfm/grid.hpp"
#include "mrfm/model.hpp"

namespace mrfm {

using Complex = std::complex<double>;

struct SpinorField {
  GridSpec grid;
  std::vector<Complex> psi1;  // s_z = +1/2 amplitude
  std::vector<Complex> psi2;  // s_z = -1/2 amplitude
  double tau = 0.0;

  explicit SpinorField(const GridSpec& g)
      : grid(g), psi1(g.n_points, Complex{}), psi2(g.n_points, Complex{}) {}

  double total_norm() const {
    double s = 0.0;
    for (std::size_t j = 0; j < psi1.size(); ++j) s += std::norm(psi1[j]) + std::norm(psi2[j]);
    return s * grid.dz();
  }
};

struct Leakage {
  double norm_defect;  // |1 - total norm|
  double edge_mass;    // density integrated over the outermost 5% of points
};

/// Confinement/unitarity diagnostic. The edge region is the outermost 5% of
/// grid points, split evenly between the two ends.
inline Leakage leakage(const SpinorField& s) {
  const std::size_t n = s.grid.n_points;
  const std::size_t per_side = std::max<std::size_t>(1, n / 40);
  double edge = 0.0;
  for (std::size_t j = 0; j < per_side; ++j)
    edge += std::norm(s.psi1[j]) + std::norm(s.psi2[j]) + std::norm(s.psi1[n - 1 - j]) +
            std::norm(s.psi2[n - 1 - j]);
  return {std::abs(1.0 - s.total_norm()), edge * s.grid.dz()};
}

/// Coherent state |alpha>: <z> = sqrt(2) Re alpha, <p> = sqrt(2) Im alpha.
struct CoherentInit {
  Complex alpha;

  double mean_z() const { return std::sqrt(2.0) * alpha.real(); }
  double mean_p() const { return std::sqrt(2.0) * alpha.imag(); }
  /// |alpha|^2 >> 1 is the quasiclassical regime; below 10 callers should warn.
  bool quasiclassical() const { return std::norm(alpha) >= 10.0; }
};

enum class SpinKind { Up, Down, PlusX, AlongEff, OppositeEff, Custom };

inline const char* to_string(SpinKind k) {
  switch (k) {
    case SpinKind::Up: return "up";
    case SpinKind::Down: return "down";
    case SpinKind::PlusX: return "plus_x";
    case SpinKind::AlongEff: return "along_eff";
    case SpinKind::OppositeEff: return "opposite_eff";
    case SpinKind::Custom: return "custom";
  }
  return "?";
}

/// Unit spinor (cos(theta/2), sin(theta/2) e^{i phi}) for Bloch angles;
/// theta measured from +z.
inline std::array<Complex, 2> bloch_spinor(double theta, double phi) {
  return {Complex{std::cos(theta / 2.0), 0.0},
          std::polar(std::sin(theta / 2.0), phi)};
}

/// Eigenvectors of b.S for a field in the x-z plane (by = 0 throughout this
/// model). "along" has eigenvalue +|b|/2, i.e. spin expectation parallel to b.
inline std::array<Complex, 2> field_eigenspinor(const EffectiveField& b, bool along) {
  if (b.magnitude() == 0.0)
    throw std::invalid_argument("spin init: effective field vanishes, along/opposite undefined");
  const double theta = std::atan2(b.bx, b.bz);
  if (along) return bloch_spinor(theta, 0.0);
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  return {Complex{-s, 0.0}, Complex{c, 0.0}};
}

struct SpinInit {
  SpinKind kind = SpinKind::Up;
  double theta = 0.0;  // Custom only
  double phi = 0.0;    // Custom only

  static SpinInit up() { return {SpinKind::Up}; }
  static SpinInit down() { return {SpinKind::Down}; }
  static SpinInit plus_x() { return {SpinKind::PlusX}; }
  static SpinInit along_eff() { return {SpinKind::AlongEff}; }
  static SpinInit opposite_eff() { return {SpinKind::OppositeEff}; }
  static SpinInit custom(double theta, double phi) {
    return {SpinKind::Custom, theta, phi};
  }

  std::array<Complex, 2> amplitudes(const SimParams& p) const {
    switch (kind) {
      case SpinKind::Up: return {Complex{1.0, 0.0}, Complex{0.0, 0.0}};
      case SpinKind::Down: return {Complex{0.0, 0.0}, Complex{1.0, 0.0}};
      case SpinKind::PlusX: {
        const double r = 1.0 / std::sqrt(2.0);
        return {Complex{r, 0.0}, Complex{r, 0.0}};
      }
      case SpinKind::AlongEff: return field_eigenspinor(effective_field(p, 0.0, 0.0), true);
      case SpinKind::OppositeEff: return field_eigenspinor(effective_field(p, 0.0, 0.0), false);
      case SpinKind::Custom: return bloch_spinor(theta, phi);
    }
    throw std::logic_error("unreachable");
  }

  /// Spin expectation vector of the initial spinor (used by the classical
  /// solver to match initial conditions).
  std::array<double, 3> expectation(const SimParams& p) const {
    const auto a = amplitudes(p);
    const Complex w = std::conj(a[0]) * a[1];
    return {w.real(), w.imag(), 0.5 * (std::norm(a[0]) - std::norm(a[1]))};
  }
};

/// Normalized product state: Gaussian coherent packet times the spin spinor.
/// The grid must resolve the packet (dz < 1/4 of the ground-state width).
inline SpinorField init_state(const GridSpec& g, const CoherentInit& c, const SpinInit& s,
                              const SimParams& p) {
  const double sigma = 1.0 / std::sqrt(2.0);  // ground-state width
  if (!(g.dz() < sigma / 4.0))
    throw std::invalid_argument("init_state: grid too coarse for the coherent packet (dz=" +
                                std::to_string(g.dz()) + ", need < " +
                                std::to_string(sigma / 4.0) + ")");
  const double zbar = c.mean_z();
  const double pbar = c.mean_p();
  SpinorField f(g);
  const auto a = s.amplitudes(p);
  double nrm = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double z = g.z(j);
    const double u = z - zbar;
    const Complex psi = std::exp(Complex{-0.5 * u * u, pbar * z});
    f.psi1[j] = a[0] * psi;
    f.psi2[j] = a[1] * psi;
    nrm += std::norm(f.psi1[j]) + std::norm(f.psi2[j]);
  }
  nrm = std::sqrt(nrm * g.dz());
  for (std::size_t j = 0; j < g.n_points; ++j) {
    f.psi1[j] /= nrm;
    f.psi2[j] /= nrm;
  }
  return f;
}

}  // namespace mrfm
