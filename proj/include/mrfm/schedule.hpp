// Drive schedules: piecewise-analytic dphi/dtau and epsilon(tau) with exact
// derivatives and antiderivatives. Covers the cyclic-adiabatic-inversion
// schedules, the Rabi drive, pi-pulse trains, and user pieces built from
// polynomial + sinusoid segments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mrfm {

inline constexpr double pi = std::numbers::pi;

enum class ScheduleKind { CaiPaper, CaiRamped, Rabi, PiPulse, CustomPiecewise };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::CaiPaper: return "cai_paper";
    case ScheduleKind::CaiRamped: return "cai_ramped";
    case ScheduleKind::Rabi: return "rabi";
    case ScheduleKind::PiPulse: return "pi_pulse";
    case ScheduleKind::CustomPiecewise: return "custom";
  }
  return "?";
}

/// One analytic piece, evaluated in the local variable u = tau - ref:
///   f(u) = sum_k poly[k] u^k + amp * sin(freq*u + phase)
struct SegmentExpr {
  double ref = 0.0;
  std::vector<double> poly;
  double amp = 0.0;
  double freq = 0.0;
  double phase = 0.0;

  static SegmentExpr constant(double c) { return {0.0, {c}, 0.0, 0.0, 0.0}; }
  static SegmentExpr linear(double ref, double c0, double c1) {
    return {ref, {c0, c1}, 0.0, 0.0, 0.0};
  }
  static SegmentExpr sinusoid(double ref, double amp, double freq, double phase = 0.0) {
    return {ref, {}, amp, freq, phase};
  }

  double value(double tau) const {
    const double u = tau - ref;
    double v = 0.0;
    for (std::size_t k = poly.size(); k-- > 0;) v = v * u + poly[k];
    if (amp != 0.0) v += amp * std::sin(freq * u + phase);
    return v;
  }

  double derivative(double tau) const {
    const double u = tau - ref;
    double v = 0.0;
    for (std::size_t k = poly.size(); k-- > 1;)
      v = v * u + static_cast<double>(k) * poly[k];
    if (amp != 0.0) v += amp * freq * std::cos(freq * u + phase);
    return v;
  }

  /// Antiderivative F with F(ref) = 0.
  double antiderivative(double tau) const {
    const double u = tau - ref;
    double v = 0.0;
    for (std::size_t k = poly.size(); k-- > 0;)
      v = v * u + poly[k] / static_cast<double>(k + 1);
    v *= u;
    if (amp != 0.0) {
      if (freq != 0.0)
        v += (amp / freq) * (std::cos(phase) - std::cos(freq * u + phase));
      else
        v += amp * std::sin(phase) * u;
    }
    return v;
  }
};

struct ScheduleSegment {
  double tau_begin = 0.0;
  double tau_end = 0.0;
  SegmentExpr phase_rate;  // dphi/dtau
  SegmentExpr rf_amp;      // epsilon(tau)
};

struct SchedulePoint {
  double dphi_dtau;
  double epsilon;
  double d2phi_dtau2;
};

/// Piecewise drive over [0, t_end]. Segment boundaries are right-continuous:
/// tau exactly at a boundary evaluates the later segment.
class DriveSchedule {
 public:
  DriveSchedule(ScheduleKind kind, std::vector<ScheduleSegment> segments,
                std::vector<double> pulse_times = {})
      : kind_(kind), segments_(std::move(segments)), pulse_times_(std::move(pulse_times)) {
    if (segments_.empty()) throw std::invalid_argument("schedule: no segments");
    const double t_end = segments_.back().tau_end;
    const double tol = 1e-9 * std::max(1.0, std::abs(t_end));
    if (std::abs(segments_.front().tau_begin) > tol)
      throw std::invalid_argument("schedule: first segment must begin at tau=0");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (!(segments_[i].tau_end > segments_[i].tau_begin))
        throw std::invalid_argument("schedule: segment " + std::to_string(i) +
                                    " has non-positive length");
      if (i + 1 < segments_.size() &&
          std::abs(segments_[i + 1].tau_begin - segments_[i].tau_end) > tol)
        throw std::invalid_argument("schedule: gap/overlap after segment " + std::to_string(i));
    }
    for (double t : pulse_times_)
      if (!(t > 0.0) || t > t_end + tol)
        throw std::invalid_argument("schedule: pulse time out of (0, t_end]");
    if (!std::is_sorted(pulse_times_.begin(), pulse_times_.end()))
      throw std::invalid_argument("schedule: pulse times must be sorted");
    phi_at_begin_.resize(segments_.size());
    double phi = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      phi_at_begin_[i] = phi;
      const auto& s = segments_[i];
      phi += s.phase_rate.antiderivative(s.tau_end) - s.phase_rate.antiderivative(s.tau_begin);
    }
  }

  /// Paper CAI drive: dphi/dtau = rate_scale*(-6000 + 300 tau) for tau <= 20,
  /// then rate_scale*1000*sin(tau-20); epsilon constant.
  static DriveSchedule cai_paper(double t_end, double epsilon = 400.0,
                                 double rate_scale = 1.0) {
    auto eps = SegmentExpr::constant(epsilon);
    std::vector<ScheduleSegment> segs;
    const double t1 = std::min(t_end, 20.0);
    segs.push_back({0.0, t1,
                    SegmentExpr::linear(0.0, -6000.0 * rate_scale, 300.0 * rate_scale), eps});
    if (t_end > 20.0)
      segs.push_back({20.0, t_end,
                      SegmentExpr::sinusoid(20.0, 1000.0 * rate_scale, 1.0), eps});
    return DriveSchedule(ScheduleKind::CaiPaper, std::move(segs));
  }

  /// Same phase modulation, rf amplitude ramped: epsilon = (epsilon/20) tau
  /// for tau <= 20, then constant.
  static DriveSchedule cai_ramped(double t_end, double epsilon = 400.0,
                                  double rate_scale = 1.0) {
    std::vector<ScheduleSegment> segs;
    const double t1 = std::min(t_end, 20.0);
    segs.push_back({0.0, t1,
                    SegmentExpr::linear(0.0, -6000.0 * rate_scale, 300.0 * rate_scale),
                    SegmentExpr::linear(0.0, 0.0, epsilon / 20.0)});
    if (t_end > 20.0)
      segs.push_back({20.0, t_end,
                      SegmentExpr::sinusoid(20.0, 1000.0 * rate_scale, 1.0),
                      SegmentExpr::constant(epsilon)});
    return DriveSchedule(ScheduleKind::CaiRamped, std::move(segs));
  }

  /// Rabi drive: dphi/dtau = 0 and epsilon = 1 by definition of the kind.
  static DriveSchedule rabi(double t_end) {
    return DriveSchedule(ScheduleKind::Rabi,
                         {{0.0, t_end, SegmentExpr::constant(0.0), SegmentExpr::constant(1.0)}});
  }

  /// Pulse train: no continuous drive; instantaneous spin flips at the pulse
  /// times (default spacing pi, half the cantilever period).
  static DriveSchedule pi_pulse(double t_end, double spacing = pi) {
    if (!(spacing > 0.0)) throw std::invalid_argument("pi_pulse: spacing must be > 0");
    std::vector<double> times;
    for (double t = spacing; t <= t_end * (1.0 + 1e-12); t += spacing) times.push_back(t);
    return pi_pulse(t_end, std::move(times));
  }
  static DriveSchedule pi_pulse(double t_end, std::vector<double> times) {
    return DriveSchedule(ScheduleKind::PiPulse,
                         {{0.0, t_end, SegmentExpr::constant(0.0), SegmentExpr::constant(0.0)}},
                         std::move(times));
  }

  static DriveSchedule custom(std::vector<ScheduleSegment> segments) {
    return DriveSchedule(ScheduleKind::CustomPiecewise, std::move(segments));
  }

  ScheduleKind kind() const { return kind_; }
  double t_end() const { return segments_.back().tau_end; }
  const std::vector<ScheduleSegment>& segments() const { return segments_; }
  const std::vector<double>& pulse_times() const { return pulse_times_; }

  SchedulePoint at(double tau) const {
    const auto& s = segment_at(tau);
    return {s.phase_rate.value(tau), s.rf_amp.value(tau), s.phase_rate.derivative(tau)};
  }

  /// phi(tau) with phi(0) = 0 (only dphi/dtau is observable).
  double phase(double tau) const {
    const std::size_t i = segment_index(tau);
    const auto& s = segments_[i];
    return phi_at_begin_[i] + s.phase_rate.antiderivative(tau) -
           s.phase_rate.antiderivative(s.tau_begin);
  }

  /// |d2phi/dtau2| / epsilon^2; +inf when epsilon(tau) = 0 (non-adiabatic by
  /// construction, e.g. pulse trains).
  double adiabaticity_margin(double tau) const {
    const auto p = at(tau);
    if (p.epsilon == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(p.d2phi_dtau2) / (p.epsilon * p.epsilon);
  }

 private:
  std::size_t segment_index(double tau) const {
    const double t_end = segments_.back().tau_end;
    const double tol = 1e-9 * std::max(1.0, std::abs(t_end));
    if (tau < -tol || tau > t_end + tol)
      throw std::out_of_range("schedule: tau out of [0, t_end]");
    // right-continuous: the last segment whose begin is <= tau
    std::size_t i = segments_.size() - 1;
    while (i > 0 && segments_[i].tau_begin > tau) --i;
    return i;
  }
  const ScheduleSegment& segment_at(double tau) const { return segments_[segment_index(tau)]; }

  ScheduleKind kind_;
  std::vector<ScheduleSegment> segments_;
  std::vector<double> pulse_times_;
  std::vector<double> phi_at_begin_;
};

}  // namespace mrfm
