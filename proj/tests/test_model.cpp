#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "mrfm/model.hpp"
#include "mrfm/schedule.hpp"

using namespace mrfm;
using Catch::Approx;

namespace {

SimParams make_params(DriveSchedule sched, double eps_scale, double eta, double t_end,
                      double bound = 30.0) {
  return SimParams(eps_scale, eta, std::move(sched), t_end, GridSpec(-64.0, 64.0, 4096), 1e-4,
                   bound);
}

// Composite-Simpson quadrature of dphi/dtau, the independent oracle for the
// analytic phase antiderivative.
double integrate_phase_rate(const DriveSchedule& s, double tau, int panels_per_unit = 400) {
  double total = 0.0;
  std::vector<double> knots{0.0};
  for (const auto& seg : s.segments())
    if (seg.tau_end < tau) knots.push_back(seg.tau_end);
  knots.push_back(tau);
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    const int n = std::max(4, static_cast<int>((b - a) * panels_per_unit)) * 2;
    const double h = (b - a) / n;
    double acc = s.at(a).dphi_dtau + s.at(b).dphi_dtau;
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * s.at(a + i * h).dphi_dtau;
    total += acc * h / 3.0;
  }
  return total;
}

}  // namespace

TEST_CASE("paper CAI schedule evaluates the published branches", "[model]") {
  const auto s = DriveSchedule::cai_paper(100.0);

  auto p0 = s.at(0.0);
  CHECK(p0.dphi_dtau == Approx(-6000.0));
  CHECK(p0.epsilon == Approx(400.0));
  CHECK(p0.d2phi_dtau2 == Approx(300.0));

  // boundary is right-continuous; both branches give dphi/dtau = 0 there
  auto p20 = s.at(20.0);
  CHECK(p20.dphi_dtau == Approx(0.0).margin(1e-12));
  CHECK(p20.epsilon == Approx(400.0));
  CHECK(p20.d2phi_dtau2 == Approx(1000.0));
  CHECK(s.at(20.0 - 1e-9).d2phi_dtau2 == Approx(300.0));

  auto pq = s.at(20.0 + pi / 2.0);
  CHECK(pq.dphi_dtau == Approx(1000.0));
  CHECK(pq.epsilon == Approx(400.0));
  CHECK(pq.d2phi_dtau2 == Approx(0.0).margin(1e-9));

  CHECK_THROWS_AS(s.at(-1.0), std::out_of_range);
  CHECK_THROWS_AS(s.at(100.5), std::out_of_range);
}

TEST_CASE("ramped CAI schedule ramps the rf amplitude only", "[model]") {
  const auto s = DriveSchedule::cai_ramped(60.0);
  auto p = s.at(10.0);
  CHECK(p.dphi_dtau == Approx(-3000.0));
  CHECK(p.epsilon == Approx(200.0));
  CHECK(p.d2phi_dtau2 == Approx(300.0));
  CHECK(s.at(25.0).epsilon == Approx(400.0));
  CHECK(s.at(20.0).epsilon == Approx(400.0));
}

TEST_CASE("rabi kind forces dphi/dtau = 0 and epsilon = 1", "[model]") {
  const auto s = DriveSchedule::rabi(50.0);
  for (double tau : {0.0, 13.7, 50.0}) {
    auto p = s.at(tau);
    CHECK(p.dphi_dtau == 0.0);
    CHECK(p.epsilon == 1.0);
    CHECK(p.d2phi_dtau2 == 0.0);
  }
}

TEST_CASE("pulse train has default spacing pi and no continuous drive", "[model]") {
  const auto s = DriveSchedule::pi_pulse(10.0);
  REQUIRE(s.pulse_times().size() == 3);
  CHECK(s.pulse_times()[0] == Approx(pi));
  CHECK(s.pulse_times()[2] == Approx(3.0 * pi));
  CHECK(s.at(1.0).epsilon == 0.0);
  CHECK(s.at(1.0).dphi_dtau == 0.0);
}

TEST_CASE("schedule validation rejects gaps, overlaps and bad pulses", "[model]") {
  auto expr = SegmentExpr::constant(1.0);
  CHECK_THROWS_AS(DriveSchedule(ScheduleKind::CustomPiecewise,
                                {{0.0, 1.0, expr, expr}, {1.5, 2.0, expr, expr}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DriveSchedule(ScheduleKind::CustomPiecewise,
                                {{0.0, 1.0, expr, expr}, {0.5, 2.0, expr, expr}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DriveSchedule(ScheduleKind::CustomPiecewise, {{0.5, 1.0, expr, expr}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DriveSchedule::pi_pulse(10.0, std::vector<double>{11.0}),
                  std::invalid_argument);
}

TEST_CASE("phase antiderivative matches quadrature of dphi/dtau", "[model]") {
  const auto paper = DriveSchedule::cai_paper(40.0);
  const auto ramped = DriveSchedule::cai_ramped(40.0);
  const auto rabi = DriveSchedule::rabi(40.0);
  const auto custom = DriveSchedule::custom(
      {{0.0, 5.0, SegmentExpr{1.0, {2.0, -0.5, 0.25}, 3.0, 2.0, 0.7}, SegmentExpr::constant(1.0)},
       {5.0, 12.0, SegmentExpr::sinusoid(5.0, -40.0, 1.5, 0.2), SegmentExpr::constant(2.0)}});
  for (const auto* s : {&paper, &ramped, &rabi, &custom}) {
    for (double tau : {0.7, 7.3, 11.9}) {
      const double analytic = s->phase(tau);
      const double quad = integrate_phase_rate(*s, tau);
      const double scale = std::max(1.0, std::abs(quad));
      CHECK(std::abs(analytic - quad) / scale < 1e-8);
    }
  }
  CHECK(paper.phase(0.0) == 0.0);
}

TEST_CASE("effective field follows (eps, 0, -dphi/dtau + 2 eta z)", "[model]") {
  const auto p = make_params(DriveSchedule::cai_paper(100.0), 400.0, 0.3, 100.0);
  const auto b = effective_field(p, 0.0, -20.0);
  CHECK(b.bx == Approx(400.0));
  CHECK(b.by == 0.0);
  CHECK(b.bz == Approx(5988.0));  // 6000 + 2*0.3*(-20)

  const auto p0 = make_params(DriveSchedule::rabi(100.0), 1.0, 0.0, 100.0);
  const auto b0 = effective_field(p0, 3.0, 17.0);
  CHECK(b0.bx == Approx(1.0));
  CHECK(b0.bz == Approx(0.0).margin(1e-14));

  const auto pr = make_params(DriveSchedule::rabi(100.0), 1.0, 0.25, 100.0);
  const auto br = effective_field(pr, 5.0, -3.0);
  CHECK(br.bx == Approx(1.0));
  CHECK(br.bz == Approx(2.0 * 0.25 * -3.0));
}

TEST_CASE("effective field is linear in z with slope exactly 2 eta", "[model]") {
  const auto p = make_params(DriveSchedule::cai_paper(100.0), 400.0, 0.7, 100.0);
  for (double tau : {0.0, 14.2, 33.3}) {
    const double b0 = effective_field(p, tau, 0.0).bz;
    for (double z : {-25.0, -1.0, 4.5, 18.0}) {
      CHECK(effective_field(p, tau, z).bz == Approx(b0 + 2.0 * 0.7 * z).epsilon(1e-14));
    }
  }
}

TEST_CASE("adiabaticity margin |d2phi/dtau2| / eps^2", "[model]") {
  const auto p = make_params(DriveSchedule::cai_paper(100.0), 400.0, 0.3, 100.0);
  CHECK(adiabaticity_margin(p, 10.0) == Approx(300.0 / (400.0 * 400.0)));
  // on the sinusoidal branch the margin peaks one half-period after tau=20
  CHECK(adiabaticity_margin(p, 20.0 + pi) == Approx(1000.0 / (400.0 * 400.0)));
  CHECK(adiabaticity_margin(p, 20.0 + pi / 2.0) == Approx(0.0).margin(1e-9));

  const auto flat = make_params(
      DriveSchedule::custom({{0.0, 50.0, SegmentExpr::constant(-7.0), SegmentExpr::constant(2.0)}}),
      2.0, 0.0, 50.0);
  CHECK(adiabaticity_margin(flat, 25.0) == 0.0);

  const auto pulses = make_params(DriveSchedule::pi_pulse(50.0), 1.0, 0.3, 50.0);
  CHECK(std::isinf(adiabaticity_margin(pulses, 1.0)));
}

TEST_CASE("schedule evaluation is deterministic and side-effect free", "[model]") {
  const auto s = DriveSchedule::cai_paper(100.0);
  for (double tau : {0.0, 19.999, 20.0, 57.1}) {
    const auto a = s.at(tau);
    const auto b = s.at(tau);
    CHECK(a.dphi_dtau == b.dphi_dtau);
    CHECK(a.epsilon == b.epsilon);
    CHECK(a.d2phi_dtau2 == b.d2phi_dtau2);
  }
}

TEST_CASE("physical parameter conversion", "[model]") {
  PhysicalParams pp;
  pp.g_factor = 2.0;
  pp.magneton = 9.274e-24;
  pp.b0 = 10.0;
  pp.b1 = 0.01;
  pp.effective_mass = 1e-12;
  pp.omega_c = 2.0 * pi * 1e5;
  pp.quality_factor = 1e4;
  const double hbar = PhysicalParams::hbar;

  SECTION("eta inversion: gradient chosen for eta = 0.3") {
    pp.field_gradient = 0.3 * 2.0 *
                        std::sqrt(pp.effective_mass * std::pow(pp.omega_c, 3.0) * hbar) /
                        (pp.g_factor * pp.magneton);
    const auto s = from_physical(pp);
    CHECK(s.eta == Approx(0.3).epsilon(1e-12));
  }
  SECTION("epsilon inversion: gamma B1 = 400 omega_c") {
    pp.field_gradient = 1.0;
    pp.b1 = 400.0 * pp.omega_c / (pp.g_factor * pp.magneton / hbar);
    const auto s = from_physical(pp);
    CHECK(s.epsilon == Approx(400.0).epsilon(1e-12));
  }
  SECTION("round trip to physical quantities is the identity") {
    pp.field_gradient = 2.4e6;
    const auto s = from_physical(pp);
    const double b1_back = s.epsilon * pp.omega_c / pp.gamma();
    const double grad_back = s.eta * 2.0 *
                             std::sqrt(pp.effective_mass * std::pow(pp.omega_c, 3.0) * hbar) /
                             (pp.g_factor * pp.magneton);
    CHECK(b1_back == Approx(pp.b1).epsilon(1e-12));
    CHECK(grad_back == Approx(pp.field_gradient).epsilon(1e-12));
    // Z <-> z and t <-> tau scale factors invert exactly
    CHECK(1.0 / s.length_per_z * s.length_per_z == Approx(1.0).epsilon(1e-15));
    CHECK(s.time_per_tau * pp.omega_c == Approx(1.0).epsilon(1e-12));
  }
  SECTION("non-positive inputs rejected") {
    pp.field_gradient = 1.0;
    pp.effective_mass = -1.0;
    CHECK_THROWS_AS(from_physical(pp), std::invalid_argument);
    pp.effective_mass = 1e-12;
    pp.omega_c = 0.0;
    CHECK_THROWS_AS(from_physical(pp), std::invalid_argument);
  }
}

TEST_CASE("sim params validation", "[model]") {
  CHECK_THROWS_AS(make_params(DriveSchedule::cai_paper(100.0), 400.0, -0.1, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_params(DriveSchedule::cai_paper(100.0), 0.0, 0.3, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_params(DriveSchedule::cai_paper(50.0), 400.0, 0.3, 100.0),
                  std::invalid_argument);  // schedule shorter than the run
  // grid must hold the amplitude bound plus 5 coherent-state widths
  CHECK_THROWS_AS(make_params(DriveSchedule::cai_paper(100.0), 400.0, 0.3, 100.0, 62.0),
                  std::invalid_argument);
  CHECK_NOTHROW(make_params(DriveSchedule::cai_paper(100.0), 400.0, 0.3, 100.0, 60.0));
}

TEST_CASE("grid spec validation and momentum resolution", "[model]") {
  CHECK_THROWS_AS(GridSpec(-8.0, 8.0, 100), std::invalid_argument);  // not a power of two
  CHECK_THROWS_AS(GridSpec(8.0, -8.0, 64), std::invalid_argument);
  const GridSpec g(-8.0, 8.0, 64);
  CHECK(g.dz() == Approx(0.25));
  CHECK(g.max_resolved_momentum() == Approx(pi / 0.25));
  CHECK_NOTHROW(g.require_resolves_momentum(10.0));
  CHECK_THROWS_AS(g.require_resolves_momentum(20.0), std::invalid_argument);
  CHECK(g.momentum(0) == 0.0);
  CHECK(g.momentum(32) == Approx(-pi / 0.25));  // wrap-around ordering
}
