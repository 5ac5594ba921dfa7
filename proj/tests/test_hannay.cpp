#include <doctest.h>

#include "berrylab/error.hpp"
#include "berrylab/hannay.hpp"

#include <cmath>
#include <vector>

using namespace berrylab;

namespace {

ClassicalSystem reference_system() { return ClassicalSystem{FluxDensity{0.05}, 1.0, Vec2::Zero()}; }

double closed_plus(double xi, double w0) { return std::hypot(w0, 2 * kPi * xi) + 2 * kPi * std::abs(xi); }
double closed_minus(double xi, double w0) { return std::hypot(w0, 2 * kPi * xi) - 2 * kPi * std::abs(xi); }

LoopSpec side_two_square() {
  LoopSpec loop;
  loop.shape = RectangleLoop{Vec2(-1.0, -1.0), Vec2(2.0, 2.0)};
  loop.samples = 32;
  return loop;
}

}  // namespace

TEST_CASE("normal mode frequencies") {
  const FlowFrequencies f = flow_frequencies(reference_system());
  CHECK(f.plus == doctest::Approx(1.36234629257).epsilon(1e-11));
  CHECK(f.minus == doctest::Approx(0.734027761851).epsilon(1e-11));
  for (double xi : {0.0, 0.02, 0.05, -0.1, 0.3})
    for (double w0 : {0.5, 1.0, 2.0}) {
      const FlowFrequencies g = flow_frequencies(ClassicalSystem{FluxDensity{xi}, w0, Vec2::Zero()});
      CHECK(g.plus == doctest::Approx(closed_plus(xi, w0)).epsilon(1e-10));
      CHECK(g.minus == doctest::Approx(closed_minus(xi, w0)).epsilon(1e-10));
    }
  const FlowFrequencies cyc = flow_frequencies(ClassicalSystem{FluxDensity{0.05}, 0.0, Vec2::Zero()});
  CHECK(cyc.plus == doctest::Approx(4 * kPi * 0.05));
  CHECK(std::abs(cyc.minus) <= 1e-12);
}

TEST_CASE("frequencies do not depend on the well position") {
  const FlowFrequencies f0 = flow_frequencies(reference_system());
  for (const Vec2& a : {Vec2(1.0, 0.0), Vec2(-3.0, 2.5), Vec2(10.0, -7.0)}) {
    const FlowFrequencies f = flow_frequencies(ClassicalSystem{FluxDensity{0.05}, 1.0, a});
    CHECK(f.plus == doctest::Approx(f0.plus).epsilon(1e-13));
    CHECK(f.minus == doctest::Approx(f0.minus).epsilon(1e-13));
  }
}

TEST_CASE("flow matrix is Hamilton's equations of the energy") {
  ClassicalSystem sys = reference_system();
  sys.offset = Vec2(0.7, -0.3);
  const PhasePoint zs = sys.equilibrium(sys.offset);
  Eigen::Matrix4d hess;
  const double eps = 1e-3;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      PhasePoint pp = zs, pm = zs, mp = zs, mm = zs;
      pp[i] += eps, pp[j] += eps;
      pm[i] += eps, pm[j] -= eps;
      mp[i] -= eps, mp[j] += eps;
      mm[i] -= eps, mm[j] -= eps;
      hess(i, j) = (sys.energy(pp) - sys.energy(pm) - sys.energy(mp) + sys.energy(mm)) / (4 * eps * eps);
    }
  Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
  J.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity();
  J.bottomLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  CHECK((sys.flow_matrix() - J * hess).cwiseAbs().maxCoeff() <= 1e-6);

  for (int i = 0; i < 4; ++i) {
    PhasePoint p = zs, m = zs;
    p[i] += eps;
    m[i] -= eps;
    CHECK(std::abs(sys.energy(p) - sys.energy(m)) <= 1e-12);
  }
  const Eigen::Matrix<double, 4, 2> Z = sys.equilibrium_jacobian();
  const PhasePoint shifted = sys.equilibrium(sys.offset + Vec2(0.2, 0.1));
  CHECK((shifted - zs - Z * Vec2(0.2, 0.1)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("the flow is symplectic") {
  for (double t : {0.1, 1.0, 17.3, 400.0}) CHECK(symplectic_defect(flow_map(reference_system(), t)) <= 1e-11);
  CHECK((flow_map(reference_system(), 0.0) - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("static orbits conserve energy and match the closed form at zero field") {
  ClassicalSystem sys = reference_system();
  const PhasePoint start = sys.equilibrium(Vec2::Zero()) + PhasePoint(0.3, -0.2, 0.1, 0.05);
  const double dt = 0.05 / flow_frequencies(sys).plus;
  const Trajectory tr = integrate(sys, start, 200.0, dt);
  double drift = 0.0;
  for (const auto& z : tr.z) drift = std::max(drift, std::abs(sys.energy(z) - sys.energy(start)));
  CHECK(drift <= 1e-10 * sys.energy(start));
  CHECK(tr.t.back() == doctest::Approx(200.0));
  CHECK_THROWS_AS(integrate(sys, start, 10.0, 2 * dt), ValidationError);

  const ClassicalSystem free_osc{FluxDensity{0.0}, 1.0, Vec2::Zero()};
  const PhasePoint s0(1.0, 0.0, 0.0, 0.5);
  const Trajectory period = integrate(free_osc, s0, 2 * kPi, 2 * kPi / 200);
  CHECK((period.z.back() - s0).cwiseAbs().maxCoeff() <= 1e-12);
  // x(t) = cos t for H = p^2 + x^2 / 4
  for (std::size_t k = 0; k < period.t.size(); k += 37)
    CHECK(period.z[k][0] == doctest::Approx(std::cos(period.t[k])).epsilon(1e-12));
}

TEST_CASE("spectral peaks sit at the mode frequencies") {
  const ClassicalSystem sys = reference_system();
  const FlowFrequencies f = flow_frequencies(sys);
  const PhasePoint start = sys.equilibrium(Vec2::Zero()) + PhasePoint(0.4, 0.0, 0.0, 0.3);
  const double dt = 0.05 / f.plus;
  const Trajectory tr = integrate(sys, start, 2000.0, dt);
  const double spacing = tr.t[1] - tr.t[0];
  CHECK(spacing <= dt);
  std::vector<double> x;
  for (const auto& z : tr.z) x.push_back(z[0]);
  const double mid = 0.5 * (f.plus + f.minus);
  CHECK(spectral_peak(x, spacing, mid, 2.0) == doctest::Approx(f.plus).epsilon(1e-6));
  CHECK(spectral_peak(x, spacing, 0.2, mid) == doctest::Approx(f.minus).epsilon(1e-6));
}

TEST_CASE("normal mode coordinates") {
  const ClassicalSystem sys = reference_system();
  const NormalModes modes(sys);
  const PhasePoint d(0.3, -0.1, 0.2, 0.4);
  CHECK((modes.deviation(modes.amplitudes(d)) - d).cwiseAbs().maxCoeff() <= 1e-14);

  const Eigen::Vector2d I0 = modes.actions(d), th0 = modes.angles(d);
  const double t = 3.7;
  const PhasePoint dt = flow_map(sys, t) * d;
  const Eigen::Vector2d I1 = modes.actions(dt), th1 = modes.angles(dt);
  CHECK(I1[0] == doctest::Approx(I0[0]).epsilon(1e-12));
  CHECK(I1[1] == doctest::Approx(I0[1]).epsilon(1e-12));
  CHECK(std::abs(std::remainder(th1[0] - th0[0] - modes.frequencies().plus * t, 2 * kPi)) <= 1e-12);
  CHECK(std::abs(std::remainder(th1[1] - th0[1] - modes.frequencies().minus * t, 2 * kPi)) <= 1e-12);

  // energy is the action-weighted sum of frequencies
  CHECK(sys.energy(sys.equilibrium(Vec2::Zero()) + d) ==
        doctest::Approx(I0[0] * modes.frequencies().plus + I0[1] * modes.frequencies().minus).epsilon(1e-12));
}

TEST_CASE("ensembles share both actions") {
  const ClassicalSystem sys = reference_system();
  const Ensemble e = make_ensemble(sys, 0.5, 0.25);
  CHECK(e.points.size() == 64);
  CHECK_NOTHROW(e.validate(sys));
  const NormalModes modes(sys);
  for (const auto& z : e.points) {
    const Eigen::Vector2d I = modes.actions(z - sys.equilibrium(sys.offset));
    CHECK(I[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(I[1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_ensemble(sys, 0.5, 0.25, 7), ValidationError);
  Ensemble bad = e;
  bad.points[3][0] += 0.1;
  CHECK_THROWS_AS(bad.validate(sys), ValidationError);
}

TEST_CASE("no Hannay angle in a homogeneous field") {
  const ClassicalSystem sys = reference_system();
  const double T = 1e4 / flow_frequencies(sys).minus;
  const LoopSpec loop = side_two_square();
  ClassicalSystem start = sys;
  start.offset = loop.points().front();
  const Ensemble e = make_ensemble(start, 0.5, 0.5);
  const HannayResult r = hannay_angle(sys, loop, T, e);
  CHECK(std::abs(r.delta_theta_plus) <= 1e-6);
  CHECK(std::abs(r.delta_theta_minus) <= 1e-6);
  CHECK(r.action_drift <= 1e-6);
  CHECK(r.steps >= static_cast<int>(T * flow_frequencies(sys).plus / 0.05));

  const HannayResult slow = hannay_angle(sys, loop, 2 * T, e);
  CHECK(std::abs(slow.delta_theta_plus) <= 1e-6);
  CHECK(std::abs(slow.delta_theta_minus) <= 1e-6);

  LoopSpec circle;
  circle.shape = CircleLoop{Vec2(0.5, 0.0), 1.5};
  circle.samples = 64;
  ClassicalSystem cstart = sys;
  cstart.offset = circle.points().front();
  const HannayResult rc = hannay_angle(sys, circle, T, make_ensemble(cstart, 0.3, 0.7));
  CHECK(std::abs(rc.delta_theta_plus) <= 1e-6);
  CHECK(std::abs(rc.delta_theta_minus) <= 1e-6);
}

TEST_CASE("a loop of zero size gives exactly zero") {
  const ClassicalSystem sys = reference_system();
  LoopSpec point;
  point.shape = RectangleLoop{Vec2(0.0, 0.0), Vec2(0.0, 0.0)};
  const double T = 1e4 / flow_frequencies(sys).minus;
  const HannayResult r = hannay_angle(sys, point, T, make_ensemble(sys, 0.5, 0.5));
  CHECK(r.delta_theta_plus == 0.0);
  CHECK(r.delta_theta_minus == 0.0);
}

TEST_CASE("Hannay preconditions") {
  const ClassicalSystem sys = reference_system();
  const Ensemble e = make_ensemble(sys, 0.5, 0.5);
  LoopSpec point;
  point.shape = RectangleLoop{Vec2(0.0, 0.0), Vec2(0.0, 0.0)};
  CHECK_THROWS_AS(hannay_angle(sys, point, 100.0, e), ValidationError);
  const double T = 1e4 / flow_frequencies(sys).minus;
  CHECK_THROWS_AS(hannay_angle(sys, side_two_square(), T, e), ValidationError);
}

TEST_CASE("correspondence of level phases") {
  CHECK(correspondence_check({1.0, 1.0 + 1e-9, 1.0 - 2e-9}) == doctest::Approx(3e-9));
  CHECK(correspondence_check({0.5, 0.5}) == 0.0);
  CHECK_THROWS_AS(correspondence_check({0.5}), ValidationError);
  CHECK_THROWS_AS(correspondence_check({0.5, std::nan("")}), ValidationError);
}
