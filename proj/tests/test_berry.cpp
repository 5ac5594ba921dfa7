#include <doctest.h>

#include "berrylab/berry.hpp"
#include "berrylab/error.hpp"
#include "berrylab/magnetic_translation.hpp"

#include <cmath>
#include <vector>

using namespace berrylab;

namespace {

const FluxDensity kFlux{0.05};
const GridSpec kGrid{96, 96, 0.25};
const PotentialSpec kWell = GaussianWell{2.0, 0.8};

std::vector<EigenPair> low_states(const GridSpec& g, const FluxDensity& f, const PotentialSpec& v, int k) {
  SolverConfig cfg;
  cfg.k = k;
  cfg.tol = 1e-10;
  return lowest_eigenpairs(HamiltonianOperator(g, f, v, Offset()), cfg);
}

const EigenPair& ground() {
  static const EigenPair psi0 = low_states(kGrid, kFlux, kWell, 2)[0];
  return psi0;
}

LoopSpec square(double corner, double side, int samples) {
  LoopSpec loop;
  loop.shape = RectangleLoop{Vec2(corner, corner), Vec2(side, side)};
  loop.samples = samples;
  return loop;
}

}  // namespace

TEST_CASE("phase wrapping") {
  CHECK(wrap_phase(0.0) == 0.0);
  CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - 2 * kPi));
}

TEST_CASE("Wilson loop of explicitly phased states") {
  const GridSpec g{12, 12, 0.5};
  const WaveFunction base = random_state(g, 1);
  std::vector<WaveFunction> states;
  const int n = 40;
  for (int k = 0; k < n; ++k) states.emplace_back(g, base.values * std::polar(1.0, -0.05 * k));
  const PhaseResult open = wilson_loop_phase(states, false);
  CHECK(open.gamma_accumulated == doctest::Approx(0.05 * (n - 1)));
  CHECK(open.per_step_phases.size() == n - 1);

  std::vector<WaveFunction> same(5, base);
  CHECK(wilson_loop_phase(same, true).gamma_accumulated == doctest::Approx(0.0));

  std::vector<WaveFunction> jumpy = {base, WaveFunction(g, base.values * std::polar(1.0, 0.3))};
  CHECK_THROWS_AS(wilson_loop_phase(jumpy, false), RefinementRequired);
  try {
    wilson_loop_phase(jumpy, false);
  } catch (const RefinementRequired& e) {
    CHECK(e.step() == 0);
    CHECK(std::abs(e.phase()) == doctest::Approx(0.3));
  }

  WaveFunction other(g);
  other(0, 0) = 1.0;
  WaveFunction far(g);
  far(11, 11) = 1.0;
  CHECK_THROWS_AS(wilson_loop_phase({other, far}, false), NumericalError);
}

TEST_CASE("closed product phase ignores rephasing") {
  const GridSpec g{12, 12, 0.5};
  std::vector<WaveFunction> states;
  for (int k = 0; k < 6; ++k) {
    WaveFunction w = random_state(g, 3);
    w.values += 0.2 * random_state(g, 10 + k).values;
    normalize(w);
    states.push_back(w);
  }
  const double before = wilson_product_phase(states);
  for (int k = 0; k < 6; ++k) states[k].values *= std::polar(1.0, 1.7 * k + 0.4);
  CHECK(wilson_product_phase(states) == doctest::Approx(before).epsilon(1e-12));
  CHECK_THROWS_AS(wilson_product_phase({states[0]}), ValidationError);
}

TEST_CASE("square loop carries 2 pi xi S") {
  const LoopSpec loop = square(-1.0, 2.0, 32);
  const PhaseResult r = berry_phase_translated(ground(), loop, kFlux, kWell);
  CHECK(r.area == doctest::Approx(4.0));
  CHECK(r.flux_quanta == doctest::Approx(0.2));
  CHECK(std::abs(r.gamma_accumulated - 0.4 * kPi) <= 1e-10);
  CHECK(analytic_phase(kFlux, loop) == doctest::Approx(0.4 * kPi));
  CHECK(r.method == "translated");
  CHECK(r.per_step_phases.size() == 32);
  for (double s : r.per_step_phases) CHECK(std::abs(s) <= kMaxStepPhase);
}

TEST_CASE("orientation and repetition") {
  LoopSpec loop = square(-1.0, 2.0, 32);
  loop.orientation = -1;
  CHECK(std::abs(berry_phase_translated(ground(), loop, kFlux, kWell).gamma_accumulated + 0.4 * kPi) <= 1e-10);
  loop.orientation = 1;
  loop.repeat = 2;
  const PhaseResult twice = berry_phase_translated(ground(), loop, kFlux, kWell);
  CHECK(std::abs(twice.gamma_accumulated - 0.8 * kPi) <= 1e-10);
  CHECK(twice.gamma_mod == doctest::Approx(wrap_phase(0.8 * kPi)));
}

TEST_CASE("phases add over adjacent loops") {
  const PhaseResult left = berry_phase_translated(ground(), [] {
    LoopSpec l;
    l.shape = RectangleLoop{Vec2(-1.25, -1.0), Vec2(1.25, 2.0)};
    l.samples = 26;
    return l;
  }(), kFlux, kWell);
  const PhaseResult right = berry_phase_translated(ground(), [] {
    LoopSpec l;
    l.shape = RectangleLoop{Vec2(0.0, -1.0), Vec2(1.0, 2.0)};
    l.samples = 24;
    return l;
  }(), kFlux, kWell);
  LoopSpec whole;
  whole.shape = RectangleLoop{Vec2(-1.25, -1.0), Vec2(2.25, 2.0)};
  whole.samples = 34;
  const PhaseResult both = berry_phase_translated(ground(), whole, kFlux, kWell);
  CHECK(std::abs(left.gamma_accumulated + right.gamma_accumulated - both.gamma_accumulated) <= 1e-10);
}

TEST_CASE("coarse loops ask for refinement") {
  CHECK_THROWS_AS(berry_phase_translated(ground(), square(-1.0, 2.0, 4), kFlux, kWell), RefinementRequired);
}

TEST_CASE("translated transport rejects incommensurate and uncontained loops") {
  CHECK_THROWS_AS(berry_phase_translated(ground(), square(-1.1, 2.0, 32), kFlux, kWell), ValidationError);
  CHECK_THROWS_AS(berry_phase_translated(ground(), square(-2.0, 4.0, 64), kFlux, kWell), ValidationError);
}

TEST_CASE("no field, no phase") {
  const GridSpec g{64, 64, 0.25};
  const FluxDensity zero{0.0};
  const PotentialSpec deep = GaussianWell{8.0, 0.8};
  const EigenPair psi0 = low_states(g, zero, deep, 2)[0];
  const PhaseResult r = berry_phase_translated(psi0, square(-1.0, 2.0, 32), zero, deep);
  CHECK(std::abs(r.gamma_accumulated) <= 1e-12);
}

TEST_CASE("phase is the same for excited levels") {
  const GridSpec g{96, 96, 0.25};
  const PotentialSpec deep = GaussianWell{8.0, 0.8};
  const auto pairs = low_states(g, kFlux, deep, 4);
  const LoopSpec loop = square(-1.0, 2.0, 32);
  double first = 0.0;
  for (int level = 0; level < 3; ++level) {
    require_isolated(pairs, level, 1e-6);
    const double g_level = berry_phase_translated(pairs[level], loop, kFlux, deep).gamma_accumulated;
    CHECK(std::abs(g_level - 0.4 * kPi) <= 1e-9);
    if (level == 0) first = g_level;
    CHECK(std::abs(g_level - first) <= 1e-9);
  }
}

TEST_CASE("resolved eigensolves agree with translated transport") {
  const GridSpec g{64, 64, 0.4};
  LoopSpec loop = square(-1.2, 2.4, 24);
  ResolvedOptions opt;
  opt.solver.tol = 1e-10;
  const PhaseResult res = berry_phase_resolved(loop, kFlux, g, kWell, opt);
  const EigenPair psi0 = low_states(g, kFlux, kWell, 2)[0];
  const PhaseResult tr = berry_phase_translated(psi0, loop, kFlux, kWell);
  CHECK(res.method == "resolved");
  CHECK(std::abs(res.gamma_accumulated - tr.gamma_accumulated) <= 1e-7);
  CHECK(std::abs(res.gamma_accumulated - 2 * kPi * 0.05 * 5.76) <= 1e-7);
}

TEST_CASE("resolved circle") {
  const GridSpec g{64, 64, 0.4};
  LoopSpec loop;
  loop.shape = CircleLoop{Vec2::Zero(), 1.5};
  loop.samples = 96;
  ResolvedOptions opt;
  opt.solver.tol = 1e-10;
  const PhaseResult r = berry_phase_resolved(loop, kFlux, g, kWell, opt);
  CHECK(std::abs(r.gamma_accumulated - analytic_phase(kFlux, loop)) <= 1e-6);
}

TEST_CASE("resolved loops reject a negative level") {
  ResolvedOptions opt;
  opt.level = -1;
  CHECK_THROWS_AS(berry_phase_resolved(square(-1.0, 2.0, 32), kFlux, kGrid, kWell, opt), ValidationError);
}

TEST_CASE("connection is the symmetric gauge plus a constant") {
  const EigenPair& psi0 = ground();
  const ConnectionSample c0 = connection_estimate(psi0, Offset(), 0.25, kFlux);
  for (const Offset& a : {Offset(1.0, 0.0), Offset(-0.5, 1.25), Offset(0.75, -1.0)}) {
    const ConnectionSample c = connection_estimate(psi0, a, 0.25, kFlux);
    CHECK(c.U.x() == doctest::Approx(-kPi * kFlux.xi * a.a.y() + c0.U.x()).epsilon(1e-9));
    CHECK(c.U.y() == doctest::Approx(kPi * kFlux.xi * a.a.x() + c0.U.y()).epsilon(1e-9));
    CHECK((c.constant - c0.constant).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(connection_estimate(psi0, Offset(), 0.1, kFlux), ValidationError);
}

TEST_CASE("c constants are real") {
  const CConstants c = c_constants(ground(), kFlux);
  CHECK(std::isfinite(c.c1));
  CHECK(std::isfinite(c.c2));
  CHECK(c.imag_residue <= 1e-8);
  const EigenPair psi_free = low_states(GridSpec{48, 48, 0.25}, FluxDensity{0.0}, kWell, 2)[0];
  CHECK_THROWS_AS(c_constants(psi_free, FluxDensity{0.0}), ValidationError);
}

TEST_CASE("curvature is uniform") {
  CurvatureRegion region;
  region.corner = Vec2(-1.25, -1.25);
  region.plaquettes_x = 5;
  region.plaquettes_y = 4;
  region.delta = 0.5;
  const Eigen::MatrixXd F = curvature_map(ground(), region, kFlux);
  CHECK(F.rows() == 4);
  CHECK(F.cols() == 5);
  CHECK((F.array() - 2 * kPi * kFlux.xi).abs().maxCoeff() <= 1e-9);

  region.plaquettes_x = 0;
  CHECK_THROWS_AS(curvature_map(ground(), region, kFlux), ValidationError);
}

TEST_CASE("resolved curvature matches translated curvature") {
  const GridSpec g{64, 64, 0.4};
  CurvatureRegion region;
  region.corner = Vec2(-0.8, -0.8);
  region.plaquettes_x = 2;
  region.plaquettes_y = 2;
  region.delta = 0.4;
  ResolvedOptions opt;
  opt.solver.tol = 1e-10;
  const Eigen::MatrixXd F = curvature_map_resolved(region, kFlux, g, kWell, opt);
  CHECK((F.array() - 2 * kPi * kFlux.xi).abs().maxCoeff() <= 1e-7);
}

TEST_CASE("only the projection of a 3D loop counts") {
  std::vector<Eigen::Vector3d> loop = {{-1, -1, 0}, {1, -1, 2}, {1, 1, 3}, {-1, 1, -1}, {-1, -1, 0}};
  CHECK(projected_phase_3d(loop, kFlux) == doctest::Approx(0.4 * kPi));
  for (auto& p : loop) p.z() = 0.0;
  CHECK(projected_phase_3d(loop, kFlux) == doctest::Approx(0.4 * kPi));
  loop.pop_back();
  CHECK_THROWS_AS(projected_phase_3d(loop, kFlux), ValidationError);
}
