// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: all)

#include "berrylab/adiabatic.hpp"
#include "berrylab/berry.hpp"
#include "berrylab/experiment.hpp"
#include "berrylab/hannay.hpp"
#include "berrylab/magnetic_translation.hpp"
#include "berrylab/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace berrylab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const FluxDensity kFlux{0.05};
const PotentialSpec kWell = GaussianWell{2.0, 0.8};

LoopSpec square(double side, int samples, int repeat = 1) {
  LoopSpec loop;
  loop.shape = RectangleLoop{Vec2(-0.5 * side, -0.5 * side), Vec2(side, side)};
  loop.samples = samples;
  loop.repeat = repeat;
  return loop;
}

EigenPair ground_state(const GridSpec& g, const FluxDensity& f, const PotentialSpec& v,
                       const Offset& a = Offset(), double tol = 1e-10) {
  SolverConfig cfg;
  cfg.k = 2;
  cfg.tol = tol;
  return lowest_eigenpairs(HamiltonianOperator(g, f, v, a), cfg)[0];
}

// 96 x 96 at h = 0.25: h = 0.2 would put the loop corners inside the 6 l_B margin.
Verdict quantization() {
  const GridSpec g{96, 96, 0.25};
  const double target = 0.4 * kPi;
  const PhaseResult tr = berry_phase_translated(ground_state(g, kFlux, kWell), square(2.0, 32), kFlux, kWell);
  ResolvedOptions opt;
  opt.solver.tol = 1e-10;
  opt.workers = resolve_workers(0);
  const PhaseResult rs = berry_phase_resolved(square(2.0, 64), kFlux, g, kWell, opt);
  const double e_t = std::abs(tr.gamma_accumulated - target);
  const double e_r = std::abs(rs.gamma_accumulated - target);
  const double agree = std::abs(tr.gamma_accumulated - rs.gamma_accumulated);
  return {e_t <= 1.3e-2 && e_r <= 1.3e-2 && agree <= 1e-3,
          "translated (M=32) err " + fmt("%.2e", e_t) + ", resolved (M=64) err " + fmt("%.2e", e_r) +
              ", agreement " + fmt("%.2e", agree)};
}

Verdict linearity() {
  const std::vector<double> xis = {0.02, 0.05, 0.10}, sides = {1.0, 2.0, 3.0};
  double sxy = 0.0, sxx = 0.0, worst = 0.0;
  for (double xi : xis) {
    const FluxDensity f{xi};
    // keep every step phase well below the refinement bound
    const double h = xi > 0.06 ? 0.125 : 0.25;
    const LoopSpec biggest = square(3.0, static_cast<int>(std::lround(12.0 / h)));
    const int n = grid_points_for_containment(h, f, kWell, open_points(biggest));
    const EigenPair psi0 = ground_state(GridSpec{n, n, h}, f, kWell);
    for (double s : sides) {
      const LoopSpec loop = square(s, static_cast<int>(std::lround(4.0 * s / h)));
      const double gamma = berry_phase_translated(psi0, loop, f, kWell).gamma_accumulated;
      const double x = xi * s * s;
      sxy += x * gamma;
      sxx += x * x;
      worst = std::max(worst, std::abs(gamma - 2 * kPi * x));
    }
  }
  const double slope_err = std::abs(sxy / sxx / (2 * kPi) - 1.0);
  return {slope_err <= 1e-2, "9 runs, fitted slope / 2pi - 1 = " + fmt("%.2e", slope_err) +
                                 ", worst |gamma - 2 pi xi S| " + fmt("%.2e", worst)};
}

Verdict winding() {
  const LoopSpec loop = square(4.0, 64, 2);
  const double h = 0.25;
  const int n = grid_points_for_containment(h, kFlux, kWell, open_points(loop));
  const PhaseResult r = berry_phase_translated(ground_state(GridSpec{n, n, h}, kFlux, kWell), loop, kFlux, kWell);
  const bool mod_ok = std::abs(r.gamma_mod - wrap_phase(r.gamma_accumulated)) <= 1e-12;
  return {std::abs(r.gamma_accumulated - 10.05) <= 0.1 && mod_ok,
          "gamma_accumulated " + fmt("%.6f", r.gamma_accumulated) + ", gamma_mod " + fmt("%.6f", r.gamma_mod) +
              ", flux quanta " + fmt("%.2f", r.flux_quanta)};
}

double mean_x(const WaveFunction& psi) {
  const GridSpec& g = psi.grid;
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m += g.h * g.h * g.x(i) * std::norm(psi(i, j));
  return m;
}

// Constant part of U against -pi xi (c1, c2), for a centred and a displaced
// well. The second component also compared with pi xi (2<x> - c2).
Verdict connection() {
  const GridSpec g{96, 96, 0.25};
  const double b = kPi * kFlux.xi, delta = 0.25;
  const std::vector<Offset> pts = {Offset(0.0, 0.0), Offset(1.0, 0.0), Offset(0.0, 1.0), Offset(-0.75, 0.5),
                                   Offset(1.25, -1.0)};
  double diff_err = 0.0, const_err = 0.0, alt_err = 0.0;
  std::string detail;
  for (const Vec2& a0 : {Vec2(0.0, 0.0), Vec2(0.75, -0.5)}) {
    const EigenPair psi0 = ground_state(g, kFlux, kWell, Offset(a0));
    std::vector<ConnectionSample> u;
    for (const auto& a : pts) u.push_back(connection_estimate(psi0, a, delta, kFlux));
    for (std::size_t i = 1; i < u.size(); ++i) {
      const Vec2 da = pts[i].a - pts[0].a;
      diff_err = std::max(diff_err, (u[i].U - u[0].U - b * Vec2(-da.y(), da.x())).cwiseAbs().maxCoeff());
    }
    const CConstants c = c_constants(psi0, kFlux);
    const Vec2 expected = -b * Vec2(c.c1, c.c2);
    const Vec2 alt(-b * c.c1, b * (2.0 * mean_x(psi0.state) - c.c2));
    double e = 0.0;
    for (const auto& s : u) {
      e = std::max(e, (s.constant - expected).cwiseAbs().maxCoeff());
      alt_err = std::max(alt_err, (s.constant - alt).cwiseAbs().maxCoeff());
    }
    const_err = std::max(const_err, e);
    detail += "; well at (" + fmt("%.2f", a0.x()) + ", " + fmt("%.2f", a0.y()) + "): constant (" +
              fmt("%.5f", u[0].constant.x()) + ", " + fmt("%.5f", u[0].constant.y()) + ") vs -pi xi c = (" +
              fmt("%.5f", expected.x()) + ", " + fmt("%.5f", expected.y()) + "), err " + fmt("%.2e", e);
  }
  return {diff_err <= 1e-3 && const_err <= 1e-3,
          "difference err " + fmt("%.2e", diff_err) + detail + "; with pi xi (2<x> - c2) as second component, err " +
              fmt("%.2e", alt_err)};
}

Verdict curvature() {
  const GridSpec g{96, 96, 0.25};
  CurvatureRegion region;
  region.corner = Vec2(-1.25, -1.25);
  region.plaquettes_x = region.plaquettes_y = 5;
  region.delta = 0.5;
  const Eigen::MatrixXd F = curvature_map(ground_state(g, kFlux, kWell), region, kFlux);
  const double worst = (F.array() - 2 * kPi * kFlux.xi).abs().maxCoeff();
  return {worst <= 1e-3 && F.size() == 25, "5x5 plaquettes, max |F - 2 pi xi| " + fmt("%.2e", worst)};
}

Verdict identities() {
  ExperimentConfig c;
  c.kind = ExperimentKind::check;
  c.workers = resolve_workers(0);
  const RunRecord r = run(c);
  if (!r.payload.contains("checks")) return {false, r.error};
  bool pass = r.ok();
  std::string detail;
  for (const auto& it : r.payload["checks"]) {
    if (!detail.empty()) detail += ", ";
    detail += it["name"].get<std::string>() + " " + fmt("%.1e", it["value"].get<double>());
    pass = pass && it["pass"].get<bool>();
  }
  return {pass, detail};
}

// Side-2 reference square on a 64 x 64, h = 0.4 box (half width 12.8 covers
// the 6 l_B margin plus the loop).
Verdict adiabatic_limit() {
  const GridSpec g{64, 64, 0.4};
  Schedule s;
  s.loop = square(2.0, 64);
  const std::vector<double> Ts = {50.0, 100.0, 200.0};
  const EigenPair psi0 = ground_state(g, kFlux, kWell, Offset(s.loop.points().front()));
  ResolvedOptions ro;
  ro.solver.tol = 1e-10;
  const double reference = berry_phase_resolved(s.loop, kFlux, g, kWell, ro).gamma_accumulated;
  const int workers = resolve_workers(0);
  const auto rows = convergence_study(g, kFlux, kWell, psi0, s, Ts, reference, {}, workers);

  bool monotone = true;
  double drift = 0.0;
  std::string detail = "errors";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += " " + fmt("%.4f", rows[i].error);
    drift = std::max(drift, rows[i].norm_drift);
    if (i > 0 && rows[i].error > rows[i - 1].error) monotone = false;
  }
  const double last = rows.back().error;

  Schedule rev = s;
  rev.T = Ts.back();
  rev.loop.orientation = -1;
  const PropagationResult back = propagate(g, kFlux, kWell, psi0, rev);
  const double sym = reversal_symmetrized_phase(rows.back().gamma_adiabatic, back.gamma_adiabatic);
  detail += " (limit 5e-2 at T=200), monotone " + std::string(monotone ? "yes" : "no") + ", norm drift " +
            fmt("%.1e", drift) + "; reversal-symmetrized error at T=200 " +
            fmt("%.1e", std::abs(wrap_phase(sym - reference)));
  return {monotone && last <= 5e-2 && drift <= 1e-9, detail};
}

Verdict hannay() {
  const ClassicalSystem sys{kFlux, 1.0, Vec2::Zero()};
  const FlowFrequencies f = flow_frequencies(sys);
  double freq_spread = 0.0;
  for (const Vec2& a : {Vec2(1.0, 0.0), Vec2(-1.0, 1.0), Vec2(3.0, -2.0), Vec2(-10.0, 7.5)}) {
    const FlowFrequencies fa = flow_frequencies(ClassicalSystem{kFlux, 1.0, a});
    freq_spread = std::max({freq_spread, std::abs(fa.plus - f.plus), std::abs(fa.minus - f.minus)});
  }
  const LoopSpec loop = square(2.0, 32);
  ClassicalSystem start = sys;
  start.offset = loop.points().front();
  const Ensemble ens = make_ensemble(start, 0.5, 0.5, 8);
  const HannayResult hr = hannay_angle(sys, loop, 1e4 / f.minus, ens);
  const double dtheta = std::max(std::abs(hr.delta_theta_plus), std::abs(hr.delta_theta_minus));

  // two isolated levels of a deeper well
  const GridSpec g{96, 96, 0.25};
  const PotentialSpec deep = GaussianWell{8.0, 0.8};
  SolverConfig cfg;
  cfg.k = 3;
  cfg.tol = 1e-10;
  const auto pairs = lowest_eigenpairs(HamiltonianOperator(g, kFlux, deep, Offset()), cfg);
  std::vector<double> gammas;
  for (int level : {0, 1}) {
    require_isolated(pairs, level, 1e-6);
    gammas.push_back(berry_phase_translated(pairs[level], square(2.0, 32), kFlux, deep).gamma_accumulated);
  }
  const double spread = correspondence_check(gammas);
  return {dtheta <= 1e-2 && freq_spread <= 1e-10 && spread <= 1e-2 && ens.points.size() == 64,
          "|dtheta| " + fmt("%.1e", dtheta) + " (N=64, T w- = 1e4), frequency spread " + fmt("%.1e", freq_spread) +
              ", level spread " + fmt("%.1e", spread)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria = {
      {1, {"Berry-phase quantization", quantization}},
      {2, {"linearity in flux and area", linearity}},
      {3, {"winding beyond 2 pi", winding}},
      {4, {"Berry connection and constants", connection}},
      {5, {"curvature constancy", curvature}},
      {6, {"structural identities", identities}},
      {7, {"adiabatic limit", adiabatic_limit}},
      {8, {"Hannay angle zero", hannay}},
  };
  std::set<int> chosen;
  for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));
  if (chosen.empty())
    for (const auto& [k, _] : criteria) chosen.insert(k);

  int failed = 0;
  for (int k : chosen) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::printf("FAIL %d unknown criterion\n", k);
      ++failed;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it->second.second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", k, it->second.first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
