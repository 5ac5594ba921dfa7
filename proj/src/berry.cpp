#include "berrylab/berry.hpp"

#include "berrylab/error.hpp"
#include "berrylab/magnetic_translation.hpp"
#include "berrylab/parallel.hpp"

#include <cmath>
#include <sstream>

namespace berrylab {

double wrap_phase(double phi) {
  double r = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double analytic_phase(const FluxDensity& flux, const LoopSpec& loop) {
  return 2.0 * kPi * flux.xi * oriented_area(loop);
}

PhaseResult wilson_loop_phase(const std::vector<WaveFunction>& states, bool closed) {
  PhaseResult out;
  out.method = "states";
  const std::size_t n = states.size();
  const std::size_t steps = closed ? n : (n > 0 ? n - 1 : 0);
  double acc = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const Complex ov = inner(states[k], states[(k + 1) % n]);
    if (std::abs(ov) < kMinOverlap) {
      std::ostringstream os;
      os << "discretization too coarse: overlap " << std::abs(ov) << " at step " << k;
      throw NumericalError(os.str());
    }
    const double step = -std::arg(ov);
    if (std::abs(step) > kMaxStepPhase) {
      std::ostringstream os;
      os << "step phase " << step << " at step " << k << " exceeds " << kMaxStepPhase
         << " rad; refine the loop sampling";
      throw RefinementRequired(os.str(), static_cast<int>(k), step);
    }
    out.per_step_phases.push_back(step);
    acc += step;
  }
  out.gamma_accumulated = acc;
  out.gamma_mod = wrap_phase(acc);
  return out;
}

double wilson_product_phase(const std::vector<WaveFunction>& states) {
  if (states.size() < 2) throw ValidationError("a closed loop needs at least 2 states");
  Complex prod = 1.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Complex ov = inner(states[k], states[(k + 1) % states.size()]);
    prod *= ov / std::abs(ov);
  }
  return wrap_phase(-std::arg(prod));
}

namespace {

void fill_geometry(PhaseResult& r, const LoopSpec& loop, const FluxDensity& flux) {
  r.samples = open_points(loop);
  r.area = oriented_area(loop);
  r.flux_quanta = flux.xi * r.area;
}

}  // namespace

PhaseResult berry_phase_translated(const EigenPair& psi0, const LoopSpec& loop,
                                   const FluxDensity& flux, const PotentialSpec& potential) {
  const GridSpec& grid = psi0.state.grid;
  const auto pts = open_points(loop);
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (!Offset(pts[k]).commensurate(grid.h)) {
      std::ostringstream os;
      os << "loop sample #" << k << " (" << pts[k].x() << ", " << pts[k].y()
         << ") is not a multiple of h = " << grid.h
         << "; translated transport needs a commensurate loop";
      throw ValidationError(os.str());
    }
  check_containment(grid, flux, potential, pts);

  std::vector<WaveFunction> states;
  states.reserve(pts.size());
  for (const auto& p : pts) states.push_back(translate(psi0.state, Offset(p), flux));
  PhaseResult r = wilson_loop_phase(states, true);
  fill_geometry(r, loop, flux);
  r.method = "translated";
  return r;
}

PhaseResult berry_phase_resolved(const LoopSpec& loop, const FluxDensity& flux,
                                 const GridSpec& grid, const PotentialSpec& potential,
                                 const ResolvedOptions& options) {
  if (options.level < 0) throw ValidationError("level must be >= 0");
  const auto pts = open_points(loop);
  check_containment(grid, flux, potential, pts);

  // Repeated traversals revisit the same offsets: solve each distinct sample once.
  const std::size_t per_loop = pts.size() / static_cast<std::size_t>(loop.repeat);
  SolverConfig cfg = options.solver;
  cfg.k = std::max(cfg.k, options.level + 2);
  auto solved = parallel_map(per_loop, options.workers, [&](std::size_t k) {
    const HamiltonianOperator H(grid, flux, potential, Offset(pts[k]));
    auto pairs = lowest_eigenpairs(H, cfg);
    try {
      require_isolated(pairs, options.level, isolation_threshold(H, cfg));
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "loop sample #" << k << " (" << pts[k].x() << ", " << pts[k].y() << "): " << e.what();
      throw NumericalError(os.str());
    }
    return std::move(pairs[static_cast<std::size_t>(options.level)].state);
  });

  std::vector<WaveFunction> states;
  states.reserve(pts.size());
  for (int r = 0; r < loop.repeat; ++r) states.insert(states.end(), solved.begin(), solved.end());
  PhaseResult r = wilson_loop_phase(states, true);
  fill_geometry(r, loop, flux);
  r.method = "resolved";
  return r;
}

ConnectionSample connection_estimate(const EigenPair& psi0, const Offset& a, double delta,
                                     const FluxDensity& flux) {
  const GridSpec& g = psi0.state.grid;
  if (!(delta > 0.0)) throw ValidationError("connection step delta must be positive");
  if (!Offset(delta, 0.0).commensurate(g.h))
    throw ValidationError("connection step delta must be a multiple of h");
  const WaveFunction centre = translate(psi0.state, a, flux);
  ConnectionSample s;
  s.a = a;
  for (int axis = 0; axis < 2; ++axis) {
    Vec2 d = Vec2::Zero();
    d[axis] = delta;
    const WaveFunction fwd = translate(psi0.state, Offset(a.a + d), flux);
    const WaveFunction bwd = translate(psi0.state, Offset(a.a - d), flux);
    const double phi_f = std::arg(inner(centre, fwd));
    const double phi_b = std::arg(inner(centre, bwd));
    s.U[axis] = (-phi_f + phi_b) / (2.0 * delta);
  }
  const double b = kPi * flux.xi;
  s.constant = s.U - b * Vec2(-a.a.y(), a.a.x());
  return s;
}

CConstants c_constants(const EigenPair& psi0, const FluxDensity& flux) {
  if (flux.is_zero()) throw ValidationError("c constants divide by xi; xi = 0 is not allowed");
  const WaveFunction& psi = psi0.state;
  const GridSpec& g = psi.grid;
  const double w = g.h * g.h;
  double mx = 0.0, my = 0.0;
  Complex gx = 0.0, gy = 0.0;
  auto at = [&](int i, int j) -> Complex {
    return (i < 0 || j < 0 || i >= g.nx || j >= g.ny) ? Complex(0.0) : psi(i, j);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Complex v = psi(i, j);
      const double p = std::norm(v);
      mx += w * g.x(i) * p;
      my += w * g.y(j) * p;
      gx += w * std::conj(v) * (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.h);
      gy += w * std::conj(v) * (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.h);
    }
  const Complex i_pi_xi(0.0, kPi * flux.xi);
  const Complex c1 = my - gx / i_pi_xi;
  const Complex c2 = mx - gy / i_pi_xi;
  return {c1.real(), c2.real(), std::max(std::abs(c1.imag()), std::abs(c2.imag()))};
}

namespace {

Eigen::MatrixXd plaquette_curvature(const std::vector<std::vector<WaveFunction>>& corners,
                                    const CurvatureRegion& region, double delta) {
  Eigen::MatrixXd f(region.plaquettes_y, region.plaquettes_x);
  for (int q = 0; q < region.plaquettes_y; ++q)
    for (int p = 0; p < region.plaquettes_x; ++p) {
      const std::vector<WaveFunction> ring = {corners[q][p], corners[q][p + 1],
                                              corners[q + 1][p + 1], corners[q + 1][p]};
      f(q, p) = wilson_loop_phase(ring, true).gamma_accumulated / (delta * delta);
    }
  return f;
}

void check_region(const CurvatureRegion& region) {
  if (region.plaquettes_x < 1 || region.plaquettes_y < 1)
    throw ValidationError("curvature region needs at least one plaquette per axis");
  if (!(region.delta >= 0.0)) throw ValidationError("plaquette size must be >= 0");
}

}  // namespace

Eigen::MatrixXd curvature_map(const EigenPair& psi0, const CurvatureRegion& region,
                              const FluxDensity& flux) {
  check_region(region);
  const double delta = region.delta > 0.0 ? region.delta : 2.0 * psi0.state.grid.h;
  std::vector<std::vector<WaveFunction>> corners(region.plaquettes_y + 1);
  for (int q = 0; q <= region.plaquettes_y; ++q)
    for (int p = 0; p <= region.plaquettes_x; ++p)
      corners[q].push_back(translate(psi0.state, Offset(region.corner + delta * Vec2(p, q)), flux));
  return plaquette_curvature(corners, region, delta);
}

Eigen::MatrixXd curvature_map_resolved(const CurvatureRegion& region, const FluxDensity& flux,
                                       const GridSpec& grid, const PotentialSpec& potential,
                                       const ResolvedOptions& options) {
  check_region(region);
  const double delta = region.delta > 0.0 ? region.delta : 2.0 * grid.h;
  const int cx = region.plaquettes_x + 1;
  const int cy = region.plaquettes_y + 1;
  std::vector<Vec2> pts;
  for (int q = 0; q < cy; ++q)
    for (int p = 0; p < cx; ++p) pts.push_back(region.corner + delta * Vec2(p, q));
  check_containment(grid, flux, potential, pts);
  SolverConfig cfg = options.solver;
  cfg.k = std::max(cfg.k, options.level + 2);
  auto states = parallel_map(pts.size(), options.workers, [&](std::size_t k) {
    const HamiltonianOperator H(grid, flux, potential, Offset(pts[k]));
    auto pairs = lowest_eigenpairs(H, cfg);
    require_isolated(pairs, options.level, isolation_threshold(H, cfg));
    return std::move(pairs[static_cast<std::size_t>(options.level)].state);
  });
  std::vector<std::vector<WaveFunction>> corners(cy);
  for (int q = 0; q < cy; ++q)
    for (int p = 0; p < cx; ++p) corners[q].push_back(std::move(states[q * cx + p]));
  return plaquette_curvature(corners, region, delta);
}

double projected_phase_3d(const std::vector<Eigen::Vector3d>& loop3d, const FluxDensity& flux) {
  if (loop3d.size() < 2 ||
      (loop3d.front() - loop3d.back()).norm() > 1e-12 * (1.0 + loop3d.front().norm()))
    throw ValidationError("3D loop must be closed (first point equal to last)");
  std::vector<Vec2> projected;
  projected.reserve(loop3d.size());
  for (const auto& p : loop3d) projected.emplace_back(p.x(), p.y());
  projected.back() = projected.front();
  return 2.0 * kPi * flux.xi * oriented_area(projected);
}

}  // namespace berrylab
