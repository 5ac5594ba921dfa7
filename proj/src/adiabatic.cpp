#include "berrylab/adiabatic.hpp"

#include "berrylab/berry.hpp"
#include "berrylab/error.hpp"
#include "berrylab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace berrylab {

void Schedule::validate() const {
  loop.validate();
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("schedule T must be positive");
  if (steps < 0) throw ValidationError("schedule steps must be >= 0");
}

namespace {

std::vector<Vec2> loop_vertices(const LoopSpec& loop) {
  std::vector<Vec2> v;
  if (const auto* r = std::get_if<RectangleLoop>(&loop.shape)) {
    v = {r->corner, r->corner + Vec2(r->widths.x(), 0.0), r->corner + r->widths,
         r->corner + Vec2(0.0, r->widths.y())};
  } else if (const auto* p = std::get_if<PolygonLoop>(&loop.shape)) {
    v = p->vertices;
  } else {
    return {};
  }
  if (loop.orientation < 0) std::reverse(v.begin() + 1, v.end());
  return v;
}

}  // namespace

SchedulePath::SchedulePath(const Schedule& schedule) : T_(schedule.T) {
  schedule.validate();
  std::vector<std::vector<Vec2>> polylines;
  const std::vector<Vec2> vertices = loop_vertices(schedule.loop);
  if (schedule.ramp == Ramp::per_edge && !vertices.empty()) {
    for (int r = 0; r < schedule.loop.repeat; ++r)
      for (std::size_t e = 0; e < vertices.size(); ++e)
        polylines.push_back({vertices[e], vertices[(e + 1) % vertices.size()]});
  } else {
    polylines.push_back(schedule.loop.points());
  }

  for (auto& pl : polylines) {
    Leg leg;
    leg.points = pl;
    leg.cumulative.push_back(0.0);
    for (std::size_t k = 1; k < pl.size(); ++k)
      leg.cumulative.push_back(leg.cumulative.back() + (pl[k] - pl[k - 1]).norm());
    total_length_ += leg.cumulative.back();
    legs_.push_back(std::move(leg));
  }
  double t = 0.0;
  for (auto& leg : legs_) {
    const double share = total_length_ > 0.0 ? leg.cumulative.back() / total_length_
                                             : 1.0 / legs_.size();
    leg.t0 = t;
    leg.duration = share * T_;
    t += leg.duration;
  }
}

Vec2 SchedulePath::position(double t) const {
  t = std::clamp(t, 0.0, T_);
  const Leg* leg = &legs_.back();
  for (const auto& l : legs_)
    if (t < l.t0 + l.duration) {
      leg = &l;
      break;
    }
  const double len = leg->cumulative.back();
  if (len == 0.0 || leg->duration == 0.0) return leg->points.front();
  const double u = std::clamp((t - leg->t0) / leg->duration, 0.0, 1.0);
  // sin^2 velocity ramp: ds/du = 2 len sin^2(pi u)
  const double s = len * (u - std::sin(2.0 * kPi * u) / (2.0 * kPi));
  auto it = std::upper_bound(leg->cumulative.begin(), leg->cumulative.end(), s);
  std::size_t k = static_cast<std::size_t>(it - leg->cumulative.begin());
  if (k == 0) return leg->points.front();
  if (k >= leg->points.size()) return leg->points.back();
  const double seg = leg->cumulative[k] - leg->cumulative[k - 1];
  const double w = seg > 0.0 ? (s - leg->cumulative[k - 1]) / seg : 0.0;
  return leg->points[k - 1] + w * (leg->points[k] - leg->points[k - 1]);
}

PropagationResult propagate(const GridSpec& grid, const FluxDensity& flux,
                            const PotentialSpec& potential, const EigenPair& psi0,
                            const Schedule& schedule, const PropagationOptions& options) {
  schedule.validate();
  if (!(psi0.state.grid == grid)) throw ValidationError("initial state grid does not match");
  const SchedulePath path(schedule);
  const HamiltonianOperator h_start(grid, flux, potential, Offset(path.position(0.0)));
  const double hnorm = h_start.norm_estimate();

  PropagationResult res;
  res.T = schedule.T;
  res.steps = schedule.steps > 0
                  ? schedule.steps
                  : static_cast<int>(std::ceil(schedule.T * hnorm / 0.5 - 1e-9));
  res.dt = schedule.T / res.steps;
  if (res.dt * hnorm > 0.5 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << res.dt << " violates dt * ||H|| <= 0.5 (||H|| ~ " << hnorm << ")";
    throw ValidationError(os.str());
  }

  const double h = grid.h;
  const Complex itau(0.0, 0.5 * res.dt);
  Field psi = psi0.state.values;
  const double n0 = h * psi.norm();
  Field hpsi(psi.size()), b(psi.size()), x(psi.size()), xn(psi.size());

  const int checkpoints = std::max(0, options.population_checkpoints);
  int next_checkpoint = 1;
  res.populations.push_back({0.0, std::norm(inner(psi0.state, psi0.state))});

  for (int n = 0; n < res.steps; ++n) {
    const double tm = (n + 0.5) * res.dt;
    const HamiltonianOperator hm(grid, flux, potential, Offset(path.position(tm)));
    hm.apply(psi, hpsi);
    b = psi - itau * hpsi;
    x = 2.0 * b - psi;
    const double bnorm = b.norm();
    int it = 0;
    for (;; ++it) {
      if (it == options.max_inner_iterations) {
        std::ostringstream os;
        os << "Crank-Nicolson inner solve did not converge at step " << n;
        throw NumericalError(os.str());
      }
      hm.apply(x, hpsi);
      xn = b - itau * hpsi;
      const double diff = (xn - x).norm();
      x.swap(xn);
      if (diff <= options.inner_tol * bnorm) break;
    }
    const double before = psi.norm();
    psi.swap(x);
    res.max_step_norm_change = std::max(res.max_step_norm_change, h * std::abs(psi.norm() - before));

    while (checkpoints > 0 && next_checkpoint <= checkpoints &&
           n + 1 >= static_cast<long long>(res.steps) * next_checkpoint / checkpoints) {
      const double t = (n + 1) * res.dt;
      const HamiltonianOperator ht(grid, flux, potential, Offset(path.position(t)));
      SolverConfig cfg = options.solver;
      cfg.k = 1;
      cfg.start = psi;
      const auto ground = lowest_eigenpairs(ht, cfg);
      const WaveFunction cur(grid, psi);
      res.populations.push_back({t, std::norm(inner(ground[0].state, cur)) / std::pow(norm(cur), 2)});
      ++next_checkpoint;
    }
  }

  res.final_state = WaveFunction(grid, psi);
  res.norm_drift = std::abs(h * psi.norm() - n0);
  res.overlap = inner(psi0.state, res.final_state);
  for (const auto& p : res.populations) res.min_population = std::min(res.min_population, p.population);
  if (res.min_population < options.population_warning) {
    std::ostringstream os;
    os << "non-adiabatic regime: ground-state population fell to " << res.min_population;
    res.warnings.push_back(os.str());
  }
  if (std::abs(res.overlap) >= 0.5) {
    res.gamma_adiabatic = geometric_phase(res, psi0.energy, schedule.T);
  } else {
    std::ostringstream os;
    os << "final overlap " << std::abs(res.overlap) << " too small for a geometric phase";
    res.warnings.push_back(os.str());
  }
  return res;
}

double geometric_phase(const PropagationResult& result, double E0, double T) {
  if (std::abs(result.overlap) < 0.5) {
    std::ostringstream os;
    os << "state left the band: |overlap| = " << std::abs(result.overlap) << " < 0.5";
    throw NumericalError(os.str());
  }
  if (result.steps < 1 || !(T > 0.0)) throw ValidationError("geometric phase needs T > 0 and steps >= 1");
  const double dt = T / result.steps;
  const double dynamical = 2.0 * result.steps * std::atan(0.5 * E0 * dt);
  return wrap_phase(std::arg(result.overlap) + dynamical);
}

double reversal_symmetrized_phase(double gamma_forward, double gamma_reversed) {
  return wrap_phase(gamma_forward - 0.5 * wrap_phase(gamma_forward + gamma_reversed));
}

std::vector<ConvergenceRow> convergence_study(const GridSpec& grid, const FluxDensity& flux,
                                              const PotentialSpec& potential,
                                              const EigenPair& psi0, const Schedule& base,
                                              const std::vector<double>& Ts,
                                              double gamma_reference,
                                              const PropagationOptions& options, int workers) {
  if (!std::is_sorted(Ts.begin(), Ts.end())) throw ValidationError("convergence study needs increasing T");
  return parallel_map(Ts.size(), workers, [&](std::size_t i) {
    Schedule s = base;
    s.T = Ts[i];
    s.steps = 0;
    const PropagationResult r = propagate(grid, flux, potential, psi0, s, options);
    ConvergenceRow row;
    row.T = Ts[i];
    row.min_population = r.min_population;
    row.norm_drift = r.norm_drift;
    row.warnings = r.warnings;
    if (std::abs(r.overlap) >= 0.5) {
      row.gamma_adiabatic = r.gamma_adiabatic;
      row.error = std::abs(wrap_phase(r.gamma_adiabatic - gamma_reference));
    } else {
      row.gamma_adiabatic = std::numeric_limits<double>::quiet_NaN();
      row.error = std::numeric_limits<double>::infinity();
    }
    return row;
  });
}

}  // namespace berrylab
