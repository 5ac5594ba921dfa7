#include "berrylab/magnetic_translation.hpp"

#include "berrylab/error.hpp"

#include <cmath>
#include <sstream>

namespace berrylab {

WaveFunction translate(const WaveFunction& psi, const Offset& a, const FluxDensity& flux,
                       Wedge convention) {
  const GridSpec& g = psi.grid;
  const auto [sx, sy] = a.lattice_shift(g.h);
  const double sign = convention == Wedge::standard ? 1.0 : -1.0;
  const double b = -sign * kPi * flux.xi;

  WaveFunction out(g);
  double kept = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const int js = j - sy;
    if (js < 0 || js >= g.ny) continue;
    for (int i = 0; i < g.nx; ++i) {
      const int is = i - sx;
      if (is < 0 || is >= g.nx) continue;
      const Complex v = psi(is, js);
      if (v == Complex(0.0)) continue;
      kept += std::norm(v);
      out(i, j) = std::polar(1.0, b * wedge(g.point(i, j), a.a)) * v;
    }
  }
  const double total = psi.values.squaredNorm();
  if (total > 0.0 && (total - kept) > 1e-8 * total) {
    std::ostringstream os;
    os << "magnetic translation by (" << a.a.x() << ", " << a.a.y() << ") pushes "
       << (total - kept) / total << " of the norm off the grid (containment violated)";
    throw ValidationError(os.str());
  }
  return out;
}

double intertwining_residual(const PotentialSpec& potential, const GridSpec& grid,
                             const Offset& a, const FluxDensity& flux,
                             std::span<const WaveFunction> probes) {
  const HamiltonianOperator h0(grid, flux, potential, Offset{});
  const HamiltonianOperator ha(grid, flux, potential, a);
  const Eigen::VectorXd& v0 = h0.potential_samples();
  const Eigen::VectorXd& va = ha.potential_samples();
  double worst = 0.0;
  for (const auto& f : probes) {
    if (!(f.grid == grid)) throw ValidationError("probe grid does not match");
    WaveFunction v0f(grid, f.values.cwiseProduct(v0.cast<Complex>()));
    const WaveFunction lhs = translate(v0f, a, flux);
    WaveFunction rhs = translate(f, a, flux);
    rhs.values = rhs.values.cwiseProduct(va.cast<Complex>());
    const double nf = norm(f);
    if (nf == 0.0) continue;
    worst = std::max(worst, grid.h * (lhs.values - rhs.values).norm() / nf);
  }
  return worst;
}

double transport_allowance(const WaveFunction& psi0, const Offset& a) {
  const auto [sx, sy] = a.lattice_shift(psi0.grid.h);
  const int cells = std::max(std::abs(sx), std::abs(sy)) + 1;
  const double h = psi0.grid.h;
  return kTransportAllowance + 4.0 / (h * h) * boundary_tail_norm(psi0, cells);
}

TransportResult transported_eigenstate(const EigenPair& psi0, const Offset& a,
                                       const FluxDensity& flux, const HamiltonianOperator& H_a,
                                       Wedge convention) {
  if (!(psi0.state.grid == H_a.grid())) throw ValidationError("eigenstate grid does not match H(a)");
  TransportResult r;
  r.state = translate(psi0.state, a, flux, convention);
  const WaveFunction hpsi = apply(H_a, r.state);
  WaveFunction res(H_a.grid(), hpsi.values - psi0.energy * r.state.values);
  r.residual = norm(res);
  const double allowance = transport_allowance(psi0.state, a);
  if (r.residual > psi0.residual + allowance) {
    std::ostringstream os;
    os << "transport broken: residual " << r.residual << " exceeds " << psi0.residual
       << " + " << allowance
       << " (check containment and the gauge/wedge convention)";
    throw NumericalError(os.str());
  }
  return r;
}

CocycleResult cocycle_check(const Offset& a, const Offset& b, const FluxDensity& flux,
                            const WaveFunction& psi) {
  const WaveFunction ab = translate(translate(psi, b, flux), a, flux);
  const WaveFunction sum = translate(psi, Offset(a.a + b.a), flux);
  const Complex overlap = inner(sum, ab);
  CocycleResult out;
  out.phase = std::abs(overlap) > 0.0 ? std::arg(overlap) : 0.0;
  const Field diff = ab.values - std::polar(1.0, out.phase) * sum.values;
  out.deviation = psi.grid.h * diff.norm() / norm(psi);
  return out;
}

}  // namespace berrylab
