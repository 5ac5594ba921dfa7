#pragma once

#include "berrylab/grid.hpp"
#include "berrylab/hamiltonian.hpp"
#include "berrylab/potential.hpp"
#include "berrylab/spectrum.hpp"

#include <span>

namespace berrylab {

/// Orientation of the wedge in exp(-i pi xi r^a). `standard` is
/// r^a = x a2 - y a1; `reversed` flips it and exists only so the self-test
/// can show that it breaks eigenfunction transport.
enum class Wedge { standard, reversed };

inline double wedge(const Vec2& r, const Vec2& a) { return r.x() * a.y() - r.y() * a.x(); }

/// ([a] psi)(r) = exp(-i pi xi r^a) psi(r - a). `a` must be a lattice vector.
/// Values shifted off the grid are dropped; rejects shifts that would drop
/// more than 1e-8 of the squared norm.
WaveFunction translate(const WaveFunction& psi, const Offset& a, const FluxDensity& flux,
                       Wedge convention = Wedge::standard);

/// max over probes f of ||[a](V_0 f) - V_a([a] f)|| / ||f||.
double intertwining_residual(const PotentialSpec& potential, const GridSpec& grid,
                             const Offset& a, const FluxDensity& flux,
                             std::span<const WaveFunction> probes);

struct TransportResult {
  WaveFunction state;
  double residual = 0.0;  // ||H(a) psi_a - E0 psi_a||
};

/// Fixed part of the allowed residual growth under transport.
inline constexpr double kTransportAllowance = 1e-8;

/// Residual growth the Dirichlet box can cause when psi0 is shifted by the
/// lattice vector `a`: kTransportAllowance + (4/h^2) x (norm of psi0 within
/// max|shift| + 1 cells of the boundary).
double transport_allowance(const WaveFunction& psi0, const Offset& a);

/// psi_a = [a] psi0 together with its residual against H(a). Throws
/// NumericalError ("transport broken") above psi0.residual + allowance.
TransportResult transported_eigenstate(const EigenPair& psi0, const Offset& a,
                                       const FluxDensity& flux, const HamiltonianOperator& H_a,
                                       Wedge convention = Wedge::standard);

struct CocycleResult {
  double deviation = 0.0;  // min over phi of ||[a][b]psi - e^{i phi}[a+b]psi|| / ||psi||
  double phase = 0.0;      // the minimizing phi, in (-pi, pi]
};

/// Projective multiplication of magnetic translations; analytically
/// [a][b] = exp(i pi xi a^b) [a+b].
CocycleResult cocycle_check(const Offset& a, const Offset& b, const FluxDensity& flux,
                            const WaveFunction& psi);

}  // namespace berrylab
