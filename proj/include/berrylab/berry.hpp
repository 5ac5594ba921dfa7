#pragma once

#include "berrylab/grid.hpp"
#include "berrylab/hamiltonian.hpp"
#include "berrylab/loop.hpp"
#include "berrylab/potential.hpp"
#include "berrylab/spectrum.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace berrylab {

/// Largest admissible |arg <psi_k, psi_k+1>| before the loop must be refined.
inline constexpr double kMaxStepPhase = 0.1;
/// Overlaps below this are treated as a broken discretization.
inline constexpr double kMinOverlap = 1e-6;

struct PhaseResult {
  double gamma_accumulated = 0.0;  // unwrapped, radians
  double gamma_mod = 0.0;          // in (-pi, pi]
  std::vector<double> per_step_phases;
  std::vector<Vec2> samples;       // loop samples (open list) when known
  double area = 0.0;               // oriented area S
  double flux_quanta = 0.0;        // xi * S
  std::string method;              // "translated", "resolved" or "states"
  int refinements = 0;
};

/// Reduce an angle to (-pi, pi].
double wrap_phase(double phi);

/// 2 pi xi S.
double analytic_phase(const FluxDensity& flux, const LoopSpec& loop);

/// gamma = -sum_k arg <psi_k, psi_k+1>, in list order. With `closed` the
/// last state is paired with the first. Throws RefinementRequired when a
/// step exceeds kMaxStepPhase and NumericalError on vanishing overlaps.
PhaseResult wilson_loop_phase(const std::vector<WaveFunction>& states, bool closed);

/// -arg of the closed product of overlaps, in (-pi, pi]. Invariant under any
/// rephasing of the states; carries no winding information.
double wilson_product_phase(const std::vector<WaveFunction>& states);

/// Wilson loop over psi_{a_k} = [a_k] psi0; the loop must be commensurate
/// with the grid and stay inside the containment margin.
PhaseResult berry_phase_translated(const EigenPair& psi0, const LoopSpec& loop,
                                   const FluxDensity& flux, const PotentialSpec& potential);

struct ResolvedOptions {
  SolverConfig solver;
  int level = 0;
  int workers = 1;
};

/// Wilson loop over independent eigensolves of H(a_k). Every sample must have
/// `level` isolated; otherwise aborts naming the sample.
PhaseResult berry_phase_resolved(const LoopSpec& loop, const FluxDensity& flux,
                                 const GridSpec& grid, const PotentialSpec& potential,
                                 const ResolvedOptions& options);

struct ConnectionSample {
  Offset a;
  Vec2 U = Vec2::Zero();
  /// U(a) - pi xi (-a2, a1): the part the loop integral never sees.
  Vec2 constant = Vec2::Zero();
};

/// Central-difference Berry connection from translated states,
/// U_i = [-arg<psi_a, psi_{a+d e_i}> + arg<psi_a, psi_{a-d e_i}>] / (2 d).
ConnectionSample connection_estimate(const EigenPair& psi0, const Offset& a, double delta,
                                     const FluxDensity& flux);

struct CConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double imag_residue = 0.0;  // max |Im| of the two quadratures
};

/// c1 = <y> - (1/(i pi xi)) <psi, d_x psi>, c2 = <x> - (1/(i pi xi)) <psi, d_y psi>,
/// centred differences, h^2 quadrature. Rejects xi = 0.
CConstants c_constants(const EigenPair& psi0, const FluxDensity& flux);

struct CurvatureRegion {
  Vec2 corner = Vec2(-1.0, -1.0);
  int plaquettes_x = 5;
  int plaquettes_y = 5;
  double delta = 0.0;  // plaquette side, 0 = 2h
};

/// F per plaquette, F(ix, iy) = -arg(product of four overlaps) / delta^2,
/// rows indexed by y. Uses translated states.
Eigen::MatrixXd curvature_map(const EigenPair& psi0, const CurvatureRegion& region,
                              const FluxDensity& flux);

/// Same map from independent eigensolves at every plaquette corner.
Eigen::MatrixXd curvature_map_resolved(const CurvatureRegion& region, const FluxDensity& flux,
                                       const GridSpec& grid, const PotentialSpec& potential,
                                       const ResolvedOptions& options);

/// Closed 3D polyline; the field is along z so only the projection onto the
/// xy plane carries flux: gamma = 2 pi xi S_projected.
double projected_phase_3d(const std::vector<Eigen::Vector3d>& loop3d, const FluxDensity& flux);

}  // namespace berrylab
