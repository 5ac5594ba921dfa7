#pragma once

#include "berrylab/grid.hpp"
#include "berrylab/hamiltonian.hpp"
#include "berrylab/loop.hpp"
#include "berrylab/potential.hpp"
#include "berrylab/spectrum.hpp"

#include <string>
#include <vector>

namespace berrylab {

/// How the well speeds up and slows down along the loop.
///  - global: one sin^2 velocity ramp over the whole closed path;
///  - per_edge: a separate ramp on every polygon edge, so the well comes to
///    rest at each vertex (no velocity kinks). Circles have a single edge.
enum class Ramp { global, per_edge };

struct Schedule {
  LoopSpec loop;
  double T = 200.0;
  int steps = 0;  // 0 = smallest N with dt * ||H|| <= 0.5
  Ramp ramp = Ramp::per_edge;

  void validate() const;
};

/// Piecewise-linear closed path with the schedule's velocity profile.
class SchedulePath {
 public:
  explicit SchedulePath(const Schedule& schedule);
  /// Well position at time t in [0, T].
  Vec2 position(double t) const;
  double length() const { return total_length_; }

 private:
  struct Leg {
    std::vector<Vec2> points;
    std::vector<double> cumulative;  // arc length at each point
    double t0 = 0.0, duration = 0.0;
  };
  std::vector<Leg> legs_;
  double total_length_ = 0.0;
  double T_ = 0.0;
};

struct PopulationSample {
  double t = 0.0;
  double population = 0.0;  // |<ground state of H(a(t)), psi(t)>|^2
};

struct PropagationResult {
  WaveFunction final_state;
  double norm_drift = 0.0;
  double max_step_norm_change = 0.0;
  Complex overlap = 0.0;  // <psi_{a(0)}, psi(T)>
  double gamma_adiabatic = 0.0;
  std::vector<PopulationSample> populations;
  double min_population = 1.0;
  int steps = 0;
  double dt = 0.0;
  double T = 0.0;
  std::vector<std::string> warnings;
};

struct PropagationOptions {
  double inner_tol = 1e-12;   // relative residual of each Crank-Nicolson solve
  int max_inner_iterations = 200;
  int population_checkpoints = 16;
  SolverConfig solver;        // for the instantaneous ground states
  double population_warning = 0.9;
};

/// Crank-Nicolson with the midpoint Hamiltonian,
/// (1 + i dt/2 H(a(t + dt/2))) psi_{n+1} = (1 - i dt/2 H(a(t + dt/2))) psi_n.
PropagationResult propagate(const GridSpec& grid, const FluxDensity& flux,
                            const PotentialSpec& potential, const EigenPair& psi0,
                            const Schedule& schedule, const PropagationOptions& options = {});

/// gamma_ad = arg <psi_{a(0)}, psi(T)> + (dynamical phase of E0 over T),
/// reduced to (-pi, pi]. The dynamical phase is the one the Crank-Nicolson
/// stepper actually imparts, 2 N atan(E0 dt / 2), which tends to E0 T.
double geometric_phase(const PropagationResult& result, double E0, double T);

/// Combines a loop and its reverse: gamma_fwd - wrap(gamma_fwd + gamma_rev) / 2.
/// Phase contributions even in the traversal velocity cancel.
double reversal_symmetrized_phase(double gamma_forward, double gamma_reversed);

struct ConvergenceRow {
  double T = 0.0;
  double gamma_adiabatic = 0.0;
  double error = 0.0;  // |wrap(gamma_ad - gamma_reference)|
  double min_population = 0.0;
  double norm_drift = 0.0;
  std::vector<std::string> warnings;
};

/// One propagation per T (run concurrently), rows in the order of Ts.
std::vector<ConvergenceRow> convergence_study(const GridSpec& grid, const FluxDensity& flux,
                                              const PotentialSpec& potential,
                                              const EigenPair& psi0, const Schedule& base,
                                              const std::vector<double>& Ts,
                                              double gamma_reference,
                                              const PropagationOptions& options = {},
                                              int workers = 1);

}  // namespace berrylab
