#pragma once

#include "berrylab/adiabatic.hpp"
#include "berrylab/grid.hpp"
#include "berrylab/loop.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace berrylab {

/// Phase-space point (x, y, p_x, p_y).
using PhasePoint = Eigen::Vector4d;

/// Charged particle of mass 1/2 in the symmetric gauge with a harmonic well:
///   H = (p - A)^2 + omega0^2 |r - a|^2 / 4,   A = pi xi (-y, x).
/// The quarter makes a static orbit at xi = 0 oscillate at omega0.
struct ClassicalSystem {
  FluxDensity flux;
  double omega0 = 1.0;
  Vec2 offset = Vec2::Zero();

  void validate() const;

  /// Linear part of the flow, dz/dt = M (z - z*(a)).
  Eigen::Matrix4d flow_matrix() const;
  /// Equilibrium point for the well at a.
  PhasePoint equilibrium(const Vec2& a) const;
  /// d z* / d a.
  Eigen::Matrix<double, 4, 2> equilibrium_jacobian() const;
  double energy(const PhasePoint& z) const;
};

struct FlowFrequencies {
  double plus = 0.0;
  double minus = 0.0;
  double max() const { return plus; }
  double min() const { return minus; }
};

/// Normal-mode frequencies from the eigenvalues (+-i omega) of the flow matrix.
FlowFrequencies flow_frequencies(const ClassicalSystem& system);

/// Exact propagator of the flow matrix over time t.
Eigen::Matrix4d flow_map(const ClassicalSystem& system, double t);

/// max |Phi^T J Phi - J|.
double symplectic_defect(const Eigen::Matrix4d& phi);

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> z;
};

/// Static well. Exact linear-affine stepper; requires dt * omega_plus <= 0.05.
/// The step is shortened so the last sample lands on t_final.
Trajectory integrate(const ClassicalSystem& system, const PhasePoint& start, double t_final,
                     double dt);

/// Frequency in [omega_lo, omega_hi] maximizing the discrete-time Fourier
/// magnitude of a sampled signal (uniform spacing dt).
double spectral_peak(const std::vector<double>& signal, double dt, double omega_lo,
                     double omega_hi);

/// Complex mode amplitudes of a deviation from equilibrium. Mode k oscillates
/// as exp(-i omega_k t), so its angle advances at +omega_k.
class NormalModes {
 public:
  explicit NormalModes(const ClassicalSystem& system);
  Eigen::Vector2cd amplitudes(const PhasePoint& deviation) const;
  PhasePoint deviation(const Eigen::Vector2cd& amplitudes) const;
  Eigen::Vector2d actions(const PhasePoint& deviation) const;
  Eigen::Vector2d angles(const PhasePoint& deviation) const;
  const FlowFrequencies& frequencies() const { return freq_; }
  /// Rows of V^-1 for the two modes, acting on a 4-vector.
  const Eigen::Matrix<Complex, 2, 4>& projector() const { return proj_; }

 private:
  FlowFrequencies freq_;
  Eigen::Matrix<Complex, 4, 2> vec_;
  Eigen::Matrix<Complex, 2, 4> proj_;
  Eigen::Vector2d symplectic_norm_;
};

/// Phase-space points sharing both actions, angles on a uniform grid of the torus.
struct Ensemble {
  std::vector<PhasePoint> points;  // absolute phase-space points
  Eigen::Vector2d actions = Eigen::Vector2d::Zero();

  void validate(const ClassicalSystem& system) const;
};

/// side x side angle grid (N = side^2, needs N >= 64) around the equilibrium at system.offset.
Ensemble make_ensemble(const ClassicalSystem& system, double action_plus, double action_minus,
                       int side = 8);

struct HannayOptions {
  double max_phase_step = 0.05;  // dt * omega_plus
  Ramp ramp = Ramp::per_edge;
  int workers = 1;
};

struct HannayResult {
  double delta_theta_plus = 0.0;
  double delta_theta_minus = 0.0;
  int steps = 0;
  double T = 0.0;
  double action_drift = 0.0;  // max relative action change over the ensemble
};

/// Transports the ensemble along the loop (starting at the loop's first point)
/// over time T and returns the mean angle advance per mode minus omega T.
/// Requires T * omega_minus >= 1e3.
HannayResult hannay_angle(const ClassicalSystem& system, const LoopSpec& loop, double T,
                          const Ensemble& ensemble, const HannayOptions& options = {});

/// max |gamma_m - gamma_n| over all pairs; needs at least 2 phases.
double correspondence_check(const std::vector<double>& berry_phases_by_level);

}  // namespace berrylab
