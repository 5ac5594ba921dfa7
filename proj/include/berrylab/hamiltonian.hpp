#pragma once

#include "berrylab/grid.hpp"
#include "berrylab/potential.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace berrylab {

/// Matrix-free H(a) = (p - A)^2 + V(r - a) on a Dirichlet box, A = pi*xi*(-y, x).
///
/// Link phases are the exact line integrals of A along grid edges,
///   theta_x(y) = -pi*xi*y*h   on (x, y) -> (x + h, y),
///   theta_y(x) = +pi*xi*x*h   on (x, y) -> (x, y + h),
/// so every counter-clockwise plaquette carries 2*pi*xi*h^2. A hop from r+d
/// into r picks up exp(-i theta(r -> r+d)), which is what makes the magnetic
/// translation exp(-i pi xi r^a) psi(r - a) commute with the kinetic part.
class HamiltonianOperator {
 public:
  HamiltonianOperator(const GridSpec& grid, const FluxDensity& flux, PotentialSpec potential,
                      const Offset& offset);

  const GridSpec& grid() const { return grid_; }
  const FluxDensity& flux() const { return flux_; }
  const PotentialSpec& potential() const { return potential_; }
  const Offset& offset() const { return offset_; }
  Eigen::Index size() const { return grid_.size(); }

  /// out = H in. `out` must not alias `in`.
  void apply(const Field& in, Field& out) const;

  double link_phase_x(int i, int j) const;
  double link_phase_y(int i, int j) const;
  /// Oriented link-phase sum around the plaquette with lower-left node (i, j).
  double plaquette_phase(int i, int j) const;

  /// Samples V(r - a) on the grid nodes.
  const Eigen::VectorXd& potential_samples() const { return potential_samples_; }

  /// Gershgorin bound on the spectral radius.
  double norm_estimate() const { return norm_estimate_; }

  /// Dense matrix of the operator (small grids only).
  Eigen::MatrixXcd dense() const;

 private:
  GridSpec grid_;
  FluxDensity flux_;
  PotentialSpec potential_;
  Offset offset_;
  std::vector<Complex> hop_x_;  // indexed by row j
  std::vector<Complex> hop_y_;  // indexed by column i
  Eigen::VectorXd potential_samples_;
  double norm_estimate_ = 0.0;
};

/// Builds H(a). When `containment_radius` > 0 the well centre must sit at
/// least that far from the boundary.
HamiltonianOperator build_hamiltonian(const GridSpec& grid, const FluxDensity& flux,
                                      const PotentialSpec& potential, const Offset& offset,
                                      double containment_radius = 0.0);

WaveFunction apply(const HamiltonianOperator& H, const WaveFunction& psi);

/// Rayleigh quotient <psi, H psi> / <psi, psi>.
double rayleigh_quotient(const HamiltonianOperator& H, const WaveFunction& psi);

/// 6 * max(magnetic length, well width). With no field only the well width
/// counts.
double containment_requirement(const FluxDensity& flux, const PotentialSpec& potential);

/// Throws ValidationError listing every centre closer to the boundary than
/// containment_requirement(), with the computed margins.
void check_containment(const GridSpec& grid, const FluxDensity& flux,
                       const PotentialSpec& potential, std::span<const Vec2> centres);

/// Smallest even nx (= ny) at spacing h that satisfies the containment rule
/// for all centres.
int grid_points_for_containment(double h, const FluxDensity& flux, const PotentialSpec& potential,
                                std::span<const Vec2> centres);

}  // namespace berrylab
