#pragma once

#include "berrylab/grid.hpp"
#include "berrylab/hamiltonian.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace berrylab {

struct EigenPair {
  double energy = 0.0;
  WaveFunction state;     // normalized, largest component real positive
  double residual = 0.0;  // ||H psi - E psi|| in the weighted norm
};

struct SolverConfig {
  int k = 2;
  /// Residual tolerance relative to H.norm_estimate().
  double tol = 1e-8;
  int max_iterations = 20000;
  std::uint64_t seed = 0x5eedb0a7d1ce5eedULL;
  int basis_size = 0;
  /// Overrides the seeded random start vector when set.
  std::optional<Field> start;

  void validate() const;
};

/// Largest grid handled by dense_reference().
inline constexpr Eigen::Index kDenseCap = 1600;

/// Lowest cfg.k eigenpairs, ascending. Deterministic for equal (H, cfg).
std::vector<EigenPair> lowest_eigenpairs(const HamiltonianOperator& H, const SolverConfig& cfg);

/// Full spectrum by dense Hermitian diagonalization; grids up to kDenseCap
/// points. States are filled only when `with_states` is true.
std::vector<EigenPair> dense_reference(const HamiltonianOperator& H, bool with_states = true);

/// E1 - E0 for a sorted list of at least two pairs.
double gap_check(std::span<const EigenPair> pairs);

/// Minimum distance from level `level` to its neighbours in `pairs`.
double level_gap(std::span<const EigenPair> pairs, int level);

/// The gap a level must exceed to count as simple and isolated:
/// 10 x tol x spectral scale.
double isolation_threshold(const HamiltonianOperator& H, const SolverConfig& cfg);

/// Throws NumericalError when `level` is not separated from its neighbours
/// by more than `threshold`.
void require_isolated(std::span<const EigenPair> pairs, int level, double threshold);

}  // namespace berrylab
