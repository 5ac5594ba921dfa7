#include "berrylab/spectrum.hpp"

#include "berrylab/dense_hermitian.hpp"
#include "berrylab/error.hpp"
#include "berrylab/krylov.hpp"

#include <algorithm>
#include <sstream>

namespace berrylab {

void SolverConfig::validate() const {
  if (k < 1) throw ValidationError("solver.k must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("solver.tol must be positive");
  if (max_iterations < 1) throw ValidationError("solver.max_iterations must be >= 1");
  if (basis_size < 0) throw ValidationError("solver.basis_size must be >= 0");
}

std::vector<EigenPair> lowest_eigenpairs(const HamiltonianOperator& H, const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.k > H.size()) {
    std::ostringstream os;
    os << "requested " << cfg.k << " eigenpairs but the grid has only " << H.size() << " points";
    throw ValidationError(os.str());
  }
  const Field start = cfg.start ? *cfg.start : random_state(H.grid(), cfg.seed).values;

  KrylovOptions opt;
  opt.k = cfg.k;
  opt.tol = cfg.tol * H.norm_estimate();
  opt.max_matvecs = cfg.max_iterations;
  opt.basis_size = cfg.basis_size;
  opt.seed = cfg.seed ^ 0xa5a5a5a5a5a5a5a5ULL;
  const KrylovResult kr = lowest_eigenpairs_krylov(H, start, opt);

  const double h = H.grid().h;
  std::vector<EigenPair> pairs;
  for (int i = 0; i < cfg.k; ++i) {
    EigenPair p;
    p.energy = kr.values[i];
    p.state = WaveFunction(H.grid(), kr.vectors.col(i) / h);
    normalize(p.state);
    fix_phase(p.state);
    p.residual = kr.residuals[i];
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<EigenPair> dense_reference(const HamiltonianOperator& H, bool with_states) {
  if (H.size() > kDenseCap) {
    std::ostringstream os;
    os << "dense reference is limited to " << kDenseCap << " grid points (got " << H.size() << ")";
    throw ValidationError(os.str());
  }
  const auto sys = dense::hermitian_eigensolve<double>(H.dense(), with_states);
  const double h = H.grid().h;
  std::vector<EigenPair> pairs(static_cast<std::size_t>(sys.values.size()));
  Field hx;
  for (Eigen::Index i = 0; i < sys.values.size(); ++i) {
    auto& p = pairs[static_cast<std::size_t>(i)];
    p.energy = sys.values[i];
    if (with_states) {
      p.state = WaveFunction(H.grid(), sys.vectors.col(i) / h);
      normalize(p.state);
      fix_phase(p.state);
      H.apply(p.state.values, hx);
      p.residual = h * (hx - p.energy * p.state.values).norm();
    }
  }
  return pairs;
}

double gap_check(std::span<const EigenPair> pairs) {
  if (pairs.size() < 2) throw ValidationError("gap check needs at least two eigenpairs");
  return pairs[1].energy - pairs[0].energy;
}

double level_gap(std::span<const EigenPair> pairs, int level) {
  if (level < 0 || static_cast<std::size_t>(level) + 1 >= pairs.size())
    throw ValidationError("level gap needs the level and the one above it");
  double gap = pairs[level + 1].energy - pairs[level].energy;
  if (level > 0) gap = std::min(gap, pairs[level].energy - pairs[level - 1].energy);
  return gap;
}

double isolation_threshold(const HamiltonianOperator& H, const SolverConfig& cfg) {
  return 10.0 * cfg.tol * H.norm_estimate();
}

void require_isolated(std::span<const EigenPair> pairs, int level, double threshold) {
  const double gap = level_gap(pairs, level);
  if (!(gap >= threshold)) {
    std::ostringstream os;
    os << "degenerate or near-degenerate level " << level << ": gap " << gap
       << " below isolation threshold " << threshold;
    throw NumericalError(os.str());
  }
}

}  // namespace berrylab
