#pragma once

// Thick-restart Lanczos for the lowest eigenpairs of a Hermitian operator.
// Full (twice-iterated Gram-Schmidt) reorthogonalization at every step.

#include "berrylab/error.hpp"
#include "berrylab/grid.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace berrylab {

struct KrylovOptions {
  int k = 1;                 // number of lowest pairs
  double tol = 1e-6;         // absolute residual tolerance (unit 2-norm vectors)
  int max_matvecs = 20000;
  int basis_size = 0;        // 0 = automatic
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;  // used for breakdown refills
};

struct KrylovResult {
  Eigen::VectorXd values;      // ascending, k entries
  Eigen::MatrixXcd vectors;    // unit 2-norm columns
  Eigen::VectorXd residuals;   // explicit ||A x - theta x||
  int matvecs = 0;
  int restarts = 0;
};

/// Op must provide size() and apply(const Field&, Field&).
template <class Op>
KrylovResult lowest_eigenpairs_krylov(const Op& op, const Field& start, const KrylovOptions& opt) {
  const Eigen::Index n = op.size();
  const int k = opt.k;
  if (k < 1) throw ValidationError("number of requested eigenpairs must be >= 1");
  if (k > n) throw ValidationError("requested more eigenpairs than grid points");
  if (start.size() != n) throw ValidationError("start vector has the wrong size");

  const Eigen::Index m =
      std::min<Eigen::Index>(n, opt.basis_size > 0 ? std::max(opt.basis_size, k + 2)
                                                   : std::max(2 * k + 16, 20));
  Eigen::MatrixXcd basis(n, m);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;

  auto orthogonalize = [&](Field& w, Eigen::Index cols, Eigen::VectorXcd* coeffs) {
    // Classical Gram-Schmidt, repeated when the first pass cancels more than
    // 1/sqrt(2) of the norm (DGKS criterion).
    Eigen::VectorXcd total = Eigen::VectorXcd::Zero(cols);
    double before = w.norm();
    for (int pass = 0; pass < 3; ++pass) {
      Eigen::VectorXcd c = basis.leftCols(cols).adjoint() * w;
      w.noalias() -= basis.leftCols(cols) * c;
      total += c;
      const double after = w.norm();
      if (after > 0.7071067811865476 * before) break;
      before = after;
    }
    if (coeffs) *coeffs = total;
  };

  auto refill = [&](Eigen::Index cols) -> Field {
    // Random direction orthogonal to the current basis.
    for (int attempt = 0; attempt < 8; ++attempt) {
      Field r(n);
      for (Eigen::Index i = 0; i < n; ++i) r[i] = {gauss(rng), gauss(rng)};
      orthogonalize(r, cols, nullptr);
      const double nr = r.norm();
      if (nr > 1e-8) return r / nr;
    }
    throw NumericalError("Krylov basis refill failed");
  };

  Field v0 = start;
  double n0 = v0.norm();
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw ValidationError("start vector must be non-zero");
  basis.col(0) = v0 / n0;

  KrylovResult result;
  Field w(n), f(n);
  double beta_last = 0.0;
  double scale = 0.0;
  Eigen::Index kept = 0;
  double best = std::numeric_limits<double>::infinity();

  while (true) {
    for (Eigen::Index j = kept; j < m; ++j) {
      op.apply(basis.col(j), w);
      ++result.matvecs;
      Eigen::VectorXcd coeffs;
      orthogonalize(w, j + 1, &coeffs);
      t(j, j) = coeffs[j].real();
      scale = std::max(scale, std::abs(t(j, j)));
      const double beta = w.norm();
      scale = std::max(scale, beta);
      if (j + 1 < m) {
        if (beta <= 1e-13 * std::max(scale, 1.0)) {
          basis.col(j + 1) = refill(j + 1);
          t(j + 1, j) = 0.0;
        } else {
          basis.col(j + 1) = w / beta;
          t(j + 1, j) = beta;
        }
      } else {
        f = w;
        beta_last = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(t, Eigen::ComputeEigenvectors);
    const Eigen::VectorXd& theta = ritz.eigenvalues();
    const Eigen::MatrixXd& y = ritz.eigenvectors();

    bool converged = true;
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      const double est = beta_last * std::abs(y(m - 1, i));
      worst = std::max(worst, est);
      if (est > opt.tol) converged = false;
    }
    best = std::min(best, worst);

    if (converged || m == n) {
      result.values = theta.head(k);
      result.vectors = basis * y.leftCols(k).cast<Complex>();
      result.residuals.resize(k);
      Field av(n);
      bool explicit_ok = true;
      for (int i = 0; i < k; ++i) {
        result.vectors.col(i).normalize();
        op.apply(result.vectors.col(i), av);
        ++result.matvecs;
        result.values[i] = result.vectors.col(i).dot(av).real();
        result.residuals[i] = (av - result.values[i] * result.vectors.col(i)).norm();
        if (result.residuals[i] > opt.tol) explicit_ok = false;
      }
      if (explicit_ok || m == n) return result;
    }

    if (result.matvecs >= opt.max_matvecs) {
      std::ostringstream os;
      os << "Krylov solver did not converge within " << opt.max_matvecs
         << " operator applications; best residual " << best << " (tolerance " << opt.tol << ")";
      throw NumericalError(os.str());
    }

    // Thick restart: keep the lowest Ritz vectors plus the residual direction.
    kept = std::min<Eigen::Index>(m - 1, k + (m - k) / 2);
    Eigen::MatrixXcd kept_vectors = basis * y.leftCols(kept).cast<Complex>();
    basis.leftCols(kept) = kept_vectors;
    t.setZero();
    for (Eigen::Index i = 0; i < kept; ++i) {
      t(i, i) = theta[i];
      t(kept, i) = beta_last * y(m - 1, i);
    }
    if (beta_last <= 1e-13 * std::max(scale, 1.0)) {
      basis.col(kept) = refill(kept);
      for (Eigen::Index i = 0; i < kept; ++i) t(kept, i) = 0.0;
    } else {
      basis.col(kept) = f / beta_last;
    }
    ++result.restarts;
  }
}

}  // namespace berrylab
