#pragma once

// Dense Hermitian eigensolver: Householder reduction to real tridiagonal form
// followed by implicit QL with Wilkinson-type shifts. Kept independent of
// Eigen's solvers so it can serve as a cross-check for the Krylov path.

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

namespace berrylab::dense {

template <class Real>
using HermitianMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
struct HermitianEigenSystem {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> values;  // ascending
  HermitianMatrix<Real> vectors;                  // columns; empty unless requested
};

/// Implicit QL on the symmetric tridiagonal (d, e), e[i] couples i and i+1.
/// Rotations are accumulated into z (n x n) when it is non-empty.
template <class Real>
void tridiagonal_ql(Eigen::Matrix<Real, Eigen::Dynamic, 1>& d,
                    Eigen::Matrix<Real, Eigen::Dynamic, 1>& e,
                    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& z) {
  const Eigen::Index n = d.size();
  const bool vectors = z.size() > 0;
  const Real eps = std::numeric_limits<Real>::epsilon();
  if (n == 0) return;
  e[n - 1] = 0;
  for (Eigen::Index l = 0; l < n; ++l) {
    int iter = 0;
    Eigen::Index m;
    do {
      for (m = l; m < n - 1; ++m) {
        const Real dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw std::runtime_error("tridiagonal QL failed to converge");
        Real g = (d[l + 1] - d[l]) / (Real(2) * e[l]);
        Real r = std::hypot(g, Real(1));
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        Real s = 1, c = 1, p = 0;
        Eigen::Index i;
        bool underflow = false;
        for (i = m - 1; i >= l; --i) {
          Real f = s * e[i];
          const Real b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == Real(0)) {
            d[i + 1] -= p;
            e[m] = 0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + Real(2) * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (vectors) {
            for (Eigen::Index k = 0; k < n; ++k) {
              f = z(k, i + 1);
              z(k, i + 1) = s * z(k, i) + c * f;
              z(k, i) = c * z(k, i) - s * f;
            }
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0;
      }
    } while (m != l);
  }
}

/// All eigenvalues (and optionally eigenvectors) of a Hermitian matrix.
/// Only the lower triangle of `a` is trusted.
template <class Real>
HermitianEigenSystem<Real> hermitian_eigensolve(HermitianMatrix<Real> a, bool want_vectors) {
  using C = std::complex<Real>;
  using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  using CVec = Eigen::Matrix<C, Eigen::Dynamic, 1>;
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("matrix must be square");
  a.template triangularView<Eigen::StrictlyUpper>() = a.adjoint();

  HermitianMatrix<Real> q;
  if (want_vectors) q = HermitianMatrix<Real>::Identity(n, n);

  // Householder: zero a(k+2:, k) with H = I - 2 v v^H acting on rows/cols k+1:
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    CVec x = a.col(k).tail(len);
    const Real xnorm = x.norm();
    if (xnorm == Real(0)) continue;
    const C x0 = x[0];
    const C phase = std::abs(x0) == Real(0) ? C(1) : x0 / std::abs(x0);
    const C alpha = -phase * xnorm;
    CVec v = x;
    v[0] -= alpha;
    const Real vnorm = v.norm();
    if (vnorm == Real(0)) continue;
    v /= vnorm;

    auto block = a.bottomRightCorner(len, len);
    CVec w = block * v;
    const C kappa = v.dot(w);  // v^H B v, real up to rounding
    CVec p = w - kappa * v;
    block.noalias() -= Real(2) * v * p.adjoint();
    block.noalias() -= Real(2) * p * v.adjoint();

    a.col(k).tail(len).setZero();
    a(k + 1, k) = alpha;
    a.row(k).tail(len).setZero();
    a(k, k + 1) = std::conj(alpha);

    if (want_vectors) {
      auto qb = q.rightCols(len);
      CVec qv = qb * v;
      qb.noalias() -= Real(2) * qv * v.adjoint();
    }
  }

  // Diagonal unitary similarity makes the off-diagonal real and non-negative.
  RVec d(n), e = RVec::Zero(n);
  CVec delta = CVec::Ones(n);
  for (Eigen::Index k = 0; k < n; ++k) d[k] = a(k, k).real();
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const C sub = a(k + 1, k);
    const Real mag = std::abs(sub);
    e[k] = mag;
    delta[k + 1] = mag == Real(0) ? delta[k] : delta[k] * sub / mag;
  }

  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> z;
  if (want_vectors) z = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n);
  tridiagonal_ql(d, e, z);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return d[i] < d[j]; });

  HermitianEigenSystem<Real> out;
  out.values.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) out.values[k] = d[order[k]];
  if (want_vectors) {
    HermitianMatrix<Real> zc(n, n);
    for (Eigen::Index k = 0; k < n; ++k) zc.col(k) = z.col(order[k]).template cast<C>();
    out.vectors = q * (delta.asDiagonal() * zc);
  }
  return out;
}

}  // namespace berrylab::dense
