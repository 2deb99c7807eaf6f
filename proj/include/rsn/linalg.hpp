#pragma once

#include <algorithm>
#include <cstdint>

#include <Eigen/Dense>

#include "rsn/rng.hpp"
#include "rsn/types.hpp"

namespace rsn {

/// Relative eigenvalue cutoff: lambda_i <= rank_tol * lambda_max counts as zero.
inline constexpr double kDefaultRankTol = 1e-12;

template <typename Scalar>
struct EigenDecompositionT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues;             // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // orthonormal columns
};
using EigenDecomposition = EigenDecompositionT<double>;

/// Full eigendecomposition of a symmetric matrix (lower triangle is read).
template <typename Derived>
EigenDecompositionT<typename Derived::Scalar> eigh(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionMismatch("eigh: matrix must be square and nonempty");
  if (!m.allFinite()) throw NonFinite("eigh: matrix has NaN/Inf entries");
  Eigen::SelfAdjointEigenSolver<Mat> solver(m.derived());
  if (solver.info() != Eigen::Success) throw NoConvergence("eigh: QR iteration did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

template <typename Scalar>
Scalar spectral_cutoff(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& eigenvalues,
                       double rank_tol) {
  Scalar lam_max = std::max(Scalar(0), eigenvalues(eigenvalues.size() - 1));
  return static_cast<Scalar>(rank_tol) * lam_max;
}

template <typename Scalar>
void require_psd(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& eigenvalues, double rank_tol,
                 const char* where) {
  if (eigenvalues(0) < -spectral_cutoff(eigenvalues, rank_tol))
    throw NotPsd(std::string(where) + ": eigenvalue below -rank_tol * lambda_max");
}

/// Least-norm solution of M x = b for symmetric PSD M: x = M^+ b, with
/// directions whose eigenvalue falls below the cutoff dropped.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pseudo_solve(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b, double rank_tol = kDefaultRankTol) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (m.rows() != b.size()) throw DimensionMismatch("pseudo_solve: incompatible shapes");
  if (!b.allFinite()) throw NonFinite("pseudo_solve: rhs has NaN/Inf entries");
  EigenDecompositionT<Scalar> ed = eigh(m);
  require_psd(ed.eigenvalues, rank_tol, "pseudo_solve");
  Scalar cutoff = spectral_cutoff(ed.eigenvalues, rank_tol);
  Vec coeffs = ed.eigenvectors.transpose() * b;
  for (Index i = 0; i < coeffs.size(); ++i)
    coeffs(i) = ed.eigenvalues(i) > cutoff ? coeffs(i) / ed.eigenvalues(i) : Scalar(0);
  return ed.eigenvectors * coeffs;
}

/// Moore-Penrose inverse of a symmetric PSD matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pseudo_inverse(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
    double rank_tol = kDefaultRankTol) {
  EigenDecompositionT<Scalar> ed = eigh(m);
  require_psd(ed.eigenvalues, rank_tol, "pseudo_inverse");
  Scalar cutoff = spectral_cutoff(ed.eigenvalues, rank_tol);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv = ed.eigenvalues;
  for (Index i = 0; i < inv.size(); ++i)
    inv(i) = ed.eigenvalues(i) > cutoff ? Scalar(1) / ed.eigenvalues(i) : Scalar(0);
  return ed.eigenvectors * inv.asDiagonal() * ed.eigenvectors.transpose();
}

/// Smallest nonzero eigenvalue of a symmetric PSD matrix; 0 if the matrix is
/// zero to within the cutoff.
template <typename Scalar>
Scalar lambda_min_plus(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
                       double rank_tol = kDefaultRankTol) {
  EigenDecompositionT<Scalar> ed = eigh(m);
  require_psd(ed.eigenvalues, rank_tol, "lambda_min_plus");
  Scalar cutoff = spectral_cutoff(ed.eigenvalues, rank_tol);
  for (Index i = 0; i < ed.eigenvalues.size(); ++i)
    if (ed.eigenvalues(i) > cutoff) return ed.eigenvalues(i);
  return Scalar(0);
}

/// Rank of a symmetric PSD matrix under the relative cutoff.
template <typename Scalar>
Index spectral_rank(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
                    double rank_tol = kDefaultRankTol) {
  EigenDecompositionT<Scalar> ed = eigh(m);
  Scalar cutoff = spectral_cutoff(ed.eigenvalues, rank_tol);
  Index rank = 0;
  for (Index i = 0; i < ed.eigenvalues.size(); ++i)
    if (ed.eigenvalues(i) > cutoff) ++rank;
  return rank;
}

/// Largest squared singular value of A by power iteration on A A^T.
///
/// The start vector is drawn from a fixed stream of `seed`, so repeated calls
/// are deterministic. Matrix-free: only products with A and A^T are formed.
inline double sigma_max_sq(const SparseMatrix& a, int iters = 200, std::uint64_t seed = 0) {
  if (a.rows() < 1 || a.cols() < 1) throw DimensionMismatch("sigma_max_sq: empty matrix");
  if (a.norm() == 0) throw ZeroMatrix("sigma_max_sq: matrix is identically zero");
  CounterRng rng(seed, kStreamSigmaMax, 0);
  Vector v(a.rows());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector u = a.transpose() * v;
    estimate = u.squaredNorm();  // v^T A A^T v with unit v
    if (estimate == 0) {
      // Landed exactly in the cokernel; restart from a fresh direction.
      CounterRng retry(seed, kStreamSigmaMax, static_cast<std::uint64_t>(it) + 1);
      for (Index i = 0; i < v.size(); ++i) v(i) = retry.gaussian();
      v.normalize();
      continue;
    }
    v = a * u;
    v.normalize();
  }
  if (!std::isfinite(estimate)) throw NonFinite("sigma_max_sq: estimate overflowed");
  return estimate;
}

}  // namespace rsn
