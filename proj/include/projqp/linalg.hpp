#pragma once

// Dense vector/matrix aliases and an economy QR factorization that can be
// updated in place when a column is appended (Gram-Schmidt with one
// reorthogonalization pass) or deleted (Givens sweep).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "projqp/errors.hpp"

namespace projqp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kQrTol = 1e-10;
inline constexpr double kRankTolFactor = 1e-12;
/// Number of incremental updates after which the factors are recomputed
/// from the stored matrix.
inline constexpr std::size_t kQrRefreshPeriod = 64;

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

inline double rank_tol(double column_norm) { return kRankTolFactor * (1.0 + column_norm); }

/// Economy QR factors of an n x q matrix: q_mat is n x q with orthonormal
/// columns, r_mat is q x q upper triangular with a nonnegative diagonal.
struct QrFactors {
  Mat q_mat;
  Mat r_mat;
  /// Incremental updates applied since the last from-scratch factorization.
  std::size_t updates = 0;

  Index rows() const { return q_mat.rows(); }
  Index cols() const { return r_mat.cols(); }

  /// Reconstructs Q * R.
  Mat product() const {
    if (cols() == 0) return Mat::Zero(rows(), 0);
    return q_mat * r_mat;
  }

  /// Solves R w = rhs by back substitution.
  Vec solve_r(const Vec& rhs) const {
    if (cols() == 0) return Vec(0);
    return r_mat.triangularView<Eigen::Upper>().solve(rhs);
  }

  /// Computes Q^T v.
  Vec project_coords(const Vec& v) const {
    if (cols() == 0) return Vec(0);
    return q_mat.transpose() * v;
  }

  /// Computes (I - Q Q^T) v.
  Vec orth_complement(const Vec& v) const {
    if (cols() == 0) return v;
    return v - q_mat * (q_mat.transpose() * v);
  }
};

namespace detail {

// Flips signs so that diag(R) >= 0 and zeroes the strict lower triangle.
inline void canonicalize(QrFactors& f) {
  const Index q = f.cols();
  for (Index i = 0; i < q; ++i) {
    if (f.r_mat(i, i) < 0.0) {
      f.r_mat.row(i) *= -1.0;
      f.q_mat.col(i) *= -1.0;
    }
    for (Index k = 0; k < i; ++k) f.r_mat(i, k) = 0.0;
  }
}

}  // namespace detail

inline QrFactors empty_qr(Index n) { return QrFactors{Mat::Zero(n, 0), Mat::Zero(0, 0), 0}; }

/// Economy QR of a tall (or square) matrix. Throws RankDeficient when a
/// diagonal entry of R falls below rank_tol relative to its column.
inline QrFactors qr_factorize(const Mat& m) {
  const Index n = m.rows();
  const Index q = m.cols();
  if (!m.allFinite()) throw InvalidInput("qr_factorize: non-finite entry");
  if (q > n) throw RankDeficient("qr_factorize: more columns than rows");
  if (q == 0) return empty_qr(n);

  Eigen::HouseholderQR<Mat> hqr(m);
  QrFactors f;
  f.q_mat = hqr.householderQ() * Mat::Identity(n, q);
  f.r_mat = hqr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  detail::canonicalize(f);
  for (Index i = 0; i < q; ++i) {
    if (std::abs(f.r_mat(i, i)) <= rank_tol(m.col(i).norm())) {
      throw RankDeficient("qr_factorize: column " + std::to_string(i) +
                          " is dependent on the preceding columns");
    }
  }
  return f;
}

/// QR of [N v] from the QR of N. Previous columns of R are untouched.
inline QrFactors qr_append_column(const QrFactors& f, const Vec& v) {
  const Index n = f.rows();
  const Index q = f.cols();
  if (v.size() != n) throw InvalidInput("qr_append_column: dimension mismatch");
  if (q >= n) throw DependentColumn("qr_append_column: factors already span the space");

  Vec coeffs = f.project_coords(v);
  Vec w = f.orth_complement(v);
  if (q > 0) {
    // Second Gram-Schmidt pass restores orthogonality lost to cancellation.
    const Vec again = f.q_mat.transpose() * w;
    w -= f.q_mat * again;
    coeffs += again;
  }
  const double rho = w.norm();
  if (rho <= rank_tol(v.norm())) {
    throw DependentColumn("qr_append_column: column lies in the span of the factors");
  }

  QrFactors out;
  out.q_mat.resize(n, q + 1);
  out.q_mat.leftCols(q) = f.q_mat;
  out.q_mat.col(q) = w / rho;
  out.r_mat = Mat::Zero(q + 1, q + 1);
  out.r_mat.topLeftCorner(q, q) = f.r_mat;
  out.r_mat.topRightCorner(q, 1) = coeffs;
  out.r_mat(q, q) = rho;
  out.updates = f.updates + 1;
  return out;
}

/// QR of N with column l removed, via a Givens sweep over the trailing
/// Hessenberg block.
inline QrFactors qr_delete_column(const QrFactors& f, Index l) {
  const Index q = f.cols();
  if (l < 0 || l >= q) {
    throw IndexOutOfRange("qr_delete_column: index " + std::to_string(l) + " out of range [0, " +
                          std::to_string(q) + ")");
  }
  const Index n = f.rows();
  if (q == 1) {
    QrFactors out = empty_qr(n);
    out.updates = f.updates + 1;
    return out;
  }

  Mat r(q, q - 1);
  r.leftCols(l) = f.r_mat.leftCols(l);
  r.rightCols(q - 1 - l) = f.r_mat.rightCols(q - 1 - l);
  Mat qm = f.q_mat;

  for (Index k = l; k < q - 1; ++k) {
    Eigen::JacobiRotation<double> g;
    g.makeGivens(r(k, k), r(k + 1, k));
    r.applyOnTheLeft(k, k + 1, g.adjoint());
    qm.applyOnTheRight(k, k + 1, g);
    r(k + 1, k) = 0.0;
  }

  QrFactors out;
  out.q_mat = qm.leftCols(q - 1);
  out.r_mat = r.topRows(q - 1);
  out.updates = f.updates + 1;
  detail::canonicalize(out);
  return out;
}

/// Recomputes the factors of `m` when enough incremental updates have
/// accumulated to warrant bounding the drift.
inline void refresh_if_due(QrFactors& f, const Mat& m) {
  if (f.updates < kQrRefreshPeriod) return;
  f = qr_factorize(m);
}

}  // namespace projqp
