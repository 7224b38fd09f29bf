#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "projqp/linalg.hpp"

using namespace projqp;

namespace {

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double orthogonality_error(const QrFactors& f) {
  const Index q = f.cols();
  if (q == 0) return 0.0;
  return max_abs(f.q_mat.transpose() * f.q_mat - Mat::Identity(q, q));
}

Mat remove_col(const Mat& m, Index l) {
  Mat out(m.rows(), m.cols() - 1);
  out << m.leftCols(l), m.rightCols(m.cols() - 1 - l);
  return out;
}

}  // namespace

TEST(QrFactorize, IdentityIsItsOwnFactorization) {
  const QrFactors f = qr_factorize(Mat::Identity(2, 2));
  EXPECT_LE(max_abs(f.q_mat - Mat::Identity(2, 2)), 1e-15);
  EXPECT_LE(max_abs(f.r_mat - Mat::Identity(2, 2)), 1e-15);
}

TEST(QrFactorize, SingleColumn) {
  Mat m(2, 1);
  m << 3.0, 4.0;
  const QrFactors f = qr_factorize(m);
  EXPECT_NEAR(f.q_mat(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(f.q_mat(1, 0), 0.8, 1e-15);
  EXPECT_NEAR(f.r_mat(0, 0), 5.0, 1e-14);
  EXPECT_NEAR(f.q_mat.col(0).norm(), 1.0, 1e-15);
  EXPECT_LE(max_abs(f.product() - m), 1e-14);
}

TEST(QrFactorize, TwoColumnsUpperTriangular) {
  Mat m(2, 2);
  m << 1.0, 1.0, 0.0, 1.0;
  const QrFactors f = qr_factorize(m);
  EXPECT_NEAR(f.r_mat(0, 0), 1.0, 1e-15);
  EXPECT_EQ(f.r_mat(1, 0), 0.0);
  EXPECT_LE(max_abs(f.product() - m), 1e-12);
  EXPECT_GE(f.r_mat(1, 1), 0.0);
}

TEST(QrFactorize, RankDeficientThrows) {
  Mat m(3, 2);
  m << 1.0, 2.0, 0.0, 0.0, 1.0, 2.0;
  EXPECT_THROW(qr_factorize(m), RankDeficient);
}

TEST(QrAppend, OrthogonalColumn) {
  Mat m(3, 1);
  m << 1.0, 0.0, 0.0;
  const QrFactors f = qr_append_column(qr_factorize(m), Vec::Unit(3, 1));
  EXPECT_LE(max_abs(f.q_mat.col(1) - Vec::Unit(3, 1)), 1e-15);
  EXPECT_LE(max_abs(f.r_mat - Mat::Identity(2, 2)), 1e-15);
}

TEST(QrAppend, DiagonalColumnReconstructs) {
  Mat m(2, 1);
  m << 1.0, 0.0;
  Vec v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const QrFactors f = qr_append_column(qr_factorize(m), v);
  Mat expected_r(2, 2);
  expected_r << 1.0, 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0);
  EXPECT_LE(max_abs(f.r_mat - expected_r), 1e-15);
  Mat full(2, 2);
  full << m, v;
  EXPECT_LE(max_abs(f.product() - full), 1e-12);
}

TEST(QrAppend, CollinearColumnIsDependent) {
  Mat m(3, 1);
  m << 1.0, 0.0, 0.0;
  Vec v(3);
  v << 2.0, 0.0, 0.0;
  EXPECT_THROW(qr_append_column(qr_factorize(m), v), DependentColumn);
}

TEST(QrAppend, AppendToEmpty) {
  Vec v(3);
  v << 0.0, -2.0, 0.0;
  const QrFactors f = qr_append_column(empty_qr(3), v);
  EXPECT_EQ(f.cols(), 1);
  EXPECT_NEAR(f.r_mat(0, 0), 2.0, 1e-15);
  EXPECT_LE(max_abs(f.product() - v), 1e-15);
}

TEST(QrDelete, OnlyColumnLeavesEmptyFactors) {
  Mat m(2, 1);
  m << 1.0, 2.0;
  const QrFactors f = qr_delete_column(qr_factorize(m), 0);
  EXPECT_EQ(f.cols(), 0);
  EXPECT_EQ(f.rows(), 2);
}

TEST(QrDelete, FirstOfTwo) {
  Mat m(2, 2);
  m << 1.0, 1.0, 0.0, 1.0;
  const QrFactors f = qr_delete_column(qr_factorize(m), 0);
  ASSERT_EQ(f.cols(), 1);
  EXPECT_NEAR(f.q_mat(0, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.q_mat(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.r_mat(0, 0), std::sqrt(2.0), 1e-15);
}

TEST(QrDelete, MiddleOfRandomOrthonormal) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Mat a(6, 3);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  const Mat orth = Eigen::HouseholderQR<Mat>(a).householderQ() * Mat::Identity(6, 3);
  const QrFactors f = qr_delete_column(qr_factorize(orth), 1);
  EXPECT_LE(max_abs(f.product() - remove_col(orth, 1)), 1e-12);
  EXPECT_LE(orthogonality_error(f), 1e-12);
}

TEST(QrDelete, IndexOutOfRange) {
  const QrFactors f = qr_factorize(Mat::Identity(3, 2));
  EXPECT_THROW(qr_delete_column(f, 2), IndexOutOfRange);
  EXPECT_THROW(qr_delete_column(f, -1), IndexOutOfRange);
}

// Random append/delete sequences checked against a shadow copy of the matrix.
TEST(QrProperty, UpdatesTrackShadowMatrix) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> coin(0, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 3 + trial % 6;
    QrFactors f = empty_qr(n);
    Mat shadow(n, 0);
    for (int op = 0; op < 150; ++op) {
      const bool grow = shadow.cols() == 0 || (shadow.cols() < n && coin(rng) != 0);
      if (grow) {
        Vec v(n);
        for (Index i = 0; i < n; ++i) v(i) = g(rng);
        f = qr_append_column(f, v);
        shadow.conservativeResize(n, shadow.cols() + 1);
        shadow.col(shadow.cols() - 1) = v;
      } else {
        std::uniform_int_distribution<Index> pick(0, shadow.cols() - 1);
        const Index l = pick(rng);
        f = qr_delete_column(f, l);
        shadow = remove_col(shadow, l);
      }
      refresh_if_due(f, shadow);
      ASSERT_LE(orthogonality_error(f), 1e-10);
      ASSERT_LE(max_abs(f.product() - shadow), 1e-10 * (1.0 + max_abs(shadow)));
      for (Index i = 0; i < f.cols(); ++i) {
        ASSERT_GE(f.r_mat(i, i), 0.0);
        for (Index k = 0; k < i; ++k) ASSERT_EQ(f.r_mat(i, k), 0.0);
      }
    }
  }
}

TEST(QrProperty, AppendThenDeleteLastRestoresProduct) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Mat m(5, 3);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    Vec v(5);
    for (Index i = 0; i < 5; ++i) v(i) = g(rng);
    const QrFactors f = qr_factorize(m);
    const QrFactors back = qr_delete_column(qr_append_column(f, v), 3);
    EXPECT_LE(max_abs(back.product() - f.product()), 1e-12);
  }
}

TEST(QrRefresh, ResetsCounterAfterPeriod) {
  QrFactors f = empty_qr(4);
  Mat shadow(4, 0);
  for (std::size_t k = 0; k < kQrRefreshPeriod; ++k) {
    if (f.cols() == 0) {
      f = qr_append_column(f, Vec::Unit(4, 0));
      shadow = Vec::Unit(4, 0);
    } else {
      f = qr_delete_column(f, 0);
      shadow.resize(4, 0);
    }
  }
  ASSERT_EQ(f.updates, kQrRefreshPeriod);
  refresh_if_due(f, shadow);
  EXPECT_EQ(f.updates, 0u);
}
