#include <gtest/gtest.h>

#include <random>

#include "projqp/box_qp.hpp"

using namespace projqp;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

const ExtendedReal kNegInf = ExtendedReal::neg_inf();
const ExtendedReal kPosInf = ExtendedReal::pos_inf();

}  // namespace

TEST(BoxStepDirection, InteriorPointUsesFullNormal) {
  EXPECT_EQ(box_step_direction(v2(0.5, 0.5), v2(1, -2), {0.0, 0.0}, {1.0, 1.0}), v2(1, -2));
}

TEST(BoxStepDirection, TightCoordinateMovingAwayKeepsComponent) {
  const Vec d = box_step_direction(v2(1, 0.5), v2(-1, 1), {0.0, 0.0}, {1.0, 1.0});
  EXPECT_EQ(d, v2(-1, 1));
}

TEST(BoxStepDirection, NormalConeCornerGivesZero) {
  EXPECT_EQ(box_step_direction(v2(1, 1), v2(1, 1), {0.0, 0.0}, {1.0, 1.0}), v2(0, 0));
}

TEST(BoxStepDirection, ZeroComponentStaysZero) {
  EXPECT_EQ(box_step_direction(v2(0.5, 0.5), v2(0, 1), {0.0, 0.0}, {1.0, 1.0}), v2(0, 1));
}

TEST(SolveBoxQp, SingleStepNoClamp) {
  const BoxQp p{v2(1, 0.5), {0.0, 0.0}, {1.0, 1.0}, v2(-1, 1), 0.5};
  const BoxQpResult res = solve_box_qp(p);
  ASSERT_EQ(res.status, BoxQpStatus::Solved);
  ASSERT_EQ(res.y.size(), 1u);
  EXPECT_LE((res.y[0] - v2(0.5, 1)).norm(), 1e-15);
  EXPECT_LE((res.x - v2(0.5, 1)).norm(), 1e-15);
  const auto oracle = gi_solve(expand_box_qp(p).qp);
  ASSERT_TRUE(std::holds_alternative<QpSolution>(oracle));
  EXPECT_LE((std::get<QpSolution>(oracle).x - res.x).norm(), 1e-12);
}

TEST(SolveBoxQp, CornerInfeasible) {
  const BoxQp p{v2(1, 1), {0.0, 0.0}, {1.0, 1.0}, v2(1, 1), 3.0};
  const BoxQpResult res = solve_box_qp(p);
  ASSERT_EQ(res.status, BoxQpStatus::Infeasible);
  EXPECT_EQ(res.y.size(), 0u);
  ASSERT_TRUE(res.certificate);
  const BoxConstraintSystem sys = expand_box_qp(p);
  EXPECT_TRUE(verify_certificate(*res.certificate, sys.qp.c_mat, sys.qp.b));
  // Brute-force maximum of c_p over the vertices is 2 < 3.
  double best = -INFINITY;
  for (const Vec& v : {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)}) best = std::max(best, p.c_p.dot(v));
  EXPECT_LT(best, p.b_hat);
}

TEST(SolveBoxQp, UnboundedCoordinateMatchesHalfspaceProjection) {
  const Vec xs = v2(0.2, 0.3);
  const BoxQp p{xs, {0.0, 0.0}, {kPosInf, 1.0}, v2(1, 0), xs(0) + 5.0};
  const BoxQpResult res = solve_box_qp(p);
  ASSERT_EQ(res.status, BoxQpStatus::Solved);
  EXPECT_EQ(res.y.size(), 1u);
  EXPECT_LE((res.x - v2(5.2, 0.3)).norm(), 1e-14);
  const auto oracle = gi_solve(expand_box_qp(p).qp);
  EXPECT_LE((std::get<QpSolution>(oracle).x - res.x).norm(), 1e-12);
}

TEST(SolveBoxQp, RejectsStartOutsideBox) {
  const BoxQp p{v2(2, 0), {0.0, 0.0}, {1.0, 1.0}, v2(1, 0), 3.0};
  EXPECT_THROW(solve_box_qp(p), PreconditionViolated);
}

TEST(SolveBoxQp, MatchesGiSolveAndIsMonotone) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> kind(0, 4), dim(1, 8);
  int infeasible = 0;
  for (int k = 0; k < 300; ++k) {
    const Index n = dim(rng);
    BoxQp p;
    p.x_star.resize(n);
    p.c_p.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double a = u(rng), b = a + std::abs(u(rng));
      const int kd = kind(rng);
      p.lower.push_back(kd == 1 || kd == 3 ? kNegInf : ExtendedReal(a));
      p.upper.push_back(kd == 2 || kd == 3 ? kPosInf : ExtendedReal(b));
      p.x_star(i) = clamp(u(rng), p.lower.back(), p.upper.back());
      p.c_p(i) = kind(rng) == 0 ? 0.0 : u(rng);
    }
    if (p.c_p.norm() == 0.0) p.c_p(0) = 1.0;
    p.b_hat = p.c_p.dot(p.x_star) + 0.1 + 3.0 * std::abs(u(rng));
    const BoxQpResult res = solve_box_qp(p);
    const BoxConstraintSystem sys = expand_box_qp(p);
    const auto oracle = gi_solve(sys.qp);
    ASSERT_EQ(res.status == BoxQpStatus::Solved, std::holds_alternative<QpSolution>(oracle)) << k;
    if (res.status == BoxQpStatus::Solved) {
      EXPECT_LE((std::get<QpSolution>(oracle).x - res.x).norm(), 1e-8) << k;
    } else {
      ++infeasible;
      EXPECT_TRUE(verify_certificate(*res.certificate, sys.qp.c_mat, sys.qp.b));
    }
    for (std::size_t j = 1; j < res.x_tilde.size(); ++j) {
      EXPECT_GT(p.c_p.dot(res.x_tilde[j]), p.c_p.dot(res.x_tilde[j - 1]));
      EXPECT_LE(p.c_p.dot(res.x_tilde[j]), p.b_hat + 1e-9 * (1.0 + std::abs(p.b_hat)));
    }
    Index finite = 0;
    for (Index i = 0; i < n; ++i) finite += p.lower[static_cast<std::size_t>(i)].is_finite() || p.upper[static_cast<std::size_t>(i)].is_finite();
    EXPECT_LE(static_cast<Index>(res.y.size()), finite + 1);
  }
  EXPECT_GT(infeasible, 10);
}
