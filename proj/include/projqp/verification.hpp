#pragma once

// Seeded equivalence suites: the GI solver against brute-force enumeration,
// the box solver against the GI solver, step (a+) against the degenerate
// step followed by an inner step, the reduced projections against the
// direct ones, and the ART solvers on generated interiorful systems.
// Used by the acceptance test and by `projqp oracle-suite`.

#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "projqp/activeset_qp.hpp"
#include "projqp/art.hpp"
#include "projqp/box_qp.hpp"
#include "projqp/oracles.hpp"
#include "projqp/problem.hpp"

namespace projqp::verify {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
  bool passed() const { return cases > 0 && failures == 0; }

  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
};

/// Feasible instances keep a random interior point strictly inside every
/// halfspace. Infeasible ones overwrite the last column with a negative
/// combination of the first two and a right-hand side past its reach.
inline QpProblem random_qp(std::mt19937_64& rng, Index n, Index m, bool feasible) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> margin(0.05, 1.0);
  QpProblem qp{Vec(n), Mat(n, m), Vec(m)};
  for (Index i = 0; i < n; ++i) qp.x_star(i) = 2.0 * u(rng);
  for (Index i = 0; i < qp.c_mat.size(); ++i) qp.c_mat.data()[i] = u(rng);
  Vec w(n);
  for (Index i = 0; i < n; ++i) w(i) = u(rng);
  for (Index j = 0; j < m; ++j) qp.b(j) = qp.c_mat.col(j).dot(w) - margin(rng);
  if (!feasible && m >= 3) {
    const double la = 0.5 + 0.5 * std::abs(u(rng)), lb = 0.5 + 0.5 * std::abs(u(rng));
    qp.c_mat.col(m - 1) = -(la * qp.c_mat.col(0) + lb * qp.c_mat.col(1));
    qp.b(m - 1) = -(la * qp.b(0) + lb * qp.b(1)) + margin(rng);
  }
  return qp;
}

inline SuiteResult qp_oracle_suite(std::uint64_t seed, std::size_t count = 200) {
  SuiteResult res{"gi_solve vs enumeration oracle"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> dim(1, 6), cnt(3, 10);
  for (std::size_t k = 0; k < count; ++k) {
    const Index n = dim(rng), m = cnt(rng);
    const QpProblem qp = random_qp(rng, n, m, k % 3 != 0);
    ++res.cases;
    const auto got = gi_solve(qp);
    const auto expected = oracle::enumerate_projection(qp.x_star, qp.c_mat, qp.b);
    std::ostringstream where;
    where << "instance " << k << " (n=" << n << ", m=" << m << ")";
    if (std::holds_alternative<QpSolution>(got) != expected.has_value()) {
      res.fail(where.str() + ": verdicts differ");
    } else if (expected) {
      const double err = (std::get<QpSolution>(got).x - *expected).norm();
      if (!(err <= 1e-8)) res.fail(where.str() + ": solutions differ by " + sci(err));
    } else if (!verify_certificate(std::get<InfeasibilityCertificate>(got), qp.c_mat, qp.b)) {
      res.fail(where.str() + ": certificate rejected");
    }
  }
  return res;
}

inline BoxQp random_box_qp(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> kind(0, 4);
  BoxQp p;
  p.x_star.resize(n);
  p.c_p.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double a = u(rng), b = a + std::abs(u(rng));
    const int kd = kind(rng);
    p.lower.push_back(kd == 1 || kd == 3 ? ExtendedReal::neg_inf() : ExtendedReal(a));
    p.upper.push_back(kd == 2 || kd == 3 ? ExtendedReal::pos_inf() : ExtendedReal(b));
    p.x_star(i) = clamp(u(rng), p.lower.back(), p.upper.back());
    // Nonzero entries stay away from zero: a tiny entry on an unbounded
    // coordinate sends the solution out to |x| ~ 1/|c_i|, where absolute
    // comparisons measure rounding rather than the solvers.
    const double mag = 0.1 + 0.95 * (u(rng) + 2.0) / 2.0;
    p.c_p(i) = kind(rng) == 0 ? 0.0 : (u(rng) < 0.0 ? -mag : mag);
  }
  if (p.c_p.norm() == 0.0) p.c_p(0) = 1.0;
  p.b_hat = p.c_p.dot(p.x_star) + 0.1 + 3.0 * std::abs(u(rng));
  return p;
}

inline SuiteResult box_suite(std::uint64_t seed, std::size_t count = 200) {
  SuiteResult res{"solve_box_qp vs gi_solve"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> dim(1, 8);
  for (std::size_t k = 0; k < count; ++k) {
    const BoxQp p = random_box_qp(rng, dim(rng));
    ++res.cases;
    const BoxQpResult got = solve_box_qp(p);
    const BoxConstraintSystem sys = expand_box_qp(p);
    const auto direct = gi_solve(sys.qp);
    const std::string where = "instance " + std::to_string(k);
    if ((got.status == BoxQpStatus::Solved) != std::holds_alternative<QpSolution>(direct)) {
      res.fail(where + ": verdicts differ");
    } else if (got.status == BoxQpStatus::Solved) {
      const double err = (got.x - std::get<QpSolution>(direct).x).norm();
      if (!(err <= 1e-8)) res.fail(where + ": solutions differ by " + sci(err));
    } else if (!verify_certificate(*got.certificate, sys.qp.c_mat, sys.qp.b)) {
      res.fail(where + ": certificate rejected");
    }
  }
  return res;
}

/// A degenerate instance: q constraints tight at x_star with zero
/// multipliers and one violated constraint. Instances where the first
/// round of step (a+) changes nothing are skipped; `count` compared
/// instances are required.
inline SuiteResult a_plus_suite(std::uint64_t seed, std::size_t count = 100) {
  SuiteResult res{"step (a+) vs degenerate step then inner step"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<Index> dim(3, 7);
  const std::size_t max_attempts = 200 * count;
  for (std::size_t attempt = 0; attempt < max_attempts && res.cases < count; ++attempt) {
    const Index n = dim(rng);
    const Index q = std::uniform_int_distribution<Index>(2, n - 1)(rng);
    QpProblem qp{Vec(n), Mat(n, q + 1), Vec(q + 1)};
    for (Index i = 0; i < n; ++i) qp.x_star(i) = g(rng);
    for (Index i = 0; i < qp.c_mat.size(); ++i) qp.c_mat.data()[i] = g(rng);
    for (Index j = 0; j < q; ++j) qp.b(j) = qp.c_mat.col(j).dot(qp.x_star);
    qp.b(q) = qp.c_mat.col(q).dot(qp.x_star) + 1.0 + std::abs(g(rng));
    STuple s = empty_s_tuple(qp.x_star);
    for (Index j = 0; j < q; ++j) detail::append_constraint(s, j, qp.c_mat.col(j), 0.0);

    const StepDirection a = degenerate_direction(s, q, qp);
    if (a.dropped.empty()) continue;
    const StepDirection ap =
        improve_step_direction(a, q, qp, a.dropped, ImproveOptions{1, EnteringRule::LowestIndex, 0.0});
    Index entering = -1;
    for (const Index j : ap.tuple.j_set) {
      if (!a.tuple.contains(j)) entering = j;
    }
    if (entering < 0) continue;

    ++res.cases;
    const std::string where = "instance " + std::to_string(res.cases - 1);
    const StepOutcome first = complete_degenerate_step(ap, q, qp, s);
    const StepOutcome deg = degenerate_inner_gi_step(s, q, qp);
    if (!first.advanced() || !deg.advanced()) {
      res.fail(where + ": unexpected certificate");
      continue;
    }
    if (!(qp.c_mat.col(entering).dot(deg.tuple().x) < qp.b(entering))) {
      res.fail(where + ": re-entering constraint not violated after the degenerate step");
      continue;
    }
    const StepOutcome second = inner_gi_step(deg.tuple(), entering, qp);
    if (!second.advanced()) {
      res.fail(where + ": unexpected certificate in the inner step");
      continue;
    }
    const double err = (first.tuple().x - second.tuple().x).norm();
    if (!(err <= 1e-10)) res.fail(where + ": iterates differ by " + sci(err));
  }
  if (res.cases < count) res.fail("only " + std::to_string(res.cases) + " instances found");
  return res;
}

inline SuiteResult polyhedron_reduction_suite(std::uint64_t seed, std::size_t count = 100) {
  SuiteResult res{"project_polyhedron_reduced vs gi_solve"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<Index> dim(6, 40);
  for (std::size_t k = 0; k < count; ++k) {
    const Index n = dim(rng);
    const Index m = std::uniform_int_distribution<Index>(1, (n - 1) / 2)(rng);
    Mat c(n, m);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = g(rng);
    Vec x(n);
    for (Index i = 0; i < n; ++i) x(i) = g(rng);
    Vec b = c.transpose() * x;
    for (Index j = 0; j < m; ++j) b(j) += g(rng);
    ++res.cases;
    const Vec reduced = project_polyhedron_reduced(x, c, b);
    const auto direct = gi_solve(QpProblem{x, c, b});
    const std::string where = "instance " + std::to_string(k);
    if (!std::holds_alternative<QpSolution>(direct)) {
      res.fail(where + ": direct solve reported infeasibility");
      continue;
    }
    const double err = (reduced - std::get<QpSolution>(direct).x).norm();
    if (!(err <= 1e-8)) res.fail(where + ": projections differ by " + sci(err));
  }
  return res;
}

inline SuiteResult cone_reduction_suite(std::uint64_t seed, std::size_t count = 100) {
  SuiteResult res{"cone_project_reduced vs cone_project"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<Index> dim(6, 40);
  for (std::size_t k = 0; k < count; ++k) {
    const Index n = dim(rng);
    const Index q = std::uniform_int_distribution<Index>(1, (n - 1) / 2)(rng);
    Mat n0(n, q);
    for (Index i = 0; i < n0.size(); ++i) n0.data()[i] = g(rng);
    Vec c(n);
    for (Index i = 0; i < n; ++i) c(i) = g(rng);
    ++res.cases;
    const double err = (cone_project_reduced(n0, c).y - cone_project(n0, c).y).norm();
    if (!(err <= 1e-8)) res.fail("instance " + std::to_string(k) + ": projections differ by " + sci(err));
  }
  return res;
}

struct ArtSuiteResult {
  SuiteResult art3{"art3_solve on interiorful systems"};
  SuiteResult extended{"extended_art_solve on interiorful systems"};
  SuiteResult fejer{"extended ART Fejer monotonicity"};
  std::size_t max_iterations = 0;
};

inline ArtSuiteResult art_suite(std::uint64_t seed, std::size_t count = 100) {
  ArtSuiteResult res;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const auto n = static_cast<Index>(1 + rng() % 10);
    const auto m = static_cast<std::size_t>(1 + rng() % 20);
    const Problem p = generate_problem("hyperslabs-with-interior", n, m, rng());
    const HyperslabSystem sys = to_hyperslab_system(p.sets);
    const std::string where = "system " + std::to_string(k);

    ++res.art3.cases;
    const SolveReport r3 = art3_solve(p.x0, sys, ArtOptions{100000});
    if (r3.status != SolveStatus::Solved || !sys.contains(r3.x)) res.art3.fail(where + ": no exact membership");
    if (!r3.trace.empty()) res.max_iterations = std::max(res.max_iterations, r3.trace.back().iter);

    ++res.extended.cases;
    ExtendedArtPolicy policy;
    policy.max_iters = 100000;
    const ExtendedArtReport ext = extended_art_solve(p.x0, sys, policy);
    if (ext.report.status != SolveStatus::Solved || !sys.contains(ext.report.x)) {
      res.extended.fail(where + ": no exact membership");
    }
    if (ext.times_in_band != 0) res.extended.fail(where + ": P_times taken in case 2 or 3");
    if (!ext.report.trace.empty()) res.max_iterations = std::max(res.max_iterations, ext.report.trace.back().iter);

    ++res.fejer.cases;
    for (std::size_t i = 1; i < ext.fejer_sequence.size(); ++i) {
      const double before = (ext.fejer_sequence[i - 1] - *p.witness).norm();
      const double after = (ext.fejer_sequence[i] - *p.witness).norm();
      if (!(after <= before + 1e-9)) {
        res.fejer.fail(where + ": distance to the witness grew at step " + std::to_string(i));
        break;
      }
    }
  }
  return res;
}

}  // namespace projqp::verify
