#pragma once

// Dual active-set projection onto {x : C^T x >= b} with the identity
// Hessian. The solver state is the s-tuple (x, J, u, N, Q, R): x is the
// projection of x* onto the constraints indexed by J, all of which are
// tight at x, with multipliers u >= 0 satisfying x* - x = -N u.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "projqp/errors.hpp"
#include "projqp/linalg.hpp"

namespace projqp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tolerances {
  double feas = 1e-9;      ///< scaled by (1 + |x|)
  double dual = 1e-10;
  double cert = 1e-10;
  double step = 1e-12;
  double zero_dir = 1e-10; ///< |z| test, scaled by (1 + |c_p|)

  double feas_at(const Vec& x) const { return feas * (1.0 + x.norm()); }
  /// Also zero when |z|^2 = z^T c is below the rounding error of z^T c,
  /// where its sign is no longer reliable.
  bool is_zero_direction(const Vec& z, const Vec& c) const {
    return z.norm() <= zero_dir * (1.0 + c.norm()) ||
           z.squaredNorm() <= 16.0 * std::numeric_limits<double>::epsilon() * c.squaredNorm();
  }
};

/// min 0.5 |x - x_star|^2  s.t.  c_mat^T x >= b.
struct QpProblem {
  Vec x_star;
  Mat c_mat;  ///< n x m, column j is the normal c_j
  Vec b;

  Index dim() const { return x_star.size(); }
  Index num_constraints() const { return c_mat.cols(); }
  double residual(Index j, const Vec& x) const { return c_mat.col(j).dot(x) - b(j); }

  void validate() const {
    if (!x_star.allFinite()) throw InvalidInput("QpProblem: x_star has non-finite entries");
    if (c_mat.rows() != x_star.size() && c_mat.cols() > 0) {
      throw InvalidInput("QpProblem: normal matrix row count does not match x_star");
    }
    if (b.size() != c_mat.cols()) throw InvalidInput("QpProblem: b length does not match normals");
    if (!c_mat.allFinite() || !b.allFinite()) throw InvalidInput("QpProblem: non-finite data");
    for (Index j = 0; j < c_mat.cols(); ++j) {
      if (c_mat.col(j).norm() == 0.0) {
        throw InvalidInput("QpProblem: constraint " + std::to_string(j) + " has a zero normal");
      }
    }
  }
};

struct STuple {
  Vec x;
  std::vector<Index> j_set;  ///< constraint indices, in column order of n_mat
  Vec u;
  Mat n_mat;
  QrFactors qr;

  Index q() const { return static_cast<Index>(j_set.size()); }

  /// Position of constraint p in j_set, or -1.
  Index position_of(Index p) const {
    const auto it = std::find(j_set.begin(), j_set.end(), p);
    return it == j_set.end() ? Index{-1} : static_cast<Index>(it - j_set.begin());
  }
  bool contains(Index p) const { return position_of(p) >= 0; }
};

/// Farkas witness: lambda >= 0 with C_{J'} lambda = 0 and lambda^T b_{J'} > 0.
struct InfeasibilityCertificate {
  std::vector<Index> j_prime;
  Vec lambda;
};

/// Advanced(STuple) or Infeasible(certificate), plus bookkeeping of the
/// constraints dropped along the way.
struct StepOutcome {
  std::variant<STuple, InfeasibilityCertificate> value;
  std::vector<Index> dropped;
  std::size_t partial_steps = 0;

  bool advanced() const { return std::holds_alternative<STuple>(value); }
  const STuple& tuple() const { return std::get<STuple>(value); }
  STuple& tuple() { return std::get<STuple>(value); }
  const InfeasibilityCertificate& certificate() const {
    return std::get<InfeasibilityCertificate>(value);
  }
};

class InfeasibleProblem : public Error {
 public:
  explicit InfeasibleProblem(InfeasibilityCertificate cert)
      : Error("constraint system is infeasible"), cert_(std::move(cert)) {}
  const InfeasibilityCertificate& certificate() const { return cert_; }

 private:
  InfeasibilityCertificate cert_;
};

// ---------------------------------------------------------------------------
// Invariant auditing. When a StepAudit is installed on the current thread,
// every step re-checks the s-tuple invariants of its result and the strict
// increase of v.

struct StepAudit {
  std::size_t steps_checked = 0;
  std::size_t certificates_checked = 0;
  std::size_t violations = 0;
  std::vector<std::string> messages;
  /// Tolerances for the checks, independent of those the steps run with.
  Tolerances tol;

  void record(std::string msg) {
    ++violations;
    if (messages.size() < 32) messages.push_back(std::move(msg));
  }
};

namespace detail {
inline thread_local StepAudit* g_audit = nullptr;
}  // namespace detail

class ScopedStepAudit {
 public:
  explicit ScopedStepAudit(StepAudit& audit) : prev_(detail::g_audit) { detail::g_audit = &audit; }
  ~ScopedStepAudit() { detail::g_audit = prev_; }
  ScopedStepAudit(const ScopedStepAudit&) = delete;
  ScopedStepAudit& operator=(const ScopedStepAudit&) = delete;

 private:
  StepAudit* prev_;
};

/// Returns a description of every violated s-tuple invariant (empty when
/// the tuple is valid). The projection property follows from the KKT
/// checks: tight active constraints, u >= 0 and x* - x = -N u.
inline std::vector<std::string> check_s_tuple(const STuple& s, const QpProblem& qp,
                                              const Tolerances& tol = {}) {
  std::vector<std::string> bad;
  const Index q = s.q();
  if (s.n_mat.cols() != q || s.u.size() != q || s.qr.cols() != q) {
    bad.emplace_back("dimension mismatch between J, u, N and QR");
    return bad;
  }
  for (Index i = 0; i < q; ++i) {
    const Index j = s.j_set[static_cast<std::size_t>(i)];
    if (j < 0 || j >= qp.num_constraints()) {
      bad.emplace_back("J entry out of range");
      return bad;
    }
    if (s.n_mat.col(i) != qp.c_mat.col(j)) bad.push_back("N column " + std::to_string(i) + " != c_J(i)");
  }
  if (q > 0) {
    const Mat qtq = s.qr.q_mat.transpose() * s.qr.q_mat - Mat::Identity(q, q);
    if (qtq.cwiseAbs().maxCoeff() > kQrTol) bad.emplace_back("Q columns not orthonormal");
    const double nmax = s.n_mat.cwiseAbs().maxCoeff();
    if ((s.qr.product() - s.n_mat).cwiseAbs().maxCoeff() > kQrTol * (1.0 + nmax)) {
      bad.emplace_back("QR does not reproduce N");
    }
  }
  const double feas = tol.feas_at(s.x);
  double scale = 1.0 + qp.x_star.norm() + s.x.norm();
  for (Index i = 0; i < q; ++i) {
    const Index j = s.j_set[static_cast<std::size_t>(i)];
    const double cn = qp.c_mat.col(j).norm();
    if (std::abs(qp.residual(j, s.x)) > feas * (1.0 + cn)) {
      bad.push_back("active constraint " + std::to_string(j) + " not tight");
    }
    if (s.u(i) < -tol.dual) bad.push_back("negative multiplier for constraint " + std::to_string(j));
    scale += std::abs(s.u(i)) * cn;
  }
  const Vec stationarity = (qp.x_star - s.x) + (q > 0 ? Vec(s.n_mat * s.u) : Vec::Zero(s.x.size()));
  if (stationarity.norm() > tol.feas * scale) bad.emplace_back("x* - x != -N u");
  return bad;
}

/// Checks lambda >= 0, |C_{J'} lambda| small and lambda^T b_{J'} > cert_tol.
inline bool verify_certificate(const InfeasibilityCertificate& cert, const Mat& c_mat, const Vec& b,
                               const Tolerances& tol = {}) {
  if (cert.j_prime.empty() || static_cast<Index>(cert.j_prime.size()) != cert.lambda.size()) return false;
  if (!cert.lambda.allFinite()) return false;
  Vec combo = Vec::Zero(c_mat.rows());
  double rhs = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < cert.j_prime.size(); ++k) {
    const Index j = cert.j_prime[k];
    if (j < 0 || j >= c_mat.cols()) return false;
    const double lam = cert.lambda(static_cast<Index>(k));
    if (lam < 0.0) return false;
    combo += lam * c_mat.col(j);
    rhs += lam * b(j);
    scale += lam * c_mat.col(j).norm();
  }
  return combo.norm() <= tol.cert * scale && rhs > tol.cert;
}

namespace detail {

inline void audit_step(const STuple& before, const StepOutcome& out, const QpProblem& qp, Index entering,
                       const char* which) {
  StepAudit* audit = g_audit;
  if (audit == nullptr) return;
  if (!out.advanced()) {
    ++audit->certificates_checked;
    if (!verify_certificate(out.certificate(), qp.c_mat, qp.b, audit->tol)) {
      audit->record(std::string(which) + ": certificate failed verification");
    }
    return;
  }
  ++audit->steps_checked;
  const STuple& after = out.tuple();
  for (const auto& msg : check_s_tuple(after, qp, audit->tol)) audit->record(std::string(which) + ": " + msg);
  // v(x') - v(x) evaluated without cancellation against v itself. Increases
  // below the rounding level of this expression cannot be resolved and are
  // only rejected when they are clearly negative.
  const Vec dx = after.x - before.x;
  const double dv = 0.5 * dx.squaredNorm() + dx.dot(before.x - qp.x_star);
  const double noise =
      8.0 * std::numeric_limits<double>::epsilon() * (dx.norm() * (before.x - qp.x_star).norm() + dx.squaredNorm());
  // A violation below the resolution of c^T x gives a step that rounds
  // away entirely; that is the only accepted case of dx = 0.
  const Vec c = qp.c_mat.col(entering);
  const double resolution =
      4.0 * std::numeric_limits<double>::epsilon() * (std::abs(qp.b(entering)) + c.norm() * before.x.norm());
  const bool unresolvable = qp.b(entering) - c.dot(before.x) <= resolution;
  if (dx.norm() == 0.0 ? !unresolvable : (dv < -noise || (dv <= 0.0 && noise == 0.0))) {
    audit->record(std::string(which) + ": v did not strictly increase");
  }
}

inline Vec r_coefficients(const STuple& s, const Vec& c) { return s.qr.solve_r(s.qr.project_coords(c)); }

inline void drop_position(STuple& s, Index l) {
  const auto pos = static_cast<std::size_t>(l);
  s.j_set.erase(s.j_set.begin() + static_cast<std::ptrdiff_t>(pos));
  const Index q = s.u.size();
  Vec u(q - 1);
  u << s.u.head(l), s.u.tail(q - 1 - l);
  s.u = std::move(u);
  Mat n(s.n_mat.rows(), q - 1);
  n << s.n_mat.leftCols(l), s.n_mat.rightCols(q - 1 - l);
  s.n_mat = std::move(n);
  s.qr = qr_delete_column(s.qr, l);
  refresh_if_due(s.qr, s.n_mat);
}

inline void append_constraint(STuple& s, Index p, const Vec& c, double multiplier) {
  s.qr = qr_append_column(s.qr, c);
  s.j_set.push_back(p);
  const Index q = s.u.size();
  s.u.conservativeResize(q + 1);
  s.u(q) = multiplier;
  s.n_mat.conservativeResize(c.size(), q + 1);
  s.n_mat.col(q) = c;
  refresh_if_due(s.qr, s.n_mat);
}

inline InfeasibilityCertificate make_certificate(const STuple& s, Index p, const Vec& r) {
  InfeasibilityCertificate cert;
  cert.j_prime = s.j_set;
  cert.j_prime.push_back(p);
  cert.lambda.resize(s.q() + 1);
  for (Index i = 0; i < s.q(); ++i) cert.lambda(i) = std::max(-r(i), 0.0);
  cert.lambda(s.q()) = 1.0;
  return cert;
}

inline void check_entering(const STuple& s, Index p, const QpProblem& qp, const Tolerances& tol) {
  if (p < 0 || p >= qp.num_constraints()) throw IndexOutOfRange("constraint index out of range");
  if (s.contains(p)) throw PreconditionViolated("constraint " + std::to_string(p) + " is already active");
  if (qp.c_mat.col(p).norm() == 0.0) throw InvalidInput("constraint has a zero normal");
  const double viol = qp.residual(p, s.x) / qp.c_mat.col(p).norm();
  if (!(viol < -tol.feas_at(s.x))) {
    throw PreconditionViolated("constraint " + std::to_string(p) + " is not violated at x");
  }
}

}  // namespace detail

inline STuple empty_s_tuple(const Vec& x_star) {
  if (!x_star.allFinite()) throw InvalidInput("empty_s_tuple: x_star has non-finite entries");
  return STuple{x_star, {}, Vec(0), Mat(x_star.size(), 0), empty_qr(x_star.size())};
}

/// Sets all multipliers to zero; afterwards the tuple is valid for the
/// problem whose x_star is the current x.
inline void reset_multipliers(STuple& s) { s.u.setZero(); }

/// Adds the violated constraint p. Multipliers at or below dual_tol are
/// treated as zero, so columns carrying them are dropped by zero-length
/// dual steps exactly as in the degenerate variant.
inline StepOutcome inner_gi_step(STuple s, Index p, const QpProblem& qp, const Tolerances& tol = {}) {
  detail::check_entering(s, p, qp, tol);
  const STuple before = s;
  const Vec c = qp.c_mat.col(p);
  const double bp = qp.b(p);
  for (Index i = 0; i < s.q(); ++i) {
    if (s.u(i) <= tol.dual) s.u(i) = 0.0;
  }
  double u_new = 0.0;
  const std::size_t cap = static_cast<std::size_t>(s.q() + qp.num_constraints());
  StepOutcome out{s};

  for (;;) {
    const Vec z = s.qr.orth_complement(c);
    const Vec r = detail::r_coefficients(s, c);

    double t1 = kInf;
    Index l = -1;
    for (Index i = 0; i < s.q(); ++i) {
      if (r(i) > tol.dual) {
        const double ratio = s.u(i) / r(i);
        if (ratio < t1) {
          t1 = ratio;
          l = i;
        }
      }
    }
    const bool z_zero = tol.is_zero_direction(z, c);
    const double t2 = z_zero ? kInf : (bp - c.dot(s.x)) / z.squaredNorm();

    if (l < 0 && z_zero) {
      out.value = detail::make_certificate(s, p, r);
      detail::audit_step(before, out, qp, p, "inner_gi_step");
      return out;
    }

    // Ties within rounding go to the full step.
    if (!z_zero && t2 <= t1 + tol.step * (1.0 + t1)) {
      s.x += t2 * z;
      if (s.q() > 0) s.u = (s.u - t2 * r).cwiseMax(0.0);
      u_new += t2;
      detail::append_constraint(s, p, c, u_new);
      out.value = std::move(s);
      detail::audit_step(before, out, qp, p, "inner_gi_step");
      return out;
    }

    // Dual-only step (z = 0) or partial step; either way constraint l leaves.
    // A z that is resolvable but too short for a reliable full step still
    // moves x, so that x* - x = -N u keeps holding.
    if (z.norm() > tol.zero_dir * (1.0 + c.norm())) s.x += t1 * z;
    s.u = (s.u - t1 * r).cwiseMax(0.0);
    u_new += t1;
    out.dropped.push_back(s.j_set[static_cast<std::size_t>(l)]);
    detail::drop_position(s, l);
    if (++out.partial_steps > cap) {
      throw IterationLimit("inner_gi_step: partial-step cap exceeded (possible cycling)");
    }
  }
}

// ---------------------------------------------------------------------------
// Degenerate inner step, split into its phases so that the direction can be
// refined between them.

/// Working state of a degenerate step between choosing and taking the step.
struct StepDirection {
  STuple tuple;                ///< working active set at the unchanged x, u = 0
  Vec r;                       ///< coefficients of c_p on the working normals, r <= 0
  Vec y;                       ///< N r, lies in cone(-N)
  Vec z;                       ///< c_p - y
  std::vector<Index> dropped;  ///< constraints removed from the starting set
  bool cone_optimal = false;   ///< set when no entering index remains
};

enum class EnteringRule { LowestIndex, MostViolated };

struct ImproveOptions {
  std::size_t max_rounds = 1;
  EnteringRule rule = EnteringRule::LowestIndex;
  /// Stop once |c_p - y| has fallen below this fraction of its starting value.
  double target_ratio = 0.0;
};

namespace detail {

inline std::optional<Index> pick_entering(const StepDirection& d, const Mat& c_mat,
                                          std::span<const Index> pool, EnteringRule rule,
                                          const Tolerances& tol) {
  std::optional<Index> best;
  double best_score = 0.0;
  for (const Index j : pool) {
    if (d.tuple.contains(j)) continue;
    const double gain = -c_mat.col(j).dot(d.z);
    if (!(gain > tol.dual * (1.0 + c_mat.col(j).norm()))) continue;
    const double score = gain / c_mat.col(j).norm();
    if (!best || (rule == EnteringRule::LowestIndex && j < *best) ||
        (rule == EnteringRule::MostViolated && score > best_score)) {
      best = j;
      best_score = score;
    }
  }
  return best;
}

// Primal active-set refinement of y toward P_cone(-N0)(c). Each round
// brings in one entering column and moves the coefficients along the
// segment toward the least-squares point, dropping columns that reach zero.
inline StepDirection improve_direction(StepDirection d, const Vec& c, const Mat& c_mat,
                                       std::span<const Index> pool, const ImproveOptions& opt,
                                       const Tolerances& tol) {
  const double start = d.z.norm();
  for (std::size_t round = 0; round < opt.max_rounds; ++round) {
    const auto entering = pick_entering(d, c_mat, pool, opt.rule, tol);
    if (!entering) {
      d.cone_optimal = true;
      break;
    }
    STuple& t = d.tuple;
    const Index q = t.q();
    Vec w(q + 1);
    w << d.r, 0.0;
    append_constraint(t, *entering, c_mat.col(*entering), 0.0);
    std::erase(d.dropped, *entering);

    Vec ls = r_coefficients(t, c);
    for (;;) {
      const Index last = t.q() - 1;
      double s = kInf;
      Index l = -1;
      for (Index i = 0; i < last; ++i) {
        if (ls(i) > tol.dual) {
          const double ratio = w(i) / (w(i) - ls(i));
          if (ratio < s) {
            s = ratio;
            l = i;
          }
        }
      }
      if (l < 0) break;
      w += s * (ls - w);
      d.dropped.push_back(t.j_set[static_cast<std::size_t>(l)]);
      Vec shrunk(w.size() - 1);
      shrunk << w.head(l), w.tail(w.size() - 1 - l);
      w = std::move(shrunk);
      drop_position(t, l);
      ls = r_coefficients(t, c);
    }
    d.r = ls.cwiseMin(0.0);
    d.y = t.n_mat * d.r;
    d.z = c - d.y;
    if (opt.target_ratio > 0.0 && d.z.norm() <= opt.target_ratio * start) break;
  }
  return d;
}

}  // namespace detail

/// Step (a): drop active columns with positive coefficient until r <= 0.
inline StepDirection degenerate_direction(STuple s, Index p, const QpProblem& qp, const Tolerances& tol = {}) {
  detail::check_entering(s, p, qp, tol);
  if (s.q() > 0 && s.u.cwiseAbs().maxCoeff() > tol.dual) {
    throw PreconditionViolated("degenerate step requires all multipliers to be zero");
  }
  s.u.setZero();
  const Vec c = qp.c_mat.col(p);
  StepDirection d;
  for (;;) {
    const Vec r = detail::r_coefficients(s, c);
    Index l = -1;
    for (Index i = 0; i < s.q(); ++i) {
      if (r(i) > tol.dual) {
        l = i;
        break;
      }
    }
    if (l < 0) {
      d.r = r.cwiseMin(0.0);
      break;
    }
    d.dropped.push_back(s.j_set[static_cast<std::size_t>(l)]);
    detail::drop_position(s, l);
  }
  d.z = s.qr.orth_complement(c);
  d.y = c - d.z;
  d.tuple = std::move(s);
  return d;
}

/// Step (a+): refines the slide direction by bringing back columns from
/// `j_pool` (normally the ones dropped in step (a)).
inline StepDirection improve_step_direction(StepDirection d, Index p, const QpProblem& qp,
                                            std::span<const Index> j_pool, const ImproveOptions& opt = {},
                                            const Tolerances& tol = {}) {
  if (j_pool.empty() || opt.max_rounds == 0) return d;
  return detail::improve_direction(std::move(d), qp.c_mat.col(p), qp.c_mat, j_pool, opt, tol);
}

/// Steps (b) and (c): full step along z, or a certificate when z = 0.
inline StepOutcome complete_degenerate_step(StepDirection d, Index p, const QpProblem& qp,
                                            const STuple& before, const Tolerances& tol = {}) {
  const Vec c = qp.c_mat.col(p);
  StepOutcome out{d.tuple};
  out.dropped = d.dropped;
  if (tol.is_zero_direction(d.z, c)) {
    out.value = detail::make_certificate(d.tuple, p, d.r);
    detail::audit_step(before, out, qp, p, "degenerate_inner_gi_step");
    return out;
  }
  STuple s = std::move(d.tuple);
  const double t2 = (qp.b(p) - c.dot(s.x)) / d.z.dot(c);
  s.x += t2 * d.z;
  s.u = -t2 * d.r;
  detail::append_constraint(s, p, c, t2);
  out.value = std::move(s);
  detail::audit_step(before, out, qp, p, "degenerate_inner_gi_step");
  return out;
}

/// Inner step for tuples whose multipliers are all zero. `improve` rounds
/// of step (a+) run between the direction and the step.
inline StepOutcome degenerate_inner_gi_step(STuple s, Index p, const QpProblem& qp, const Tolerances& tol = {},
                                            const ImproveOptions& improve = {0, EnteringRule::LowestIndex, 0.0}) {
  const STuple before = s;
  StepDirection d = degenerate_direction(std::move(s), p, qp, tol);
  if (improve.max_rounds > 0 && !d.dropped.empty()) {
    const std::vector<Index> pool = d.dropped;
    d = improve_step_direction(std::move(d), p, qp, pool, improve, tol);
  }
  return complete_degenerate_step(std::move(d), p, qp, before, tol);
}

// ---------------------------------------------------------------------------

enum class ViolationRule { MostViolated, FirstViolated };

struct GiOptions {
  std::size_t max_inner_steps = 100000;
  ViolationRule rule = ViolationRule::MostViolated;
  Tolerances tol{};
};

struct QpSolution {
  Vec x;
  std::vector<Index> j_set;
  Vec u;
  std::size_t inner_steps = 0;
};

using QpResult = std::variant<QpSolution, InfeasibilityCertificate>;

/// Index of a constraint violated at s.x (by normalized residual), if any.
inline std::optional<Index> find_violated(const STuple& s, const QpProblem& qp, ViolationRule rule,
                                          const Tolerances& tol = {}) {
  const double feas = tol.feas_at(s.x);
  std::optional<Index> best;
  double worst = 0.0;
  for (Index j = 0; j < qp.num_constraints(); ++j) {
    if (s.contains(j)) continue;
    const double viol = qp.residual(j, s.x) / qp.c_mat.col(j).norm();
    if (viol < -feas) {
      if (rule == ViolationRule::FirstViolated) return j;
      if (!best || viol < worst) {
        best = j;
        worst = viol;
      }
    }
  }
  return best;
}

/// Continues the dual active-set iteration from a valid s-tuple until every
/// constraint holds or infeasibility is certified.
inline QpResult gi_resume(STuple s, const QpProblem& qp, const GiOptions& opt = {}) {
  std::size_t steps = 0;
  while (const auto p = find_violated(s, qp, opt.rule, opt.tol)) {
    if (steps >= opt.max_inner_steps) throw IterationLimit("gi_solve: inner step limit reached");
    StepOutcome out = inner_gi_step(std::move(s), *p, qp, opt.tol);
    ++steps;
    if (!out.advanced()) return out.certificate();
    s = std::move(out.tuple());
  }
  return QpSolution{std::move(s.x), std::move(s.j_set), std::move(s.u), steps};
}

inline QpResult gi_solve(const QpProblem& qp, const GiOptions& opt = {}) {
  qp.validate();
  return gi_resume(empty_s_tuple(qp.x_star), qp, opt);
}

using InnerQpSolver = std::function<QpResult(const QpProblem&)>;

/// Projects x onto {C^T x >= b} by solving the d-dimensional problem in
/// the coordinates of Q (C = QR) and lifting back. Falls back to the direct
/// solve when C is rank deficient. Throws InfeasibleProblem.
inline Vec project_polyhedron_reduced(const Vec& x, const Mat& c_mat, const Vec& b,
                                      const InnerQpSolver& inner_solver = {}) {
  const InnerQpSolver solve = inner_solver ? inner_solver : [](const QpProblem& qp) { return gi_solve(qp); };
  auto unwrap = [](QpResult res) -> Vec {
    if (auto* sol = std::get_if<QpSolution>(&res)) return std::move(sol->x);
    throw InfeasibleProblem(std::get<InfeasibilityCertificate>(std::move(res)));
  };
  QrFactors f;
  try {
    f = qr_factorize(c_mat);
  } catch (const RankDeficient&) {
    return unwrap(solve(QpProblem{x, c_mat, b}));
  }
  const Vec coords = f.project_coords(x);
  // R^T z >= b: the reduced normals are the columns of R.
  const Vec z = unwrap(solve(QpProblem{coords, f.r_mat, b}));
  return f.q_mat * z + (x - f.q_mat * coords);
}

struct ConeProjection {
  Vec y;
  std::vector<Index> j_set;  ///< columns of N0 supporting y
  Vec r;                     ///< r < 0 with y = (N0)_J r
};

namespace detail {

inline ConeProjection cone_project_direct(const Mat& n0, const Vec& c, const Tolerances& tol) {
  StepDirection d;
  d.tuple = empty_s_tuple(Vec::Zero(c.size()));
  d.r = Vec(0);
  d.y = Vec::Zero(c.size());
  d.z = c;
  std::vector<Index> pool(static_cast<std::size_t>(n0.cols()));
  for (Index j = 0; j < n0.cols(); ++j) pool[static_cast<std::size_t>(j)] = j;
  const ImproveOptions opt{static_cast<std::size_t>(4 * n0.cols() + 8), EnteringRule::LowestIndex, 0.0};
  d = improve_direction(std::move(d), c, n0, pool, opt, tol);
  ConeProjection out;
  out.y = d.y;
  for (Index i = 0; i < d.tuple.q(); ++i) {
    if (d.r(i) < 0.0) {
      out.j_set.push_back(d.tuple.j_set[static_cast<std::size_t>(i)]);
      out.r.conservativeResize(out.r.size() + 1);
      out.r(out.r.size() - 1) = d.r(i);
    }
  }
  return out;
}

}  // namespace detail

/// P_cone(-N0)(c) computed without the reduction, by running the primal
/// active-set refinement in the full space.
inline ConeProjection cone_project(const Mat& n0, const Vec& c_p, const Tolerances& tol = {}) {
  return detail::cone_project_direct(n0, c_p, tol);
}

/// P_cone(-N0)(c_p) computed in the q0-dimensional coordinates of
/// N0 = Q0 R0 over cone(-R0), then lifted by Q0.
inline ConeProjection cone_project_reduced(const Mat& n0, const Vec& c_p, const Tolerances& tol = {}) {
  const QrFactors f = qr_factorize(n0);
  ConeProjection red = detail::cone_project_direct(f.r_mat, f.project_coords(c_p), tol);
  red.y = f.cols() > 0 ? Vec(f.q_mat * red.y) : Vec::Zero(c_p.size());
  return red;
}

}  // namespace projqp
