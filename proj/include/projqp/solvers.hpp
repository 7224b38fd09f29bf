#pragma once

// Outer drivers for the set intersection and best approximation problems.
// BAP and SIP accumulate the supporting halfspaces produced by projections
// and advance the active-set QP on them one step per outer iteration. MAP,
// Dykstra and Haugazeau are the classical baselines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "projqp/activeset_qp.hpp"
#include "projqp/box_qp.hpp"
#include "projqp/convex_sets.hpp"
#include "projqp/measures.hpp"

namespace projqp {

struct HalfspaceProvenance {
  std::size_t source = 0;
  std::size_t birth_iteration = 0;
  bool aggregated = false;
};

/// Halfspaces c_j^T y >= b_j, each containing the target intersection.
struct HalfspaceStore {
  Mat c_mat;
  Vec b;
  std::vector<HalfspaceProvenance> provenance;

  explicit HalfspaceStore(Index n = 0) : c_mat(n, 0), b(0) {}

  Index size() const { return c_mat.cols(); }

  Index add(const GeneratedHalfspace& g) {
    const Index m = size();
    c_mat.conservativeResize(c_mat.rows(), m + 1);
    c_mat.col(m) = g.c;
    b.conservativeResize(m + 1);
    b(m) = g.b;
    provenance.push_back({g.source, g.birth_iteration, false});
    return m;
  }

  QpProblem problem(const Vec& x_star) const { return QpProblem{x_star, c_mat, b}; }

  /// Removes inactive column k and renumbers the active set of s.
  void erase(Index k, STuple& s) {
    if (k < 0 || k >= size()) throw IndexOutOfRange("HalfspaceStore::erase: column out of range");
    if (s.contains(k)) throw PreconditionViolated("HalfspaceStore::erase: column is active");
    const Index m = size();
    Mat c(c_mat.rows(), m - 1);
    c << c_mat.leftCols(k), c_mat.rightCols(m - 1 - k);
    c_mat = std::move(c);
    Vec bb(m - 1);
    bb << b.head(k), b.tail(m - 1 - k);
    b = std::move(bb);
    provenance.erase(provenance.begin() + k);
    for (Index& j : s.j_set) {
      if (j > k) --j;
    }
  }
};

/// Replaces active columns i and j (store indices) by the single halfspace
/// with normal proportional to u_i c_i + u_j c_j. The KKT residual
/// x* - x + N u, tightness and u >= 0 are unchanged.
inline void aggregate_columns(HalfspaceStore& store, STuple& s, Index i, Index j) {
  const Index pi = s.position_of(i), pj = s.position_of(j);
  if (pi < 0 || pj < 0 || i == j) throw PreconditionViolated("aggregate_columns: columns must be distinct and active");
  const double ui = s.u(pi), uj = s.u(pj);
  if (ui < 0.0 || uj < 0.0 || !(ui + uj > 0.0))
    throw PreconditionViolated("aggregate_columns: multipliers must be nonnegative with positive sum");
  const Vec w = ui * store.c_mat.col(i) + uj * store.c_mat.col(j);
  const double u_hat = w.norm();
  if (u_hat <= rank_tol(ui * store.c_mat.col(i).norm() + uj * store.c_mat.col(j).norm()))
    throw DegenerateAggregate("aggregate_columns: weighted normals cancel");
  const Vec m_hat = w / u_hat;
  const double b_hat = (ui * store.b(i) + uj * store.b(j)) / u_hat;

  store.c_mat.col(i) = m_hat;
  store.b(i) = b_hat;
  auto& prov = store.provenance[static_cast<std::size_t>(i)];
  prov.birth_iteration = std::min(prov.birth_iteration, store.provenance[static_cast<std::size_t>(j)].birth_iteration);
  prov.aggregated = true;

  s.n_mat.col(pi) = m_hat;
  s.u(pi) = u_hat;
  s.j_set.erase(s.j_set.begin() + pj);
  Vec u(s.u.size() - 1);
  u << s.u.head(pj), s.u.tail(s.u.size() - 1 - pj);
  s.u = std::move(u);
  Mat n(s.n_mat.rows(), s.n_mat.cols() - 1);
  n << s.n_mat.leftCols(pj), s.n_mat.rightCols(s.n_mat.cols() - 1 - pj);
  s.n_mat = std::move(n);
  s.qr = s.n_mat.cols() > 0 ? qr_factorize(s.n_mat) : empty_qr(s.n_mat.rows());
  store.erase(j, s);
}

// ---------------------------------------------------------------------------

enum class VisitOrder { Cyclic, MostViolated };
enum class SolveStatus { Solved, Infeasible, IterationLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::Infeasible: return "infeasible";
    default: return "iteration_limit";
  }
}

struct SolverOptions {
  /// Outer stopping rule: every set within this distance of x.
  double feas_tol = 1e-9;
  std::size_t max_outer_iters = 10000;
  /// Inner GI steps per outer iteration; 0 solves the stored QP, capped at
  /// 10 steps per stored halfspace.
  std::size_t inner_steps_per_outer = 1;
  VisitOrder visit_order = VisitOrder::Cyclic;
  /// Stored halfspaces kept after each iteration; unbounded when empty.
  std::optional<std::size_t> max_store;
  /// Keep halfspaces that left the active set and feed them back in when
  /// they become violated. Without this they are discarded immediately.
  bool revisit_old_constraints = false;
  /// Step (a+) rounds inside each degenerate step of the SIP driver.
  std::size_t improve_rounds = 0;
  /// SIP only: solve box-plus-halfspace subproblems exactly when exactly one
  /// of the sets is a box.
  bool box_fast_path = true;
  /// Distances in the trace are measured to this point when given.
  std::optional<Vec> reference;
};

struct TraceRow {
  std::size_t iter = 0;
  Vec x;
  std::optional<double> dist;
  std::optional<double> measure1;
  std::optional<double> measure2;
  std::vector<std::string> events;
};

/// Farkas data over an explicit list of halfspaces c_k^T y >= b_k.
struct CertificateData {
  Mat normals;
  Vec rhs;
  Vec lambda;

  bool verify(const Tolerances& tol = {}) const {
    InfeasibilityCertificate cert;
    for (Index k = 0; k < lambda.size(); ++k) cert.j_prime.push_back(k);
    cert.lambda = lambda;
    return verify_certificate(cert, normals, rhs, tol);
  }
};

struct SolveReport {
  std::string method;
  SolveStatus status = SolveStatus::IterationLimit;
  Vec x;
  std::vector<TraceRow> trace;
  std::size_t projections = 0;
  std::size_t inner_steps = 0;
  std::size_t partial_steps = 0;
  std::optional<CertificateData> certificate;
};

namespace detail {

inline void validate_sets(const Vec& x0, const std::vector<ConvexSet>& sets) {
  if (sets.empty()) throw InvalidInput("solver: empty set list");
  if (!x0.allFinite()) throw InvalidInput("solver: x0 has non-finite entries");
  for (const auto& k : sets) {
    validate_set(k);
    if (set_dimension(k) != x0.size()) throw InvalidInput("solver: set dimension does not match x0");
  }
}

class TraceRecorder {
 public:
  TraceRecorder(SolveReport& rep, const SolverOptions& opt) : rep_(rep), opt_(opt) {}

  void push(std::size_t iter, const Vec& x, std::vector<std::string> events = {}) {
    TraceRow row{iter, x, std::nullopt, std::nullopt, std::nullopt, std::move(events)};
    if (opt_.reference) row.dist = (x - *opt_.reference).norm();
    rep_.trace.push_back(std::move(row));
  }

  void finish(const Vec& x) {
    rep_.x = x;
    if (!opt_.reference) return;
    std::vector<double> dists;
    for (const auto& row : rep_.trace) dists.push_back(*row.dist);
    const auto rows = compute_measures(dists);
    for (const auto& m : rows) {
      rep_.trace[m.iter].measure1 = m.measure1;
      rep_.trace[m.iter].measure2 = m.measure2;
    }
  }

 private:
  SolveReport& rep_;
  const SolverOptions& opt_;
};

/// Finds a set that x violates by more than feas_tol, cyclically from the
/// set after the last one returned, or the most violated one.
class SetScanner {
 public:
  explicit SetScanner(const std::vector<ConvexSet>& sets) : sets_(sets) {}

  std::optional<std::size_t> find(const Vec& x, VisitOrder order, double feas_tol, std::size_t& projections) {
    const std::size_t r = sets_.size();
    std::optional<std::size_t> best;
    double worst = feas_tol;
    for (std::size_t k = 0; k < r; ++k) {
      const std::size_t l = (next_ + k) % r;
      const double d = distance_to_set(sets_[l], x);
      ++projections;
      if (d > worst) {
        best = l;
        worst = d;
        if (order == VisitOrder::Cyclic) break;
      }
    }
    if (best) next_ = (*best + 1) % r;
    return best;
  }

 private:
  const std::vector<ConvexSet>& sets_;
  std::size_t next_ = 0;
};

/// Tolerances for steps whose entering constraint is violated by more than
/// feas_tol in distance, at a point of norm |x|.
inline Tolerances inner_tolerances(const Vec& x, double feas_tol) {
  Tolerances tol;
  tol.feas = std::min(tol.feas, 0.5 * feas_tol / (1.0 + x.norm()));
  return tol;
}

inline CertificateData certificate_data(const InfeasibilityCertificate& cert, const Mat& c_mat, const Vec& b) {
  CertificateData out{Mat(c_mat.rows(), static_cast<Index>(cert.j_prime.size())),
                      Vec(static_cast<Index>(cert.j_prime.size())), cert.lambda};
  for (std::size_t k = 0; k < cert.j_prime.size(); ++k) {
    out.normals.col(static_cast<Index>(k)) = c_mat.col(cert.j_prime[k]);
    out.rhs(static_cast<Index>(k)) = b(cert.j_prime[k]);
  }
  return out;
}

inline std::optional<Index> most_violated_stored(const STuple& s, const HalfspaceStore& store, double feas_tol) {
  std::optional<Index> best;
  double worst = -feas_tol;
  for (Index j = 0; j < store.size(); ++j) {
    if (s.contains(j)) continue;
    const double viol = store.c_mat.col(j).dot(s.x) - store.b(j);
    if (viol < worst) {
      best = j;
      worst = viol;
    }
  }
  return best;
}

inline void discard_inactive(HalfspaceStore& store, STuple& s, std::vector<std::string>& events) {
  for (Index k = store.size() - 1; k >= 0; --k) {
    if (!s.contains(k)) {
      store.erase(k, s);
      events.push_back("discard:" + std::to_string(k));
    }
  }
}

/// Store column with the smallest birth iteration among those selected.
template <typename Pred>
Index oldest_column(const HalfspaceStore& store, Pred pred) {
  Index best = -1;
  for (Index k = 0; k < store.size(); ++k) {
    if (!pred(k)) continue;
    if (best < 0 || store.provenance[static_cast<std::size_t>(k)].birth_iteration <
                        store.provenance[static_cast<std::size_t>(best)].birth_iteration) {
      best = k;
    }
  }
  return best;
}

inline void note_step(const StepOutcome& out, SolveReport& rep, std::vector<std::string>& events) {
  ++rep.inner_steps;
  rep.partial_steps += out.partial_steps;
  for (const Index j : out.dropped) events.push_back("drop:" + std::to_string(j));
  if (out.partial_steps > 0) events.push_back("partial-steps:" + std::to_string(out.partial_steps));
}

/// Further inner steps on stored halfspaces violated after the first step.
/// Returns a certificate if one of them proves infeasibility.
inline std::optional<InfeasibilityCertificate> extra_inner_steps(STuple& s, const QpProblem& qp,
                                                                 const SolverOptions& opt, const Tolerances& tol,
                                                                 SolveReport& rep, std::vector<std::string>& events) {
  const std::size_t limit =
      opt.inner_steps_per_outer == 0 ? 10 * static_cast<std::size_t>(qp.num_constraints()) : opt.inner_steps_per_outer;
  for (std::size_t k = 1; k < limit; ++k) {
    const auto p = find_violated(s, qp, ViolationRule::MostViolated, tol);
    if (!p) break;
    StepOutcome out = inner_gi_step(s, *p, qp, tol);
    note_step(out, rep, events);
    if (!out.advanced()) return out.certificate();
    s = std::move(out.tuple());
  }
  return std::nullopt;
}

inline std::optional<std::size_t> single_box_index(const std::vector<ConvexSet>& sets) {
  std::optional<std::size_t> idx;
  for (std::size_t l = 0; l < sets.size(); ++l) {
    if (std::holds_alternative<Box>(sets[l])) {
      if (idx) return std::nullopt;
      idx = l;
    }
  }
  return idx;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Projection of x0 onto the intersection of the sets.
inline SolveReport solve_bap(const Vec& x0, const std::vector<ConvexSet>& sets, const SolverOptions& opt = {}) {
  detail::validate_sets(x0, sets);
  if (opt.max_store && *opt.max_store == 0) throw InvalidInput("solve_bap: max_store must be at least 1");
  SolveReport rep;
  rep.method = "bap-gi";
  detail::TraceRecorder rec(rep, opt);
  detail::SetScanner scan(sets);
  HalfspaceStore store(x0.size());
  STuple s = empty_s_tuple(x0);
  rec.push(0, x0);

  for (std::size_t iter = 1;; ++iter) {
    std::vector<std::string> events;
    std::optional<Index> p;
    if (opt.revisit_old_constraints) {
      p = detail::most_violated_stored(s, store, opt.feas_tol);
      if (p) events.push_back("revisit:" + std::to_string(*p));
    }
    if (!p) {
      const auto l = scan.find(s.x, opt.visit_order, opt.feas_tol, rep.projections);
      if (!l) {
        rep.status = SolveStatus::Solved;
        break;
      }
      if (iter > opt.max_outer_iters) break;
      ++rep.projections;
      p = store.add(separating_halfspace(sets[*l], s.x, opt.feas_tol, *l, iter));
      events.push_back("add:set" + std::to_string(*l));
    } else if (iter > opt.max_outer_iters) {
      break;
    }

    const QpProblem qp = store.problem(x0);
    const Tolerances tol = detail::inner_tolerances(s.x, opt.feas_tol);
    StepOutcome out = inner_gi_step(s, *p, qp, tol);
    detail::note_step(out, rep, events);
    std::optional<InfeasibilityCertificate> cert;
    if (out.advanced()) {
      s = std::move(out.tuple());
      cert = detail::extra_inner_steps(s, qp, opt, tol, rep, events);
    } else {
      cert = out.certificate();
    }
    if (cert) {
      rep.status = SolveStatus::Infeasible;
      rep.certificate = detail::certificate_data(*cert, store.c_mat, store.b);
      events.push_back("infeasible");
      rec.push(iter, s.x, std::move(events));
      break;
    }

    if (!opt.revisit_old_constraints) detail::discard_inactive(store, s, events);
    while (opt.max_store && static_cast<std::size_t>(store.size()) > *opt.max_store) {
      const Index inactive = detail::oldest_column(store, [&](Index k) { return !s.contains(k); });
      if (inactive >= 0) {
        store.erase(inactive, s);
        events.push_back("discard:" + std::to_string(inactive));
        continue;
      }
      const Index a = detail::oldest_column(store, [](Index) { return true; });
      const Index b = detail::oldest_column(store, [&](Index k) { return k != a; });
      if (s.u(s.position_of(a)) + s.u(s.position_of(b)) > 0.0) {
        try {
          aggregate_columns(store, s, std::min(a, b), std::max(a, b));
          events.push_back("aggregate:" + std::to_string(a) + "+" + std::to_string(b));
          continue;
        } catch (const DegenerateAggregate&) {
        }
      }
      // Zero or cancelling multipliers: the older column carries no weight
      // in x* - x = -N u and can leave the active set as it is.
      detail::drop_position(s, s.position_of(a));
      store.erase(a, s);
      events.push_back("drop-zero:" + std::to_string(a));
    }
    rec.push(iter, s.x, std::move(events));
  }
  rec.finish(s.x);
  return rep;
}

/// A point in the intersection of the sets. Multipliers are reset after
/// every outer iteration, so each step projects the current iterate onto
/// the kept active halfspaces and the new one.
inline SolveReport solve_sip(const Vec& x0, const std::vector<ConvexSet>& sets, const SolverOptions& opt = {}) {
  detail::validate_sets(x0, sets);
  SolveReport rep;
  rep.method = "sip-gi";
  detail::TraceRecorder rec(rep, opt);
  detail::SetScanner scan(sets);
  HalfspaceStore store(x0.size());
  STuple s = empty_s_tuple(x0);
  const auto box_idx = opt.box_fast_path ? detail::single_box_index(sets) : std::nullopt;
  const ImproveOptions improve{opt.improve_rounds, EnteringRule::LowestIndex, 0.0};
  rec.push(0, x0);

  for (std::size_t iter = 1;; ++iter) {
    std::vector<std::string> events;
    std::optional<Index> p;
    std::optional<std::size_t> l;
    if (opt.revisit_old_constraints) {
      p = detail::most_violated_stored(s, store, opt.feas_tol);
      if (p) events.push_back("revisit:" + std::to_string(*p));
    }
    if (!p) {
      l = scan.find(s.x, opt.visit_order, opt.feas_tol, rep.projections);
      if (!l) {
        rep.status = SolveStatus::Solved;
        break;
      }
    }
    if (iter > opt.max_outer_iters) break;

    if (l && box_idx && *l != *box_idx && contains(sets[*box_idx], s.x, opt.feas_tol)) {
      ++rep.projections;
      const GeneratedHalfspace g = separating_halfspace(sets[*l], s.x, opt.feas_tol, *l, iter);
      const Box& box = std::get<Box>(sets[*box_idx]);
      const BoxQp bq{project_set(box, s.x), box.lower, box.upper, g.c, g.b};
      const BoxQpResult res = solve_box_qp(bq, detail::inner_tolerances(s.x, opt.feas_tol));
      events.push_back("box-qp:set" + std::to_string(*l) + ":passes=" + std::to_string(res.y.size()));
      if (res.status == BoxQpStatus::Infeasible) {
        const BoxConstraintSystem sys = expand_box_qp(bq);
        rep.status = SolveStatus::Infeasible;
        rep.certificate = detail::certificate_data(*res.certificate, sys.qp.c_mat, sys.qp.b);
        events.push_back("infeasible");
        rec.push(iter, s.x, std::move(events));
        break;
      }
      // Box faces are implicit in this path; stored halfspaces restart.
      s = empty_s_tuple(res.x);
      store = HalfspaceStore(x0.size());
      rec.push(iter, s.x, std::move(events));
      continue;
    }

    if (!p) {
      ++rep.projections;
      p = store.add(separating_halfspace(sets[*l], s.x, opt.feas_tol, *l, iter));
      events.push_back("add:set" + std::to_string(*l));
    }

    const Vec x_prev = s.x;
    const QpProblem qp = store.problem(x_prev);
    const Tolerances tol = detail::inner_tolerances(s.x, opt.feas_tol);
    StepOutcome out = degenerate_inner_gi_step(s, *p, qp, tol, improve);
    detail::note_step(out, rep, events);
    std::optional<InfeasibilityCertificate> cert;
    if (out.advanced()) {
      s = std::move(out.tuple());
      cert = detail::extra_inner_steps(s, qp, opt, tol, rep, events);
    } else {
      cert = out.certificate();
    }
    if (cert) {
      rep.status = SolveStatus::Infeasible;
      rep.certificate = detail::certificate_data(*cert, store.c_mat, store.b);
      events.push_back("infeasible");
      rec.push(iter, s.x, std::move(events));
      break;
    }
    if ((s.x - x_prev).norm() == 0.0) events.push_back("no-progress");
    reset_multipliers(s);

    if (!opt.revisit_old_constraints) detail::discard_inactive(store, s, events);
    while (opt.max_store && static_cast<std::size_t>(store.size()) > *opt.max_store) {
      Index k = detail::oldest_column(store, [&](Index j) { return !s.contains(j); });
      if (k < 0) {
        k = detail::oldest_column(store, [](Index) { return true; });
        detail::drop_position(s, s.position_of(k));
      }
      store.erase(k, s);
      events.push_back("discard:" + std::to_string(k));
    }
    rec.push(iter, s.x, std::move(events));
  }
  rec.finish(s.x);
  return rep;
}

/// Alternating projections: each iteration projects onto the next set
/// (cyclically) that does not contain the iterate.
inline SolveReport solve_map(const Vec& x0, const std::vector<ConvexSet>& sets, const SolverOptions& opt = {}) {
  detail::validate_sets(x0, sets);
  SolveReport rep;
  rep.method = "map";
  detail::TraceRecorder rec(rep, opt);
  detail::SetScanner scan(sets);
  Vec x = x0;
  rec.push(0, x);
  for (std::size_t iter = 1;; ++iter) {
    const auto l = scan.find(x, opt.visit_order, opt.feas_tol, rep.projections);
    if (!l) {
      rep.status = SolveStatus::Solved;
      break;
    }
    if (iter > opt.max_outer_iters) break;
    x = project_set(sets[*l], x);
    ++rep.projections;
    rec.push(iter, x, {"project:set" + std::to_string(*l)});
  }
  rec.finish(x);
  return rep;
}

/// Dykstra's algorithm with one correction vector per set. Each iteration
/// is one projection, visiting the sets cyclically, as in solve_map. It
/// stops after a full cycle that moved the iterate by at most feas_tol
/// with every set containing it.
inline SolveReport solve_dykstra(const Vec& x0, const std::vector<ConvexSet>& sets, const SolverOptions& opt = {}) {
  detail::validate_sets(x0, sets);
  SolveReport rep;
  rep.method = "dykstra";
  detail::TraceRecorder rec(rep, opt);
  const std::size_t r = sets.size();
  Vec x = x0;
  Vec cycle_start = x0;
  std::vector<Vec> corr(r, Vec::Zero(x0.size()));
  rec.push(0, x);
  for (std::size_t iter = 1;; ++iter) {
    if (iter > opt.max_outer_iters) break;
    const std::size_t l = (iter - 1) % r;
    const Vec y = x + corr[l];
    x = project_set(sets[l], y);
    ++rep.projections;
    corr[l] = y - x;
    rec.push(iter, x, {"project:set" + std::to_string(l)});
    if (l + 1 < r) continue;
    if ((x - cycle_start).norm() <= opt.feas_tol) {
      bool inside = true;
      for (const auto& k : sets) inside = inside && contains(k, x, opt.feas_tol);
      rep.projections += r;
      if (inside) {
        rep.status = SolveStatus::Solved;
        break;
      }
    }
    cycle_start = x;
  }
  rec.finish(x);
  return rep;
}

/// Haugazeau's method: x^{i+1} projects x0 onto the intersection of the
/// halfspace generated at x^i and {y : (x^i - x0)^T (y - x^i) >= 0}.
inline SolveReport solve_haugazeau(const Vec& x0, const std::vector<ConvexSet>& sets, const SolverOptions& opt = {}) {
  detail::validate_sets(x0, sets);
  SolveReport rep;
  rep.method = "haugazeau";
  detail::TraceRecorder rec(rep, opt);
  detail::SetScanner scan(sets);
  Vec x = x0;
  rec.push(0, x);
  for (std::size_t iter = 1;; ++iter) {
    const auto l = scan.find(x, opt.visit_order, opt.feas_tol, rep.projections);
    if (!l) {
      rep.status = SolveStatus::Solved;
      break;
    }
    if (iter > opt.max_outer_iters) break;
    ++rep.projections;
    const GeneratedHalfspace g = separating_halfspace(sets[*l], x, opt.feas_tol, *l, iter);
    const Vec w = x - x0;
    const bool at_start = w.norm() == 0.0;
    QpProblem qp{x0, Mat(x0.size(), at_start ? 1 : 2), Vec(at_start ? 1 : 2)};
    qp.c_mat.col(0) = g.c;
    qp.b(0) = g.b;
    if (!at_start) {
      qp.c_mat.col(1) = w;
      qp.b(1) = w.dot(x);
    }
    const QpResult res = gi_solve(qp, GiOptions{100, ViolationRule::MostViolated, detail::inner_tolerances(x, opt.feas_tol)});
    if (const auto* cert = std::get_if<InfeasibilityCertificate>(&res)) {
      rep.status = SolveStatus::Infeasible;
      rep.certificate = detail::certificate_data(*cert, qp.c_mat, qp.b);
      rec.push(iter, x, {"infeasible"});
      break;
    }
    const auto& sol = std::get<QpSolution>(res);
    rep.inner_steps += sol.inner_steps;
    x = sol.x;
    rec.push(iter, x, {"add:set" + std::to_string(*l)});
  }
  rec.finish(x);
  return rep;
}

}  // namespace projqp
