#pragma once

// Reflection methods for hyperslab systems L <= A x <= U with nonempty
// interior: ART3, and an extension that carries a projection x_times of
// x_circ onto a few identified faces and its extrapolation x_plus, so that
// active-set QP steps can be mixed in without losing finite termination.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "projqp/activeset_qp.hpp"
#include "projqp/convex_sets.hpp"
#include "projqp/solvers.hpp"

namespace projqp {

namespace detail {

inline bool in_bounds(double v, const ExtendedReal& lo, const ExtendedReal& hi) {
  return lo <= ExtendedReal(v) && ExtendedReal(v) <= hi;
}

}  // namespace detail

struct HyperslabSystem {
  Mat a_mat;  ///< m x n, row j is a_j^T
  ExtendedVec lower;
  ExtendedVec upper;

  Index rows() const { return a_mat.rows(); }
  Index dim() const { return a_mat.cols(); }

  /// Row j as a contiguous vector. Every slab test goes through this copy:
  /// Eigen may round a strided row product differently, and membership has
  /// to agree to the last bit between the solver and its callers.
  Vec row(Index j) const { return a_mat.row(j).transpose(); }
  double row_value(Index j, const Vec& x) const { return row(j).dot(x); }

  void validate() const {
    const auto m = static_cast<std::size_t>(a_mat.rows());
    if (lower.size() != m || upper.size() != m) throw InvalidInput("HyperslabSystem: bound length mismatch");
    if (!a_mat.allFinite()) throw InvalidInput("HyperslabSystem: non-finite matrix entries");
    for (Index j = 0; j < a_mat.rows(); ++j) {
      validate_set(Hyperslab{a_mat.row(j).transpose(), lower[static_cast<std::size_t>(j)],
                             upper[static_cast<std::size_t>(j)]});
    }
  }

  bool row_contains(Index j, const Vec& x) const {
    const auto ju = static_cast<std::size_t>(j);
    return detail::in_bounds(row_value(j, x), lower[ju], upper[ju]);
  }

  bool contains(const Vec& x) const {
    for (Index j = 0; j < rows(); ++j) {
      if (!row_contains(j, x)) return false;
    }
    return true;
  }
};

namespace detail {

inline bool finite_positive_width(const ExtendedReal& lo, const ExtendedReal& hi) {
  return lo.is_finite() && hi.is_finite() && hi.value() > lo.value();
}

/// Largest t >= 0 with lo <= alpha + t beta <= hi, or +inf.
inline double ray_exit(double alpha, double beta, const ExtendedReal& lo, const ExtendedReal& hi) {
  if (beta > 0.0 && hi.is_finite()) return std::max(0.0, (hi.value() - alpha) / beta);
  if (beta < 0.0 && lo.is_finite()) return std::max(0.0, (lo.value() - alpha) / beta);
  return kInf;
}

}  // namespace detail

/// One ART3 update on slab j. Inside: unchanged. Within half a width outside
/// a face: reflected across it. Farther out: moved to the mid-plane. With an
/// infinite width the reflection always applies; with zero width the update
/// is the projection.
inline Vec art3_update(const Vec& x, const Vec& a, const ExtendedReal& lower, const ExtendedReal& upper) {
  const double ax = a.dot(x);
  if (detail::in_bounds(ax, lower, upper)) return x;
  const double aa = a.squaredNorm();
  const bool below = lower.is_finite() && ax < lower.value();
  const double face = below ? lower.value() : upper.value();
  if (!lower.is_finite() || !upper.is_finite()) return x + (2.0 * (face - ax) / aa) * a;
  const double half = 0.5 * (upper.value() - lower.value());
  const bool near = below ? ax >= lower.value() - half : ax <= upper.value() + half;
  if (near) return x + (2.0 * (face - ax) / aa) * a;
  return x + ((0.5 * (lower.value() + upper.value()) - ax) / aa) * a;
}

struct ArtOptions {
  std::size_t max_iters = 100000;
};

/// Cyclic ART3. Stops after m consecutive rows leave x unchanged, which
/// certifies L <= A x <= U exactly. Trace rows are recorded at every
/// iteration that moves x.
inline SolveReport art3_solve(const Vec& x0, const HyperslabSystem& sys, const ArtOptions& opt = {}) {
  sys.validate();
  if (x0.size() != sys.dim()) throw InvalidInput("art3_solve: dimension mismatch");
  SolveReport rep;
  rep.method = "art3";
  rep.trace.push_back({0, x0, std::nullopt, std::nullopt, std::nullopt, {}});
  const Index m = sys.rows();
  Vec x = x0;
  Index clean = 0;
  rep.status = SolveStatus::IterationLimit;
  for (std::size_t i = 0; i < opt.max_iters || m == 0; ++i) {
    if (clean >= m) {
      rep.status = SolveStatus::Solved;
      break;
    }
    const Index j = static_cast<Index>(i % static_cast<std::size_t>(m));
    const auto ju = static_cast<std::size_t>(j);
    Vec next = art3_update(x, sys.row(j), sys.lower[ju], sys.upper[ju]);
    ++rep.projections;
    if (next == x) {
      ++clean;
      continue;
    }
    clean = 0;
    x = std::move(next);
    rep.trace.push_back({i + 1, x, std::nullopt, std::nullopt, std::nullopt, {"row" + std::to_string(j)}});
  }
  rep.x = x;
  return rep;
}

/// x_times + tbar (x_times - x_circ), tbar = min(t/2, 1), where t is how far
/// the ray can go while staying inside every slab in `active`.
inline Vec extrapolate_plus(const Vec& x_circ, const Vec& x_times, const HyperslabSystem& sys,
                            const std::vector<Index>& active) {
  const Vec d = x_times - x_circ;
  if (d.norm() == 0.0) return x_times;
  double t = kInf;
  for (const Index j : active) {
    const auto ju = static_cast<std::size_t>(j);
    const double alpha = sys.row_value(j, x_times);
    const double beta = sys.row_value(j, d);
    t = std::min(t, detail::ray_exit(alpha, beta, sys.lower[ju], sys.upper[ju]));
  }
  const double tbar = std::min(t / 2.0, 1.0);
  return x_times + tbar * d;
}

/// Which of the five situations of the extended method holds for slab j.
/// 1: x_plus inside. 2/3: x_plus within half a width outside, with x_times
/// outside/inside. 4/5: x_plus farther out, with x_times outside/inside.
/// Rows of infinite or zero width have no half-width band.
inline int classify_case(const Vec& x_times, const Vec& x_plus, const Vec& a, const ExtendedReal& lower,
                         const ExtendedReal& upper) {
  const double ap = a.dot(x_plus);
  if (detail::in_bounds(ap, lower, upper)) return 1;
  const bool times_inside = detail::in_bounds(a.dot(x_times), lower, upper);
  bool near = false;
  if (detail::finite_positive_width(lower, upper)) {
    const double half = 0.5 * (upper.value() - lower.value());
    near = (ap >= lower.value() - half && ap < lower.value()) || (ap > upper.value() && ap <= upper.value() + half);
  }
  if (near) return times_inside ? 3 : 2;
  return times_inside ? 5 : 4;
}

enum class ArtStep { Circ, Times, Plus };

struct ExtendedArtPolicy {
  bool allow_circ = true;   ///< P_circ in cases 2 and 4
  bool allow_times = true;  ///< P_times in cases 4 and 5
  /// Case 2 switches to P_plus when x_times violates the slab by less than
  /// this fraction of its width.
  double case2_plus_threshold = 0.1;
  /// Consecutive P_circ steps allowed per active face (at least one face).
  std::size_t circ_cap_factor = 3;
  std::size_t max_iters = 100000;

  static ExtendedArtPolicy always_plus() {
    ExtendedArtPolicy p;
    p.allow_circ = false;
    p.allow_times = false;
    return p;
  }
};

struct ArtTriple {
  Vec x_circ;
  Vec x_times;
  Vec x_plus;
  std::vector<Index> active_slabs;
  STuple s_tuple;
};

struct ExtendedArtReport {
  SolveReport report;
  ArtTriple final_state;
  /// x_circ after every P_times / P_plus step, starting with x0.
  std::vector<Vec> fejer_sequence;
  std::array<std::size_t, 6> case_counts{};
  std::array<std::size_t, 3> step_counts{};  ///< indexed by ArtStep
  /// P_times taken while x_plus was in a half-width band; kept at zero.
  std::size_t times_in_band = 0;
  /// P_times / P_plus steps that stalled and were replaced by an ART3 update.
  std::size_t fallback_updates = 0;
};

namespace detail {

/// Finite faces of the slabs as constraints C^T x >= b: the lower face of
/// row j is a_j^T x >= L_j, the upper face is -a_j^T x >= -U_j.
struct SlabFaces {
  Mat c_mat;
  Vec b;
  std::vector<Index> row;
  std::vector<Index> lower_face;  ///< per row, -1 if L_j is infinite
  std::vector<Index> upper_face;

  explicit SlabFaces(const HyperslabSystem& sys) {
    const Index m = sys.rows();
    lower_face.assign(static_cast<std::size_t>(m), -1);
    upper_face.assign(static_cast<std::size_t>(m), -1);
    std::vector<Vec> cols;
    std::vector<double> rhs;
    for (Index j = 0; j < m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const Vec a = sys.row(j);
      if (sys.lower[ju].is_finite()) {
        lower_face[ju] = static_cast<Index>(cols.size());
        cols.push_back(a);
        rhs.push_back(sys.lower[ju].value());
        row.push_back(j);
      }
      if (sys.upper[ju].is_finite()) {
        upper_face[ju] = static_cast<Index>(cols.size());
        cols.push_back(-a);
        rhs.push_back(-sys.upper[ju].value());
        row.push_back(j);
      }
    }
    c_mat.resize(sys.dim(), static_cast<Index>(cols.size()));
    b.resize(static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      c_mat.col(static_cast<Index>(k)) = cols[k];
      b(static_cast<Index>(k)) = rhs[k];
    }
  }

  /// Face of row j violated at x, or -1.
  Index violated_face(const HyperslabSystem& sys, Index j, const Vec& x) const {
    const double ax = sys.row_value(j, x);
    const auto ju = static_cast<std::size_t>(j);
    if (sys.lower[ju].is_finite() && ax < sys.lower[ju].value()) return lower_face[ju];
    if (sys.upper[ju].is_finite() && ax > sys.upper[ju].value()) return upper_face[ju];
    return -1;
  }
};

/// Reflection of x across the violated face of the slab, with the landing
/// depth raised to 64 ulps of the face scale and capped at half the width.
/// Fejer for every point of the slab deeper than that floor.
inline Vec reflect_with_floor(const Vec& x, const Vec& a, const ExtendedReal& lower, const ExtendedReal& upper) {
  const double ax = a.dot(x);
  const bool below = lower.is_finite() && ax < lower.value();
  if (!below && !(upper.is_finite() && ax > upper.value())) return x;
  const double face = below ? lower.value() : upper.value();
  const double viol = std::abs(face - ax);
  double depth = std::max(viol, 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(face) + a.norm() * x.norm()));
  if (finite_positive_width(lower, upper)) depth = std::min(depth, 0.5 * (upper.value() - lower.value()));
  const double target = below ? face + depth : face - depth;
  return x + ((target - ax) / a.squaredNorm()) * a;
}

inline std::vector<Index> active_rows(const STuple& s, const SlabFaces& faces) {
  std::vector<Index> rows;
  for (const Index f : s.j_set) {
    const Index j = faces.row[static_cast<std::size_t>(f)];
    if (std::find(rows.begin(), rows.end(), j) == rows.end()) rows.push_back(j);
  }
  return rows;
}

/// Faces of s tight at x, as a fresh tuple at x with zero multipliers.
/// Faces that x violates, however slightly, are left out so that they can
/// enter again.
inline STuple restart_at(const STuple& s, const Vec& x, const SlabFaces& faces) {
  STuple t = empty_s_tuple(x);
  for (const Index f : s.j_set) {
    const Vec c = faces.c_mat.col(f);
    const double res = c.dot(x) - faces.b(f);
    if (res >= 0.0 && res <= 1e-12 * (1.0 + c.norm() * x.norm() + std::abs(faces.b(f)))) {
      append_constraint(t, f, c, 0.0);
    }
  }
  return t;
}

}  // namespace detail

inline ExtendedArtReport extended_art_solve(const Vec& x0, const HyperslabSystem& sys,
                                            const ExtendedArtPolicy& policy = {}) {
  sys.validate();
  if (x0.size() != sys.dim()) throw InvalidInput("extended_art_solve: dimension mismatch");
  const detail::SlabFaces faces(sys);
  const Index m = sys.rows();
  // Entering faces are violated whenever the exact slab test fails, however
  // slightly, so the steps run without a feasibility margin.
  Tolerances tol;
  tol.feas = 0.0;

  ExtendedArtReport out;
  SolveReport& rep = out.report;
  rep.method = "ext-art";
  rep.status = SolveStatus::IterationLimit;
  rep.trace.push_back({0, x0, std::nullopt, std::nullopt, std::nullopt, {}});

  Vec x_circ = x0, x_times = x0, x_plus = x0;
  STuple s = empty_s_tuple(x0);
  std::vector<Index> active;
  out.fejer_sequence.push_back(x0);
  Index clean = 0;
  std::size_t circ_run = 0;

  auto infeasible = [&](const InfeasibilityCertificate& cert) {
    rep.status = SolveStatus::Infeasible;
    rep.certificate = detail::certificate_data(cert, faces.c_mat, faces.b);
  };

  for (std::size_t i = 0; i < policy.max_iters || m == 0; ++i) {
    if (clean >= m) {
      rep.status = SolveStatus::Solved;
      break;
    }
    const Index j = static_cast<Index>(i % static_cast<std::size_t>(m));
    const auto ju = static_cast<std::size_t>(j);
    const Vec a = sys.row(j);
    const int kase = classify_case(x_times, x_plus, a, sys.lower[ju], sys.upper[ju]);
    ++rep.projections;
    ++out.case_counts[static_cast<std::size_t>(kase)];
    if (kase == 1) {
      ++clean;
      continue;
    }
    clean = 0;

    const std::size_t circ_cap = policy.circ_cap_factor * std::max<std::size_t>(1, s.j_set.size());
    const bool circ_ok = policy.allow_circ && circ_run < circ_cap;
    ArtStep step = ArtStep::Plus;
    switch (kase) {
      case 2: {
        const double ax = a.dot(x_times);
        const double res = ax < sys.lower[ju].value() ? sys.lower[ju].value() - ax : ax - sys.upper[ju].value();
        const double width = sys.upper[ju].value() - sys.lower[ju].value();
        if (circ_ok && res >= policy.case2_plus_threshold * width) step = ArtStep::Circ;
        break;
      }
      case 4:
        step = policy.allow_times ? ArtStep::Times : circ_ok ? ArtStep::Circ : ArtStep::Plus;
        break;
      case 5:
        step = policy.allow_times ? ArtStep::Times : ArtStep::Plus;
        break;
      default:
        break;
    }
    // A face of x_times that is already active is violated only by rounding.
    if (step == ArtStep::Circ && s.contains(faces.violated_face(sys, j, x_times))) step = ArtStep::Plus;
    if (step == ArtStep::Times && (kase == 2 || kase == 3)) ++out.times_in_band;
    ++out.step_counts[static_cast<std::size_t>(step)];

    std::optional<InfeasibilityCertificate> cert;
    if (step == ArtStep::Circ) {
      ++circ_run;
      const QpProblem qp{x_circ, faces.c_mat, faces.b};
      StepOutcome res = inner_gi_step(s, faces.violated_face(sys, j, x_times), qp, tol);
      ++rep.inner_steps;
      rep.partial_steps += res.partial_steps;
      if (res.advanced()) {
        s = std::move(res.tuple());
      } else {
        cert = res.certificate();
      }
    } else {
      circ_run = 0;
      x_circ = step == ArtStep::Times ? x_times : x_plus;
      s = detail::restart_at(s, x_circ, faces);
      out.fejer_sequence.push_back(x_circ);
      // In case 5 the slab already holds x_times, so the restarted tuple
      // is the answer and the triple collapses onto x_times.
      const Index f = faces.violated_face(sys, j, x_circ);
      if (f >= 0) {
        const QpProblem qp{x_circ, faces.c_mat, faces.b};
        StepOutcome res = degenerate_inner_gi_step(s, f, qp, tol);
        ++rep.inner_steps;
        if (res.advanced()) {
          s = std::move(res.tuple());
        } else {
          cert = res.certificate();
        }
      }
    }
    if (cert) {
      infeasible(*cert);
      break;
    }
    x_times = s.x;
    active = detail::active_rows(s, faces);
    x_plus = extrapolate_plus(x_circ, x_times, sys, active);
    // After P_times / P_plus row j holds x_plus in exact arithmetic. A
    // violation left by rounding is removed by reflecting x_circ across the
    // face, pushing at least a few ulps inside.
    if (step != ArtStep::Circ && !sys.row_contains(j, x_plus)) {
      x_circ = detail::reflect_with_floor(x_circ, a, sys.lower[ju], sys.upper[ju]);
      s = detail::restart_at(s, x_circ, faces);
      out.fejer_sequence.push_back(x_circ);
      ++out.fallback_updates;
      x_times = s.x;
      active = detail::active_rows(s, faces);
      x_plus = extrapolate_plus(x_circ, x_times, sys, active);
    }
    static const char* names[] = {"circ", "times", "plus"};
    rep.trace.push_back({i + 1, x_plus, std::nullopt, std::nullopt, std::nullopt,
                         {"row" + std::to_string(j) + ":case" + std::to_string(kase) + ":" +
                          names[static_cast<std::size_t>(step)]}});
  }
  rep.x = x_plus;
  out.final_state = ArtTriple{x_circ, x_times, x_plus, active, s};
  return out;
}

}  // namespace projqp
