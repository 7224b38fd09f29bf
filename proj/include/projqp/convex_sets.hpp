#pragma once

// Closed convex sets with cheap projections, and the supporting halfspaces
// their projections generate.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "projqp/activeset_qp.hpp"
#include "projqp/errors.hpp"
#include "projqp/linalg.hpp"

namespace projqp {

/// A real number or one of the two infinities. Infinite values never enter
/// arithmetic; callers branch on kind().
class ExtendedReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit from finite reals

  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf); }
  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf); }

  /// Maps IEEE infinities onto the explicit encoding; rejects NaN.
  static ExtendedReal from_double(double v) {
    if (std::isnan(v)) throw InvalidInput("ExtendedReal: NaN bound");
    if (std::isinf(v)) return v > 0 ? pos_inf() : neg_inf();
    return ExtendedReal(v);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::Finite; }
  constexpr bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  constexpr bool is_neg_inf() const { return kind_ == Kind::NegInf; }

  double value() const {
    if (!is_finite()) throw PreconditionViolated("ExtendedReal: value() of an infinite bound");
    return value_;
  }

  /// Only for output and comparison against IEEE data at the boundaries.
  double to_double() const {
    switch (kind_) {
      case Kind::NegInf: return -std::numeric_limits<double>::infinity();
      case Kind::PosInf: return std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.is_neg_inf() || b.is_pos_inf()) return true;
    if (a.is_pos_inf() || b.is_neg_inf()) return false;
    return a.value_ <= b.value_;
  }
  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.kind_ == b.kind_ && (!a.is_finite() || a.value_ == b.value_);
  }

  /// True when x is below this bound (x < bound).
  bool exceeds(double x) const { return is_pos_inf() || (is_finite() && x < value_); }
  /// True when x is above this bound (x > bound).
  bool is_exceeded_by(double x) const { return is_neg_inf() || (is_finite() && x > value_); }

 private:
  constexpr explicit ExtendedReal(Kind k) : kind_(k) {}
  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

using ExtendedVec = std::vector<ExtendedReal>;

inline double clamp(double x, const ExtendedReal& lo, const ExtendedReal& hi) {
  if (lo.is_finite() && x < lo.value()) return lo.value();
  if (hi.is_finite() && x > hi.value()) return hi.value();
  return x;
}

/// True when x sits on a finite bound within feas_tol * (1 + |bound|).
inline bool at_bound(double x, const ExtendedReal& bound, double feas_tol) {
  return bound.is_finite() && std::abs(x - bound.value()) <= feas_tol * (1.0 + std::abs(bound.value()));
}

// ---------------------------------------------------------------------------

struct Ball {
  Vec center;
  double radius = 1.0;
};

/// {y : c^T y >= b}
struct Halfspace {
  Vec c;
  double b = 0.0;
};

struct Box {
  ExtendedVec lower;
  ExtendedVec upper;
};

/// {y : lower <= a^T y <= upper}
struct Hyperslab {
  Vec a;
  ExtendedReal lower;
  ExtendedReal upper;
};

/// {y : C^T y >= b}
struct Polyhedron {
  Mat c_mat;
  Vec b;
};

using ConvexSet = std::variant<Ball, Halfspace, Box, Hyperslab, Polyhedron>;

struct GeneratedHalfspace {
  Vec c;  ///< unit normal
  double b = 0.0;
  std::size_t source = 0;
  std::size_t birth_iteration = 0;
};

inline Index set_dimension(const ConvexSet& k) {
  return std::visit(
      [](const auto& s) -> Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) return s.center.size();
        if constexpr (std::is_same_v<T, Halfspace>) return s.c.size();
        if constexpr (std::is_same_v<T, Box>) return static_cast<Index>(s.lower.size());
        if constexpr (std::is_same_v<T, Hyperslab>) return s.a.size();
        if constexpr (std::is_same_v<T, Polyhedron>) return s.c_mat.rows();
      },
      k);
}

inline std::string set_kind_name(const ConvexSet& k) {
  static const char* names[] = {"ball", "halfspace", "box", "hyperslab", "polyhedron"};
  return names[k.index()];
}

/// Throws InvalidInput unless the descriptor satisfies its invariants.
inline void validate_set(const ConvexSet& k) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          if (!(s.radius > 0.0) || !std::isfinite(s.radius)) throw InvalidInput("ball radius must be positive");
          if (!s.center.allFinite()) throw InvalidInput("ball center must be finite");
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          if (!(s.c.norm() > 0.0) || !s.c.allFinite() || !std::isfinite(s.b))
            throw InvalidInput("halfspace needs a finite nonzero normal");
        } else if constexpr (std::is_same_v<T, Box>) {
          if (s.lower.size() != s.upper.size()) throw InvalidInput("box bounds differ in length");
          for (std::size_t i = 0; i < s.lower.size(); ++i) {
            if (!(s.lower[i] <= s.upper[i]) || s.lower[i].is_pos_inf() || s.upper[i].is_neg_inf())
              throw InvalidInput("box lower bound exceeds upper bound");
          }
        } else if constexpr (std::is_same_v<T, Hyperslab>) {
          if (!(s.a.norm() > 0.0) || !s.a.allFinite()) throw InvalidInput("hyperslab needs a finite nonzero normal");
          if (!(s.lower <= s.upper) || s.lower.is_pos_inf() || s.upper.is_neg_inf())
            throw InvalidInput("hyperslab lower bound exceeds upper bound");
        } else {
          QpProblem{Vec::Zero(s.c_mat.rows()), s.c_mat, s.b}.validate();
        }
      },
      k);
}

inline Vec project_set(const ConvexSet& k, const Vec& x) {
  if (set_dimension(k) != x.size()) throw InvalidInput("project_set: dimension mismatch");
  return std::visit(
      [&x](const auto& s) -> Vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          const Vec d = x - s.center;
          const double nd = d.norm();
          if (nd <= s.radius) return x;
          return s.center + (s.radius / nd) * d;
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          const double gap = s.b - s.c.dot(x);
          if (gap <= 0.0) return x;
          return x + (gap / s.c.squaredNorm()) * s.c;
        } else if constexpr (std::is_same_v<T, Box>) {
          Vec p = x;
          for (Index i = 0; i < x.size(); ++i) {
            p(i) = clamp(x(i), s.lower[static_cast<std::size_t>(i)], s.upper[static_cast<std::size_t>(i)]);
          }
          return p;
        } else if constexpr (std::is_same_v<T, Hyperslab>) {
          const double ax = s.a.dot(x);
          const double target = clamp(ax, s.lower, s.upper);
          if (target == ax) return x;
          return x + ((target - ax) / s.a.squaredNorm()) * s.a;
        } else {
          if (2 * s.c_mat.cols() < s.c_mat.rows()) return project_polyhedron_reduced(x, s.c_mat, s.b);
          const QpResult res = gi_solve(QpProblem{x, s.c_mat, s.b});
          if (const auto* cert = std::get_if<InfeasibilityCertificate>(&res)) {
            throw InfeasibleProblem(*cert);
          }
          return std::get<QpSolution>(res).x;
        }
      },
      k);
}

inline double distance_to_set(const ConvexSet& k, const Vec& x) { return (x - project_set(k, x)).norm(); }

inline bool contains(const ConvexSet& k, const Vec& x, double tol) { return distance_to_set(k, x) <= tol; }

/// Halfspace through P_K(x) with unit normal pointing from x towards K.
inline GeneratedHalfspace separating_halfspace(const ConvexSet& k, const Vec& x, double feas_tol,
                                               std::size_t source = 0, std::size_t birth_iteration = 0) {
  if (const auto* h = std::get_if<Halfspace>(&k)) {
    const double nc = h->c.norm();
    if (h->b - h->c.dot(x) <= feas_tol * nc) throw PointInsideSet("separating_halfspace: point lies in the halfspace");
    return {h->c / nc, h->b / nc, source, birth_iteration};
  }
  const Vec p = project_set(k, x);
  const Vec d = p - x;
  const double dist = d.norm();
  if (dist <= feas_tol) throw PointInsideSet("separating_halfspace: point lies in the set");
  GeneratedHalfspace g{d / dist, 0.0, source, birth_iteration};
  g.b = g.c.dot(p);
  return g;
}

}  // namespace projqp
