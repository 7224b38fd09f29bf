#pragma once

// Projection onto a box intersected with one halfspace. The box normals are
// orthogonal, so the optimal slide direction is read off coordinate-wise and
// the problem is solved exactly in at most n + 1 passes.

#include <cstddef>
#include <vector>

#include "projqp/activeset_qp.hpp"
#include "projqp/convex_sets.hpp"

namespace projqp {

/// min 1/2 |x - x_star|^2  s.t.  lower <= x <= upper,  c_p^T x >= b_hat
struct BoxQp {
  Vec x_star;
  ExtendedVec lower;
  ExtendedVec upper;
  Vec c_p;
  double b_hat = 0.0;

  Index dim() const { return x_star.size(); }

  void validate(double feas_tol) const {
    const auto n = static_cast<std::size_t>(x_star.size());
    if (lower.size() != n || upper.size() != n || static_cast<std::size_t>(c_p.size()) != n)
      throw InvalidInput("BoxQp: dimension mismatch");
    validate_set(Box{lower, upper});
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x_star(static_cast<Index>(i));
      const double slack = feas_tol * (1.0 + std::abs(xi));
      if (lower[i].exceeds(xi + slack) || upper[i].is_exceeded_by(xi - slack))
        throw PreconditionViolated("BoxQp: x_star outside the box");
    }
  }
};

enum class BoxQpStatus { Solved, Infeasible };

/// The finite box faces of a BoxQp together with the halfspace, as a
/// general constraint system C^T x >= b. Face k of coordinate i is
/// x_i >= L_i or -x_i >= -U_i.
struct BoxConstraintSystem {
  struct Face {
    Index coord;
    bool upper;
  };
  QpProblem qp;
  std::vector<Face> faces;  ///< one per column except the last (c_p)
};

inline BoxConstraintSystem expand_box_qp(const BoxQp& p) {
  const Index n = p.dim();
  BoxConstraintSystem sys;
  std::vector<Vec> cols;
  std::vector<double> rhs;
  for (Index i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (p.lower[iu].is_finite()) {
      cols.push_back(Vec::Unit(n, i));
      rhs.push_back(p.lower[iu].value());
      sys.faces.push_back({i, false});
    }
    if (p.upper[iu].is_finite()) {
      cols.push_back(-Vec::Unit(n, i));
      rhs.push_back(-p.upper[iu].value());
      sys.faces.push_back({i, true});
    }
  }
  cols.push_back(p.c_p);
  rhs.push_back(p.b_hat);
  sys.qp.x_star = p.x_star;
  sys.qp.c_mat.resize(n, static_cast<Index>(cols.size()));
  sys.qp.b.resize(static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    sys.qp.c_mat.col(static_cast<Index>(k)) = cols[k];
    sys.qp.b(static_cast<Index>(k)) = rhs[k];
  }
  return sys;
}

struct BoxQpResult {
  BoxQpStatus status = BoxQpStatus::Solved;
  Vec x;
  std::vector<Vec> x_tilde;  ///< x~^0 = x_star, x~^1, ...
  std::vector<Vec> y;        ///< y^j, one per pass that took a step
  /// Farkas certificate over expand_box_qp(p) when infeasible.
  std::optional<InfeasibilityCertificate> certificate;
};

/// Coordinates tight at the bound that c_p pushes against do not move.
inline Vec box_step_direction(const Vec& x_tilde, const Vec& c_p, const ExtendedVec& lower, const ExtendedVec& upper,
                              double feas_tol = Tolerances{}.feas) {
  Vec d = c_p;
  for (Index i = 0; i < d.size(); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if ((c_p(i) > 0.0 && at_bound(x_tilde(i), upper[iu], feas_tol)) ||
        (c_p(i) < 0.0 && at_bound(x_tilde(i), lower[iu], feas_tol)) || c_p(i) == 0.0) {
      d(i) = 0.0;
    }
  }
  return d;
}

inline BoxQpResult solve_box_qp(const BoxQp& p, const Tolerances& tol = {}) {
  p.validate(tol.feas);
  const Index n = p.dim();
  BoxQpResult res;
  Vec x = p.x_star;
  res.x_tilde.push_back(x);
  const double gap_tol = tol.feas * (1.0 + std::abs(p.b_hat));
  // Each pass that clamps adds a tight coordinate, so n + 1 passes suffice;
  // the extra slack absorbs passes that only mop up rounding.
  const Index max_passes = 2 * n + 2;
  for (Index pass = 0; pass < max_passes && p.c_p.dot(x) < p.b_hat - gap_tol; ++pass) {
    const Vec d = box_step_direction(x, p.c_p, p.lower, p.upper, tol.feas);
    if (d.norm() <= tol.zero_dir * (1.0 + p.c_p.norm())) {
      res.status = BoxQpStatus::Infeasible;
      res.x = x;
      const BoxConstraintSystem sys = expand_box_qp(p);
      InfeasibilityCertificate cert;
      std::vector<double> lambda;
      for (std::size_t k = 0; k < sys.faces.size(); ++k) {
        const auto& f = sys.faces[k];
        const double ci = p.c_p(f.coord);
        const bool pushes = f.upper ? ci > 0.0 : ci < 0.0;
        if (pushes && at_bound(x(f.coord), f.upper ? p.upper[static_cast<std::size_t>(f.coord)]
                                                   : p.lower[static_cast<std::size_t>(f.coord)],
                               tol.feas)) {
          cert.j_prime.push_back(static_cast<Index>(k));
          lambda.push_back(std::abs(ci));
        }
      }
      cert.j_prime.push_back(static_cast<Index>(sys.faces.size()));
      lambda.push_back(1.0);
      cert.lambda = Eigen::Map<const Vec>(lambda.data(), static_cast<Index>(lambda.size()));
      res.certificate = std::move(cert);
      return res;
    }
    const double t2 = (p.b_hat - p.c_p.dot(x)) / p.c_p.dot(d);
    const Vec y = x + t2 * d;
    res.y.push_back(y);
    x = project_set(Box{p.lower, p.upper}, y);
    res.x_tilde.push_back(x);
  }
  res.x = x;
  return res;
}

}  // namespace projqp
