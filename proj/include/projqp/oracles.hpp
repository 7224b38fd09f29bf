#pragma once

// Brute-force reference solvers used for verification. They enumerate
// active sets / faces directly with dense normal-equation solves and share
// no code with the incremental active-set machinery they check.

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "projqp/linalg.hpp"

namespace projqp::oracle {

namespace detail {

inline std::vector<Index> subset_of(std::uint32_t mask, Index m) {
  std::vector<Index> s;
  for (Index j = 0; j < m; ++j) {
    if (mask & (1u << j)) s.push_back(j);
  }
  return s;
}

inline Mat columns(const Mat& c, const std::vector<Index>& idx) {
  Mat out(c.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = c.col(idx[k]);
  return out;
}

// Solves the Gram system of the selected columns; nullopt when they are
// numerically dependent.
inline std::optional<Vec> gram_solve(const Mat& cs, const Vec& rhs) {
  const Mat gram = cs.transpose() * cs;
  Eigen::FullPivLU<Mat> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < gram.rows()) return std::nullopt;
  return Vec(lu.solve(rhs));
}

}  // namespace detail

/// Projection of x_star onto {C^T x >= b}, or nullopt when the polyhedron
/// is empty. Tries every linearly independent candidate active set of size
/// at most min(n, m) and returns the first KKT point.
inline std::optional<Vec> enumerate_projection(const Vec& x_star, const Mat& c, const Vec& b, double tol = 1e-9) {
  const Index n = x_star.size();
  const Index m = c.cols();
  const Index max_size = std::min(n, m);
  const std::uint32_t limit = 1u << m;
  for (Index size = 0; size <= max_size; ++size) {
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (std::popcount(mask) != size) continue;
      const auto s = detail::subset_of(mask, m);
      Vec x = x_star;
      if (!s.empty()) {
        const Mat cs = detail::columns(c, s);
        const Vec bs = detail::columns(b.transpose(), s).transpose();
        const auto lambda = detail::gram_solve(cs, bs - cs.transpose() * x_star);
        if (!lambda || lambda->minCoeff() < -tol) continue;
        x += cs * *lambda;
      }
      bool feasible = true;
      for (Index j = 0; j < m && feasible; ++j) {
        feasible = c.col(j).dot(x) - b(j) >= -tol * (1.0 + x.norm()) * (1.0 + c.col(j).norm());
      }
      if (feasible) return x;
    }
  }
  return std::nullopt;
}

/// P_cone(-N)(c): minimizes |c - N w| over w <= 0 by least squares on every
/// face with independent generators, keeping the best sign-feasible one.
inline Vec enumerate_cone_projection(const Mat& n_mat, const Vec& c, double tol = 1e-12) {
  const Index m = n_mat.cols();
  const std::uint32_t limit = 1u << m;
  Vec best = Vec::Zero(c.size());
  double best_dist = c.norm();
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    const auto s = detail::subset_of(mask, m);
    if (static_cast<Index>(s.size()) > c.size()) continue;
    const Mat ns = detail::columns(n_mat, s);
    const auto w = detail::gram_solve(ns, ns.transpose() * c);
    if (!w || w->maxCoeff() > tol) continue;
    const Vec y = ns * *w;
    const double dist = (c - y).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = y;
    }
  }
  return best;
}

}  // namespace projqp::oracle
