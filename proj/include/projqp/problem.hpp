#pragma once

// Problem files and seeded random problem generators.
//
// JSON schema:
//   {"kind": "...", "x0": [...], "witness": [...] (optional),
//    "sets": [{"type": "ball", "center": [...], "radius": r},
//             {"type": "halfspace", "c": [...], "b": b},
//             {"type": "box", "lower": [...], "upper": [...]},
//             {"type": "hyperslab", "a": [...], "lower": l, "upper": u},
//             {"type": "polyhedron", "normals": [[...], ...], "b": [...]}]}
// Infinite bounds are the strings "inf" and "-inf".
//
// Plain-text hyperslab systems: a header line "m n", m rows of n entries,
// a line with the m lower bounds, a line with the m upper bounds, and an
// optional line with the n entries of x0 (zero otherwise).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "projqp/art.hpp"
#include "projqp/convex_sets.hpp"

namespace projqp {

struct Problem {
  std::string kind;
  std::vector<ConvexSet> sets;
  Vec x0;
  /// A point of the intersection, strictly inside for generated problems.
  std::optional<Vec> witness;
};

/// The hyperslab sets of a problem as one system; throws InvalidInput when
/// some set is not a hyperslab.
inline HyperslabSystem to_hyperslab_system(const std::vector<ConvexSet>& sets) {
  if (sets.empty()) throw InvalidInput("to_hyperslab_system: no sets");
  HyperslabSystem sys;
  sys.a_mat.resize(static_cast<Index>(sets.size()), set_dimension(sets.front()));
  for (std::size_t j = 0; j < sets.size(); ++j) {
    const auto* h = std::get_if<Hyperslab>(&sets[j]);
    if (h == nullptr) throw InvalidInput("to_hyperslab_system: set " + std::to_string(j) + " is not a hyperslab");
    sys.a_mat.row(static_cast<Index>(j)) = h->a.transpose();
    sys.lower.push_back(h->lower);
    sys.upper.push_back(h->upper);
  }
  return sys;
}

inline std::vector<ConvexSet> to_sets(const HyperslabSystem& sys) {
  std::vector<ConvexSet> sets;
  for (Index j = 0; j < sys.rows(); ++j) {
    sets.emplace_back(Hyperslab{sys.a_mat.row(j).transpose(), sys.lower[static_cast<std::size_t>(j)],
                                sys.upper[static_cast<std::size_t>(j)]});
  }
  return sets;
}

// ---------------------------------------------------------------------------
// JSON

namespace io {

using nlohmann::json;

inline json to_json(const ExtendedReal& v) {
  if (v.is_pos_inf()) return "inf";
  if (v.is_neg_inf()) return "-inf";
  return v.value();
}

inline ExtendedReal extended_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return ExtendedReal::pos_inf();
    if (s == "-inf") return ExtendedReal::neg_inf();
    throw InvalidInput("bad bound string: " + s);
  }
  if (!j.is_number()) throw InvalidInput("bound must be a number or \"inf\"/\"-inf\"");
  return ExtendedReal::from_double(j.get<double>());
}

inline json to_json(const Vec& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vec vec_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("expected a numeric array");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("expected a numeric array");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json to_json(const ExtendedVec& v) {
  json arr = json::array();
  for (const auto& e : v) arr.push_back(to_json(e));
  return arr;
}

inline ExtendedVec extended_vec_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("expected an array of bounds");
  ExtendedVec v;
  for (const auto& e : j) v.push_back(extended_from_json(e));
  return v;
}

inline json to_json(const ConvexSet& k) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return {{"type", "ball"}, {"center", to_json(s.center)}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return {{"type", "halfspace"}, {"c", to_json(s.c)}, {"b", s.b}};
        } else if constexpr (std::is_same_v<T, Box>) {
          return {{"type", "box"}, {"lower", to_json(s.lower)}, {"upper", to_json(s.upper)}};
        } else if constexpr (std::is_same_v<T, Hyperslab>) {
          return {{"type", "hyperslab"}, {"a", to_json(s.a)}, {"lower", to_json(s.lower)}, {"upper", to_json(s.upper)}};
        } else {
          json cols = json::array();
          for (Index j = 0; j < s.c_mat.cols(); ++j) cols.push_back(to_json(Vec(s.c_mat.col(j))));
          return {{"type", "polyhedron"}, {"normals", cols}, {"b", to_json(s.b)}};
        }
      },
      k);
}

inline ConvexSet set_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw InvalidInput("set entry needs a \"type\"");
  const auto type = j.at("type").get<std::string>();
  ConvexSet k;
  if (type == "ball") {
    k = Ball{vec_from_json(j.at("center")), j.at("radius").get<double>()};
  } else if (type == "halfspace") {
    k = Halfspace{vec_from_json(j.at("c")), j.at("b").get<double>()};
  } else if (type == "box") {
    k = Box{extended_vec_from_json(j.at("lower")), extended_vec_from_json(j.at("upper"))};
  } else if (type == "hyperslab") {
    k = Hyperslab{vec_from_json(j.at("a")), extended_from_json(j.at("lower")), extended_from_json(j.at("upper"))};
  } else if (type == "polyhedron") {
    const auto& cols = j.at("normals");
    const Vec b = vec_from_json(j.at("b"));
    if (cols.size() != static_cast<std::size_t>(b.size())) throw InvalidInput("polyhedron: normals and b differ in length");
    Mat c(cols.empty() ? 0 : static_cast<Index>(cols[0].size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const Vec col = vec_from_json(cols[i]);
      if (col.size() != c.rows()) throw InvalidInput("polyhedron: ragged normals");
      c.col(static_cast<Index>(i)) = col;
    }
    k = Polyhedron{c, b};
  } else {
    throw InvalidInput("unknown set type: " + type);
  }
  validate_set(k);
  return k;
}

inline json to_json(const Problem& p) {
  json sets = json::array();
  for (const auto& k : p.sets) sets.push_back(to_json(k));
  json out = {{"kind", p.kind}, {"x0", to_json(p.x0)}, {"sets", sets}};
  if (p.witness) out["witness"] = to_json(*p.witness);
  return out;
}

inline Problem problem_from_json(const json& j) {
  Problem p;
  p.kind = j.value("kind", std::string("file"));
  if (!j.contains("sets") || !j.contains("x0")) throw InvalidInput("problem needs \"sets\" and \"x0\"");
  for (const auto& s : j.at("sets")) p.sets.push_back(set_from_json(s));
  p.x0 = vec_from_json(j.at("x0"));
  if (j.contains("witness")) p.witness = vec_from_json(j.at("witness"));
  for (const auto& k : p.sets) {
    if (set_dimension(k) != p.x0.size()) throw InvalidInput("problem: set dimension does not match x0");
  }
  return p;
}

inline Problem read_problem_json(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("problem JSON: ") + e.what());
  }
  try {
    return problem_from_json(j);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("problem JSON: ") + e.what());
  }
}

inline double parse_real(const std::string& tok) {
  if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw InvalidInput("slabs file: bad number '" + tok + "'");
  }
  if (used != tok.size()) throw InvalidInput("slabs file: bad number '" + tok + "'");
  return v;
}

inline Problem read_slabs_text(std::istream& in) {
  std::vector<std::string> toks;
  for (std::string t; in >> t;) toks.push_back(t);
  std::size_t pos = 0;
  auto next = [&]() -> double {
    if (pos >= toks.size()) throw InvalidInput("slabs file: unexpected end of input");
    return parse_real(toks[pos++]);
  };
  const double md = next(), nd = next();
  if (md < 1 || nd < 1 || md != std::floor(md) || nd != std::floor(nd)) throw InvalidInput("slabs file: bad header");
  const auto m = static_cast<Index>(md), n = static_cast<Index>(nd);
  HyperslabSystem sys;
  sys.a_mat.resize(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) sys.a_mat(i, j) = next();
  }
  for (Index i = 0; i < m; ++i) sys.lower.push_back(ExtendedReal::from_double(next()));
  for (Index i = 0; i < m; ++i) sys.upper.push_back(ExtendedReal::from_double(next()));
  Problem p;
  p.kind = "slabs";
  p.x0 = Vec::Zero(n);
  if (pos < toks.size()) {
    for (Index j = 0; j < n; ++j) p.x0(j) = next();
  }
  if (pos != toks.size()) throw InvalidInput("slabs file: trailing data");
  sys.validate();
  p.sets = to_sets(sys);
  return p;
}

}  // namespace io

// ---------------------------------------------------------------------------
// Generators

namespace detail {

inline Vec random_unit(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Vec v(n);
  do {
    for (Index i = 0; i < n; ++i) v(i) = g(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

inline Vec random_box_point(std::mt19937_64& rng, Index n, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace detail

inline const std::vector<std::string>& problem_kinds() {
  static const std::vector<std::string> kinds{"balls-with-common-point", "box-plus-ball", "hyperslabs-with-interior",
                                              "infeasible-balls"};
  return kinds;
}

/// Deterministic under (kind, n, count, seed). Feasible kinds record a
/// witness strictly inside every set; hyperslab rows keep it at least 0.1
/// away from both faces (in units of a_j^T x).
inline Problem generate_problem(const std::string& kind, Index n, std::size_t count, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("generate_problem: n must be positive");
  if (count < 1) throw InvalidInput("generate_problem: count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Problem p;
  p.kind = kind;
  const Vec w = detail::random_box_point(rng, n, 1.0);

  auto ball_around = [&](const Vec& point) {
    const double rho = 0.5 + 1.5 * unif(rng);
    const double slack = 0.05 + 0.45 * unif(rng);
    return Ball{point + rho * detail::random_unit(rng, n), rho + slack};
  };

  if (kind == "balls-with-common-point") {
    for (std::size_t k = 0; k < count; ++k) p.sets.emplace_back(ball_around(w));
    p.witness = w;
  } else if (kind == "box-plus-ball") {
    Box box;
    for (Index i = 0; i < n; ++i) {
      const double r = unif(rng);
      box.lower.push_back(r < 0.15 ? ExtendedReal::neg_inf() : ExtendedReal(w(i) - 0.2 - 1.3 * unif(rng)));
      box.upper.push_back(r > 0.85 ? ExtendedReal::pos_inf() : ExtendedReal(w(i) + 0.2 + 1.3 * unif(rng)));
    }
    p.sets.emplace_back(box);
    for (std::size_t k = 1; k < std::max<std::size_t>(count, 2); ++k) p.sets.emplace_back(ball_around(w));
    p.witness = w;
  } else if (kind == "hyperslabs-with-interior") {
    std::normal_distribution<double> g;
    for (std::size_t k = 0; k < count; ++k) {
      Vec a(n);
      for (Index i = 0; i < n; ++i) a(i) = g(rng);
      if (a.norm() < 1e-3) a(0) += 1.0;
      const double c = a.dot(w);
      const double r = unif(rng);
      const ExtendedReal lo = r < 0.1 ? ExtendedReal::neg_inf() : ExtendedReal(c - 0.1 - unif(rng));
      const ExtendedReal hi = r > 0.9 ? ExtendedReal::pos_inf() : ExtendedReal(c + 0.1 + unif(rng));
      p.sets.emplace_back(Hyperslab{a, lo, hi});
    }
    p.witness = w;
  } else if (kind == "infeasible-balls") {
    const Vec c1 = w;
    const double r1 = 0.5 + unif(rng), r2 = 0.5 + unif(rng);
    const double gap = 0.1 + unif(rng);
    const Vec c2 = c1 + (r1 + r2 + gap) * detail::random_unit(rng, n);
    p.sets.emplace_back(Ball{c1, r1});
    p.sets.emplace_back(Ball{c2, r2});
    for (std::size_t k = 2; k < count; ++k) p.sets.emplace_back(ball_around(c1));
  } else {
    throw InvalidInput("generate_problem: unknown kind " + kind);
  }
  p.x0 = w + (4.0 + 4.0 * unif(rng)) * detail::random_unit(rng, n);
  return p;
}

}  // namespace projqp
