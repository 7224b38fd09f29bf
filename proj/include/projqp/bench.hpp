#pragma once

// Experiment plumbing shared by the CLI and the acceptance tests: method
// dispatch, the two-circles experiment, reference points and report output.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "projqp/art.hpp"
#include "projqp/problem.hpp"
#include "projqp/solvers.hpp"

namespace projqp {

enum class Method { Map, Dykstra, Haugazeau, BapGi, SipGi, Art3, ExtArt };

inline const std::vector<std::pair<Method, std::string>>& method_table() {
  static const std::vector<std::pair<Method, std::string>> table{
      {Method::Map, "map"},     {Method::Dykstra, "dykstra"}, {Method::Haugazeau, "haugazeau"},
      {Method::BapGi, "bap-gi"}, {Method::SipGi, "sip-gi"},   {Method::Art3, "art3"},
      {Method::ExtArt, "ext-art"}};
  return table;
}

inline std::string method_name(Method m) {
  for (const auto& [k, name] : method_table()) {
    if (k == m) return name;
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  for (const auto& [k, n] : method_table()) {
    if (n == name) return k;
  }
  throw InvalidInput("unknown method: " + name);
}

inline bool is_art_method(Method m) { return m == Method::Art3 || m == Method::ExtArt; }

/// Fills dist for every trace row and, when the rows are consecutive
/// iterations starting at 0, the two measures.
inline void attach_reference(SolveReport& rep, const Vec& reference) {
  bool consecutive = true;
  for (std::size_t i = 0; i < rep.trace.size(); ++i) {
    rep.trace[i].dist = (rep.trace[i].x - reference).norm();
    consecutive = consecutive && rep.trace[i].iter == i;
  }
  if (!consecutive) return;
  std::vector<double> dists;
  for (const auto& row : rep.trace) dists.push_back(*row.dist);
  for (const auto& m : compute_measures(dists)) {
    rep.trace[m.iter].measure1 = m.measure1;
    rep.trace[m.iter].measure2 = m.measure2;
  }
}

/// Runs one method. ART methods need every set to be a hyperslab; their
/// iteration cap is max_outer_iters.
inline SolveReport run_method(Method method, const Problem& p, const SolverOptions& opt = {},
                              ExtendedArtPolicy policy = {}) {
  switch (method) {
    case Method::Map: return solve_map(p.x0, p.sets, opt);
    case Method::Dykstra: return solve_dykstra(p.x0, p.sets, opt);
    case Method::Haugazeau: return solve_haugazeau(p.x0, p.sets, opt);
    case Method::BapGi: return solve_bap(p.x0, p.sets, opt);
    case Method::SipGi: return solve_sip(p.x0, p.sets, opt);
    case Method::Art3:
    case Method::ExtArt: {
      const HyperslabSystem sys = to_hyperslab_system(p.sets);
      SolveReport rep;
      if (method == Method::Art3) {
        rep = art3_solve(p.x0, sys, ArtOptions{opt.max_outer_iters});
      } else {
        policy.max_iters = opt.max_outer_iters;
        rep = extended_art_solve(p.x0, sys, policy).report;
      }
      if (opt.reference) attach_reference(rep, *opt.reference);
      return rep;
    }
  }
  throw InvalidInput("run_method: unknown method");
}

// ---------------------------------------------------------------------------
// Two circles: centers (+-2.9, 0), radius 3, start (0, 10). The intersection
// point nearest the start is (0, sqrt(0.59)).

inline Problem two_circles_problem() {
  Problem p;
  p.kind = "two-circles";
  p.sets.emplace_back(Ball{Vec{{-2.9, 0.0}}, 3.0});
  p.sets.emplace_back(Ball{Vec{{2.9, 0.0}}, 3.0});
  p.x0 = Vec{{0.0, 10.0}};
  p.witness = Vec{{0.0, 0.0}};
  return p;
}

inline Vec two_circles_reference() { return Vec{{0.0, std::sqrt(0.59)}}; }

/// Default iteration counts: rows 0..11 for the QP methods,
/// 200 MAP iterations, 2000 Dykstra projections, 90000 Haugazeau steps.
inline std::size_t two_circles_default_iterations(Method m) {
  switch (m) {
    case Method::Map: return 200;
    case Method::Dykstra: return 2000;
    case Method::Haugazeau: return 90000;
    case Method::BapGi:
    case Method::SipGi: return 11;
    default: throw InvalidInput("two-circles: method " + method_name(m) + " needs hyperslab sets");
  }
}

/// Cyclic order, one inner step per outer iteration, no revisiting, no
/// stopping tolerance: the run always reaches the iteration cap unless x
/// lands exactly in the intersection.
inline SolveReport run_two_circles(Method m, std::optional<std::size_t> max_iters = std::nullopt,
                                   std::optional<std::size_t> max_store = std::nullopt) {
  SolverOptions opt;
  opt.feas_tol = 0.0;
  opt.max_outer_iters = max_iters.value_or(two_circles_default_iterations(m));
  opt.inner_steps_per_outer = 1;
  opt.visit_order = VisitOrder::Cyclic;
  opt.revisit_old_constraints = false;
  opt.max_store = max_store;
  opt.reference = two_circles_reference();
  return run_method(m, two_circles_problem(), opt);
}

/// Reference for a generated or file problem: a BAP run solving each stored
/// QP to optimality at a tenth of the requested tolerance.
inline std::optional<Vec> high_accuracy_reference(const Problem& p, double feas_tol, std::size_t max_iters = 100000) {
  SolverOptions opt;
  opt.feas_tol = feas_tol / 10.0;
  opt.max_outer_iters = max_iters;
  opt.inner_steps_per_outer = 0;
  const SolveReport rep = solve_bap(p.x0, p.sets, opt);
  if (rep.status != SolveStatus::Solved) return std::nullopt;
  return rep.x;
}

// ---------------------------------------------------------------------------
// Reports

namespace report {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string format_opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

inline std::string join_events(const std::vector<std::string>& events) {
  std::string out;
  for (const auto& e : events) {
    if (!out.empty()) out += ';';
    out += e;
  }
  return out;
}

/// iter,dist,measure1,measure2,event with six significant digits.
inline void write_csv(std::ostream& out, const SolveReport& rep) {
  out << "iter,dist,measure1,measure2,event\n";
  for (const auto& row : rep.trace) {
    out << row.iter << ',' << format_opt(row.dist) << ',' << format_opt(row.measure1) << ','
        << format_opt(row.measure2) << ',' << join_events(row.events) << '\n';
  }
}

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json to_json(const SolveReport& rep, bool include_trace = true) {
  using nlohmann::json;
  json out = {{"method", rep.method},
              {"status", to_string(rep.status)},
              {"x", io::to_json(rep.x)},
              {"projections", rep.projections},
              {"inner_steps", rep.inner_steps},
              {"partial_steps", rep.partial_steps}};
  if (include_trace) {
    json rows = json::array();
    for (const auto& row : rep.trace) {
      rows.push_back({{"iter", row.iter},
                      {"x", io::to_json(row.x)},
                      {"dist", opt_json(row.dist)},
                      {"measure1", opt_json(row.measure1)},
                      {"measure2", opt_json(row.measure2)},
                      {"events", row.events}});
    }
    out["trace"] = rows;
  }
  if (rep.certificate) {
    json normals = json::array();
    for (Index k = 0; k < rep.certificate->normals.cols(); ++k) {
      normals.push_back(io::to_json(Vec(rep.certificate->normals.col(k))));
    }
    out["certificate"] = {{"normals", normals},
                          {"rhs", io::to_json(rep.certificate->rhs)},
                          {"lambda", io::to_json(rep.certificate->lambda)},
                          {"verified", rep.certificate->verify()}};
  }
  return out;
}

}  // namespace report

}  // namespace projqp
