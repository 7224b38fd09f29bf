#include <gtest/gtest.h>

#include <sstream>

#include "projqp/bench.hpp"
#include "projqp/problem.hpp"

using namespace projqp;

namespace {

Problem round_trip(const Problem& p) {
  std::istringstream in(io::to_json(p).dump());
  return io::read_problem_json(in);
}

Problem slabs(const std::string& text) {
  std::istringstream in(text);
  return io::read_slabs_text(in);
}

}  // namespace

TEST(ProblemJson, RoundTripEveryKind) {
  for (const auto& kind : problem_kinds()) {
    const Problem p = generate_problem(kind, 3, 4, 11);
    const Problem q = round_trip(p);
    EXPECT_EQ(q.kind, p.kind);
    EXPECT_EQ(q.x0, p.x0);
    EXPECT_EQ(q.witness.has_value(), p.witness.has_value());
    ASSERT_EQ(q.sets.size(), p.sets.size());
    for (std::size_t k = 0; k < p.sets.size(); ++k) {
      EXPECT_EQ(io::to_json(q.sets[k]), io::to_json(p.sets[k])) << kind << " set " << k;
    }
  }
}

TEST(ProblemJson, InfiniteBounds) {
  const std::string text = R"({"x0": [0, 0], "sets": [
      {"type": "hyperslab", "a": [1, 0], "lower": "-inf", "upper": 1},
      {"type": "box", "lower": [0, "-inf"], "upper": ["+inf", 2]}]})";
  std::istringstream in(text);
  const Problem p = io::read_problem_json(in);
  ASSERT_EQ(p.sets.size(), 2u);
  const auto& h = std::get<Hyperslab>(p.sets[0]);
  EXPECT_TRUE(h.lower.is_neg_inf());
  EXPECT_EQ(h.upper.to_double(), 1.0);
  const auto& b = std::get<Box>(p.sets[1]);
  EXPECT_TRUE(b.upper[0].is_pos_inf());
  EXPECT_TRUE(b.lower[1].is_neg_inf());
  const Problem q = round_trip(p);
  EXPECT_TRUE(std::get<Hyperslab>(q.sets[0]).lower.is_neg_inf());
  EXPECT_EQ(io::to_json(p)["sets"][0]["lower"], "-inf");
}

TEST(ProblemJson, Polyhedron) {
  const std::string text = R"({"x0": [2, 2], "sets": [
      {"type": "polyhedron", "normals": [[-1, 0], [0, -1]], "b": [-1, -1]}]})";
  std::istringstream in(text);
  const Problem p = io::read_problem_json(in);
  const auto rep = solve_bap(p.x0, p.sets);
  EXPECT_EQ(rep.status, SolveStatus::Solved);
  EXPECT_LE((rep.x - Vec{{1.0, 1.0}}).norm(), 1e-8);
}

TEST(ProblemJson, Errors) {
  for (const std::string bad :
       {"not json", R"({"sets": []})", R"({"x0": [0], "sets": [{"type": "cube"}]})",
        R"({"x0": [0], "sets": [{"type": "ball", "center": [0], "radius": -1}]})",
        R"({"x0": [0], "sets": [{"type": "ball", "center": "zero", "radius": 1}]})",
        R"({"x0": [0, 0], "sets": [{"type": "ball", "center": [0], "radius": 1}]})",
        R"({"x0": [0], "sets": [{"type": "hyperslab", "a": [1], "lower": "big", "upper": 1}]})"}) {
    std::istringstream in(bad);
    EXPECT_THROW(io::read_problem_json(in), InvalidInput) << bad;
  }
}

TEST(SlabsText, ParsesRowsBoundsAndStart) {
  const Problem p = slabs("2 2\n1 0\n0 1\n-1 -inf\n1 3\n5 6\n");
  ASSERT_EQ(p.sets.size(), 2u);
  EXPECT_EQ(p.x0, (Vec{{5.0, 6.0}}));
  const HyperslabSystem sys = to_hyperslab_system(p.sets);
  EXPECT_EQ(sys.a_mat, (Mat{{1, 0}, {0, 1}}));
  EXPECT_TRUE(sys.lower[1].is_neg_inf());
  EXPECT_EQ(sys.upper[1].to_double(), 3.0);
}

TEST(SlabsText, StartDefaultsToZero) {
  EXPECT_EQ(slabs("1 3\n1 2 3\n0\n1\n").x0, Vec::Zero(3));
}

TEST(SlabsText, Errors) {
  for (const std::string bad : {"", "0 2", "1.5 2\n", "1 2\n1 0\n0\n", "1 2\n1 x\n0\n1\n", "1 2\n1 0\n0\n1\n1\n",
                                "1 2\n1 0\n0\n1\n1 2 3\n", "1 2\n1 0\n2\n1\n", "1 2\n0 0\n0\n1\n"}) {
    EXPECT_THROW(slabs(bad), InvalidInput) << bad;
  }
}

TEST(Generators, DeterministicUnderSeed) {
  for (const auto& kind : problem_kinds()) {
    EXPECT_EQ(io::to_json(generate_problem(kind, 4, 6, 5)), io::to_json(generate_problem(kind, 4, 6, 5))) << kind;
    EXPECT_NE(io::to_json(generate_problem(kind, 4, 6, 5)), io::to_json(generate_problem(kind, 4, 6, 6))) << kind;
  }
  EXPECT_THROW(generate_problem("spheres", 2, 2, 0), InvalidInput);
}

TEST(Generators, WitnessIsInsideWithMargin) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& kind : {"balls-with-common-point", "box-plus-ball", "hyperslabs-with-interior"}) {
      const Problem p = generate_problem(kind, 5, 7, seed);
      ASSERT_TRUE(p.witness.has_value());
      for (const auto& k : p.sets) EXPECT_TRUE(contains(k, *p.witness, 0.0)) << kind << " " << seed;
    }
    const Problem h = generate_problem("hyperslabs-with-interior", 5, 7, seed);
    const HyperslabSystem sys = to_hyperslab_system(h.sets);
    for (Index j = 0; j < sys.rows(); ++j) {
      const double v = sys.row_value(j, *h.witness);
      const auto ju = static_cast<std::size_t>(j);
      if (sys.lower[ju].is_finite()) EXPECT_GE(v - sys.lower[ju].value(), 0.1 - 1e-12);
      if (sys.upper[ju].is_finite()) EXPECT_GE(sys.upper[ju].value() - v, 0.1 - 1e-12);
    }
  }
}

TEST(Generators, InfeasibleBallsAreSeparated) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Problem p = generate_problem("infeasible-balls", 3, 4, seed);
    const auto& a = std::get<Ball>(p.sets[0]);
    const auto& b = std::get<Ball>(p.sets[1]);
    EXPECT_GT((a.center - b.center).norm(), a.radius + b.radius);
    const auto rep = solve_bap(p.x0, p.sets);
    EXPECT_EQ(rep.status, SolveStatus::Infeasible) << seed;
    ASSERT_TRUE(rep.certificate.has_value());
    EXPECT_TRUE(rep.certificate->verify());
  }
}

TEST(Report, CsvFormat) {
  const auto rep = run_two_circles(Method::BapGi);
  std::ostringstream a, b;
  report::write_csv(a, rep);
  report::write_csv(b, run_two_circles(Method::BapGi));
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "iter,dist,measure1,measure2,event");
  std::getline(lines, line);
  EXPECT_EQ(line, "0,9.23189e+00,,,");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("1,2.95", 0), 0u) << line;
  std::size_t rows = 3;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, rep.trace.size() + 1);
}

TEST(Report, JsonHasCertificateForInfeasible) {
  const Problem p = generate_problem("infeasible-balls", 2, 2, 1);
  const auto j = report::to_json(solve_bap(p.x0, p.sets), false);
  EXPECT_EQ(j["status"], "infeasible");
  EXPECT_TRUE(j["certificate"]["verified"].get<bool>());
  EXPECT_FALSE(j.contains("trace"));
}

TEST(Methods, NamesRoundTrip) {
  for (const auto& [m, name] : method_table()) EXPECT_EQ(parse_method(name), m);
  EXPECT_THROW(parse_method("newton"), InvalidInput);
}

TEST(Methods, ArtOnFileProblem) {
  const Problem p = slabs("3 2\n1 0\n0 1\n1 1\n0 0 -inf\n1 1 1.5\n4 -3\n");
  for (const Method m : {Method::Art3, Method::ExtArt, Method::BapGi, Method::SipGi}) {
    const auto rep = run_method(m, p);
    EXPECT_EQ(rep.status, SolveStatus::Solved) << method_name(m);
    for (const auto& k : p.sets) EXPECT_TRUE(contains(k, rep.x, 1e-8)) << method_name(m);
  }
  const Problem balls = generate_problem("balls-with-common-point", 2, 2, 0);
  EXPECT_THROW(run_method(Method::Art3, balls), InvalidInput);
}
