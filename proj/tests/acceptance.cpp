// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "projqp/bench.hpp"
#include "projqp/verification.hpp"

using namespace projqp;

namespace {

// Reference two-circles distances, rows 0..11.
constexpr double kTableBap[] = {9.23,    2.95,   1.48,    2.16e-1, 1.54e-1,  1.60e-2,
                                5.22e-3, 7.91e-5, 6.91e-6, 1.67e-9, 1.21e-11, 9.44e-16};
constexpr double kTableSip[] = {9.23,    2.95,    7.98e-1, 1.70e-1, 7.57e-2,  8.04e-3,
                                1.38e-3, 1.79e-5, 4.84e-7, 8.28e-11, 5.93e-14, 7.86e-16};

constexpr double kMapTarget = 2.35e-13;
constexpr double kMapRate = -0.1405;  // ln(2 (2.9/3)^2 - 1)
constexpr double kMapRateTol = 0.005;
constexpr double kDykstraLo = 4e-11, kDykstraHi = 4e-9;
constexpr double kHaugazeauLo = 3.8e-4, kHaugazeauHi = 1.5e-3;
constexpr double kMeasure1At9 = -2.5;

constexpr std::uint64_t kSeedQp = 6001, kSeedBox = 7001, kSeedAPlus = 8001, kSeedPoly = 9001, kSeedCone = 9002,
                        kSeedArt = 10001;

struct Line {
  int id;
  bool pass;
  std::string text;
};

std::vector<Line> g_lines;

void record(int id, bool pass, const std::string& text) {
  g_lines.push_back({id, pass, text});
  std::printf("%s  criterion %2d  %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
  std::fflush(stdout);
}

std::string sci(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return buf;
}

bool same_two_sig_figs(double a, double b) { return sci(a, 2) == sci(b, 2); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Rows 1..9 against the table; returns the mismatching rows.
std::string table_mismatches(const SolveReport& rep, const double* table) {
  std::string bad;
  for (std::size_t i = 1; i <= 9; ++i) {
    if (rep.trace.size() <= i || !same_two_sig_figs(*rep.trace[i].dist, table[i])) {
      bad += " row" + std::to_string(i);
      if (rep.trace.size() > i) bad += "=" + sci(*rep.trace[i].dist);
    }
  }
  return bad;
}

double window_mean(const SolveReport& rep, std::size_t lo, std::size_t hi, bool first_measure) {
  double sum = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) sum += first_measure ? *rep.trace[i].measure1 : *rep.trace[i].measure2;
  return sum / static_cast<double>(hi - lo + 1);
}

/// Means over rows [1,4], [5,8], [9,11] strictly decrease for both measures.
bool windows_decrease(const SolveReport& rep, std::string& detail) {
  if (rep.trace.size() < 12) {
    detail += " " + rep.method + ": fewer than 12 rows";
    return false;
  }
  bool ok = true;
  for (const bool first : {true, false}) {
    const double a = window_mean(rep, 1, 4, first), b = window_mean(rep, 5, 8, first),
                 c = window_mean(rep, 9, 11, first);
    detail += " " + rep.method + (first ? " m1" : " m2") + " windows " + sci(a) + " > " + sci(b) + " > " + sci(c) + ";";
    ok = ok && a > b && b > c;
  }
  return ok;
}

std::string suite_text(const verify::SuiteResult& r) {
  std::string s = r.name + ": " + std::to_string(r.cases) + " cases, " + std::to_string(r.failures) + " failures";
  if (r.failures > 0) s += " (first: " + r.first_failure + ")";
  return s;
}

}  // namespace

int main() {
  StepAudit audit;
  const ScopedStepAudit audit_scope(audit);

  // 1. Two circles, BAP.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveReport rep = run_two_circles(Method::BapGi);
    const double secs = seconds_since(t0);
    const std::string bad = table_mismatches(rep, kTableBap);
    const bool d11_ok = rep.trace.size() > 11 && *rep.trace[11].dist <= 1e-14;
    std::ostringstream s;
    s << "two-circles bap-gi: d1=" << sci(*rep.trace[1].dist) << " d5=" << sci(*rep.trace[5].dist)
      << " d9=" << sci(*rep.trace[9].dist) << " d11=" << sci(*rep.trace.back().dist) << " (<= 1e-14), rows 1-9 at 2 s.f.:"
      << (bad.empty() ? " all match" : " mismatch" + bad) << ", " << secs << " s (< 1 s)";
    record(1, bad.empty() && d11_ok && secs < 1.0, s.str());
  }

  // 2. Two circles, SIP, and the superlinear-convergence evidence.
  {
    const SolveReport bap = run_two_circles(Method::BapGi);
    const SolveReport sip = run_two_circles(Method::SipGi);
    const std::string bad = table_mismatches(sip, kTableSip);
    const bool d10_ok = sip.trace.size() > 10 && *sip.trace[10].dist <= 1e-12;
    std::string windows;
    const bool win_ok = windows_decrease(bap, windows) & windows_decrease(sip, windows);
    const double m1_bap = *bap.trace[9].measure1, m1_sip = *sip.trace[9].measure1;
    const bool m1_ok = m1_bap <= kMeasure1At9 && m1_sip <= kMeasure1At9;
    std::ostringstream s;
    s << "two-circles sip-gi: rows 1-9 at 2 s.f.:" << (bad.empty() ? " all match" : " mismatch" + bad)
      << ", d10=" << sci(*sip.trace[10].dist) << " (<= 1e-12);" << windows << " measure1 at i=9: bap "
      << sci(m1_bap, 4) << ", sip " << sci(m1_sip, 4) << " (<= -2.5)";
    record(2, bad.empty() && d10_ok && win_ok && m1_ok, s.str());
  }

  // 3. MAP.
  {
    const SolveReport rep = run_two_circles(Method::Map);
    const double d = *rep.trace.back().dist;
    const double rate = *rep.trace.back().measure2;
    const bool ok = rep.trace.back().iter == 200 && d <= 1e-12 && d >= kMapTarget / 10.0 && d <= kMapTarget * 10.0 &&
                    std::abs(rate - kMapRate) <= kMapRateTol;
    record(3, ok,
           "map: d200=" + sci(d) + " (<= 1e-12, within 10x of 2.35e-13), tail measure2=" + sci(rate, 4) +
               " (-0.1405 +- 0.005)");
  }

  // 4. Dykstra.
  {
    const SolveReport rep = run_two_circles(Method::Dykstra);
    const double d = *rep.trace.back().dist;
    record(4, rep.trace.back().iter == 2000 && d >= kDykstraLo && d <= kDykstraHi,
           "dykstra: d after 2000 = " + sci(d) + " (in [4e-11, 4e-9])");
  }

  // 5. Haugazeau.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveReport rep = run_two_circles(Method::Haugazeau);
    const double secs = seconds_since(t0);
    const double d = *rep.trace.back().dist;
    std::ostringstream s;
    s << "haugazeau: d after 90000 = " << sci(d) << " (in [3.8e-4, 1.5e-3]), " << secs << " s (< 30 s)";
    record(5, rep.trace.back().iter == 90000 && d >= kHaugazeauLo && d <= kHaugazeauHi && secs < 30.0, s.str());
  }

  // 6-9. Equivalence suites.
  {
    const auto r = verify::qp_oracle_suite(kSeedQp, 200);
    record(6, r.passed() && r.cases >= 200, suite_text(r));
  }
  {
    const auto r = verify::box_suite(kSeedBox, 200);
    record(7, r.passed() && r.cases >= 200, suite_text(r));
  }
  {
    const auto r = verify::a_plus_suite(kSeedAPlus, 100);
    record(8, r.passed() && r.cases >= 100, suite_text(r));
  }
  {
    const auto p = verify::polyhedron_reduction_suite(kSeedPoly, 100);
    const auto c = verify::cone_reduction_suite(kSeedCone, 100);
    record(9, p.passed() && c.passed() && p.cases >= 100 && c.cases >= 100, suite_text(p) + "; " + suite_text(c));
  }

  // 10. ART.
  {
    const auto r = verify::art_suite(kSeedArt, 100);
    record(10, r.art3.passed() && r.extended.passed() && r.fejer.passed() && r.max_iterations < 100000,
           suite_text(r.art3) + "; " + suite_text(r.extended) + "; " + suite_text(r.fejer) +
               "; most iterations " + std::to_string(r.max_iterations) + " (< 1e5)");
  }

  // 12 runs before 11 so that its steps are audited too.
  bool c12 = false;
  std::string c12_text;
  {
    const SolveReport sip = run_two_circles(Method::SipGi, 200, 0);
    const SolveReport map = run_two_circles(Method::Map, 200);
    double worst = 0.0;
    const bool same_len = sip.trace.size() == map.trace.size();
    for (std::size_t i = 0; i < std::min(sip.trace.size(), map.trace.size()); ++i) {
      worst = std::max(worst, (sip.trace[i].x - map.trace[i].x).norm());
    }
    c12 = same_len && worst <= 1e-12;
    c12_text = "sip-gi with max_store=0 vs map on two circles: " + std::to_string(sip.trace.size()) + " vs " +
               std::to_string(map.trace.size()) + " iterates, largest gap " + sci(worst) + " (<= 1e-12)";
  }

  // 11. Invariants of every audited step above.
  {
    std::string text = "s-tuple invariants and strict v-increase: " + std::to_string(audit.steps_checked) +
                       " steps and " + std::to_string(audit.certificates_checked) + " certificates audited, " +
                       std::to_string(audit.violations) + " violations";
    if (!audit.messages.empty()) text += " (first: " + audit.messages.front() + ")";
    record(11, audit.violations == 0 && audit.steps_checked > 0, text);
  }
  record(12, c12, c12_text);

  std::size_t failed = 0;
  for (const auto& l : g_lines) failed += !l.pass;
  std::printf("%zu of %zu criteria passed\n", g_lines.size() - failed, g_lines.size());
  return failed == 0 ? 0 : 1;
}
