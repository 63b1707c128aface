// Acceptance run: one line per criterion, exit 1 if any line is FAIL.
//
// Runs the full suite at one worker thread (timed) and again at four, then
// judges each criterion on the records it covers. Counts are checked too, so
// a criterion cannot pass on missing records.

#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include "topoderiv/topoderiv.hpp"

using namespace topoderiv;

namespace {

struct Selection {
  std::size_t records = 0, pass = 0, fail = 0, inconclusive = 0;
  std::uint64_t samples = 0;
  std::string first_bad;
};

Selection select(const SuiteReport& rep, const std::function<bool(const std::string&)>& keep) {
  Selection s;
  for (const auto& r : rep.records) {
    if (!keep(r.id)) continue;
    ++s.records;
    s.samples += r.samples;
    if (r.verdict == Verdict::pass) ++s.pass;
    if (r.verdict == Verdict::inconclusive) ++s.inconclusive;
    if (r.verdict == Verdict::fail) {
      ++s.fail;
      if (s.first_bad.empty()) s.first_bad = r.id + " " + r.witness.dump();
    }
  }
  return s;
}

bool starts(const std::string& id, const std::string& prefix) { return id.rfind(prefix, 0) == 0; }
bool has(const std::string& id, const std::string& part) { return id.find(part) != std::string::npos; }

int failures = 0;

void line(int n, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("criterion %2d: %s  %s  [%s]\n", n, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string counts(const Selection& s) {
  std::string d = std::to_string(s.pass) + "/" + std::to_string(s.records) + " pass";
  if (s.inconclusive) d += ", " + std::to_string(s.inconclusive) + " inconclusive";
  if (s.fail) d += ", first failure: " + s.first_bad.substr(0, 240);
  return d;
}

std::string secs(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", t);
  return buf;
}

}  // namespace

int main() {
  RunConfig cfg;
  std::map<std::string, double> timing;
  const auto rep = run_suite("all", cfg, [&](const std::string& s, double t) {
    timing[s] = t;
    std::fprintf(stderr, "%s: %.1f s\n", s.c_str(), t);
  });

  {
    const auto s = select(rep, [](const std::string& id) {
      return starts(id, "finite-axioms/") && !has(id, "sierpinski") && !has(id, "point-filters");
    });
    const auto enumeration = select(rep, [](const std::string& id) { return starts(id, "finite-axioms/enumeration/"); });
    const auto support = select(rep, [](const std::string& id) { return starts(id, "finite-axioms/support/"); });
    const bool ok = s.fail == 0 && s.pass == s.records && enumeration.pass == 4 && support.pass == 4 &&
                    enumeration.samples >= 65536 && timing["finite-axioms"] < 60;
    line(1, ok, "finite axiom suite on <= 4 points", counts(s) + ", " + secs(timing["finite-axioms"]));
  }
  {
    const auto s = select(rep, [](const std::string& id) { return starts(id, "finite-axioms/sierpinski/"); });
    line(2, s.records == 2 && s.pass == 2, "Sierpinski filters and polytope vertices", counts(s));
  }
  {
    const auto s = select(rep, [](const std::string& id) { return starts(id, "finite-pushforward/continuity/"); });
    const bool ok = s.records == 9 && s.pass == 9 && timing["finite-pushforward"] < 120;
    line(3, ok, "pushforward continuity, T0 spaces on <= 3 points",
         counts(s) + ", " + std::to_string(s.samples) + " maps, " + secs(timing["finite-pushforward"]));
  }
  {
    const auto s = select(rep, [](const std::string& id) {
      return starts(id, "pair-composition/principal/") || starts(id, "pair-composition/swap-anti-homomorphism/");
    });
    line(4, s.records == 6 && s.pass == 6, "relation composition and swap, exhaustive on <= 3 points",
         counts(s) + ", " + std::to_string(s.samples) + " pairs");
  }
  {
    const auto s = select(rep, [](const std::string& id) { return starts(id, "cones/sequences/"); });
    const bool ok = s.records == 3 && s.pass == 3 && s.samples == 1000 && timing["cones"] < 30;
    line(5, ok, "sequence characterization, 1000 sequences",
         counts(s) + ", cones suite " + secs(timing["cones"]));
  }
  {
    const auto lin = select(rep, [](const std::string& id) { return starts(id, "derivative/linear/"); });
    const auto non = select(rep, [](const std::string& id) { return starts(id, "derivative/nonlinear/"); });
    const bool ok = lin.records == 200 && lin.pass == 200 && non.records == 10 && non.pass == 10;
    line(6, ok, "derivative transport, 200 matrices + 10 diffeomorphisms",
         "linear " + counts(lin) + "; nonlinear " + counts(non));
  }
  {
    const auto s = select(rep, [](const std::string& id) { return starts(id, "cones/commutativity/"); });
    const bool ok = s.records == 50 && s.fail == 0 && s.samples >= 50u * 10000u;
    line(7, ok, "commutativity, 50 direction pairs x 1e4 samples", counts(s));
  }
  {
    const auto s = select(rep, [](const std::string& id) { return id == "cones/bound"; });
    const bool ok = s.records == 1 && s.pass == 1 && s.samples >= 100000;
    line(8, ok, "bound inequality over 1e5 cone and curve witnesses", counts(s));
  }
  {
    const auto distinct = select(rep, [](const std::string& id) { return starts(id, "snowflake/separate/distinct-"); });
    const auto equal = select(rep, [](const std::string& id) { return starts(id, "snowflake/separate/equal-"); });
    const auto dim = select(rep, [](const std::string& id) { return id == "snowflake/box-dimension/m=2"; });
    const bool ok = distinct.records == 20 && distinct.pass == 20 && equal.records == 20 && equal.pass == 20 && dim.pass == 1;
    line(9, ok, "snowflake separation and box dimension",
         "distinct " + counts(distinct) + "; equal " + counts(equal) + "; dimension " + counts(dim));
  }
  {
    const auto flows = select(rep, [](const std::string& id) {
      return starts(id, "flows/") && (has(id, "/conditions") || has(id, "/lemacon") || has(id, "/step1") || has(id, "/step3"));
    });
    const auto recipes = select(rep, [](const std::string& id) {
      return starts(id, "flows/") && (has(id, "/lemacon") || has(id, "/step1") || has(id, "/step3"));
    });
    const auto transport = select(rep, [](const std::string& id) { return starts(id, "trad2/") && has(id, "/transport"); });
    const double t = timing["flows"] + timing["trad2"];
    const bool ok = flows.records == 12 && flows.pass == 12 && recipes.samples >= 9u * 100000u && transport.records == 15 &&
                    transport.pass == 15 && t < 300;
    line(10, ok, "flow conditions, recipes and transport",
         "flows " + counts(flows) + "; transport " + counts(transport) + "; " + secs(t));
  }
  {
    RunConfig four = cfg;
    four.threads = 4;
    const auto a = serialize(rep), b = serialize(run_suite("all", four));
    line(11, a == b, "suite all byte-identical at 1 and 4 threads", std::to_string(a.size()) + " bytes");
  }
  return failures == 0 ? 0 : 1;
}
