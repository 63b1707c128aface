#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "topoderiv/catalog.hpp"
#include "topoderiv/filter_algebra.hpp"
#include "topoderiv/finite_topology.hpp"
#include "topoderiv/flows.hpp"
#include "topoderiv/graded_filter.hpp"
#include "topoderiv/metric_filters.hpp"
#include "topoderiv/pair_calculus.hpp"
#include "topoderiv/report.hpp"
#include "topoderiv/sampling.hpp"
#include "topoderiv/snowflake.hpp"

namespace topoderiv {

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"finite-axioms", "finite-pushforward", "pair-composition", "cones",
                                              "derivative",    "snowflake",          "flows",            "trad2"};
  return names;
}

/// Called after each suite finishes with its wall time. Timing never enters
/// the report, which keeps reports byte-identical across runs.
using SuiteTimer = std::function<void(const std::string& suite, double seconds)>;

// ---------------------------------------------------------------- helpers

inline Json mask_json(Mask m) {
  Json a = Json::array();
  for (int i = 0; i < 64; ++i)
    if (contains(m, i)) a.push_back(i);
  return a;
}

inline Json opens_json(const FiniteTopology& t) {
  Json a = Json::array();
  for (Mask o : t.opens()) a.push_back(mask_json(o));
  return a;
}

inline Json point_json(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(num(p[i]));
  return a;
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(point_json(m.row(i).transpose()));
  return a;
}

inline Json values_json(const IndicatorFilter& mu) {
  Json a = Json::array();
  for (auto v : mu.values()) a.push_back(int(v));
  return a;
}

/// Builds records for one suite. Every check gets a seed derived from the run
/// seed and its id, so reordering or parallelising checks changes nothing.
class SuiteBuilder {
 public:
  SuiteBuilder(const RunConfig& cfg, SuiteReport& rep, std::string suite)
      : cfg_(cfg), rep_(rep), suite_(std::move(suite)) {}

  std::string id(const std::string& local) const { return suite_ + "/" + local; }
  std::uint64_t seed(const std::string& local) const { return derive_seed(cfg_.seed, id(local)); }
  const RunConfig& cfg() const { return cfg_; }
  FilterMode mode() const { return FilterMode{!cfg_.improper_filters}; }

  void add(const std::string& local, const std::string& anchor, Verdict v, Json witness, std::uint64_t samples,
           bool seeded = true) {
    rep_.add({id(local), anchor, v, std::move(witness), seeded ? seed(local) : 0, samples});
  }
  void add(const std::string& local, const std::string& anchor, bool ok, Json witness, std::uint64_t samples,
           bool seeded = true) {
    add(local, anchor, ok ? Verdict::pass : Verdict::fail, std::move(witness), samples, seeded);
  }

  /// Runs fn; a library Error becomes a fail record carrying the error.
  template <typename Fn>
  void guarded(const std::string& local, const std::string& anchor, Fn fn) {
    try {
      fn();
    } catch (const Error& e) {
      add(local, anchor, Verdict::fail, Json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}, 0);
    }
  }

 private:
  const RunConfig& cfg_;
  SuiteReport& rep_;
  std::string suite_;
};

// ---------------------------------------------------------------- finite-axioms

namespace detail {

/// Topologies on n points straight from the definition: every family of
/// subsets containing empty and full and closed under union and intersection.
inline std::vector<std::vector<Mask>> topologies_by_families(int n) {
  const int subsets = 1 << n;
  const Mask full = full_mask(n);
  std::vector<std::vector<Mask>> out;
  const std::uint64_t families = std::uint64_t{1} << subsets;
  for (std::uint64_t fam = 0; fam < families; ++fam) {
    auto in = [&](Mask m) { return (fam >> m) & 1u; };
    if (!in(0) || !in(full)) continue;
    bool closed = true;
    for (int a = 0; a < subsets && closed; ++a)
      if (in(a))
        for (int b = a + 1; b < subsets && closed; ++b)
          if (in(b)) closed = in(a | b) && in(a & b);
    if (!closed) continue;
    std::vector<Mask> opens;
    for (int a = 0; a < subsets; ++a)
      if (in(a)) opens.push_back(static_cast<Mask>(a));
    out.push_back(std::move(opens));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// All 0/1 assignments on the opens satisfying the axioms, by exhaustion.
inline std::vector<std::vector<std::uint8_t>> filters_by_assignments(const FiniteTopology& t, FilterMode mode) {
  const std::size_t k = t.open_count();
  std::vector<std::vector<std::uint8_t>> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << k); ++bits) {
    std::vector<std::uint8_t> v(k);
    for (std::size_t i = 0; i < k; ++i) v[i] = (bits >> i) & 1u;
    if (!v[k - 1] || (mode.proper && v[0])) continue;
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i)
      for (std::size_t j = 0; j < k && ok; ++j) {
        const Mask a = t.open(i), b = t.open(j);
        if (is_subset(a, b) && v[i] > v[j]) ok = false;
        if (v[*t.index_of(a | b)] + v[*t.index_of(a & b)] < v[i] + v[j]) ok = false;
      }
    if (ok) out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline void suite_finite_axioms(SuiteBuilder& b) {
  const auto mode = b.mode();
  for (int n = 1; n <= 4; ++n) {
    const std::string tag = "n=" + std::to_string(n);
    const auto all = enumerate_topologies(n, false);
    const auto families = detail::topologies_by_families(n);
    {
      Json w;
      bool ok = all.size() == families.size();
      for (std::size_t i = 0; ok && i < all.size(); ++i)
        if (!std::equal(all[i].opens().begin(), all[i].opens().end(), families[i].begin(), families[i].end())) {
          ok = false;
          w = {{"index", i}, {"enumerated", opens_json(all[i])}};
        }
      if (!ok && w.empty()) w = {{"enumerated", all.size()}, {"families", families.size()}};
      b.add("enumeration/" + tag, "topology-enumeration", ok, ok ? Json{{"topologies", all.size()}} : w,
            std::uint64_t{1} << (1 << n), false);
    }
    std::size_t filters = 0;
    Json axiom_fail, support_fail;
    for (const auto& t : all) {
      const auto ref = share(t);
      for (const auto& mu : enumerate_filters(ref, mode)) {
        ++filters;
        try {
          check_filter_axioms(ref, std::vector<std::uint8_t>(mu.values().begin(), mu.values().end()), mode);
        } catch (const Error& e) {
          if (axiom_fail.empty())
            axiom_fail = {{"opens", opens_json(t)}, {"values", values_json(mu)}, {"error", e.what()}};
        }
        const auto supp = support(mu);
        if (auto c = check_support_properties(t, supp); !c && support_fail.empty()) {
          Json sets = Json::array();
          for (Mask m : c.witness->opens) sets.push_back(mask_json(m));
          support_fail = {{"opens", opens_json(t)},
                          {"values", values_json(mu)},
                          {"property", std::string(1, c.witness->property)},
                          {"sets", sets}};
        }
      }
    }
    b.add("filter-axioms/" + tag, "filter-axioms", axiom_fail.empty(),
          axiom_fail.empty() ? Json{{"filters", filters}} : axiom_fail, filters, false);
    b.add("support/" + tag, "support-filter-properties", support_fail.empty(),
          support_fail.empty() ? Json{{"filters", filters}} : support_fail, filters, false);

    if (n <= 3) {
      Json w;
      for (const auto& t : all) {
        const auto got = enumerate_filters(share(t), mode);
        const auto want = detail::filters_by_assignments(t, mode);
        bool same = got.size() == want.size();
        for (std::size_t i = 0; same && i < got.size(); ++i)
          same = std::equal(got[i].values().begin(), got[i].values().end(), want[i].begin(), want[i].end());
        if (!same && w.empty()) w = {{"opens", opens_json(t)}, {"enumerated", got.size()}, {"exhaustive", want.size()}};
      }
      b.add("filter-enumeration/" + tag, "filter-enumeration", w.empty(), w.empty() ? Json{{"topologies", all.size()}} : w,
            all.size(), false);
    }

    // point filters separate points exactly on T0 spaces
    Json w;
    for (const auto& t : all) {
      const auto ref = share(t);
      bool injective = true;
      for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) injective = injective && !(point_filter(ref, x) == point_filter(ref, y));
      if (injective != static_cast<bool>(is_T0(t)) && w.empty()) w = {{"opens", opens_json(t)}, {"injective", injective}};
    }
    b.add("point-filters/" + tag, "point-filter-injectivity", w.empty(), w.empty() ? Json{{"topologies", all.size()}} : w,
          all.size(), false);
  }

  // Sierpinski ground truth, proper mode regardless of the run flag
  const auto s = share(sierpinski());
  const auto filters = enumerate_filters(s, FilterMode{true});
  const std::vector<IndicatorFilter> points{point_filter(s, 0), point_filter(s, 1)};
  std::vector<IndicatorFilter> sorted_points = points;
  std::sort(sorted_points.begin(), sorted_points.end());
  Json got = Json::array();
  for (const auto& f : filters) got.push_back(values_json(f));
  b.add("sierpinski/filters", "sierpinski-filters", filters == sorted_points, Json{{"filters", got}}, 1, false);

  const auto vertices = b_polytope_vertices(*s, FilterMode{true});
  std::vector<std::vector<Rational>> expected;
  for (const auto& f : sorted_points) {
    std::vector<Rational> v;
    for (auto x : f.values()) v.push_back(Rational(x));
    expected.push_back(std::move(v));
  }
  std::sort(expected.begin(), expected.end());
  Json vj = Json::array();
  for (const auto& v : vertices) {
    Json row = Json::array();
    for (const auto& q : v) row.push_back(std::to_string(q.numerator()) + "/" + std::to_string(q.denominator()));
    vj.push_back(row);
  }
  b.add("sierpinski/b-polytope", "b-polytope-vertices", vertices == expected, Json{{"vertices", vj}}, 1, false);
}

// ---------------------------------------------------------------- finite-pushforward

namespace detail {

inline std::vector<TopologyRef> t0_spaces(int max_n) {
  std::vector<TopologyRef> out;
  for (int n = 1; n <= max_n; ++n)
    for (auto& t : enumerate_topologies(n, true)) out.push_back(share(std::move(t)));
  return out;
}

inline std::vector<PointMap> continuous_maps(const TopologyRef& a, const TopologyRef& b) {
  std::vector<PointMap> out;
  const int n = a->size(), m = b->size();
  std::vector<int> image(n, 0);
  while (true) {
    PointMap f{a, b, image};
    if (is_continuous(f)) out.push_back(std::move(f));
    int i = 0;
    while (i < n && ++image[i] == m) image[i++] = 0;
    if (i == n) break;
  }
  return out;
}

}  // namespace detail

inline void suite_finite_pushforward(SuiteBuilder& b) {
  const auto mode = b.mode();
  const auto spaces = detail::t0_spaces(3);
  std::map<std::pair<int, int>, std::pair<std::size_t, Json>> continuity, points;
  for (const auto& a : spaces)
    for (const auto& t : spaces) {
      auto& [count, fail] = continuity[{a->size(), t->size()}];
      auto& [pcount, pfail] = points[{a->size(), t->size()}];
      for (const auto& f : detail::continuous_maps(a, t)) {
        ++count;
        ++pcount;
        if (auto c = check_pushforward_continuity(f, mode); !c && fail.empty()) {
          const FilterUniverse target(f.target, mode);
          Json members = Json::array();
          for (std::size_t i = 0; i < target.size(); ++i)
            if ((*c.witness >> i) & 1u) members.push_back(values_json(target.filters()[i]));
          fail = {{"source", opens_json(*a)}, {"target", opens_json(*t)}, {"image", f.image}, {"open_set", members}};
        }
        for (int x = 0; x < a->size(); ++x)
          if (!(pushforward(f, point_filter(a, x)) == point_filter(t, f.image[x])) && pfail.empty())
            pfail = {{"source", opens_json(*a)}, {"target", opens_json(*t)}, {"image", f.image}, {"point", x}};
      }
    }
  for (const auto& [key, v] : continuity) {
    const std::string tag = std::to_string(key.first) + "->" + std::to_string(key.second);
    b.add("continuity/" + tag, "pushforward-continuity", v.second.empty(), v.second.empty() ? Json{{"maps", v.first}} : v.second,
          v.first, false);
  }
  for (const auto& [key, v] : points) {
    const std::string tag = std::to_string(key.first) + "->" + std::to_string(key.second);
    b.add("point-filters/" + tag, "pushforward-point-filters", v.second.empty(),
          v.second.empty() ? Json{{"maps", v.first}} : v.second, v.first, false);
  }

  // (g o f)* = g* o f* over composable continuous maps between spaces on <= 2 points
  const auto small = detail::t0_spaces(2);
  std::size_t triples = 0;
  Json fail;
  for (const auto& x : small)
    for (const auto& y : small)
      for (const auto& z : small)
        for (const auto& f : detail::continuous_maps(x, y))
          for (const auto& g : detail::continuous_maps(y, z))
            for (const auto& mu : enumerate_filters(x, mode)) {
              ++triples;
              if (!(pushforward(compose(g, f), mu) == pushforward(g, pushforward(f, mu))) && fail.empty())
                fail = {{"f", f.image}, {"g", g.image}, {"filter", values_json(mu)}};
            }
  b.add("functoriality", "pushforward-functoriality", fail.empty(), fail.empty() ? Json{{"cases", triples}} : fail, triples,
        false);
}

// ---------------------------------------------------------------- pair-composition

inline void suite_pair_composition(SuiteBuilder& b) {
  for (int n = 1; n <= 3; ++n) {
    const std::string tag = "n=" + std::to_string(n);
    const auto sq = share(product_topology(discrete_topology(n)));
    const Mask all = full_mask(n * n);
    // relational composition by the definition, independent of compose_sets
    auto naive = [n](Mask r, Mask s) {
      Mask out = 0;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          for (int z = 0; z < n; ++z)
            if (contains(r, x * n + y) && contains(s, y * n + z)) out |= Mask{1} << (x * n + z);
      return out;
    };
    std::vector<IndicatorFilter> principal, swapped;
    for (Mask a = 0; a <= all; ++a) {
      principal.push_back(principal_filter(sq, a));
      swapped.push_back(swap_pushforward(principal.back()));
    }
    Json comp_fail, swap_fail, involution_fail, diag_fail;
    std::size_t pairs = 0;
    const auto delta = diagonal_filter(sq);
    for (Mask a = 0; a <= all; ++a) {
      if (!(swap_pushforward(swapped[a]) == principal[a]) && involution_fail.empty())
        involution_fail = {{"relation", mask_json(a)}};
      if (!(compose_filters(principal[a], delta) == principal[a] && compose_filters(delta, principal[a]) == principal[a]) &&
          diag_fail.empty())
        diag_fail = {{"relation", mask_json(a)}};
      for (Mask c = 0; c <= all; ++c) {
        ++pairs;
        const auto composed = compose_filters(principal[a], principal[c]);
        if (!(composed == principal[naive(a, c)]) && comp_fail.empty())
          comp_fail = {{"r", mask_json(a)}, {"s", mask_json(c)}};
        if (!(swap_pushforward(composed) == compose_filters(swapped[c], swapped[a])) && swap_fail.empty())
          swap_fail = {{"r", mask_json(a)}, {"s", mask_json(c)}};
      }
    }
    const std::uint64_t rel = all + 1;
    b.add("principal/" + tag, "composition-principal", comp_fail.empty(), comp_fail.empty() ? Json{{"pairs", pairs}} : comp_fail,
          pairs, false);
    b.add("swap-anti-homomorphism/" + tag, "swap-composition", swap_fail.empty(),
          swap_fail.empty() ? Json{{"pairs", pairs}} : swap_fail, pairs, false);
    b.add("swap-involution/" + tag, "swap-involution", involution_fail.empty(),
          involution_fail.empty() ? Json{{"relations", rel}} : involution_fail, rel, false);
    b.add("diagonal-identity/" + tag, "diagonal-unit", diag_fail.empty(), diag_fail.empty() ? Json{{"relations", rel}} : diag_fail,
          rel, false);
  }
}

// ---------------------------------------------------------------- cones

inline void suite_cones(SuiteBuilder& b) {
  const unsigned threads = b.cfg().threads;
  // sequence characterisation: 500 / 250 / 250 labelled sequences
  const std::size_t total = b.cfg().budget(1000);
  const std::size_t with_dir = total / 2, without = total / 4, divergent = total - with_dir - without;
  const std::pair<SequenceKind, std::size_t> kinds[] = {
      {SequenceKind::with_direction, with_dir}, {SequenceKind::without_direction, without}, {SequenceKind::divergent, divergent}};
  for (const auto& [kind, count] : kinds) {
    const std::string local = std::string("sequences/") + to_string(kind);
    const auto seed = b.seed(local);
    struct Outcome {
      bool disagreement, label_mismatch;
    };
    const auto outcomes = run_chunks(count, threads, [&](std::size_t i) {
      Rng rng(derive_seed(seed, "sequence", i));
      const int dim = 2 + static_cast<int>(i % 2);
      const Point x = rng.in_box(dim, 1.0), u = rng.unit_vector(dim);
      const auto seq = labeled_sequence(rng, kind, x, u, 10000);
      const auto v = classify_sequence(seq, x, u);
      const bool expected_match = kind == SequenceKind::with_direction;
      const bool expected_conv = kind != SequenceKind::divergent;
      const bool label_ok = v.matches_filter == expected_match && v.converges_to_point == expected_conv &&
                            (kind != SequenceKind::without_direction || !v.direction_limit);
      return Outcome{v.disagreement, !label_ok};
    });
    std::size_t disagreements = 0, mismatches = 0;
    Json first = nullptr;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      disagreements += outcomes[i].disagreement;
      mismatches += outcomes[i].label_mismatch;
      if ((outcomes[i].disagreement || outcomes[i].label_mismatch) && first.is_null()) first = i;
    }
    Json w{{"sequences", count}, {"disagreements", disagreements}, {"label_mismatches", mismatches}};
    if (!first.is_null()) w["first_failing_index"] = first;
    b.add(local, "sequence-characterization", disagreements == 0 && mismatches == 0, w, count);
  }

  // the bound d(x,c)/(1+mu) < d(x,y) < d(x,c)/(1-mu) on cone and curve witnesses
  {
    const std::size_t n = b.cfg().budget(100000);
    const std::size_t half = n / 2;
    const auto seed = b.seed("bound");
    const std::vector<Curve> curves{{[](double t) { return vec({std::cos(t) - 1, std::sin(t)}); }, -1.5, 1.5},
                                    {[](double t) { return vec({t, t * t}); }, -1.0, 1.0}};
    struct Tally {
      std::size_t members = 0, violations = 0;
      Json first = nullptr;
    };
    auto parts = run_chunks(chunk_count(n), threads, [&](std::size_t c) {
      Rng rng(derive_seed(seed, "bound", c));
      Tally t;
      for (std::size_t i = 0; i < chunk_length(n, c); ++i) {
        const std::size_t k = c * kChunkSize + i;
        const double mu = rng.uniform(0.01, 0.99);
        Point x, cl, y;
        if (k < half) {  // cone: member of V+(x,u,eps,mu) by construction
          const double eps = rng.uniform(0.01, 1.0);
          x = rng.in_box(2, 1.0);
          const Point u = rng.unit_vector(2);
          const double lambda = rng.uniform(0.0, eps);
          const Point on = x + lambda * u;
          y = on + rng.uniform(0.0, 0.999) * mu * lambda / (1 + mu) * rng.unit_vector(2);
          if ((y - x).norm() == 0.0) continue;
          cl = x + project_to_segment(y, x, u, eps).parameter * u;
        } else {
          const Curve& cv = curves[k % 2];
          const double eps = rng.uniform(0.05, cv.b);
          x = cv.at(0.0);
          const Point on = cv.at(rng.uniform(0.0, eps));
          y = on + rng.uniform(0.0, 0.999) * mu * (on - x).norm() / (1 + mu) * rng.unit_vector(2);
          if ((y - x).norm() == 0.0) continue;
          cl = cv.at(arc_distance(cv.at, 0.0, eps, y, euclidean).parameter);
        }
        if (!((y - cl).norm() < mu * (y - x).norm())) continue;  // witness not certified
        ++t.members;
        if (!check_bound(x, cl, y, mu).ok) {
          ++t.violations;
          if (t.first.is_null()) t.first = Json{{"x", point_json(x)}, {"y", point_json(y)}, {"c", point_json(cl)}, {"mu", mu}};
        }
      }
      return t;
    });
    Tally all;
    for (auto& p : parts) {
      all.members += p.members;
      all.violations += p.violations;
      if (all.first.is_null()) all.first = p.first;
    }
    Json w{{"members", all.members}, {"violations", all.violations}};
    if (!all.first.is_null()) w["first"] = all.first;
    b.add("bound", "bound-inequality", all.violations == 0 && all.members > n / 2, w, n);
  }

  // commutativity at the generator level for 50 random direction pairs
  {
    const std::size_t per_pair = b.cfg().budget(10000);
    Rng rng(b.seed("commutativity"));
    for (int k = 0; k < 50; ++k) {
      const Point u = planar(rng.uniform(0, 2 * std::numbers::pi)), v = planar(rng.uniform(0, 2 * std::numbers::pi));
      const std::string local = "commutativity/pair=" + std::to_string(k);
      const auto r = check_metric_commutation(u, v, per_pair, b.seed(local), threads);
      const Verdict verdict = r.verdict == Commutation::commute       ? Verdict::pass
                              : r.verdict == Commutation::inconclusive ? Verdict::inconclusive
                                                                        : Verdict::fail;
      b.add(local, "commutativity", verdict,
            Json{{"u", point_json(u)},
                 {"v", point_json(v)},
                 {"verdict", std::string(to_string(r.verdict))},
                 {"verified", r.verified},
                 {"unresolved", r.unresolved}},
            r.samples);
    }
  }

  // half composition, envelope and swap for the pair-directional generators
  {
    const std::size_t n = b.cfg().budget(10000);
    const auto r = check_pair_directional_refinement(planar(0.7), n, b.seed("pair-refinement"), threads);
    b.add("pair-refinement", "pair-directional-uniform-refinement", r.ok(),
          Json{{"envelope_violations", r.envelope_violations},
               {"half_violations", r.half_violations},
               {"swap_violations", r.swap_violations}},
          r.samples);
  }
}

// ---------------------------------------------------------------- derivative

inline void suite_derivative(SuiteBuilder& b) {
  constexpr double kAngleTol = 1e-6;
  constexpr int kDirections = 10;
  const std::size_t trials = 2;
  auto run = [&](const std::string& local, const SmoothMap& map, Rng& rng, double box, Json extra) {
    double worst = 0;
    std::size_t mismatches = 0, misses = 0;
    Json worst_case = nullptr;
    for (int d = 0; d < kDirections; ++d) {
      const Point x = rng.in_box(map.dim, box), u = rng.unit_vector(map.dim);
      const auto t = transport_via_sequences(map, x, u, trials, derive_seed(b.seed(local), "direction", d));
      const double err = angle_between(t.direction, map.jacobian(x) * u);
      mismatches += t.mismatches;
      if (err > kAngleTol) ++misses;
      if (err >= worst) {
        worst = err;
        worst_case = {{"x", point_json(x)}, {"u", point_json(u)}, {"angle", num(err)}};
      }
    }
    extra["worst"] = worst_case;
    extra["misses"] = misses;
    extra["perturbed_mismatches"] = mismatches;
    b.add(local, "derivative-transport", misses == 0 && mismatches == 0, extra, kDirections);
  };
  Rng rng(b.seed("linear"));
  for (int k = 0; k < 200; ++k) {
    const int dim = k < 100 ? 2 : 3;
    Eigen::MatrixXd A(dim, dim);
    do {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = rng.uniform(-2, 2);
    } while (inverse_condition(A) < 1e-2);
    const std::string local = "linear/" + std::to_string(k);
    Rng local_rng(b.seed(local));
    b.guarded(local, "derivative-transport", [&] { run(local, linear_map(A), local_rng, 1.0, Json{{"matrix", matrix_json(A)}}); });
  }
  for (const auto& m : nonlinear_diffeomorphisms()) {
    const std::string local = "nonlinear/" + m.name;
    Rng local_rng(b.seed(local));
    b.guarded(local, "derivative-transport", [&] { run(local, m, local_rng, 0.5, Json{{"map", m.name}}); });
  }
}

// ---------------------------------------------------------------- snowflake

namespace detail {
inline Polynomial random_polynomial(Rng& rng, int m) {
  for (;;) {
    const int degree = rng.integer(1, m);
    Polynomial p;
    p.coeffs.assign(static_cast<std::size_t>(degree) + 1, Rational(0));
    for (int i = 1; i <= degree; ++i) p.coeffs[i] = Rational(rng.integer(-3, 3), rng.integer(1, 2));
    if (p.coeffs[degree] != Rational(0)) return p;
  }
}
}  // namespace detail

inline void suite_snowflake(SuiteBuilder& b) {
  // metric axioms on 1e5 triples per exponent
  for (int m : {2, 3, 4}) {
    const std::string local = "triangle/m=" + std::to_string(m);
    const std::size_t n = b.cfg().budget(100000);
    Rng rng(b.seed(local));
    std::size_t violations = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2), z = rng.uniform(-2, 2);
      const double dxz = snowflake_distance(m, x, z), dxy = snowflake_distance(m, x, y), dyz = snowflake_distance(m, y, z);
      violations += dxz > dxy + dyz + 1e-12;
    }
    b.add(local, "snowflake-metric", violations == 0, Json{{"violations", violations}}, n);
  }

  // separation of distinct polynomial filters, and equality on equal pairs
  Rng rng(b.seed("pairs"));
  for (int k = 0; k < 20; ++k) {
    const int m = k < 10 ? 2 : 3;
    Polynomial p1 = detail::random_polynomial(rng, m), p2 = detail::random_polynomial(rng, m);
    while (p2 == p1) p2 = detail::random_polynomial(rng, m);
    const std::string local = "separate/distinct-" + std::to_string(k);
    b.guarded(local, "snowflake-separation", [&] {
      const auto r = separate_polynomials(p1, p2, m);
      const bool ok = r.verdict == SeparationVerdict::separated && r.witness && r.witness->verified;
      Json w{{"m", m}, {"p1", describe(p1)}, {"p2", describe(p2)}, {"verdict", std::string(to_string(r.verdict))}};
      if (r.witness) {
        w["along"] = r.witness->along_first ? "p1" : "p2";
        w["eps"] = r.witness->eps;
        w["lambda"] = r.witness->lambda;
        w["verified"] = r.witness->verified;
      }
      if (!r.ratios_along_p1.empty()) w["last_ratio_along_p1"] = num(r.ratios_along_p1.back());
      if (!r.ratios_along_p2.empty()) w["last_ratio_along_p2"] = num(r.ratios_along_p2.back());
      b.add(local, "snowflake-separation", ok, w, 1);
    });
  }
  for (int k = 0; k < 20; ++k) {
    const int m = k < 10 ? 2 : 3;
    const Polynomial p = detail::random_polynomial(rng, m);
    const std::string local = "separate/equal-" + std::to_string(k);
    b.guarded(local, "snowflake-separation", [&] {
      const auto r = separate_polynomials(p, p, m);
      b.add(local, "snowflake-separation", r.verdict == SeparationVerdict::equal,
            Json{{"m", m}, {"p", describe(p)}, {"verdict", std::string(to_string(r.verdict))}}, 1);
    });
  }

  for (int m : {2, 3}) {
    const double dim = snowflake_box_dimension(m);
    b.add("box-dimension/m=" + std::to_string(m), "snowflake-dimension", std::abs(dim - m) <= 0.2,
          Json{{"estimate", num(dim)}, {"expected", m}}, 1, false);
  }

  // order-m developments against the analytic truncation
  struct Case {
    ScalarFunction f;
    double x;
    Polynomial p;
    int m;
  };
  const std::vector<Case> cases{{polynomial_function({0, 2}), 0.3, Polynomial{{Rational(0), Rational(1)}}, 2},
                                {polynomial_function({0, 1, 1}), 0.0, Polynomial{{Rational(0), Rational(1)}}, 2},
                                {exp_function(1.0), 0.2, Polynomial{{Rational(0), Rational(1), Rational(1)}}, 3},
                                {sin_function(1.0, 0.0), 0.4, Polynomial{{Rational(0), Rational(2)}}, 2}};
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    const std::string local = "derive/" + c.f.name + "-" + std::to_string(k);
    b.guarded(local, "polynomial-derivability", [&] {
      const auto v = check_poly_derivable(c.f, c.x, c.p, c.m);
      Json expected = Json::array(), empirical = Json::array();
      for (double q : v.expected) expected.push_back(num(q));
      for (double q : v.empirical) empirical.push_back(num(q));
      b.add(local, "polynomial-derivability", v.match,
            Json{{"expected", expected}, {"empirical", empirical}, {"max_coefficient_error", num(v.max_coefficient_error)}}, 1,
            false);
    });
  }
}

// ---------------------------------------------------------------- flows

inline Json conditions_json(const FlowConditionsReport& r) {
  Json m = Json::array();
  for (const auto& row : r.ratios) m.push_back(Json{{"t", row.t}, {"M", num(row.M)}});
  Json w = Json::array();
  for (const auto& [d, o] : r.modulus) w.push_back(Json{{"delta", d}, {"omega", num(o)}});
  return Json{{"a", r.a_pass},
              {"b", r.b_pass},
              {"c", r.c_pass},
              {"d", r.d_pass},
              {"e", r.e_pass},
              {"identity_residual", num(r.identity_residual)},
              {"group_residual", num(r.group_residual)},
              {"M0", num(r.M0)},
              {"C", num(r.C)},
              {"M", m},
              {"modulus", w}};
}

inline Json recipe_json(const RecipeReport& r) {
  Json c = Json::object();
  for (const auto& [k, v] : r.constants) c[k] = num(v);
  return Json{{"constants", c}, {"violations", r.violations}, {"inconclusive", r.inconclusive}};
}

inline Verdict recipe_verdict(const RecipeReport& r) {
  if (r.violations > 0) return Verdict::fail;
  return r.inconclusive > 0 ? Verdict::inconclusive : Verdict::pass;
}

inline FlowCheckOptions flow_options(const SuiteBuilder& b, const std::string& local) {
  FlowCheckOptions o;
  o.seed = b.seed(local);
  o.threads = b.cfg().threads;
  if (b.cfg().samples) o.samples = *b.cfg().samples;
  return o;
}

inline void suite_flows(SuiteBuilder& b) {
  const std::size_t n = b.cfg().budget(100000);
  const unsigned threads = b.cfg().threads;
  for (const auto& [F, region] : standard_flows()) {
    const std::string base = F.name + "/";
    FlowConditionsReport rep;
    bool have = false;
    b.guarded(base + "conditions", "flow-conditions", [&] {
      rep = check_flow_conditions(F, region, flow_options(b, base + "conditions"));
      have = true;
      b.add(base + "conditions", "flow-conditions", rep.ok(), conditions_json(rep), 0);
    });
    if (!have) continue;

    // generator identity between the reversed flow's + side and the - side
    {
      const std::string local = base + "reversal";
      const std::size_t m = std::min<std::size_t>(n, 10000);
      Rng rng(b.seed(local));
      const Flow R = reversed(F);
      std::size_t mismatch = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double eps = rng.uniform(0.01, 0.9), mu = rng.uniform(0.05, 0.9);
        const Point x = region.sample(rng);
        const Point y = i % 2 ? sample_flow_member(rng, F, Sign::minus, eps, mu, x)
                              : Point(x + rng.unit_vector(2) * rng.uniform(0.0, 0.5));
        mismatch += flow_pair_test(R, Sign::plus, eps, mu, x, y) != flow_pair_test(F, Sign::minus, eps, mu, x, y);
      }
      b.add(local, "flow-reversal", mismatch == 0, Json{{"mismatches", mismatch}}, m);
    }

    b.guarded(base + "lemacon", "flow-reversal-construction", [&] {
      const auto r = lemacon_construct(F, rep, region, 0.1, 0.5, n, b.seed(base + "lemacon"), threads);
      b.add(base + "lemacon", "flow-reversal-construction", recipe_verdict(r), recipe_json(r), r.samples);
    });
    b.guarded(base + "step1", "flow-diagonal-step", [&] {
      const auto r = step1_diagonal_check(F, rep, region, 0.01, n, b.seed(base + "step1"), threads);
      b.add(base + "step1", "flow-diagonal-step", recipe_verdict(r), recipe_json(r), r.samples);
    });
    b.guarded(base + "step3", "flow-composition-step", [&] {
      const auto r = step3_composition_check(F, rep, region, 0.2, 0.5, n, b.seed(base + "step3"), threads);
      b.add(base + "step3", "flow-composition-step", recipe_verdict(r), recipe_json(r), r.samples);
    });
  }

  // translation orbit tubes agree with the pair-directional generators
  {
    const std::string local = "translation/pair-directional";
    const std::size_t m = std::min<std::size_t>(n, 10000);
    const Point u = vec({1, 0});
    const Flow F = translation_flow(u);
    Rng rng(b.seed(local));
    std::size_t disagreements = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double eps = rng.log_uniform(1e-3, 1.0), mu = rng.uniform(0.05, 0.95);
      const Point x = rng.in_box(2, 2.0);
      const Point y = x + rng.unit_vector(2) * rng.log_uniform(1e-4, 2.0);
      disagreements += (flow_pair_test(F, Sign::plus, eps, mu, x, y) == Membership::inside) != pair_v_plus_contains(u, eps, mu, x, y);
    }
    b.add(local, "flow-translation-generators", disagreements == 0, Json{{"disagreements", disagreements}}, m);
  }
}

// ---------------------------------------------------------------- trad2

inline void suite_trad2(SuiteBuilder& b) {
  const std::size_t n = b.cfg().budget(10000);
  const unsigned threads = b.cfg().threads;
  for (const auto& map : bilipschitz_plane_maps())
    for (const auto& [F, region] : standard_flows()) {
      const std::string base = map.name + "/" + F.name + "/";
      b.guarded(base + "pushforward-conditions", "flow-pushforward", [&] {
        const Flow G = pushforward_flow(map, F, region, b.seed(base + "pushforward-conditions"));
        auto opt = flow_options(b, base + "pushforward-conditions");
        opt.samples = std::min<std::size_t>(opt.samples, 2000);
        const auto rep = check_flow_conditions(G, mapped(region, map), opt);
        b.add(base + "pushforward-conditions", "flow-pushforward", rep.ok(), conditions_json(rep), 0);
      });
      b.guarded(base + "transport", "flow-transport", [&] {
        const auto t = check_flow_transport(map, F, region, 0.1, 0.5, n, b.seed(base + "transport"), threads);
        const Verdict v = t.verdict == Commutation::commute       ? Verdict::pass
                          : t.verdict == Commutation::inconclusive ? Verdict::inconclusive
                                                                    : Verdict::fail;
        b.add(base + "transport", "flow-transport", v,
              Json{{"verdict", std::string(to_string(t.verdict))},
                   {"L", num(t.L)},
                   {"mu_prime", num(t.mu_prime)},
                   {"violations", t.violations},
                   {"inconclusive", t.inconclusive}},
              t.samples);
      });
    }

  // (g o f)* F = g* (f* F) pointwise
  {
    const std::string local = "functoriality";
    const auto maps = bilipschitz_plane_maps();
    Rng rng(b.seed(local));
    double worst = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (const auto& [F, region] : standard_flows()) {
        const PlaneMap& f = maps[i];
        const PlaneMap& g = maps[(i + 1) % maps.size()];
        const Flow lhs = pushforward_flow(compose(g, f), F, region);
        const Flow rhs = pushforward_flow(g, pushforward_flow(f, F, region), mapped(region, f));
        for (int k = 0; k < 1000 / int(maps.size() * 3) + 1; ++k) {
          const double t = rng.uniform(-1, 1);
          const Point x = g.f(f.f(region.sample(rng)));
          const Point a = lhs.at(t, x);
          worst = std::max(worst, (a - rhs.at(t, x)).norm() / (1 + a.norm()));
          ++count;
        }
      }
    b.add(local, "flow-pushforward-functoriality", worst <= 1e-9, Json{{"max_residual", num(worst)}}, count);
  }

  // a collapse map is Lipschitz but not bi-Lipschitz and must be refused
  {
    bool refused = false;
    std::string message;
    try {
      check_flow_transport(collapse_map(), translation_flow(vec({1, 0})), annulus(0, 2), 0.1, 0.5, 10, b.seed("collapse"));
    } catch (const Error& e) {
      refused = e.code() == ErrorCode::NotBiLipschitz;
      message = e.what();
    }
    b.add("collapse-rejected", "flow-transport-hypothesis", refused, Json{{"refused", refused}, {"message", message}}, 1);
  }
}

// ---------------------------------------------------------------- dispatch

inline SuiteReport run_suite(const std::string& name, const RunConfig& cfg, const SuiteTimer& timer = {}) {
  cfg.validate();
  const bool all = name == "all";
  if (!all && std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
    throw Error(ErrorCode::UnknownSuite, "no suite named '" + name + "'");
  SuiteReport rep;
  rep.suite = name;
  rep.config = cfg;
  for (const auto& s : suite_names()) {
    if (!all && s != name) continue;
    const auto start = std::chrono::steady_clock::now();
    SuiteBuilder b(cfg, rep, s);
    if (s == "finite-axioms") suite_finite_axioms(b);
    else if (s == "finite-pushforward") suite_finite_pushforward(b);
    else if (s == "pair-composition") suite_pair_composition(b);
    else if (s == "cones") suite_cones(b);
    else if (s == "derivative") suite_derivative(b);
    else if (s == "snowflake") suite_snowflake(b);
    else if (s == "flows") suite_flows(b);
    else if (s == "trad2") suite_trad2(b);
    if (timer) timer(s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return rep;
}

}  // namespace topoderiv
