#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "topoderiv/error.hpp"
#include "topoderiv/filter_algebra.hpp"
#include "topoderiv/finite_topology.hpp"

namespace topoderiv {

using Rational = boost::rational<std::int64_t>;

template <typename Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static Rational tolerance() { return Rational(0); }
  static double to_double(const Rational& r) { return boost::rational_cast<double>(r); }
};

template <>
struct ScalarTraits<double> {
  static double tolerance() { return 1e-12; }
  static double to_double(double d) { return d; }
};

/// A [0,1]-valued function on the opens satisfying the filter axioms.
/// Exact when Scalar is Rational; axiom checks use a 1e-12 slack for double.
template <typename Scalar>
class GradedFilter {
 public:
  GradedFilter(unchecked_t, TopologyRef topology, std::vector<Scalar> values)
      : topology_(std::move(topology)), values_(std::move(values)) {}

  const TopologyRef& topology() const noexcept { return topology_; }
  std::span<const Scalar> values() const noexcept { return values_; }
  const Scalar& at(std::size_t i) const { return values_.at(i); }

  friend bool operator==(const GradedFilter& a, const GradedFilter& b) {
    return same_topology(a.topology_, b.topology_) && a.values_ == b.values_;
  }

 private:
  TopologyRef topology_;
  std::vector<Scalar> values_;
};

template <typename Scalar>
GradedFilter<Scalar> to_graded(const IndicatorFilter& mu) {
  std::vector<Scalar> values;
  values.reserve(mu.values().size());
  for (auto v : mu.values()) values.push_back(Scalar(v));
  return GradedFilter<Scalar>(unchecked, mu.topology(), std::move(values));
}

/// Same check order as check_filter_axioms. NotIndicator here means a value
/// outside [0,1].
template <typename Scalar>
GradedFilter<Scalar> check_graded_axioms(TopologyRef topology, std::vector<Scalar> values, FilterMode mode = {}) {
  using Traits = ScalarTraits<Scalar>;
  const Scalar tol = Traits::tolerance();
  const auto& t = *topology;
  if (values.size() != t.open_count())
    throw Error(ErrorCode::IndexOutOfRange, "assignment has " + std::to_string(values.size()) + " entries for " +
                                                std::to_string(t.open_count()) + " opens");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] < Scalar(0) - tol || values[i] > Scalar(1) + tol)
      throw Error(ErrorCode::NotIndicator, "value at index " + std::to_string(i) + " outside [0,1]", {i});
  const std::size_t k = values.size();
  if (values[k - 1] < Scalar(1) - tol) throw Error(ErrorCode::AxiomA, "mu(X) < 1", {t.full()});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j && is_subset(t.open(i), t.open(j)) && values[i] > values[j] + tol)
        throw Error(ErrorCode::AxiomB,
                    mask_to_string(t.open(i)) + " within " + mask_to_string(t.open(j)) + " but value drops",
                    {t.open(i), t.open(j)});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const Mask a = t.open(i), b = t.open(j);
      const Scalar lhs = values[*t.index_of(a | b)] + values[*t.index_of(a & b)];
      if (lhs + tol < values[i] + values[j])
        throw Error(ErrorCode::AxiomC, "supermodularity fails on " + mask_to_string(a) + ", " + mask_to_string(b),
                    {a, b});
    }
  if (mode.proper && values[0] > tol) throw Error(ErrorCode::ImproperFilter, "mu(empty) > 0 in proper mode", {0});
  return GradedFilter<Scalar>(unchecked, std::move(topology), std::move(values));
}

/// Pointwise convex combination, validated against the axioms.
template <typename Scalar>
GradedFilter<Scalar> convex_combine(std::span<const GradedFilter<Scalar>> filters, std::span<const Scalar> weights,
                                    FilterMode mode = {}) {
  using Traits = ScalarTraits<Scalar>;
  if (filters.empty() || filters.size() != weights.size())
    throw Error(ErrorCode::WeightSumInvalid, "need one weight per filter");
  Scalar sum(0);
  for (const auto& w : weights) {
    if (w < Scalar(0)) throw Error(ErrorCode::WeightSumInvalid, "negative weight");
    sum += w;
  }
  if (std::abs(Traits::to_double(sum - Scalar(1))) > 1e-12)
    throw Error(ErrorCode::WeightSumInvalid, "weights sum to " + std::to_string(Traits::to_double(sum)));
  const auto& topology = filters.front().topology();
  for (const auto& f : filters)
    if (!same_topology(f.topology(), topology))
      throw Error(ErrorCode::TopologyMismatch, "filters live on different topologies");
  std::vector<Scalar> values(topology->open_count(), Scalar(0));
  for (std::size_t k = 0; k < filters.size(); ++k)
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += weights[k] * filters[k].at(i);
  return check_graded_axioms<Scalar>(topology, std::move(values), mode);
}

namespace detail {

/// Inequalities of the B-polytope in the free coordinates: every open except
/// X (fixed to 1) and, in proper mode, the empty set (fixed to 0).
struct PolytopeSystem {
  std::vector<std::size_t> free;  // open indices that are variables
  std::vector<std::vector<Rational>> a;
  std::vector<Rational> b;
};

inline PolytopeSystem b_polytope_system(const FiniteTopology& t, FilterMode mode) {
  const std::size_t k = t.open_count();
  std::vector<int> var(k, -1);
  PolytopeSystem sys;
  for (std::size_t i = 0; i < k; ++i) {
    const bool fixed = (i == k - 1) || (mode.proper && i == 0);
    if (!fixed) {
      var[i] = static_cast<int>(sys.free.size());
      sys.free.push_back(i);
    }
  }
  const std::size_t d = sys.free.size();
  // coefficient vector over all opens, moved to free variables; constants go
  // to the right-hand side
  auto add = [&](const std::vector<int>& coef, int rhs) {
    std::vector<Rational> row(d, Rational(0));
    Rational b(rhs);
    bool nonzero = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (coef[i] == 0) continue;
      if (var[i] >= 0) {
        row[var[i]] += coef[i];
      } else {
        const int fixed_value = (i == k - 1) ? 1 : 0;
        b -= Rational(coef[i] * fixed_value);
      }
    }
    for (const auto& c : row) nonzero = nonzero || c != Rational(0);
    if (!nonzero) return;
    for (std::size_t r = 0; r < sys.a.size(); ++r)
      if (sys.a[r] == row && sys.b[r] == b) return;
    sys.a.push_back(std::move(row));
    sys.b.push_back(b);
  };
  std::vector<int> coef(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::fill(coef.begin(), coef.end(), 0);
    coef[i] = -1;
    add(coef, 0);
    coef[i] = 1;
    add(coef, 1);
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j && is_subset(t.open(i), t.open(j))) {
        std::fill(coef.begin(), coef.end(), 0);
        coef[i] = 1;
        coef[j] = -1;
        add(coef, 0);
      }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const Mask a = t.open(i), b = t.open(j);
      if (is_subset(a, b) || is_subset(b, a)) continue;
      std::fill(coef.begin(), coef.end(), 0);
      coef[i] += 1;
      coef[j] += 1;
      coef[*t.index_of(a | b)] -= 1;
      coef[*t.index_of(a & b)] -= 1;
      add(coef, 0);
    }
  return sys;
}

/// Solves the square system exactly; nullopt when singular.
inline std::optional<std::vector<Rational>> solve_exact(std::vector<std::vector<Rational>> m, std::vector<Rational> rhs) {
  const std::size_t d = rhs.size();
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t p = c;
    while (p < d && m[p][c] == Rational(0)) ++p;
    if (p == d) return std::nullopt;
    std::swap(m[p], m[c]);
    std::swap(rhs[p], rhs[c]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c || m[r][c] == Rational(0)) continue;
      const Rational f = m[r][c] / m[c][c];
      for (std::size_t cc = c; cc < d; ++cc) m[r][cc] -= f * m[c][cc];
      rhs[r] -= f * rhs[c];
    }
  }
  for (std::size_t c = 0; c < d; ++c) rhs[c] /= m[c][c];
  return rhs;
}

inline std::size_t exact_rank(std::vector<std::vector<Rational>> m) {
  if (m.empty()) return 0;
  const std::size_t cols = m.front().size();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < m.size(); ++c) {
    std::size_t p = rank;
    while (p < m.size() && m[p][c] == Rational(0)) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[rank]);
    for (std::size_t r = rank + 1; r < m.size(); ++r) {
      if (m[r][c] == Rational(0)) continue;
      const Rational f = m[r][c] / m[rank][c];
      for (std::size_t cc = c; cc < cols; ++cc) m[r][cc] -= f * m[rank][cc];
    }
    ++rank;
  }
  return rank;
}

inline std::vector<Rational> full_point(const FiniteTopology& t, const PolytopeSystem& sys,
                                        const std::vector<Rational>& x) {
  std::vector<Rational> v(t.open_count(), Rational(0));
  v.back() = 1;
  for (std::size_t i = 0; i < sys.free.size(); ++i) v[sys.free[i]] = x[i];
  return v;
}

}  // namespace detail

inline constexpr std::size_t kMaxVertexCandidates = 2'000'000;

/// Vertices of the B-polytope {v in [0,1]^opens : axioms (a)(b)(c)} (with
/// v(empty)=0 in proper mode), by exact solution of every square subsystem
/// of tight inequalities. Sorted lexicographically; values aligned with
/// t.opens().
inline std::vector<std::vector<Rational>> b_polytope_vertices(const FiniteTopology& t, FilterMode mode = {}) {
  const auto sys = detail::b_polytope_system(t, mode);
  const std::size_t d = sys.free.size();
  const std::size_t rows = sys.a.size();
  std::vector<std::vector<Rational>> result;
  if (d == 0) {
    result.push_back(detail::full_point(t, sys, {}));
    return result;
  }
  double combos = 1;
  for (std::size_t i = 0; i < d; ++i) combos = combos * static_cast<double>(rows - i) / static_cast<double>(i + 1);
  if (rows < d || combos > static_cast<double>(kMaxVertexCandidates))
    throw Error(ErrorCode::SizeLimitExceeded, "vertex enumeration needs " + std::to_string(combos) + " subsystems");
  std::vector<std::size_t> pick(d);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    std::vector<std::vector<Rational>> m;
    std::vector<Rational> rhs;
    for (auto r : pick) {
      m.push_back(sys.a[r]);
      rhs.push_back(sys.b[r]);
    }
    if (auto x = detail::solve_exact(std::move(m), std::move(rhs))) {
      bool feasible = true;
      for (std::size_t r = 0; r < rows && feasible; ++r) {
        Rational lhs(0);
        for (std::size_t c = 0; c < d; ++c) lhs += sys.a[r][c] * (*x)[c];
        feasible = lhs <= sys.b[r];
      }
      if (feasible) result.push_back(detail::full_point(t, sys, *x));
    }
    std::size_t i = d;
    while (i > 0 && pick[i - 1] == rows - d + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < d; ++j) pick[j] = pick[j - 1] + 1;
  }
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

/// Exact vertex certificate: v satisfies every inequality and the tight ones
/// have full rank. Does not need the combinatorial enumeration.
inline bool is_b_polytope_vertex(const FiniteTopology& t, std::span<const Rational> v, FilterMode mode = {}) {
  const auto sys = detail::b_polytope_system(t, mode);
  if (v.size() != t.open_count() || v.back() != Rational(1) || (mode.proper && v.front() != Rational(0))) return false;
  std::vector<std::vector<Rational>> tight;
  for (std::size_t r = 0; r < sys.a.size(); ++r) {
    Rational lhs(0);
    for (std::size_t c = 0; c < sys.free.size(); ++c) lhs += sys.a[r][c] * v[sys.free[c]];
    if (lhs > sys.b[r]) return false;
    if (lhs == sys.b[r]) tight.push_back(sys.a[r]);
  }
  return detail::exact_rank(std::move(tight)) == sys.free.size();
}

}  // namespace topoderiv
