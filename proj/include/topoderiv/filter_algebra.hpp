#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topoderiv/error.hpp"
#include "topoderiv/finite_topology.hpp"

namespace topoderiv {

using TopologyRef = std::shared_ptr<const FiniteTopology>;

inline TopologyRef share(FiniteTopology t) { return std::make_shared<const FiniteTopology>(std::move(t)); }

inline bool same_topology(const TopologyRef& a, const TopologyRef& b) { return a == b || *a == *b; }

/// Proper mode requires mu(empty) = 0. It is the default; the all-ones
/// filter is only accepted when proper is switched off.
struct FilterMode {
  bool proper = true;
};

struct unchecked_t {
  explicit unchecked_t() = default;
};
inline constexpr unchecked_t unchecked{};

/// A 0/1 function on the opens of a finite topology satisfying the filter
/// axioms. values()[i] is the value on topology()->open(i).
class IndicatorFilter {
 public:
  IndicatorFilter(unchecked_t, TopologyRef topology, std::vector<std::uint8_t> values)
      : topology_(std::move(topology)), values_(std::move(values)) {}

  /// mu(D) = 1 iff kernel is a subset of D. Every finite filter has this form
  /// with kernel = intersection of its support.
  static IndicatorFilter from_kernel(TopologyRef topology, Mask kernel) {
    std::vector<std::uint8_t> values(topology->open_count());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = is_subset(kernel, topology->open(i)) ? 1 : 0;
    return IndicatorFilter(unchecked, std::move(topology), std::move(values));
  }

  const TopologyRef& topology() const noexcept { return topology_; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  bool at(std::size_t index) const { return values_.at(index) != 0; }

  /// Value on an open set given by its mask.
  bool operator()(Mask open) const {
    auto index = topology_->index_of(open);
    if (!index) throw Error(ErrorCode::IndexOutOfRange, mask_to_string(open) + " is not open", {open});
    return values_[*index] != 0;
  }

  bool is_proper() const { return values_.front() == 0; }

  /// Intersection of the support; the least open set with value 1.
  Mask kernel() const {
    Mask k = topology_->full();
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i]) k &= topology_->open(i);
    return k;
  }

  friend bool operator==(const IndicatorFilter& a, const IndicatorFilter& b) {
    return same_topology(a.topology_, b.topology_) && a.values_ == b.values_;
  }
  /// Canonical order: lexicographic on the value table.
  friend bool operator<(const IndicatorFilter& a, const IndicatorFilter& b) { return a.values_ < b.values_; }

 private:
  TopologyRef topology_;
  std::vector<std::uint8_t> values_;
};

inline std::string describe(const IndicatorFilter& mu) {
  std::string s = "[";
  for (std::size_t i = 0; i < mu.values().size(); ++i) s += (i ? "," : "") + std::to_string(mu.values()[i]);
  return s + "]";
}

/// Validates an assignment aligned with topology->opens(). Checks run in the
/// order (a), (b), (c), then the proper-mode requirement; witnesses are the
/// offending open sets.
inline IndicatorFilter check_filter_axioms(TopologyRef topology, std::vector<std::uint8_t> values,
                                           FilterMode mode = {}) {
  const auto& t = *topology;
  if (values.size() != t.open_count())
    throw Error(ErrorCode::IndexOutOfRange, "assignment has " + std::to_string(values.size()) + " entries for " +
                                                std::to_string(t.open_count()) + " opens");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > 1) throw Error(ErrorCode::NotIndicator, "value at index " + std::to_string(i) + " is not 0/1", {i});
  const std::size_t k = values.size();
  if (!values[k - 1]) throw Error(ErrorCode::AxiomA, "mu(X) = 0", {t.full()});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j && is_subset(t.open(i), t.open(j)) && values[i] > values[j])
        throw Error(ErrorCode::AxiomB,
                    mask_to_string(t.open(i)) + " within " + mask_to_string(t.open(j)) + " but value drops",
                    {t.open(i), t.open(j)});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const Mask a = t.open(i), b = t.open(j);
      const int lhs = values[*t.index_of(a | b)] + values[*t.index_of(a & b)];
      if (lhs < values[i] + values[j])
        throw Error(ErrorCode::AxiomC, "supermodularity fails on " + mask_to_string(a) + ", " + mask_to_string(b),
                    {a, b});
    }
  if (mode.proper && values[0]) throw Error(ErrorCode::ImproperFilter, "mu(empty) = 1 in proper mode", {0});
  return IndicatorFilter(unchecked, std::move(topology), std::move(values));
}

inline IndicatorFilter point_filter(TopologyRef topology, int x) {
  if (x < 0 || x >= topology->size())
    throw Error(ErrorCode::IndexOutOfRange, "point " + std::to_string(x) + " outside the space",
                {static_cast<std::uint64_t>(x)});
  return IndicatorFilter::from_kernel(std::move(topology), Mask{1} << x);
}

inline std::vector<Mask> support(const IndicatorFilter& mu) {
  std::vector<Mask> result;
  for (std::size_t i = 0; i < mu.values().size(); ++i)
    if (mu.values()[i]) result.push_back(mu.topology()->open(i));
  return result;
}

/// Which of the classical filter properties (a') X in V, (b') upward closure,
/// (c') closure under intersection failed, and on which opens.
struct SupportViolation {
  char property;
  std::vector<Mask> opens;
};

inline Check<SupportViolation> check_support_properties(const FiniteTopology& t, std::span<const Mask> supp) {
  auto in_support = [&](Mask m) { return std::find(supp.begin(), supp.end(), m) != supp.end(); };
  if (!in_support(t.full())) return Check<SupportViolation>::fail({'a', {t.full()}});
  for (Mask a : supp)
    for (Mask b : t.opens())
      if (is_subset(a, b) && !in_support(b)) return Check<SupportViolation>::fail({'b', {a, b}});
  for (Mask a : supp)
    for (Mask b : supp)
      if (!in_support(a & b)) return Check<SupportViolation>::fail({'c', {a, b}});
  return Check<SupportViolation>::pass();
}

/// Pushforward without the continuity and topology checks, for maps known
/// to be continuous by construction.
inline IndicatorFilter pushforward(unchecked_t, const PointMap& f, const IndicatorFilter& mu) {
  const auto& target = *f.target;
  std::vector<std::uint8_t> values(target.open_count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = mu(f.preimage(target.open(i))) ? 1 : 0;
  return IndicatorFilter(unchecked, f.target, std::move(values));
}

/// (f*mu)(A) = mu(f^-1(A)).
inline IndicatorFilter pushforward(const PointMap& f, const IndicatorFilter& mu) {
  if (!same_topology(f.source, mu.topology()))
    throw Error(ErrorCode::TopologyMismatch, "filter does not live on the source of the map");
  if (auto c = is_continuous(f); !c)
    throw Error(ErrorCode::NotContinuous, "preimage of " + mask_to_string(*c.witness) + " is not open",
                {*c.witness});
  return pushforward(unchecked, f, mu);
}

inline constexpr std::size_t kMaxEnumeratedOpens = 20;

/// All filters on t (proper ones only in proper mode), in canonical order.
/// Filters on a finite topology correspond one to one with their kernels,
/// which are open sets.
inline std::vector<IndicatorFilter> enumerate_filters(const TopologyRef& topology, FilterMode mode = {}) {
  if (topology->open_count() > kMaxEnumeratedOpens)
    throw Error(ErrorCode::SizeLimitExceeded, "enumerate_filters supports at most 20 opens");
  std::vector<IndicatorFilter> result;
  for (Mask k : topology->opens()) {
    if (mode.proper && k == 0) continue;
    result.push_back(IndicatorFilter::from_kernel(topology, k));
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// mu <= nu pointwise (nu is finer). Witness: an open D with mu(D)=1, nu(D)=0.
inline Check<Mask> filter_leq(const IndicatorFilter& mu, const IndicatorFilter& nu) {
  if (!same_topology(mu.topology(), nu.topology()))
    throw Error(ErrorCode::TopologyMismatch, "filters live on different topologies");
  for (std::size_t i = 0; i < mu.values().size(); ++i)
    if (mu.values()[i] > nu.values()[i]) return Check<Mask>::fail(mu.topology()->open(i));
  return Check<Mask>::pass();
}

/// Subsets of a filter universe are bit masks over universe positions.
using FilterSet = std::uint64_t;

/// The filter space A(tau) of a finite topology with its tau^e structure.
class FilterUniverse {
 public:
  explicit FilterUniverse(TopologyRef topology, FilterMode mode = {})
      : topology_(std::move(topology)), filters_(enumerate_filters(topology_, mode)) {
    if (filters_.size() > 63) throw Error(ErrorCode::SizeLimitExceeded, "universe larger than 63 filters");
    basic_.resize(topology_->open_count(), 0);
    for (std::size_t d = 0; d < basic_.size(); ++d)
      for (std::size_t i = 0; i < filters_.size(); ++i)
        if (filters_[i].at(d)) basic_[d] |= FilterSet{1} << i;
  }

  const TopologyRef& topology() const noexcept { return topology_; }
  std::span<const IndicatorFilter> filters() const noexcept { return filters_; }
  std::size_t size() const noexcept { return filters_.size(); }
  FilterSet all() const { return size() == 64 ? ~FilterSet{0} : (FilterSet{1} << size()) - 1; }

  std::optional<std::size_t> index_of(const IndicatorFilter& mu) const {
    auto it = std::lower_bound(filters_.begin(), filters_.end(), mu);
    if (it == filters_.end() || !(*it == mu)) return std::nullopt;
    return static_cast<std::size_t>(it - filters_.begin());
  }

  /// {mu : mu(D) = 1} for the open with index d.
  FilterSet basic_open(std::size_t d) const { return basic_.at(d); }

  FilterSet to_set(std::span<const IndicatorFilter> members) const {
    FilterSet s = 0;
    for (const auto& mu : members) {
      auto i = index_of(mu);
      if (!i) throw Error(ErrorCode::IndexOutOfRange, "filter " + describe(mu) + " is not in the universe");
      s |= FilterSet{1} << *i;
    }
    return s;
  }

 private:
  TopologyRef topology_;
  std::vector<IndicatorFilter> filters_;
  std::vector<FilterSet> basic_;
};

/// tau^e openness: every member mu has an open D with mu(D)=1 whose basic
/// set {mu' : mu'(D)=1} stays inside V. Witness: the universe index of a
/// member without such a D.
inline Check<std::size_t> is_open_in_tau_e(FilterSet v, const FilterUniverse& universe) {
  for (FilterSet rest = v; rest != 0; rest &= rest - 1) {
    const auto i = static_cast<std::size_t>(std::countr_zero(rest));
    bool found = false;
    for (std::size_t d = 0; d < universe.topology()->open_count() && !found; ++d)
      found = universe.filters()[i].at(d) && is_subset(universe.basic_open(d), v);
    if (!found) return Check<std::size_t>::fail(i);
  }
  return Check<std::size_t>::pass();
}

inline Check<IndicatorFilter> is_open_in_tau_e(std::span<const IndicatorFilter> v, const FilterUniverse& universe) {
  auto result = is_open_in_tau_e(universe.to_set(v), universe);
  if (result) return Check<IndicatorFilter>::pass();
  return Check<IndicatorFilter>::fail(universe.filters()[*result.witness]);
}

/// All tau^e-open subsets of the universe, by exhaustive test of the
/// definition.
inline std::vector<FilterSet> tau_e_opens(const FilterUniverse& universe) {
  if (universe.size() > 24) throw Error(ErrorCode::SizeLimitExceeded, "tau^e enumeration limited to 24 filters");
  std::vector<FilterSet> result;
  for (FilterSet v = 0; v <= universe.all(); ++v)
    if (is_open_in_tau_e(v, universe)) result.push_back(v);
  return result;
}

/// Exhaustive continuity check of f* : A(tau) -> A(tau') for the tau^e
/// topologies. Witness: a target open set whose preimage is not open.
inline Check<FilterSet> check_pushforward_continuity(const PointMap& f, FilterMode mode = {}) {
  if (auto c = is_continuous(f); !c)
    throw Error(ErrorCode::NotContinuous, "preimage of " + mask_to_string(*c.witness) + " is not open",
                {*c.witness});
  const FilterUniverse source(f.source, mode);
  const FilterUniverse target(f.target, mode);
  std::vector<std::size_t> image(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    auto j = target.index_of(pushforward(f, source.filters()[i]));
    if (!j) throw Error(ErrorCode::IndexOutOfRange, "pushforward left the target universe");
    image[i] = *j;
  }
  for (FilterSet v : tau_e_opens(target)) {
    FilterSet pre = 0;
    for (std::size_t i = 0; i < source.size(); ++i)
      if ((v >> image[i]) & 1u) pre |= FilterSet{1} << i;
    if (!is_open_in_tau_e(pre, source)) return Check<FilterSet>::fail(v);
  }
  return Check<FilterSet>::pass();
}

/// x -> finite set of filters. Empty sets are representable so that the
/// checker can report points that admit nothing.
struct Refinement {
  TopologyRef topology;
  std::vector<std::vector<IndicatorFilter>> assignment;
};

struct RefinementViolation {
  enum class Kind { EmptyAssignment, NotFiner, NotStrict, TopologyMismatch } kind;
  int point = 0;
  std::size_t member = 0;
  Mask open = 0;
};

inline std::string to_string(RefinementViolation::Kind k) {
  switch (k) {
    case RefinementViolation::Kind::EmptyAssignment: return "empty assignment";
    case RefinementViolation::Kind::NotFiner: return "(a) mu(D) < o(x)(D)";
    case RefinementViolation::Kind::NotStrict: return "(b) mu equals o(x)";
    case RefinementViolation::Kind::TopologyMismatch: return "member on another topology";
  }
  return "?";
}

/// Conditions (a) mu >= o(x) and (b) mu != o(x) for every member, plus a
/// nonempty assignment at every point.
inline Check<RefinementViolation> check_refinement(const Refinement& r) {
  using Kind = RefinementViolation::Kind;
  const auto& t = *r.topology;
  if (static_cast<int>(r.assignment.size()) != t.size())
    throw Error(ErrorCode::IndexOutOfRange, "refinement must assign a set to each point");
  for (int x = 0; x < t.size(); ++x) {
    const auto& members = r.assignment[x];
    if (members.empty()) return Check<RefinementViolation>::fail({Kind::EmptyAssignment, x, 0, 0});
    const auto ox = point_filter(r.topology, x);
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (!same_topology(members[m].topology(), r.topology))
        return Check<RefinementViolation>::fail({Kind::TopologyMismatch, x, m, 0});
      if (auto le = filter_leq(ox, members[m]); !le)
        return Check<RefinementViolation>::fail({Kind::NotFiner, x, m, *le.witness});
      if (members[m] == ox) return Check<RefinementViolation>::fail({Kind::NotStrict, x, m, 0});
    }
  }
  return Check<RefinementViolation>::pass();
}

/// Proper filters strictly finer than o(x): the candidates a refinement may
/// assign to x.
inline std::vector<IndicatorFilter> strict_refinements_of_point(const TopologyRef& topology, int x,
                                                                FilterMode mode = {}) {
  const auto ox = point_filter(topology, x);
  std::vector<IndicatorFilter> result;
  for (auto& mu : enumerate_filters(topology, mode))
    if (filter_leq(ox, mu) && !(mu == ox)) result.push_back(std::move(mu));
  return result;
}

struct DerivabilityWitness {
  int point;
  std::size_t member;
};

/// f*mu in r2(f(x)) for every x and mu in r(x).
inline Check<DerivabilityWitness> check_derivable(const PointMap& f, const Refinement& r, const Refinement& r2) {
  if (auto c = is_continuous(f); !c)
    throw Error(ErrorCode::NotContinuous, "preimage of " + mask_to_string(*c.witness) + " is not open",
                {*c.witness});
  if (!same_topology(r.topology, f.source) || !same_topology(r2.topology, f.target))
    throw Error(ErrorCode::TopologyMismatch, "refinements do not match the map's spaces");
  for (int x = 0; x < f.source->size(); ++x)
    for (std::size_t m = 0; m < r.assignment[x].size(); ++m) {
      const auto image = pushforward(f, r.assignment[x][m]);
      const auto& target_set = r2.assignment[f.image[x]];
      if (std::find(target_set.begin(), target_set.end(), image) == target_set.end())
        return Check<DerivabilityWitness>::fail({x, m});
    }
  return Check<DerivabilityWitness>::pass();
}

}  // namespace topoderiv
