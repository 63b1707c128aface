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

namespace topoderiv {

/// A subset of point indices, bit i set iff point i belongs to it.
using Mask = std::uint64_t;

inline constexpr int kMaxPoints = 64;

constexpr Mask full_mask(int n) { return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1; }
constexpr bool contains(Mask set, int i) { return (set >> i) & 1u; }
constexpr bool is_subset(Mask a, Mask b) { return (a & ~b) == 0; }

inline std::string mask_to_string(Mask m) {
  std::string s = "{";
  bool first = true;
  for (int i = 0; i < 64; ++i) {
    if (contains(m, i)) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
  }
  return s + "}";
}

class FiniteTopology;
FiniteTopology validate_topology(int n, std::vector<Mask> family);

/// Topology on the points 0..n-1. Opens are kept sorted ascending by mask
/// value, so equal topologies compare equal member for member.
class FiniteTopology {
 public:
  int size() const noexcept { return n_; }
  Mask full() const noexcept { return full_mask(n_); }
  std::span<const Mask> opens() const noexcept { return opens_; }
  std::size_t open_count() const noexcept { return opens_.size(); }
  Mask open(std::size_t i) const { return opens_.at(i); }

  std::optional<std::size_t> index_of(Mask set) const {
    auto it = std::lower_bound(opens_.begin(), opens_.end(), set);
    if (it == opens_.end() || *it != set) return std::nullopt;
    return static_cast<std::size_t>(it - opens_.begin());
  }
  bool is_open(Mask set) const { return index_of(set).has_value(); }

  /// Smallest open set containing x.
  Mask neighbourhood(int x) const {
    Mask result = full();
    for (Mask o : opens_)
      if (contains(o, x)) result &= o;
    return result;
  }

  /// Smallest open set containing `set` (opens are closed under intersection).
  Mask open_hull(Mask set) const {
    Mask result = full();
    for (Mask o : opens_)
      if (is_subset(set, o)) result &= o;
    return result;
  }

  friend bool operator==(const FiniteTopology&, const FiniteTopology&) = default;
  friend auto operator<=>(const FiniteTopology& a, const FiniteTopology& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    return a.opens_ <=> b.opens_;
  }

  /// For families already known to be closed and canonical (product and
  /// preorder constructions). Callers outside the library go through
  /// validate_topology.
  static FiniteTopology from_canonical(int n, std::vector<Mask> sorted_opens) {
    FiniteTopology t;
    t.n_ = n;
    t.opens_ = std::move(sorted_opens);
    return t;
  }

 private:
  int n_ = 0;
  std::vector<Mask> opens_;
};

/// Returns the canonical topology or throws an Error naming the first
/// violation. Checks run in the order: index range, union closure,
/// intersection closure, presence of the empty and full set.
inline FiniteTopology validate_topology(int n, std::vector<Mask> family) {
  if (n < 0 || n > kMaxPoints)
    throw Error(ErrorCode::IndexOutOfRange, "point count " + std::to_string(n) + " outside [0,64]");
  const Mask full = full_mask(n);
  for (Mask m : family)
    if (!is_subset(m, full))
      throw Error(ErrorCode::IndexOutOfRange, "set " + mask_to_string(m) + " has an index >= " + std::to_string(n), {m});
  std::sort(family.begin(), family.end());
  family.erase(std::unique(family.begin(), family.end()), family.end());
  auto member = [&](Mask m) { return std::binary_search(family.begin(), family.end(), m); };
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j)
      if (!member(family[i] | family[j]))
        throw Error(ErrorCode::NotClosedUnderUnion,
                    mask_to_string(family[i]) + " u " + mask_to_string(family[j]) + " missing",
                    {family[i], family[j]});
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j)
      if (!member(family[i] & family[j]))
        throw Error(ErrorCode::NotClosedUnderIntersection,
                    mask_to_string(family[i]) + " n " + mask_to_string(family[j]) + " missing",
                    {family[i], family[j]});
  if (!member(0) || !member(full))
    throw Error(ErrorCode::MissingEmptyOrFull, "empty set and full set must both be open");
  return FiniteTopology::from_canonical(n, std::move(family));
}

inline FiniteTopology discrete_topology(int n) {
  if (n > 20) throw Error(ErrorCode::SizeLimitExceeded, "discrete topology limited to 20 points");
  std::vector<Mask> opens(std::size_t{1} << n);
  for (std::size_t i = 0; i < opens.size(); ++i) opens[i] = i;
  return FiniteTopology::from_canonical(n, std::move(opens));
}

inline FiniteTopology indiscrete_topology(int n) {
  if (n == 0) return FiniteTopology::from_canonical(0, {0});
  return FiniteTopology::from_canonical(n, {0, full_mask(n)});
}

/// Opens {}, {1}, {0,1}.
inline FiniteTopology sierpinski() { return FiniteTopology::from_canonical(2, {0b00, 0b10, 0b11}); }

/// Topology of up-sets of a preorder given by up[x] = {y : x <= y}.
inline FiniteTopology upset_topology(int n, std::span<const Mask> up) {
  std::vector<Mask> opens;
  const Mask limit = full_mask(n);
  for (Mask s = 0;; ++s) {
    bool closed = true;
    for (Mask rest = s; rest != 0 && closed; rest &= rest - 1) {
      const int x = std::countr_zero(rest);
      closed = is_subset(up[x], s);
    }
    if (closed) opens.push_back(s);
    if (s == limit) break;
  }
  return FiniteTopology::from_canonical(n, std::move(opens));
}

/// up[x] is the minimal open neighbourhood of x, i.e. the up-set of x in the
/// specialisation preorder.
inline std::vector<Mask> specialisation_upsets(const FiniteTopology& t) {
  std::vector<Mask> up(t.size());
  for (int x = 0; x < t.size(); ++x) up[x] = t.neighbourhood(x);
  return up;
}

struct PointMap {
  std::shared_ptr<const FiniteTopology> source;
  std::shared_ptr<const FiniteTopology> target;
  std::vector<int> image;

  Mask preimage(Mask target_set) const {
    Mask result = 0;
    for (std::size_t i = 0; i < image.size(); ++i)
      if (contains(target_set, image[i])) result |= Mask{1} << i;
    return result;
  }
  Mask forward_image(Mask source_set) const {
    Mask result = 0;
    for (std::size_t i = 0; i < image.size(); ++i)
      if (contains(source_set, static_cast<int>(i))) result |= Mask{1} << image[i];
    return result;
  }
};

inline PointMap make_point_map(std::shared_ptr<const FiniteTopology> source,
                               std::shared_ptr<const FiniteTopology> target, std::vector<int> image) {
  if (static_cast<int>(image.size()) != source->size())
    throw Error(ErrorCode::IndexOutOfRange, "image length " + std::to_string(image.size()) +
                                                " does not match source size " + std::to_string(source->size()));
  for (std::size_t i = 0; i < image.size(); ++i)
    if (image[i] < 0 || image[i] >= target->size())
      throw Error(ErrorCode::IndexOutOfRange, "image[" + std::to_string(i) + "] = " + std::to_string(image[i]),
                  {i});
  return PointMap{std::move(source), std::move(target), std::move(image)};
}

inline PointMap identity_map(std::shared_ptr<const FiniteTopology> t) {
  std::vector<int> image(t->size());
  for (int i = 0; i < t->size(); ++i) image[i] = i;
  return PointMap{t, t, std::move(image)};
}

inline PointMap compose(const PointMap& g, const PointMap& f) {
  if (!(*f.target == *g.source))
    throw Error(ErrorCode::TopologyMismatch, "maps are not composable");
  std::vector<int> image(f.image.size());
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = g.image[f.image[i]];
  return PointMap{f.source, g.target, std::move(image)};
}

/// T0 as injectivity of x -> (open neighbourhoods of x). Witness: an
/// indistinguishable pair.
inline Check<std::pair<int, int>> is_T0(const FiniteTopology& t) {
  const auto up = specialisation_upsets(t);
  for (int x = 0; x < t.size(); ++x)
    for (int y = x + 1; y < t.size(); ++y)
      if (up[x] == up[y]) return Check<std::pair<int, int>>::fail({x, y});
  return Check<std::pair<int, int>>::pass();
}

/// Witness: a target open whose preimage is not open.
inline Check<Mask> is_continuous(const PointMap& f) {
  for (Mask o : f.target->opens())
    if (!f.source->is_open(f.preimage(o))) return Check<Mask>::fail(o);
  return Check<Mask>::pass();
}

/// Every topology on n <= 4 points, each exactly once, sorted by the
/// canonical order of FiniteTopology. Finite topologies are generated from
/// their specialisation preorders rather than by filtering subset families.
inline std::vector<FiniteTopology> enumerate_topologies(int n, bool t0_only) {
  if (n < 0 || n > 4) throw Error(ErrorCode::SizeLimitExceeded, "enumerate_topologies supports n <= 4");
  std::vector<std::pair<int, int>> off_diagonal;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y) off_diagonal.emplace_back(x, y);
  std::vector<FiniteTopology> result;
  const std::uint32_t relation_count = 1u << off_diagonal.size();
  for (std::uint32_t bits = 0; bits < relation_count; ++bits) {
    std::vector<Mask> up(n);
    for (int x = 0; x < n; ++x) up[x] = Mask{1} << x;
    for (std::size_t k = 0; k < off_diagonal.size(); ++k)
      if ((bits >> k) & 1u) up[off_diagonal[k].first] |= Mask{1} << off_diagonal[k].second;
    bool transitive = true;
    bool antisymmetric = true;
    for (int x = 0; x < n && transitive; ++x)
      for (int y = 0; y < n; ++y) {
        if (!contains(up[x], y)) continue;
        if (!is_subset(up[y], up[x])) {
          transitive = false;
          break;
        }
        if (x != y && contains(up[y], x)) antisymmetric = false;
      }
    if (!transitive || (t0_only && !antisymmetric)) continue;
    result.push_back(upset_topology(n, up));
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace topoderiv
