#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topoderiv/error.hpp"
#include "topoderiv/filter_algebra.hpp"
#include "topoderiv/finite_topology.hpp"

namespace topoderiv {

/// Relations on n points are masks over n*n pair indices; pair (x,y) has
/// index x*n + y. n <= 8 keeps a relation in one word.
inline constexpr int pair_index(int n, int x, int y) { return x * n + y; }

inline Mask pair_mask(int n, int x, int y) { return Mask{1} << pair_index(n, x, y); }

inline Mask diagonal(int n) {
  Mask d = 0;
  for (int x = 0; x < n; ++x) d |= pair_mask(n, x, x);
  return d;
}

inline Mask relation(int n, std::initializer_list<std::pair<int, int>> pairs) {
  Mask r = 0;
  for (auto [x, y] : pairs) r |= pair_mask(n, x, y);
  return r;
}

inline Mask transpose(int n, Mask a) {
  Mask r = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (contains(a, pair_index(n, x, y))) r |= pair_mask(n, y, x);
  return r;
}

/// Row x of a relation: {y : (x,y) in a}.
inline Mask row(int n, Mask a, int x) { return (a >> (x * n)) & full_mask(n); }

/// {(x,z) : exists y, (x,y) in a and (y,z) in b}.
inline Mask compose_sets(int n, Mask a, Mask b) {
  if (n < 0 || n > 8) throw Error(ErrorCode::SizeLimitExceeded, "relations limited to 8 points");
  Mask r = 0;
  for (int x = 0; x < n; ++x) {
    Mask out = 0;
    for (Mask mid = row(n, a, x); mid != 0; mid &= mid - 1) out |= row(n, b, std::countr_zero(mid));
    r |= out << (x * n);
  }
  return r;
}

/// Side length of a square topology, checked.
inline int square_side(const FiniteTopology& t) {
  int n = 0;
  while (n * n < t.size()) ++n;
  if (n * n != t.size()) throw Error(ErrorCode::RepresentationMismatch, "topology is not on a square ground set");
  return n;
}

/// Product topology on pairs: up-sets of the product specialisation preorder,
/// which are exactly the unions of open rectangles.
inline FiniteTopology product_topology(const FiniteTopology& t) {
  const int n = t.size();
  if (n > 4) throw Error(ErrorCode::SizeLimitExceeded, "product_topology supports n <= 4");
  const auto up = specialisation_upsets(t);
  std::vector<Mask> up2(static_cast<std::size_t>(n * n));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      Mask m = 0;
      for (Mask a = up[x]; a != 0; a &= a - 1)
        for (Mask b = up[y]; b != 0; b &= b - 1)
          m |= pair_mask(n, std::countr_zero(a), std::countr_zero(b));
      up2[pair_index(n, x, y)] = m;
    }
  return upset_topology(n * n, up2);
}

/// f^2(x,y) = (f(x), f(y)) between the product spaces.
inline PointMap square_map(const PointMap& f, TopologyRef source_square, TopologyRef target_square) {
  const int n = f.source->size(), m = f.target->size();
  std::vector<int> image(static_cast<std::size_t>(n * n));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) image[pair_index(n, x, y)] = pair_index(m, f.image[x], f.image[y]);
  return PointMap{std::move(source_square), std::move(target_square), std::move(image)};
}

inline PointMap swap_map(const TopologyRef& square) {
  const int n = square_side(*square);
  std::vector<int> image(static_cast<std::size_t>(n * n));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) image[pair_index(n, x, y)] = pair_index(n, y, x);
  return PointMap{square, square, std::move(image)};
}

/// mu(D) = 1 iff r is contained in D.
inline IndicatorFilter principal_filter(const TopologyRef& square, Mask r) {
  return IndicatorFilter::from_kernel(square, square->open_hull(r));
}

inline IndicatorFilter diagonal_filter(const TopologyRef& square) {
  return principal_filter(square, diagonal(square_side(*square)));
}

/// mu o nu (D) = 1 iff there are opens E, F with mu(E) = nu(F) = 1 and
/// E o F inside D. Composition is monotone, so the kernels realise the
/// existential.
inline IndicatorFilter compose_filters(const IndicatorFilter& mu, const IndicatorFilter& nu) {
  if (!same_topology(mu.topology(), nu.topology()))
    throw Error(ErrorCode::RepresentationMismatch, "pair filters live on different squares");
  const int n = square_side(*mu.topology());
  return principal_filter(mu.topology(), compose_sets(n, mu.kernel(), nu.kernel()));
}

/// The swap is a homeomorphism of any product topology.
inline IndicatorFilter swap_pushforward(const IndicatorFilter& mu) {
  return pushforward(unchecked, swap_map(mu.topology()), mu);
}

/// Half composition: for every D with mu(D) = 1 some E with mu(E) = 1 has
/// E o E inside D. Witness: the D without such an E.
inline Check<Mask> check_half_composition(const IndicatorFilter& mu) {
  const auto& t = *mu.topology();
  const int n = square_side(t);
  for (std::size_t d = 0; d < t.open_count(); ++d) {
    if (!mu.at(d)) continue;
    bool found = false;
    for (std::size_t e = 0; e < t.open_count() && !found; ++e)
      found = mu.at(e) && is_subset(compose_sets(n, t.open(e), t.open(e)), t.open(d));
    if (!found) return Check<Mask>::fail(t.open(d));
  }
  return Check<Mask>::pass();
}

struct UniformityReport {
  Check<Mask> finer_than_diagonal;  // (a) witness: open D with o(Delta)(D)=1, Omega(D)=0
  Check<Mask> half_composition;     // (b)
  Check<Mask> symmetric;            // (c) witness: open where sigma*Omega differs
  Check<Mask> square_finer;         // Omega o Omega >= Omega, reported on its own
  bool ok() const { return finer_than_diagonal.ok && half_composition.ok && symmetric.ok; }
};

inline Check<Mask> first_difference(const IndicatorFilter& a, const IndicatorFilter& b) {
  for (std::size_t i = 0; i < a.values().size(); ++i)
    if (a.values()[i] != b.values()[i]) return Check<Mask>::fail(a.topology()->open(i));
  return Check<Mask>::pass();
}

inline UniformityReport check_uniformity(const IndicatorFilter& omega) {
  UniformityReport r;
  r.finer_than_diagonal = filter_leq(diagonal_filter(omega.topology()), omega);
  r.half_composition = check_half_composition(omega);
  r.symmetric = first_difference(swap_pushforward(omega), omega);
  r.square_finer = filter_leq(omega, compose_filters(omega, omega));
  return r;
}

struct UniformPreRefinement {
  std::vector<IndicatorFilter> members;
};

struct UniformRefinementReport {
  /// index of a member that is not finer than Omega, with the open
  std::optional<std::pair<std::size_t, Mask>> not_finer;
  /// index of a member without half composition, with the open
  std::optional<std::pair<std::size_t, Mask>> no_half_composition;
  /// index of a member whose swap is not in the set
  std::optional<std::size_t> not_swap_closed;
  bool pre_refinement() const { return !not_finer; }
  bool refinement() const { return !not_finer && !no_half_composition && !not_swap_closed; }
};

inline UniformRefinementReport check_uniform_refinement(const UniformPreRefinement& d, const IndicatorFilter& omega) {
  UniformRefinementReport r;
  for (std::size_t i = 0; i < d.members.size(); ++i) {
    const auto& mu = d.members[i];
    if (!same_topology(mu.topology(), omega.topology()))
      throw Error(ErrorCode::RepresentationMismatch, "member lives on another square");
    if (auto le = filter_leq(omega, mu); !le && !r.not_finer) r.not_finer = {i, *le.witness};
    if (auto h = check_half_composition(mu); !h && !r.no_half_composition) r.no_half_composition = {i, *h.witness};
    const auto swapped = swap_pushforward(mu);
    if (!r.not_swap_closed && std::find(d.members.begin(), d.members.end(), swapped) == d.members.end())
      r.not_swap_closed = i;
  }
  return r;
}

/// D_x = {y != x : (x,y) in D}.
inline Mask slice(int n, Mask d, int x) { return row(n, d, x) & ~(Mask{1} << x); }

/// The filter on the base space generated by the x-slices of the support of
/// mu. Supports are principal, so the kernel slice generates it. Throws
/// EmptySlice when every slice is empty; witness (x, member index).
inline IndicatorFilter induced_filter_at(const TopologyRef& base, const IndicatorFilter& mu, int x,
                                         std::size_t member = 0) {
  const int n = square_side(*mu.topology());
  if (n != base->size()) throw Error(ErrorCode::RepresentationMismatch, "base size does not match the square");
  const Mask k = slice(n, mu.kernel(), x);
  if (k == 0)
    throw Error(ErrorCode::EmptySlice, "slice of member " + std::to_string(member) + " at " + std::to_string(x) +
                                           " is empty",
                {static_cast<std::uint64_t>(x), member});
  return IndicatorFilter::from_kernel(base, base->open_hull(k));
}

/// x -> {mu_x : mu in the pre-refinement}; duplicates collapse.
inline Refinement induced_refinement(const TopologyRef& base, const UniformPreRefinement& d) {
  Refinement r{base, std::vector<std::vector<IndicatorFilter>>(static_cast<std::size_t>(base->size()))};
  for (int x = 0; x < base->size(); ++x) {
    auto& members = r.assignment[x];
    for (std::size_t i = 0; i < d.members.size(); ++i) {
      auto mu_x = induced_filter_at(base, d.members[i], x, i);
      if (std::find(members.begin(), members.end(), mu_x) == members.end()) members.push_back(std::move(mu_x));
    }
    std::sort(members.begin(), members.end());
  }
  return r;
}

struct UniformDerivabilityWitness {
  bool image_side;  // true: f2*mu not in target set; false: target member never hit
  std::size_t member;
};

/// {f^2*mu : mu in d} equals d2 as a set of filters.
inline Check<UniformDerivabilityWitness> check_uniform_derivable(const PointMap& f, const UniformPreRefinement& d,
                                                                 const UniformPreRefinement& d2) {
  if (d.members.empty() || d2.members.empty())
    throw Error(ErrorCode::RepresentationMismatch, "empty member sets have no square to act on");
  const auto f2 = square_map(f, d.members.front().topology(), d2.members.front().topology());
  std::vector<IndicatorFilter> images;
  for (std::size_t i = 0; i < d.members.size(); ++i) {
    auto img = pushforward(f2, d.members[i]);
    if (std::find(d2.members.begin(), d2.members.end(), img) == d2.members.end())
      return Check<UniformDerivabilityWitness>::fail({true, i});
    images.push_back(std::move(img));
  }
  for (std::size_t j = 0; j < d2.members.size(); ++j)
    if (std::find(images.begin(), images.end(), d2.members[j]) == images.end())
      return Check<UniformDerivabilityWitness>::fail({false, j});
  return Check<UniformDerivabilityWitness>::pass();
}

enum class Commutation { commute, counterexample, inconclusive };

inline std::string_view to_string(Commutation c) {
  switch (c) {
    case Commutation::commute: return "commute";
    case Commutation::counterexample: return "counterexample";
    case Commutation::inconclusive: return "inconclusive";
  }
  return "?";
}

struct FiniteCommutation {
  Commutation verdict;
  std::optional<Mask> open;  // where mu o nu and nu o mu differ
};

inline FiniteCommutation check_commutation(const IndicatorFilter& mu, const IndicatorFilter& nu) {
  auto diff = first_difference(compose_filters(mu, nu), compose_filters(nu, mu));
  if (diff) return {Commutation::commute, std::nullopt};
  return {Commutation::counterexample, diff.witness};
}

}  // namespace topoderiv
