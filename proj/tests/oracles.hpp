// Brute-force reference implementations. They follow the definitions
// literally and share no code paths with the library beyond FiniteTopology
// accessors.
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "topoderiv/finite_topology.hpp"

namespace oracle {

using topoderiv::Mask;

/// Families of subsets of {0..n-1}, as bit sets over the 2^n subsets, that
/// contain empty and full and are closed under union and intersection.
inline std::vector<std::vector<Mask>> all_topologies(int n) {
  const int subsets = 1 << n;
  const Mask full = (Mask{1} << n) - 1;
  std::vector<std::vector<Mask>> result;
  const std::uint64_t families = std::uint64_t{1} << subsets;
  for (std::uint64_t fam = 0; fam < families; ++fam) {
    if (!((fam >> 0) & 1u) || !((fam >> full) & 1u)) continue;
    bool closed = true;
    for (int a = 0; a < subsets && closed; ++a) {
      if (!((fam >> a) & 1u)) continue;
      for (int b = 0; b < subsets; ++b) {
        if (!((fam >> b) & 1u)) continue;
        if (!((fam >> (a | b)) & 1u) || !((fam >> (a & b)) & 1u)) {
          closed = false;
          break;
        }
      }
    }
    if (!closed) continue;
    std::vector<Mask> opens;
    for (int a = 0; a < subsets; ++a)
      if ((fam >> a) & 1u) opens.push_back(static_cast<Mask>(a));
    result.push_back(std::move(opens));
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// T0 straight from the definition: distinct points have distinct families
/// of open neighbourhoods.
inline bool t0(int n, const std::vector<Mask>& opens) {
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      bool separated = false;
      for (Mask o : opens) separated = separated || (((o >> x) & 1u) != ((o >> y) & 1u));
      if (!separated) return false;
    }
  return true;
}

inline bool subset(Mask a, Mask b) { return (a & ~b) == 0; }

/// Every 0/1 assignment on the opens satisfying the three axioms (and
/// mu(empty)=0 when proper), as value vectors in canonical order.
inline std::vector<std::vector<std::uint8_t>> all_filters(const std::vector<Mask>& opens, bool proper) {
  const std::size_t k = opens.size();
  auto index = [&](Mask m) { return std::find(opens.begin(), opens.end(), m) - opens.begin(); };
  std::vector<std::vector<std::uint8_t>> result;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << k); ++bits) {
    std::vector<std::uint8_t> v(k);
    for (std::size_t i = 0; i < k; ++i) v[i] = (bits >> i) & 1u;
    const Mask full = opens.back();
    if (!v[index(full)]) continue;
    if (proper && v[index(0)]) continue;
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i)
      for (std::size_t j = 0; j < k && ok; ++j) {
        if (subset(opens[i], opens[j]) && v[i] > v[j]) ok = false;
        if (v[index(opens[i] | opens[j])] + v[index(opens[i] & opens[j])] < v[i] + v[j]) ok = false;
      }
    if (ok) result.push_back(std::move(v));
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// {(x,z) : exists y, (x,y) in a, (y,z) in b} by triple loop.
inline Mask compose(int n, Mask a, Mask b) {
  Mask r = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z)
        if (((a >> (x * n + y)) & 1u) && ((b >> (y * n + z)) & 1u)) r |= Mask{1} << (x * n + z);
  return r;
}

/// Closure of the rectangles A x B under unions, by fixed point iteration.
inline std::vector<Mask> product_opens(int n, const std::vector<Mask>& opens) {
  std::vector<Mask> family;
  for (Mask a : opens)
    for (Mask b : opens) {
      Mask r = 0;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          if (((a >> x) & 1u) && ((b >> y) & 1u)) r |= Mask{1} << (x * n + y);
      family.push_back(r);
    }
  std::sort(family.begin(), family.end());
  family.erase(std::unique(family.begin(), family.end()), family.end());
  for (bool grew = true; grew;) {
    grew = false;
    const auto snapshot = family;
    for (Mask a : snapshot)
      for (Mask b : snapshot)
        if (!std::binary_search(family.begin(), family.end(), a | b)) {
          family.insert(std::lower_bound(family.begin(), family.end(), a | b), a | b);
          grew = true;
        }
  }
  return family;
}

/// mu o nu by the defining existential over all pairs of opens.
inline std::vector<std::uint8_t> compose_filters(int n, const std::vector<Mask>& opens,
                                                 const std::vector<std::uint8_t>& mu,
                                                 const std::vector<std::uint8_t>& nu) {
  std::vector<std::uint8_t> out(opens.size(), 0);
  for (std::size_t d = 0; d < opens.size(); ++d)
    for (std::size_t e = 0; e < opens.size() && !out[d]; ++e)
      for (std::size_t f = 0; f < opens.size() && !out[d]; ++f)
        if (mu[e] && nu[f] && subset(compose(n, opens[e], opens[f]), opens[d])) out[d] = 1;
  return out;
}

}  // namespace oracle
