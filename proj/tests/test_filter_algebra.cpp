#include <gtest/gtest.h>

#include "oracles.hpp"
#include "topoderiv/filter_algebra.hpp"

using namespace topoderiv;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::vector<TopologyRef> topologies_up_to(int n_max, bool t0_only) {
  std::vector<TopologyRef> out;
  for (int n = 1; n <= n_max; ++n)
    for (auto& t : enumerate_topologies(n, t0_only)) out.push_back(share(std::move(t)));
  return out;
}

std::vector<PointMap> continuous_maps(const TopologyRef& s, const TopologyRef& t) {
  std::vector<PointMap> out;
  std::vector<int> image(s->size(), 0);
  while (true) {
    PointMap f{s, t, image};
    if (is_continuous(f)) out.push_back(f);
    int i = 0;
    while (i < s->size() && ++image[i] == t->size()) image[i++] = 0;
    if (i == s->size()) break;
  }
  return out;
}

}  // namespace

TEST(FilterAxioms, SierpinskiExamples) {
  auto s = share(sierpinski());
  EXPECT_EQ(check_filter_axioms(s, {0, 1, 1}), point_filter(s, 1));
  EXPECT_EQ(check_filter_axioms(s, {0, 0, 1}), point_filter(s, 0));
  try {
    check_filter_axioms(s, {1, 0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AxiomB);
    EXPECT_EQ(e.witness(), (std::vector<std::uint64_t>{0b00, 0b10}));
  }
}

TEST(FilterAxioms, ErrorKinds) {
  auto s = share(sierpinski());
  auto d2 = share(discrete_topology(2));
  EXPECT_EQ(code_of([&] { check_filter_axioms(s, {0, 1, 0}); }), ErrorCode::AxiomA);
  EXPECT_EQ(code_of([&] { check_filter_axioms(s, {0, 2, 1}); }), ErrorCode::NotIndicator);
  // opens {}, {0}, {1}, X: mu({0}) = mu({1}) = 1 but mu({}) = 0
  EXPECT_EQ(code_of([&] { check_filter_axioms(d2, {0, 1, 1, 1}); }), ErrorCode::AxiomC);
  EXPECT_EQ(code_of([&] { check_filter_axioms(s, {1, 1, 1}); }), ErrorCode::ImproperFilter);
  EXPECT_NO_THROW(check_filter_axioms(s, {1, 1, 1}, FilterMode{false}));
  EXPECT_EQ(code_of([&] { check_filter_axioms(s, {0, 1}); }), ErrorCode::IndexOutOfRange);
}

TEST(EnumerateFilters, MatchesBruteForceOnAllSmallTopologies) {
  for (const auto& t : topologies_up_to(4, false))
    for (bool proper : {true, false}) {
      std::vector<Mask> opens(t->opens().begin(), t->opens().end());
      auto expected = oracle::all_filters(opens, proper);
      auto got = enumerate_filters(t, FilterMode{proper});
      ASSERT_EQ(got.size(), expected.size());
      for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_EQ(std::vector<std::uint8_t>(got[i].values().begin(), got[i].values().end()), expected[i]);
    }
}

TEST(EnumerateFilters, Examples) {
  auto s = share(sierpinski());
  auto f = enumerate_filters(s);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0], point_filter(s, 0));
  EXPECT_EQ(f[1], point_filter(s, 1));
  // discrete 2: the point filters and the filter supported on X alone
  auto d2 = share(discrete_topology(2));
  auto g = enumerate_filters(d2);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(describe(g[0]), "[0,0,0,1]");
  EXPECT_EQ(enumerate_filters(share(indiscrete_topology(2))).size(), 1u);
  EXPECT_EQ(code_of([] { enumerate_filters(share(discrete_topology(5))); }), ErrorCode::SizeLimitExceeded);
}

TEST(Support, ClassicalFilterPropertiesOnEveryFilter) {
  for (const auto& t : topologies_up_to(4, false))
    for (bool proper : {true, false})
      for (const auto& mu : enumerate_filters(t, FilterMode{proper})) {
        auto supp = support(mu);
        EXPECT_TRUE(check_support_properties(*t, supp));
      }
}

TEST(Support, Examples) {
  auto s = share(sierpinski());
  EXPECT_EQ(support(point_filter(s, 1)), (std::vector<Mask>{0b10, 0b11}));
  EXPECT_EQ(support(point_filter(s, 0)), (std::vector<Mask>{0b11}));
  auto all_ones = check_filter_axioms(s, {1, 1, 1}, FilterMode{false});
  EXPECT_EQ(support(all_ones).size(), 3u);
  EXPECT_TRUE(check_support_properties(*s, support(all_ones)));
  // a family that is not upward closed is caught
  std::vector<Mask> bad{0b10};
  EXPECT_FALSE(check_support_properties(*s, bad));
}

TEST(Pushforward, Examples) {
  auto s = share(sierpinski());
  for (const auto& mu : enumerate_filters(s)) EXPECT_EQ(pushforward(identity_map(s), mu), mu);
  auto d3 = share(discrete_topology(3));
  auto constant = make_point_map(d3, s, {1, 1, 1});
  for (const auto& mu : enumerate_filters(d3)) EXPECT_EQ(pushforward(constant, mu), point_filter(s, 1));
  auto to_one = make_point_map(s, s, {1, 1});
  EXPECT_EQ(pushforward(to_one, point_filter(s, 0)), point_filter(s, 1));
  EXPECT_EQ(code_of([&] { pushforward(make_point_map(s, s, {1, 0}), point_filter(s, 0)); }),
            ErrorCode::NotContinuous);
  EXPECT_EQ(code_of([&] { pushforward(constant, point_filter(s, 0)); }), ErrorCode::TopologyMismatch);
}

TEST(Pushforward, FunctorialAndExtendsPoints) {
  auto spaces = topologies_up_to(3, false);
  std::size_t checked = 0;
  for (const auto& a : spaces)
    for (const auto& b : spaces) {
      if (a->size() + b->size() > 5) continue;
      for (const auto& f : continuous_maps(a, b)) {
        for (int x = 0; x < a->size(); ++x) EXPECT_EQ(pushforward(f, point_filter(a, x)), point_filter(b, f.image[x]));
        for (const auto& c : spaces) {
          if (c->size() > 2) continue;
          for (const auto& g : continuous_maps(b, c))
            for (const auto& mu : enumerate_filters(a)) {
              EXPECT_EQ(pushforward(compose(g, f), mu), pushforward(g, pushforward(f, mu)));
              ++checked;
            }
        }
      }
    }
  EXPECT_GT(checked, 1000u);
}

TEST(FilterLeq, ExamplesAndPartialOrder) {
  auto s = share(sierpinski());
  EXPECT_TRUE(filter_leq(point_filter(s, 0), point_filter(s, 0)));
  EXPECT_TRUE(filter_leq(point_filter(s, 0), point_filter(s, 1)));
  auto back = filter_leq(point_filter(s, 1), point_filter(s, 0));
  ASSERT_FALSE(back);
  EXPECT_EQ(*back.witness, Mask{0b10});
  EXPECT_EQ(code_of([&] { filter_leq(point_filter(s, 0), point_filter(share(discrete_topology(2)), 0)); }),
            ErrorCode::TopologyMismatch);
  for (const auto& t : topologies_up_to(3, false)) {
    auto u = enumerate_filters(t, FilterMode{false});
    for (const auto& a : u) {
      EXPECT_TRUE(filter_leq(a, a));
      for (const auto& b : u) {
        if (filter_leq(a, b) && filter_leq(b, a)) {
          EXPECT_EQ(a, b);
        }
        for (const auto& c : u)
          if (filter_leq(a, b) && filter_leq(b, c)) {
            EXPECT_TRUE(filter_leq(a, c));
          }
      }
    }
  }
}

TEST(TauE, Examples) {
  auto s = share(sierpinski());
  FilterUniverse u(s);
  EXPECT_TRUE(is_open_in_tau_e(u.all(), u));
  EXPECT_TRUE(is_open_in_tau_e(FilterSet{0}, u));
  std::vector<IndicatorFilter> v{point_filter(s, 1)};
  EXPECT_TRUE(is_open_in_tau_e(v, u));
  std::vector<IndicatorFilter> w{point_filter(s, 0)};
  auto c = is_open_in_tau_e(w, u);
  ASSERT_FALSE(c);
  EXPECT_EQ(*c.witness, point_filter(s, 0));
}

TEST(TauE, OpensFormATopology) {
  for (const auto& t : topologies_up_to(3, false))
    for (bool proper : {true, false}) {
      FilterUniverse u(t, FilterMode{proper});
      auto opens = tau_e_opens(u);
      std::vector<Mask> as_masks(opens.begin(), opens.end());
      EXPECT_NO_THROW(validate_topology(static_cast<int>(u.size()), as_masks));
    }
}

TEST(PushforwardContinuity, AllContinuousMapsBetweenSmallT0Spaces) {
  auto spaces = topologies_up_to(3, true);
  std::size_t maps = 0;
  for (const auto& a : spaces)
    for (const auto& b : spaces)
      for (const auto& f : continuous_maps(a, b)) {
        auto c = check_pushforward_continuity(f);
        EXPECT_TRUE(c) << "witness " << (c.witness ? *c.witness : 0);
        ++maps;
      }
  EXPECT_GT(maps, 100u);
}

TEST(Refinement, PointFilterAssignmentViolatesStrictness) {
  auto s = share(sierpinski());
  Refinement r{s, {{point_filter(s, 0)}, {point_filter(s, 1)}}};
  auto c = check_refinement(r);
  ASSERT_FALSE(c);
  EXPECT_EQ(c.witness->kind, RefinementViolation::Kind::NotStrict);
  EXPECT_EQ(c.witness->point, 0);
}

TEST(Refinement, SierpinskiPointOneAdmitsNothing) {
  auto s = share(sierpinski());
  auto for0 = strict_refinements_of_point(s, 0);
  ASSERT_EQ(for0.size(), 1u);
  EXPECT_EQ(for0[0], point_filter(s, 1));
  EXPECT_TRUE(strict_refinements_of_point(s, 1).empty());
  Refinement r{s, {{point_filter(s, 1)}, {}}};
  auto c = check_refinement(r);
  ASSERT_FALSE(c);
  EXPECT_EQ(c.witness->kind, RefinementViolation::Kind::EmptyAssignment);
  EXPECT_EQ(c.witness->point, 1);
}

TEST(Refinement, NotFinerIsReported) {
  auto s = share(sierpinski());
  Refinement r{s, {{point_filter(s, 1)}, {point_filter(s, 0)}}};
  auto c = check_refinement(r);
  ASSERT_FALSE(c);
  EXPECT_EQ(c.witness->kind, RefinementViolation::Kind::NotFiner);
  EXPECT_EQ(c.witness->point, 1);
  EXPECT_EQ(c.witness->open, Mask{0b10});
}

// A point in a minimal nonempty open set has no proper filter strictly
// finer than its point filter, so no finite T0 space carries a refinement.
TEST(Refinement, NoFiniteT0SpaceAdmitsOne) {
  for (const auto& t : topologies_up_to(4, true)) {
    bool some_point_empty = false;
    for (int x = 0; x < t->size(); ++x) some_point_empty = some_point_empty || strict_refinements_of_point(t, x).empty();
    EXPECT_TRUE(some_point_empty);
  }
  auto d2 = share(discrete_topology(2));
  for (const auto& a : enumerate_filters(d2))
    for (const auto& b : enumerate_filters(d2)) EXPECT_FALSE(check_refinement(Refinement{d2, {{a}, {b}}}));
}

TEST(Derivable, IdentityAndConstructedTargets) {
  auto t = share(validate_topology(4, {0, 0b0001, 0b0010, 0b0011, 0b0111, 0b1011, 0b1111}));
  auto k0 = IndicatorFilter::from_kernel(t, 0b0001);
  Refinement r{t, {{}, {}, {k0}, {k0}}};
  EXPECT_TRUE(check_derivable(identity_map(t), r, r));

  auto swap = make_point_map(t, t, {1, 0, 2, 3});
  ASSERT_TRUE(is_continuous(swap));
  auto c = check_derivable(swap, r, r);
  ASSERT_FALSE(c);
  EXPECT_EQ(c.witness->point, 2);
  EXPECT_EQ(c.witness->member, 0u);

  Refinement image{t, std::vector<std::vector<IndicatorFilter>>(4)};
  for (int x = 0; x < 4; ++x)
    for (const auto& mu : r.assignment[x]) image.assignment[swap.image[x]].push_back(pushforward(swap, mu));
  EXPECT_TRUE(check_derivable(swap, r, image));

  auto s = share(sierpinski());
  EXPECT_EQ(code_of([&] {
              Refinement rs{s, {{}, {}}};
              check_derivable(make_point_map(s, s, {1, 0}), rs, rs);
            }),
            ErrorCode::NotContinuous);
}

TEST(Derivable, SwapPreservesSymmetricPartialRefinement) {
  auto t = share(validate_topology(4, {0, 0b0001, 0b0010, 0b0011, 0b0111, 0b1011, 0b1111}));
  Refinement r{t, {{}, {}, {IndicatorFilter::from_kernel(t, 0b0001), IndicatorFilter::from_kernel(t, 0b0010)}, {}}};
  std::sort(r.assignment[2].begin(), r.assignment[2].end());
  EXPECT_TRUE(check_derivable(make_point_map(t, t, {1, 0, 2, 3}), r, r));
}
