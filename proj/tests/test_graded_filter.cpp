#include <gtest/gtest.h>

#include "topoderiv/graded_filter.hpp"

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

std::vector<Rational> as_rational(const IndicatorFilter& mu) {
  std::vector<Rational> v;
  for (auto x : mu.values()) v.emplace_back(x);
  return v;
}

}  // namespace

TEST(GradedAxioms, AcceptsPointFiltersAndRejectsBad) {
  auto s = share(sierpinski());
  EXPECT_NO_THROW(check_graded_axioms<Rational>(s, {Rational(0), Rational(1, 3), Rational(1)}));
  EXPECT_EQ(code_of([&] { check_graded_axioms<Rational>(s, {Rational(0), Rational(3, 2), Rational(1)}); }),
            ErrorCode::NotIndicator);
  EXPECT_EQ(code_of([&] { check_graded_axioms<double>(s, {0.0, 0.5, 0.9}); }), ErrorCode::AxiomA);
  EXPECT_EQ(code_of([&] { check_graded_axioms<double>(s, {0.6, 0.5, 1.0}, FilterMode{false}); }), ErrorCode::AxiomB);
  auto d2 = share(discrete_topology(2));
  EXPECT_EQ(code_of([&] { check_graded_axioms<double>(d2, {0.0, 0.6, 0.6, 1.0}); }), ErrorCode::AxiomC);
  EXPECT_NO_THROW(check_graded_axioms<double>(d2, {0.0, 0.5, 0.5 + 1e-13, 1.0}));
}

TEST(ConvexCombine, Examples) {
  auto s = share(sierpinski());
  std::vector<GradedFilter<Rational>> f{to_graded<Rational>(point_filter(s, 0)), to_graded<Rational>(point_filter(s, 1))};
  std::vector<Rational> first{Rational(1), Rational(0)};
  EXPECT_EQ(convex_combine<Rational>(f, first), f[0]);
  std::vector<Rational> half{Rational(1, 2), Rational(1, 2)};
  auto mid = convex_combine<Rational>(f, half);
  EXPECT_EQ(std::vector<Rational>(mid.values().begin(), mid.values().end()),
            (std::vector<Rational>{Rational(0), Rational(1, 2), Rational(1)}));

  auto d3 = share(discrete_topology(3));
  std::vector<GradedFilter<Rational>> g;
  for (int x = 0; x < 3; ++x) g.push_back(to_graded<Rational>(point_filter(d3, x)));
  std::vector<Rational> thirds(3, Rational(1, 3));
  EXPECT_NO_THROW(convex_combine<Rational>(g, thirds));

  std::vector<double> bad{0.5, 0.6};
  std::vector<GradedFilter<double>> fd{to_graded<double>(point_filter(s, 0)), to_graded<double>(point_filter(s, 1))};
  EXPECT_EQ(code_of([&] { convex_combine<double>(fd, bad); }), ErrorCode::WeightSumInvalid);
  std::vector<GradedFilter<double>> mixed{to_graded<double>(point_filter(s, 0)),
                                          to_graded<double>(point_filter(share(discrete_topology(2)), 0))};
  std::vector<double> w{0.5, 0.5};
  EXPECT_EQ(code_of([&] { convex_combine<double>(mixed, w); }), ErrorCode::TopologyMismatch);
}

TEST(ConvexCombine, UniformCombinationOfAllFiltersStaysInsideB) {
  for (const auto& t : enumerate_topologies(3, false)) {
    auto ref = share(t);
    std::vector<GradedFilter<Rational>> all;
    for (const auto& mu : enumerate_filters(ref)) all.push_back(to_graded<Rational>(mu));
    std::vector<Rational> w(all.size(), Rational(1, static_cast<std::int64_t>(all.size())));
    EXPECT_NO_THROW(convex_combine<Rational>(all, w));
  }
}

TEST(BPolytope, SierpinskiVerticesAreTheProperPointFilters) {
  auto s = share(sierpinski());
  auto v = b_polytope_vertices(*s);
  std::vector<std::vector<Rational>> expected{as_rational(point_filter(s, 0)), as_rational(point_filter(s, 1))};
  EXPECT_EQ(v, expected);
}

TEST(BPolytope, TwoPointSpacesVerticesAreTheAFilters) {
  for (const auto& t : enumerate_topologies(2, false)) {
    auto ref = share(t);
    std::vector<std::vector<Rational>> expected;
    for (const auto& mu : enumerate_filters(ref)) expected.push_back(as_rational(mu));
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(b_polytope_vertices(t), expected);
  }
}

TEST(BPolytope, EveryAFilterIsAVertex) {
  for (int n = 1; n <= 3; ++n)
    for (const auto& t : enumerate_topologies(n, false)) {
      auto ref = share(t);
      for (const auto& mu : enumerate_filters(ref)) EXPECT_TRUE(is_b_polytope_vertex(t, as_rational(mu)));
    }
}

// On the discrete 3-point space the polytope has a vertex that is not an
// A-filter: 0 on singletons, 1/2 on pairs.
TEST(BPolytope, DiscreteThreeHasAFractionalVertex) {
  auto d3 = discrete_topology(3);
  std::vector<Rational> v(8);
  for (Mask m = 0; m < 8; ++m) {
    const int bits = std::popcount(m);
    v[m] = bits == 3 ? Rational(1) : bits == 2 ? Rational(1, 2) : Rational(0);
  }
  EXPECT_TRUE(is_b_polytope_vertex(d3, v));
  EXPECT_NO_THROW(check_graded_axioms<Rational>(share(d3), v));
}

TEST(BPolytope, ChainVerticesAreIntegral) {
  auto chain = validate_topology(3, {0, 0b100, 0b110, 0b111});
  for (const auto& v : b_polytope_vertices(chain))
    for (const auto& c : v) EXPECT_EQ(c.denominator(), 1);
}
