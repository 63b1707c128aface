#include <gtest/gtest.h>

#include <memory>

#include "oracles.hpp"
#include "topoderiv/filter_algebra.hpp"
#include "topoderiv/finite_topology.hpp"

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

}  // namespace

TEST(ValidateTopology, Sierpinski) {
  auto t = validate_topology(2, {0b00, 0b10, 0b11});
  EXPECT_EQ(t, sierpinski());
  EXPECT_EQ(t.open_count(), 3u);
}

TEST(ValidateTopology, MissingUnionNamesPair) {
  try {
    validate_topology(2, {0b00, 0b01, 0b10});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotClosedUnderUnion);
    EXPECT_EQ(e.witness(), (std::vector<std::uint64_t>{0b01, 0b10}));
  }
}

TEST(ValidateTopology, PowerSetIsDiscrete) {
  std::vector<Mask> all;
  for (Mask m = 0; m < 8; ++m) all.push_back(m);
  EXPECT_EQ(validate_topology(3, all), discrete_topology(3));
}

TEST(ValidateTopology, Errors) {
  EXPECT_EQ(code_of([] { validate_topology(2, {0b000, 0b100, 0b011}); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { validate_topology(2, {0b01}); }), ErrorCode::MissingEmptyOrFull);
  EXPECT_EQ(code_of([] { validate_topology(3, {0, 0b011, 0b110, 0b111}); }), ErrorCode::NotClosedUnderIntersection);
}

TEST(ValidateTopology, UnsortedAndDuplicatedInputIsCanonicalised) {
  auto t = validate_topology(2, {0b11, 0b10, 0b00, 0b10});
  EXPECT_EQ(t, sierpinski());
}

TEST(ValidateTopology, Idempotent) {
  for (int n = 0; n <= 3; ++n)
    for (const auto& t : enumerate_topologies(n, false)) {
      std::vector<Mask> opens(t.opens().begin(), t.opens().end());
      EXPECT_EQ(validate_topology(n, opens), t);
    }
}

TEST(IsT0, Examples) {
  EXPECT_TRUE(is_T0(sierpinski()));
  auto indiscrete = is_T0(indiscrete_topology(2));
  ASSERT_FALSE(indiscrete);
  EXPECT_EQ(*indiscrete.witness, std::make_pair(0, 1));
  EXPECT_TRUE(is_T0(discrete_topology(3)));
}

TEST(IsContinuous, Examples) {
  auto s = std::make_shared<const FiniteTopology>(sierpinski());
  EXPECT_TRUE(is_continuous(identity_map(s)));
  auto d3 = std::make_shared<const FiniteTopology>(discrete_topology(3));
  EXPECT_TRUE(is_continuous(make_point_map(d3, s, {0, 0, 0})));
  EXPECT_TRUE(is_continuous(make_point_map(s, d3, {0, 0})));
  auto swap = is_continuous(make_point_map(s, s, {1, 0}));
  ASSERT_FALSE(swap);
  EXPECT_EQ(*swap.witness, Mask{0b10});
}

TEST(PointMap, RejectsBadImage) {
  auto s = std::make_shared<const FiniteTopology>(sierpinski());
  EXPECT_EQ(code_of([&] { make_point_map(s, s, {0, 2}); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([&] { make_point_map(s, s, {0}); }), ErrorCode::IndexOutOfRange);
}

TEST(EnumerateTopologies, KnownCounts) {
  const std::size_t all[] = {1, 1, 4, 29, 355};
  const std::size_t t0[] = {1, 1, 3, 19, 219};
  for (int n = 0; n <= 4; ++n) {
    EXPECT_EQ(enumerate_topologies(n, false).size(), all[n]) << n;
    EXPECT_EQ(enumerate_topologies(n, true).size(), t0[n]) << n;
  }
}

TEST(EnumerateTopologies, MatchesSubsetFamilyOracle) {
  for (int n = 1; n <= 4; ++n) {
    auto expected = oracle::all_topologies(n);
    auto got = enumerate_topologies(n, false);
    ASSERT_EQ(got.size(), expected.size()) << n;
    std::vector<std::vector<Mask>> got_opens;
    for (const auto& t : got) got_opens.emplace_back(t.opens().begin(), t.opens().end());
    std::sort(got_opens.begin(), got_opens.end());
    EXPECT_EQ(got_opens, expected) << n;
    std::size_t t0_count = 0;
    for (const auto& o : expected) t0_count += oracle::t0(n, o);
    EXPECT_EQ(enumerate_topologies(n, true).size(), t0_count);
  }
}

TEST(EnumerateTopologies, CanonicalOrderAndDeterminism) {
  auto a = enumerate_topologies(3, false);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_TRUE(std::adjacent_find(a.begin(), a.end()) == a.end());
  EXPECT_EQ(a, enumerate_topologies(3, false));
}

TEST(EnumerateTopologies, RefusesLargeN) {
  EXPECT_EQ(code_of([] { enumerate_topologies(5, false); }), ErrorCode::SizeLimitExceeded);
}

TEST(PointFilter, InjectiveExactlyOnT0Spaces) {
  for (int n = 1; n <= 4; ++n)
    for (const auto& t : enumerate_topologies(n, false)) {
      auto ref = std::make_shared<const FiniteTopology>(t);
      bool injective = true;
      for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) injective = injective && !(point_filter(ref, x) == point_filter(ref, y));
      EXPECT_EQ(injective, static_cast<bool>(is_T0(t)));
    }
}

TEST(PointFilter, Examples) {
  auto s = std::make_shared<const FiniteTopology>(sierpinski());
  EXPECT_EQ(describe(point_filter(s, 1)), "[0,1,1]");
  EXPECT_EQ(describe(point_filter(s, 0)), "[0,0,1]");
  auto ind = std::make_shared<const FiniteTopology>(indiscrete_topology(2));
  EXPECT_EQ(point_filter(ind, 0), point_filter(ind, 1));
  EXPECT_EQ(code_of([&] { point_filter(s, 2); }), ErrorCode::IndexOutOfRange);
}
