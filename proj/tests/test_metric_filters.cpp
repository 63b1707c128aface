#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "topoderiv/metric_filters.hpp"

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

// Oracle: distance to the segment by dense sampling of its parameter.
double segment_distance_oracle(const Point& y, const Point& x, const Point& u, double eps, int n = 20000) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) best = std::min(best, (y - (x + eps * i / n * u)).norm());
  return best;
}

// Oracle: planar angle from atan2 of cross and dot.
double planar_angle(const Point& a, const Point& b) {
  return std::abs(std::atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]));
}

// Dyadic point so that translated differences are exact.
Point dyadic(Rng& rng, int dim) {
  Point p(dim);
  for (int i = 0; i < dim; ++i) p[i] = std::ldexp(static_cast<double>(rng.integer(-(1 << 20), 1 << 20)), -18);
  return p;
}

const Point e1 = vec({1.0, 0.0});

}  // namespace

TEST(VPlus, Examples) {
  auto g = make_cone(vec({0, 0}), e1, 1.0, 0.5);
  EXPECT_TRUE(v_plus_contains(g, vec({0.5, 0.1})));
  EXPECT_FALSE(v_plus_contains(g, vec({0, 0})));
  EXPECT_FALSE(v_plus_contains(g, vec({-0.5, 0})));
}

TEST(VPlus, RejectsBadParameters) {
  EXPECT_EQ(code_of([] { make_cone(vec({0, 0}), vec({1, 1}), 1.0, 0.5); }), ErrorCode::NonUnitDirection);
  EXPECT_EQ(code_of([] { make_cone(vec({0, 0}), e1, 0.0, 0.5); }), ErrorCode::InvalidGenerator);
  EXPECT_EQ(code_of([] { make_cone(vec({0, 0}), e1, 1.0, 1.0); }), ErrorCode::InvalidGenerator);
  EXPECT_EQ(code_of([] { directional_filter(vec({0, 0}), vec({0.5, 0})); }), ErrorCode::NonUnitDirection);
  EXPECT_EQ(code_of([] { pair_directional_filter(vec({2, 0})); }), ErrorCode::NonUnitDirection);
}

TEST(VPlus, SegmentDistanceMatchesDenseOracle) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const int dim = 2 + i % 2;
    const Point x = rng.in_box(dim, 2), u = rng.unit_vector(dim), y = rng.in_box(dim, 3);
    const double eps = rng.uniform(0.1, 2.0);
    EXPECT_NEAR(project_to_segment(y, x, u, eps).distance, segment_distance_oracle(y, x, u, eps), 1e-4 * eps);
  }
}

// Inside the projection range the cone is the circular cone sin(angle) < sigma.
TEST(VPlus, InteriorConeShapeProbe) {
  Rng rng(2);
  std::size_t probed = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point x = rng.in_box(2, 1), u = rng.unit_vector(2);
    const double eps = rng.uniform(0.1, 1.0), sigma = rng.uniform(0.05, 0.95);
    const Point y = x + rng.in_box(2, eps);
    const double t = (y - x).dot(u);
    if (!(t > 0 && t < eps)) continue;
    ++probed;
    const double angle = planar_angle(y - x, u);
    const double s = std::sin(angle);
    if (std::abs(s - sigma) < 1e-12) continue;
    EXPECT_EQ(v_plus_contains(make_cone(x, u, eps, sigma), y), s < sigma);
  }
  EXPECT_GT(probed, 1000u);
}

TEST(VPlus, GeneratorsAreMonotone) {
  Rng rng(3);
  const Point x = vec({0.3, -0.2}), u = planar(0.7);
  auto f = directional_filter(x, u);
  auto pf = pair_directional_filter(u);
  for (int i = 0; i < 10000; ++i) {
    const double eps = rng.uniform(0.01, 1), sigma = rng.uniform(0.01, 0.99);
    const double eps2 = eps * rng.uniform(0.01, 1), sigma2 = sigma * rng.uniform(0.01, 1);
    const Point y = x + rng.in_box(2, 1.5 * eps);
    if (f.contains(y, eps2, sigma2)) { EXPECT_TRUE(f.contains(y, eps, sigma)); }
    const Point z = rng.in_box(2, 3);
    const Point w = z + rng.in_box(2, 1.5 * eps);
    if (pf.contains({z, w}, eps2, sigma2)) { EXPECT_TRUE(pf.contains({z, w}, eps, sigma)); }
  }
}

TEST(VPlus, MembersClusterAtTheBasePoint) {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double eps = rng.log_uniform(1e-3, 1), sigma = rng.uniform(0.01, 0.99);
    const Point x = rng.in_box(2, 1), u = rng.unit_vector(2);
    const Point y = x + rng.in_box(2, 3 * eps / (1 - sigma));
    if (v_plus_contains(make_cone(x, u, eps, sigma), y)) { EXPECT_LT((y - x).norm(), cone_envelope_radius(eps, sigma)); }
  }
}

TEST(DirectionalFilter, DistinctDirectionsSeparate) {
  const Point x = vec({0, 0});
  std::vector<Point> seq;
  for (int h = 1; h <= 10000; ++h) seq.push_back(x + e1 / h);
  auto v = classify_sequence(seq, x, planar(0.05));
  EXPECT_FALSE(v.matches_filter);
  EXPECT_FALSE(v.generator_match);
  EXPECT_FALSE(v.witnesses.empty());
  EXPECT_FALSE(v.disagreement);
}

TEST(ClassifySequence, Examples) {
  const Point x = vec({1, 2});
  const Point u = planar(0.3), w = planar(0.3 + std::numbers::pi / 2);
  std::vector<Point> straight, alternating, bent;
  for (int h = 1; h <= 10000; ++h) {
    straight.push_back(x + u / h);
    alternating.push_back(x + (h % 2 ? -1.0 : 1.0) / h * u);
    bent.push_back(x + u / h + w / (double(h) * h));
  }
  auto a = classify_sequence(straight, x, u);
  EXPECT_TRUE(a.matches_filter);
  EXPECT_FALSE(a.disagreement);
  auto b = classify_sequence(alternating, x, u);
  EXPECT_TRUE(b.converges_to_point);
  EXPECT_FALSE(b.direction_limit);
  EXPECT_FALSE(b.matches_filter);
  EXPECT_FALSE(b.disagreement);
  EXPECT_FALSE(classify_sequence(alternating, x, -u).matches_filter);
  auto c = classify_sequence(bent, x, u);
  EXPECT_TRUE(c.matches_filter);
  EXPECT_FALSE(c.disagreement);
}

TEST(ClassifySequence, DegenerateTerm) {
  const Point x = vec({0, 0});
  std::vector<Point> seq{e1, x};
  EXPECT_EQ(code_of([&] { classify_sequence(seq, x, e1); }), ErrorCode::DegenerateTerm);
}

TEST(ClassifySequence, DirectAndGeneratorTestsAgreeOnRandomSequences) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto kind = static_cast<SequenceKind>(i % 3);
    const int dim = 2 + i % 2;
    const Point x = rng.in_box(dim, 1), u = rng.unit_vector(dim);
    auto seq = labeled_sequence(rng, kind, x, u, 4000);
    auto v = classify_sequence(seq, x, u);
    EXPECT_FALSE(v.disagreement) << to_string(kind) << " " << i;
    EXPECT_EQ(v.matches_filter, kind == SequenceKind::with_direction) << i;
    EXPECT_EQ(v.converges_to_point, kind != SequenceKind::divergent) << i;
    if (kind == SequenceKind::without_direction) { EXPECT_FALSE(v.direction_limit) << i; }
  }
}

TEST(CheckBound, HoldsForConeWitnesses) {
  Rng rng(6);
  std::size_t members = 0;
  for (int i = 0; i < 100000; ++i) {
    const double eps = rng.uniform(0.01, 1), mu = rng.uniform(0.01, 0.99);
    const Point x = rng.in_box(2, 1), u = rng.unit_vector(2);
    const Point y = x + rng.in_box(2, 2 * eps);
    const auto proj = project_to_segment(y, x, u, eps);
    if (!(proj.distance < mu * (y - x).norm())) continue;
    ++members;
    EXPECT_TRUE(check_bound(x, x + proj.parameter * u, y, mu).ok);
  }
  EXPECT_GT(members, 10000u);
}

TEST(CheckBound, HoldsForQuarterCircleWitnesses) {
  Rng rng(7);
  Curve c{[](double t) { return vec({std::cos(t) - 1, std::sin(t)}); }, -1.5, 1.5};
  const Point x = c.at(0);
  std::size_t members = 0;
  for (int i = 0; i < 10000; ++i) {
    const double mu = rng.uniform(0.05, 0.95);
    const double lambda = rng.uniform(0, std::numbers::pi / 2);
    const Point on = c.at(lambda);
    const double r = rng.uniform(0, 0.999) * mu * (on - x).norm() / (1 + mu);
    const Point y = on + r * rng.unit_vector(2);
    auto a = arc_distance(c.at, 0.0, std::numbers::pi / 2, y, euclidean);
    ASSERT_LT(a.distance, mu * (y - x).norm());
    ++members;
    EXPECT_TRUE(check_bound(x, c.at(a.parameter), y, mu).ok);
  }
  EXPECT_EQ(members, 10000u);
}

TEST(CheckBound, InvalidWitness) {
  const Point x = vec({0, 0}), y = vec({1, 0});
  EXPECT_EQ(code_of([&] { check_bound(x, x, y, 0.5); }), ErrorCode::InvalidWitness);
}

TEST(ArcDistance, MatchesDenseOracleOnCircle) {
  Rng rng(8);
  auto circle = [](double t) { return vec({std::cos(t), std::sin(t)}); };
  for (int i = 0; i < 200; ++i) {
    const Point y = rng.in_box(2, 2);
    const double t1 = rng.uniform(0.1, 3);
    auto a = arc_distance(circle, 0.0, t1, y, euclidean);
    double oracle = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 200000; ++k) oracle = std::min(oracle, (y - circle(t1 * k / 200000)).norm());
    EXPECT_TRUE(a.converged);
    EXPECT_LE(a.distance, oracle + 1e-12);
    EXPECT_NEAR(a.distance, oracle, 1e-7);
  }
}

TEST(CurveFilter, StraightLineEqualsDirectional) {
  Rng rng(9);
  const Point x = vec({0.5, 0.5}), u = planar(1.1);
  auto cf = curve_filter({[x, u](double t) -> Point { return x + t * u; }, -2, 2}, Sign::plus);
  auto df = directional_filter(x, u);
  for (int i = 0; i < 10000; ++i) {
    const double eps = rng.uniform(0.01, 1), mu = rng.uniform(0.01, 0.99);
    const Point y = x + rng.in_box(2, 2 * eps);
    const auto a = cf.test(y, eps, mu);
    const double margin = std::abs(project_to_segment(y, x, u, eps).distance - mu * (y - x).norm());
    if (margin < 1e-9) continue;
    EXPECT_EQ(a == Membership::inside, df.contains(y, eps, mu));
  }
}

TEST(CurveFilter, ReversalSwapsSides) {
  Rng rng(10);
  auto c = [](double t) { return vec({t, t * t}); };
  auto cbar = [&](double t) { return c(-t); };
  auto plus_bar = curve_filter({cbar, -1, 1}, Sign::plus);
  auto minus = curve_filter({c, -1, 1}, Sign::minus);
  for (int i = 0; i < 2000; ++i) {
    const double eps = rng.uniform(0.05, 1), mu = rng.uniform(0.05, 0.95);
    const Point y = rng.in_box(2, eps);
    EXPECT_EQ(plus_bar.test(y, eps, mu), minus.test(y, eps, mu));
  }
}

// c'(t) = c(t^3 + t) traces c([0, e^3 + e]) on [0, e], so the tubes coincide.
TEST(CurveFilter, ReparametrisationKeepsTubes) {
  Rng rng(11);
  auto c = [](double t) { return vec({std::sin(t), 1 - std::cos(t) + t}); };
  auto cp = [&](double t) { return c(t * t * t + t); };
  auto f = curve_filter({c, -2, 2}, Sign::plus);
  auto fp = curve_filter({cp, -1, 1}, Sign::plus);
  for (int i = 0; i < 2000; ++i) {
    const double eps = rng.uniform(0.05, 0.9), mu = rng.uniform(0.05, 0.95);
    const Point y = c(0) + rng.in_box(2, 2 * eps);
    const double r = (y - c(0)).norm();
    const double d = arc_distance(c, 0.0, eps * eps * eps + eps, y, euclidean).distance;
    if (std::abs(d - mu * r) < 1e-7) continue;
    EXPECT_EQ(fp.test(y, eps, mu), f.test(y, eps * eps * eps + eps, mu));
  }
}

TEST(CurveFilter, RejectsCollapsedCurve) {
  Curve flat{[](double t) { return vec({std::max(t, 0.0), 0}); }, -1, 1};
  EXPECT_EQ(code_of([&] { curve_filter(flat, Sign::plus); }), ErrorCode::CurveNotBiLipschitz);
}

// Bi-Lipschitz images of curve-matching sequences match the image curve.
TEST(CurveFilter, BiLipschitzImagesOfMatchingSequencesMatch) {
  Rng rng(12);
  auto c = [](double t) { return vec({t, 0.5 * std::sin(2 * t)}); };
  auto f = [](const Point& p) { return vec({2 * p[0] + 0.3 * std::sin(p[1]), p[1] - 0.2 * p[0]}); };
  auto fc = [&](double t) { return f(c(t)); };
  auto src = curve_filter({c, -1, 1}, Sign::plus);
  auto img = curve_filter({fc, -1, 1}, Sign::plus);
  SequenceOptions opt;
  opt.eps_grid = {0.5, 0.05};
  opt.sigma_grid = {0.5, 0.1, 0.02};
  for (int trial = 0; trial < 10; ++trial) {
    const Point w = rng.unit_vector(2);
    std::vector<Point> seq, image;
    for (int h = 1; h <= 1000; ++h) {
      const double t = 0.5 / h;
      seq.push_back(c(t) + t * t * w);
      image.push_back(f(seq.back()));
    }
    ASSERT_TRUE(generator_tail_test(src, seq, opt).match);
    EXPECT_TRUE(generator_tail_test(img, image, opt).match) << trial;
  }
}

TEST(PairDirectional, OnSegmentPairsBelong) {
  const Point u = planar(2.0), x = vec({3, -1});
  for (double delta : {1e-6, 0.01, 0.5, 1.0}) EXPECT_TRUE(pair_v_plus_contains(u, 1.0, 0.1, x, x + delta * u));
}

TEST(PairDirectional, TranslationInvariant) {
  Rng rng(13);
  const Point u = vec({0.6, 0.8});
  for (int i = 0; i < 10000; ++i) {
    const Point x = dyadic(rng, 2), y = x + dyadic(rng, 2) * 1e-1, t = dyadic(rng, 2);
    const double eps = rng.uniform(0.01, 1), mu = rng.uniform(0.01, 0.99);
    EXPECT_EQ(pair_v_plus_contains(u, eps, mu, x, y), pair_v_plus_contains(u, eps, mu, x + t, y + t));
  }
}

TEST(PairDirectional, UniformRefinementOfEuclideanUniformity) {
  for (double angle : {0.0, 1.0, 2.5, -2.0}) {
    auto r = check_pair_directional_refinement(planar(angle), 20000, 42);
    EXPECT_EQ(r.samples, 20000u);
    EXPECT_TRUE(r.ok()) << r.envelope_violations << " " << r.half_violations << " " << r.swap_violations;
  }
  auto r3 = check_pair_directional_refinement(vec({0, 0, 1}), 5000, 43);
  EXPECT_TRUE(r3.ok());
}

TEST(MetricUniformity, TriangleAndSymmetry) {
  Rng rng(14);
  for (int i = 0; i < 10000; ++i) {
    const double s = rng.log_uniform(1e-3, 10);
    const Point x = rng.in_box(2, 5);
    EXPECT_TRUE(metric_uniformity_contains(s, x, x));
    const Point y = x + rng.unit_vector(2) * rng.uniform(0, s / 2);
    const Point z = y + rng.unit_vector(2) * rng.uniform(0, s / 2);
    if (metric_uniformity_contains(s / 2, x, y) && metric_uniformity_contains(s / 2, y, z)) {
      EXPECT_TRUE(metric_uniformity_contains(s, x, z));
    }
    EXPECT_EQ(metric_uniformity_contains(s, x, z), metric_uniformity_contains(s, z, x));
  }
}

TEST(Commutation, SampledCompositionsCommute) {
  Rng rng(15);
  for (int i = 0; i < 5; ++i) {
    auto r = check_metric_commutation(rng.unit_vector(2), rng.unit_vector(2), 2000, 100 + i);
    EXPECT_EQ(r.verdict, Commutation::commute) << r.unresolved;
    EXPECT_EQ(r.verified, 2000u);
  }
}

TEST(Commutation, DeterministicAcrossThreadCounts) {
  const Point u = planar(0.2), v = planar(2.2);
  auto a = check_metric_commutation(u, v, 5000, 9, 1);
  auto b = check_metric_commutation(u, v, 5000, 9, 4);
  EXPECT_EQ(a.verified, b.verified);
  EXPECT_EQ(a.unresolved, b.unresolved);
}

TEST(Transport, IdentityAndLinear) {
  const Point x = vec({0.1, 0.2}), u = planar(0.4);
  auto id = transport_via_sequences(linear_map(Eigen::Matrix2d::Identity(), "id"), x, u, 5, 1);
  EXPECT_LT(angle_between(id.direction, u), 1e-12);
  Eigen::MatrixXd A(2, 2);
  A << 2, 1, -0.5, 3;
  auto lin = transport_via_sequences(linear_map(A), x, u, 5, 1);
  const Point au = A * u;
  EXPECT_LT(angle_between(lin.direction, au), 1e-9);
}

TEST(Transport, NonlinearMatchesAnalyticJacobian) {
  SmoothMap shear{"x+y^2", 2, [](const Point& p) { return vec({p[0] + p[1] * p[1], p[1]}); },
                  [](const Point& p) -> Eigen::MatrixXd {
                    Eigen::MatrixXd J(2, 2);
                    J << 1, 2 * p[1], 0, 1;
                    return J;
                  }};
  auto r = transport_via_sequences(shear, vec({0, 0}), vec({0, 1}), 5, 2);
  EXPECT_LT(angle_between(r.direction, vec({0, 1})), 1e-6);
  Rng rng(16);
  for (int i = 0; i < 20; ++i) {
    const Point x = rng.in_box(2, 1), u = rng.unit_vector(2);
    Eigen::MatrixXd J(2, 2);
    J << 1, 2 * x[1], 0, 1;
    auto t = transport_via_sequences(shear, x, u, 3, i);
    EXPECT_LT(angle_between(t.direction, J * u), 1e-6);
    EXPECT_LT(t.angle_error, 1e-6);
  }
}

TEST(Transport, SingularJacobianRejected) {
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 2, 4;
  EXPECT_EQ(code_of([&] { transport_via_sequences(linear_map(A), vec({0, 0}), e1, 1, 1); }),
            ErrorCode::SingularJacobian);
}

TEST(LinearPairTransport, GeneratorInclusionHolds) {
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    Eigen::MatrixXd A(2, 2);
    A << rng.uniform(-1, 1) + 1.5, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1) + 1.5;
    if (inverse_condition(A) < 1e-3) continue;
    const Point u = rng.unit_vector(2);
    auto r = check_linear_pair_transport(A, u, 2000, i);
    EXPECT_GT(r.samples, 1000u);
    EXPECT_EQ(r.violations, 0u);
    const Point au = A * u;
    EXPECT_LT(angle_between(r.image_direction, au), 1e-12);
  }
}
