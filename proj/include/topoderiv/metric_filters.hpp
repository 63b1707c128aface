#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "topoderiv/error.hpp"
#include "topoderiv/geometry.hpp"
#include "topoderiv/pair_calculus.hpp"
#include "topoderiv/sampling.hpp"

namespace topoderiv {

inline constexpr double kUnitTolerance = 1e-12;

inline void require_unit(const Point& u) {
  if (u.size() == 0 || std::abs(u.norm() - 1.0) > kUnitTolerance)
    throw Error(ErrorCode::NonUnitDirection, "direction must have norm 1, got " + std::to_string(u.norm()));
}

inline void require_generator(double eps, double sigma) {
  if (!(eps > 0.0) || !(sigma > 0.0 && sigma < 1.0))
    throw Error(ErrorCode::InvalidGenerator, "need eps > 0 and sigma in (0,1)");
}

// ---------------------------------------------------------------- cones

struct ConeGenerator {
  Point x;
  Point u;
  double eps;
  double sigma;
};

inline ConeGenerator make_cone(Point x, Point u, double eps, double sigma) {
  require_unit(u);
  require_generator(eps, sigma);
  if (x.size() != u.size()) throw Error(ErrorCode::InvalidGenerator, "base point and direction differ in dimension");
  return {std::move(x), std::move(u), eps, sigma};
}

/// y in V+(x,u,eps,sigma): y != x and dist(y, x+[0,eps]u) < sigma |y-x|.
inline bool v_plus_contains(const ConeGenerator& g, const Point& y) {
  const double r = (y - g.x).norm();
  if (r == 0.0) return false;
  return project_to_segment(y, g.x, g.u, g.eps).distance < g.sigma * r;
}

/// Every cone member lies in the open ball of this radius around x:
/// |y-x| <= |x+tu - x| + dist < eps + sigma |y-x|.
inline double cone_envelope_radius(double eps, double sigma) { return eps / (1.0 - sigma); }

// ---------------------------------------------------------------- generated filters

enum class FilterKind { directional, pair_directional, curve, polynomial, flow };

constexpr const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::directional: return "directional";
    case FilterKind::pair_directional: return "pair-directional";
    case FilterKind::curve: return "curve";
    case FilterKind::polynomial: return "polynomial";
    case FilterKind::flow: return "flow";
  }
  return "?";
}

using PointPair = std::pair<Point, Point>;

/// A filter given by a two-parameter generator family; test(p, eps, sigma)
/// decides membership of p in the generator with those parameters.
template <typename P>
struct GeneratedFilter {
  FilterKind kind;
  std::string label;
  std::function<Membership(const P&, double, double)> test;

  bool contains(const P& p, double eps, double sigma) const { return test(p, eps, sigma) == Membership::inside; }
};

inline GeneratedFilter<Point> directional_filter(const Point& x, const Point& u) {
  require_unit(u);
  return {FilterKind::directional, "directional",
          [x, u](const Point& y, double eps, double sigma) {
            return v_plus_contains(ConeGenerator{x, u, eps, sigma}, y) ? Membership::inside : Membership::outside;
          }};
}

/// Pair generator V+(u,eps,mu) = {(x,y) : dist(y, x+[0,eps]u) < mu |y-x|}.
inline bool pair_v_plus_contains(const Point& u, double eps, double mu, const Point& x, const Point& y) {
  return v_plus_contains(ConeGenerator{x, u, eps, mu}, y);
}

inline GeneratedFilter<PointPair> pair_directional_filter(const Point& u) {
  require_unit(u);
  return {FilterKind::pair_directional, "pair-directional",
          [u](const PointPair& p, double eps, double mu) {
            return pair_v_plus_contains(u, eps, mu, p.first, p.second) ? Membership::inside : Membership::outside;
          }};
}

/// Entourage B(s) of the Euclidean uniformity.
inline bool metric_uniformity_contains(double s, const Point& x, const Point& y) { return (x - y).norm() < s; }

// ---------------------------------------------------------------- curves

struct Curve {
  std::function<Point(double)> at;
  double a;
  double b;
};

struct LipschitzEstimate {
  double lower;  // inf of |c(s)-c(t)| / |s-t|
  double upper;  // sup of the same
};

/// Difference quotients on a fixed grid of the parameter interval.
inline LipschitzEstimate estimate_bilipschitz(const Curve& c, int grid = 96) {
  std::vector<Point> pts;
  std::vector<double> ts;
  for (int i = 0; i <= grid; ++i) {
    const double t = c.a + (c.b - c.a) * i / grid;
    ts.push_back(t);
    pts.push_back(c.at(t));
  }
  LipschitzEstimate e{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      const double q = (pts[i] - pts[j]).norm() / (ts[j] - ts[i]);
      e.lower = std::min(e.lower, q);
      e.upper = std::max(e.upper, q);
    }
  return e;
}

inline constexpr double kMinLipschitzLower = 1e-6;
inline constexpr double kMaxLipschitzUpper = 1e6;

enum class Sign { plus, minus };

/// Tube generator: d(y, c([0,eps])) < mu d(c(0),y), or c([-eps,0]) for minus.
inline Membership curve_tube_test(const Curve& c, Sign sign, const Point& y, double eps, double mu) {
  const Point x = c.at(0.0);
  const double r = (y - x).norm();
  if (r == 0.0) return Membership::outside;
  const double t0 = sign == Sign::plus ? 0.0 : std::max(c.a, -eps);
  const double t1 = sign == Sign::plus ? std::min(c.b, eps) : 0.0;
  return tube_verdict(arc_distance(c.at, t0, t1, y, euclidean), mu * r);
}

inline GeneratedFilter<Point> curve_filter(const Curve& c, Sign sign) {
  if (!(c.a < 0.0 && 0.0 < c.b)) throw Error(ErrorCode::InvalidGenerator, "curve domain must contain 0 in its interior");
  const auto e = estimate_bilipschitz(c);
  if (e.lower < kMinLipschitzLower || e.upper > kMaxLipschitzUpper)
    throw Error(ErrorCode::CurveNotBiLipschitz, "estimated constants [" + std::to_string(e.lower) + ", " +
                                                    std::to_string(e.upper) + "] out of bounds");
  return {FilterKind::curve, sign == Sign::plus ? "curve+" : "curve-",
          [c, sign](const Point& y, double eps, double mu) { return curve_tube_test(c, sign, y, eps, mu); }};
}

// ---------------------------------------------------------------- sequences

struct SequenceOptions {
  double conv_tol = 1e-3;
  double angle_tol = 1e-3;
  double tail_fraction = 0.1;
  std::vector<double> eps_grid{1.0, 0.1, 0.01, 0.001};
  std::vector<double> sigma_grid{0.5, 0.2, 0.1, 0.05, 0.01};
};

struct SequenceVerdict {
  bool converges_to_point = false;
  std::optional<Point> direction_limit;
  bool direct_match = false;
  bool generator_match = false;
  bool matches_filter = false;
  bool disagreement = false;
  std::vector<std::size_t> witnesses;  // tail indices outside the first failing generator
};

inline std::size_t tail_start(std::size_t n, double fraction) {
  const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  return n - std::min(n, len);
}

struct TailTest {
  bool match = true;
  bool inconclusive = false;
  std::vector<std::size_t> witnesses;
};

/// For each (eps,sigma) on the grid, does the tail lie in the generator?
template <typename P>
TailTest generator_tail_test(const GeneratedFilter<P>& filter, const std::vector<P>& seq, const SequenceOptions& opt) {
  TailTest out;
  const std::size_t start = tail_start(seq.size(), opt.tail_fraction);
  for (double eps : opt.eps_grid)
    for (double sigma : opt.sigma_grid) {
      for (std::size_t h = start; h < seq.size(); ++h) {
        const auto m = filter.test(seq[h], eps, sigma);
        if (m == Membership::inconclusive) out.inconclusive = true;
        if (m == Membership::outside) {
          out.match = false;
          if (out.witnesses.size() < 16) out.witnesses.push_back(h);
        }
      }
      if (!out.match) return out;
    }
  return out;
}

/// Direct part: does the tail approach x, and do the normalised increments
/// settle on a direction?
inline void direct_sequence_test(const std::vector<Point>& seq, const Point& x, const SequenceOptions& opt,
                                 SequenceVerdict& v) {
  const std::size_t start = tail_start(seq.size(), opt.tail_fraction);
  double tail_max = 0.0;
  Point mean = Point::Zero(x.size());
  for (std::size_t h = start; h < seq.size(); ++h) {
    const Point w = seq[h] - x;
    tail_max = std::max(tail_max, w.norm());
    mean += w / w.norm();
  }
  v.converges_to_point = tail_max < opt.conv_tol;
  if (!v.converges_to_point || mean.norm() < 1e-12) return;
  mean /= mean.norm();
  double spread = 0.0;
  for (std::size_t h = start; h < seq.size(); ++h) spread = std::max(spread, angle_between(seq[h] - x, mean));
  if (spread < opt.angle_tol) v.direction_limit = mean;
}

/// Cross-validated classification of a finite sequence prefix against
/// the directional filter at x with direction u.
inline SequenceVerdict classify_sequence(const std::vector<Point>& seq, const Point& x, const Point& u,
                                         const SequenceOptions& opt = {}) {
  require_unit(u);
  for (std::size_t h = 0; h < seq.size(); ++h)
    if ((seq[h] - x).norm() == 0.0)
      throw Error(ErrorCode::DegenerateTerm, "term " + std::to_string(h) + " equals the base point", {h});
  SequenceVerdict v;
  if (seq.empty()) return v;
  direct_sequence_test(seq, x, opt, v);
  v.direct_match = v.direction_limit && angle_between(*v.direction_limit, u) < opt.angle_tol;
  auto tail = generator_tail_test(directional_filter(x, u), seq, opt);
  v.generator_match = tail.match;
  v.witnesses = std::move(tail.witnesses);
  v.matches_filter = v.direct_match && v.generator_match;
  v.disagreement = v.direct_match != v.generator_match;
  return v;
}

enum class SequenceKind { with_direction, without_direction, divergent };

constexpr const char* to_string(SequenceKind k) {
  switch (k) {
    case SequenceKind::with_direction: return "with-direction";
    case SequenceKind::without_direction: return "without-direction";
    case SequenceKind::divergent: return "divergent";
  }
  return "?";
}

/// Randomised sequence of known kind around x, for direction u.
///  with_direction:    x + r_h (u + h^-b w), r_h = c h^-a
///  without_direction: x + r_h d_h with d_h alternating between u and a far direction
///  divergent:         tends to another point, or escapes
inline std::vector<Point> labeled_sequence(Rng& rng, SequenceKind kind, const Point& x, const Point& u,
                                           std::size_t h_max = 10000) {
  const int dim = static_cast<int>(x.size());
  std::vector<Point> seq;
  seq.reserve(h_max);
  const double c = rng.uniform(0.1, 1.0), a = rng.uniform(1.0, 2.0);
  switch (kind) {
    case SequenceKind::with_direction: {
      const double b = rng.uniform(1.0, 2.0);
      const Point w = rng.unit_vector(dim) * rng.uniform(0.0, 1.0);
      for (std::size_t h = 1; h <= h_max; ++h) {
        const double hd = static_cast<double>(h);
        seq.push_back(x + c * std::pow(hd, -a) * (u + std::pow(hd, -b) * w));
      }
      break;
    }
    case SequenceKind::without_direction: {
      Point v = rng.unit_vector(dim);
      while (angle_between(u, v) < 0.5) v = rng.unit_vector(dim);
      for (std::size_t h = 1; h <= h_max; ++h)
        seq.push_back(x + c * std::pow(static_cast<double>(h), -a) * (h % 2 == 0 ? u : v));
      break;
    }
    case SequenceKind::divergent: {
      const int mode = rng.integer(0, 2);
      const Point other = x + rng.unit_vector(dim) * rng.uniform(0.1, 1.0);
      const Point w = rng.unit_vector(dim);
      for (std::size_t h = 1; h <= h_max; ++h) {
        const double hd = static_cast<double>(h);
        if (mode == 0) seq.push_back(other + c * std::pow(hd, -a) * w);
        else if (mode == 1) seq.push_back(x + (1.0 + c * hd) * u);
        else seq.push_back(h % 2 == 0 ? other : Point(x + c * std::pow(hd, -a) * u));
      }
      break;
    }
  }
  return seq;
}

// ---------------------------------------------------------------- bound inequality

struct BoundCheck {
  double lower;     // d(x,c)/(1+mu)
  double distance;  // d(x,y)
  double upper;     // d(x,c)/(1-mu)
  bool ok;
};

/// Given d(y,c) < mu d(x,y) with c = c(lambda) on the arc, checks
/// d(x,c)/(1+mu) < d(x,y) < d(x,c)/(1-mu).
inline BoundCheck check_bound(const Point& x, const Point& c_lambda, const Point& y, double mu,
                              const Distance& d = euclidean) {
  if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorCode::InvalidGenerator, "mu must lie in (0,1)");
  const double dxy = d(x, y);
  if (!(d(y, c_lambda) < mu * dxy)) throw Error(ErrorCode::InvalidWitness, "d(y, c(lambda)) < mu d(x,y) fails");
  const double dxc = d(x, c_lambda);
  BoundCheck b{dxc / (1.0 + mu), dxy, dxc / (1.0 - mu), false};
  b.ok = b.lower < dxy && dxy < b.upper;
  return b;
}

// ---------------------------------------------------------------- transport

struct SmoothMap {
  std::string name;
  int dim;
  std::function<Point(const Point&)> f;
  std::function<Eigen::MatrixXd(const Point&)> jacobian;
};

inline SmoothMap linear_map(const Eigen::MatrixXd& A, std::string name = "linear") {
  return {std::move(name), static_cast<int>(A.cols()), [A](const Point& p) -> Point { return A * p; },
          [A](const Point&) -> Eigen::MatrixXd { return A; }};
}

struct TransportResult {
  Point direction;     // extrapolated image direction
  Point expected;      // Df(x)u / |Df(x)u|
  double angle_error;  // radians
  std::size_t trials;
  std::size_t mismatches;  // perturbed sequences whose images miss the direction
};

/// Smallest over largest singular value.
inline double inverse_condition(const Eigen::MatrixXd& J) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& s = svd.singularValues();
  return s[0] == 0.0 ? 0.0 : s[s.size() - 1] / s[0];
}

/// Pushes sequences converging to the directional filter at (x,u) through f
/// and reads off the image direction. The difference quotient
/// D(t) = (f(x+tu)-f(x))/t is smooth in t, so Richardson extrapolation on
/// t = 2^-k recovers D(0) = Df(x)u well below the sampling tolerance; the
/// analytic Jacobian is only used for the reported expectation.
inline TransportResult transport_via_sequences(const SmoothMap& map, const Point& x, const Point& u,
                                               std::size_t trials, std::uint64_t seed,
                                               const SequenceOptions& opt = {}) {
  require_unit(u);
  const Eigen::MatrixXd J = map.jacobian(x);
  if (inverse_condition(J) < 1e-10) throw Error(ErrorCode::SingularJacobian, "Df(x) is singular at " + map.name);
  const Point fx = map.f(x);

  constexpr int levels = 7, first = 3;
  std::vector<std::vector<Point>> R(levels);
  for (int k = 0; k < levels; ++k) {
    const double t = std::ldexp(1.0, -(first + k));
    R[k].push_back((map.f(x + t * u) - fx) / t);
    for (int j = 1; j <= k; ++j) {
      const double p = std::ldexp(1.0, j) - 1.0;
      R[k].push_back(R[k][j - 1] + (R[k][j - 1] - R[k - 1][j - 1]) / p);
    }
  }
  // pick the extrapolant whose last correction is smallest
  Point best = R[levels - 1][levels - 1];
  double best_step = std::numeric_limits<double>::infinity();
  for (int k = 1; k < levels; ++k)
    for (int j = 1; j <= k; ++j) {
      const double step = (R[k][j] - R[k][j - 1]).norm();
      if (step < best_step) best_step = step, best = R[k][j];
    }
  if (best.norm() == 0.0) throw Error(ErrorCode::NoDirectionLimit, "image increments vanish");

  TransportResult out;
  out.direction = best / best.norm();
  const Point ju = J * u;
  out.expected = ju / ju.norm();
  out.angle_error = angle_between(out.direction, out.expected);
  out.trials = trials;
  out.mismatches = 0;

  // Perturbed sequences x + t(u + t w) converge to the same filter; their
  // images must converge to the filter of the found direction.
  Rng rng(derive_seed(seed, "transport:" + map.name));
  SequenceOptions image_opt = opt;
  const double scale = std::max(1.0, J.norm());
  image_opt.conv_tol = opt.conv_tol * scale;
  const std::size_t h_max = 2000;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Point w = rng.unit_vector(static_cast<int>(x.size())) * rng.uniform(0.0, 1.0);
    std::vector<Point> image;
    image.reserve(h_max);
    for (std::size_t h = 1; h <= h_max; ++h) {
      const double t = 0.1 / static_cast<double>(h) / scale;
      image.push_back(map.f(x + t * (u + t * w)));
    }
    SequenceVerdict v;
    direct_sequence_test(image, fx, image_opt, v);
    if (!v.direction_limit || angle_between(*v.direction_limit, out.direction) >= opt.angle_tol) ++out.mismatches;
  }
  if (out.mismatches > 0)
    throw Error(ErrorCode::NoDirectionLimit, std::to_string(out.mismatches) + " image sequences without the limit");
  return out;
}

// ---------------------------------------------------------------- pair-filter checks

/// Samples a member of the cone set C(u,eps,sigma) = {a : dist(a,[0,eps]u) < sigma |a|}
/// by construction: a = t u + r w with r < sigma t / (1+sigma).
inline Point sample_cone_offset(Rng& rng, const Point& u, double eps, double sigma) {
  const double t = eps * rng.uniform(1e-3, 1.0);
  const double r = rng.uniform(0.0, 0.999) * sigma * t / (1.0 + sigma);
  return t * u + r * rng.unit_vector(static_cast<int>(u.size()));
}

struct MetricCommutation {
  Commutation verdict = Commutation::commute;
  std::size_t samples = 0;
  std::size_t verified = 0;
  std::size_t unresolved = 0;
};

/// Sampled semi-decision of V+(u)oV+(v) = V+(v)oV+(u) at equal (eps,sigma).
/// A chain x -> x+a -> x+a+b is re-routed through x+b; membership of both
/// legs of the new chain certifies the sample. A sample that no midpoint
/// repairs is counted unresolved: non-membership of a composite is not
/// decidable by sampling, so the verdict is commute or inconclusive.
inline MetricCommutation check_metric_commutation(const Point& u, const Point& v, std::size_t samples,
                                                  std::uint64_t seed, unsigned threads = 1) {
  require_unit(u);
  require_unit(v);
  static const double eps_grid[] = {1.0, 0.1, 0.01};
  static const double sigma_grid[] = {0.5, 0.2, 0.05};
  struct Tally {
    std::size_t verified = 0, unresolved = 0;
  };
  const int dim = static_cast<int>(u.size());
  auto tallies = run_chunks(chunk_count(samples), threads, [&](std::size_t chunk) {
    Rng rng(derive_seed(seed, "commutation", chunk));
    Tally t;
    const std::size_t n = chunk_length(samples, chunk);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = chunk * kChunkSize + i;
      const double eps = eps_grid[k % 3], sigma = sigma_grid[(k / 3) % 3];
      const bool forward = (k / 9) % 2 == 0;
      const Point& p = forward ? u : v;
      const Point& q = forward ? v : u;
      const Point x = rng.in_box(dim, 10.0);
      const Point y = x + sample_cone_offset(rng, p, eps, sigma);
      const Point z = y + sample_cone_offset(rng, q, eps, sigma);
      if (!pair_v_plus_contains(p, eps, sigma, x, y) || !pair_v_plus_contains(q, eps, sigma, y, z)) {
        ++t.unresolved;  // construction should make this impossible
        continue;
      }
      bool ok = false;
      const Point mid = x + (z - y);
      if (pair_v_plus_contains(q, eps, sigma, x, mid) && pair_v_plus_contains(p, eps, sigma, mid, z)) ok = true;
      for (int attempt = 0; !ok && attempt < 64; ++attempt) {
        const Point m = x + sample_cone_offset(rng, q, eps, sigma);
        ok = pair_v_plus_contains(q, eps, sigma, x, m) && pair_v_plus_contains(p, eps, sigma, m, z);
      }
      ++(ok ? t.verified : t.unresolved);
    }
    return t;
  });
  MetricCommutation out;
  out.samples = samples;
  for (const auto& t : tallies) out.verified += t.verified, out.unresolved += t.unresolved;
  out.verdict = out.unresolved == 0 ? Commutation::commute : Commutation::inconclusive;
  return out;
}

struct PairRefinementReport {
  std::size_t samples = 0;
  std::size_t envelope_violations = 0;  // member outside B(eps/(1-mu))
  std::size_t half_violations = 0;      // chain in D o D outside the generator
  std::size_t swap_violations = 0;      // swapped member outside V+(-u)
  bool ok() const { return envelope_violations == 0 && half_violations == 0 && swap_violations == 0; }
};

/// Half-composition certificate for V+(u,eps,mu): D = V+(u, eps/2, mu/(2+2mu)).
/// Members a of a cone with aperture m satisfy a.u >= (1-2m)|a|, so
/// |a+b| >= (1-2m)(|a|+|b|) and dist(a+b, [0,eps]u) < m(|a|+|b|) <= m/(1-2m) |a+b| = mu/2 |a+b|.
inline std::pair<double, double> half_composition_generator(double eps, double mu) {
  return {eps / 2.0, mu / (2.0 + 2.0 * mu)};
}

/// Sampled verification that {mu_u, mu_-u} is a uniform refinement of the
/// Euclidean uniformity: envelope, half composition and swap closure.
inline PairRefinementReport check_pair_directional_refinement(const Point& u, std::size_t samples,
                                                              std::uint64_t seed, unsigned threads = 1) {
  require_unit(u);
  const int dim = static_cast<int>(u.size());
  const Point minus = -u;
  auto parts = run_chunks(chunk_count(samples), threads, [&](std::size_t chunk) {
    Rng rng(derive_seed(seed, "pair-refinement", chunk));
    PairRefinementReport r;
    for (std::size_t i = 0; i < chunk_length(samples, chunk); ++i) {
      const double eps = rng.log_uniform(1e-3, 1.0), mu = rng.uniform(0.01, 0.95);
      const Point x = rng.in_box(dim, 5.0);
      // rejection sample around the cone to exercise the boundary
      const Point y = x + rng.unit_vector(dim) * rng.uniform(0.0, 2.0 * cone_envelope_radius(eps, mu)) +
                      (rng.uniform() < 0.5 ? Point(eps * rng.uniform() * u) : Point::Zero(dim));
      if (pair_v_plus_contains(u, eps, mu, x, y)) {
        if (!metric_uniformity_contains(cone_envelope_radius(eps, mu), x, y)) ++r.envelope_violations;
        if (!pair_v_plus_contains(minus, eps, mu, y, x)) ++r.swap_violations;
      }
      const auto [e2, m2] = half_composition_generator(eps, mu);
      const Point y2 = x + sample_cone_offset(rng, u, e2, m2);
      const Point z2 = y2 + sample_cone_offset(rng, u, e2, m2);
      if (pair_v_plus_contains(u, e2, m2, x, y2) && pair_v_plus_contains(u, e2, m2, y2, z2) &&
          !pair_v_plus_contains(u, eps, mu, x, z2))
        ++r.half_violations;
      ++r.samples;
    }
    return r;
  });
  PairRefinementReport out;
  for (const auto& p : parts) {
    out.samples += p.samples;
    out.envelope_violations += p.envelope_violations;
    out.half_violations += p.half_violations;
    out.swap_violations += p.swap_violations;
  }
  return out;
}

/// Generator inclusion for an invertible linear map A:
/// A^2 V+(u,eps,mu) is inside V+(Au/|Au|, eps |Au|, kappa mu) with kappa = |A||A^-1|.
struct LinearPairTransport {
  Point image_direction;
  double kappa;
  std::size_t samples = 0;
  std::size_t violations = 0;
};

inline LinearPairTransport check_linear_pair_transport(const Eigen::MatrixXd& A, const Point& u, std::size_t samples,
                                                       std::uint64_t seed) {
  require_unit(u);
  if (inverse_condition(A) < 1e-10) throw Error(ErrorCode::SingularJacobian, "matrix is singular");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  LinearPairTransport out;
  out.kappa = s[0] / s[s.size() - 1];
  const Point au = A * u;
  out.image_direction = au / au.norm();
  Rng rng(derive_seed(seed, "linear-pair-transport"));
  const int dim = static_cast<int>(u.size());
  for (std::size_t i = 0; i < samples; ++i) {
    const double eps = rng.log_uniform(1e-3, 1.0);
    const double mu = rng.uniform(0.01, 0.99) / out.kappa;
    const Point x = rng.in_box(dim, 5.0);
    const Point y = x + sample_cone_offset(rng, u, eps, mu);
    if (!pair_v_plus_contains(u, eps, mu, x, y)) continue;
    ++out.samples;
    if (!pair_v_plus_contains(out.image_direction, eps * au.norm(), out.kappa * mu * (1 + 1e-12), A * x, A * y))
      ++out.violations;
  }
  return out;
}

}  // namespace topoderiv
