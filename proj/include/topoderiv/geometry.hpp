#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace topoderiv {

using Point = Eigen::VectorXd;
using Distance = std::function<double(const Point&, const Point&)>;

inline double euclidean(const Point& a, const Point& b) { return (a - b).norm(); }

struct SegmentProjection {
  double distance;
  double parameter;  // in [0, eps]
};

/// Distance from y to the segment x + [0,eps]u (u unit), by clamped projection.
inline SegmentProjection project_to_segment(const Point& y, const Point& x, const Point& u, double eps) {
  const Point w = y - x;
  const double t = std::clamp(w.dot(u), 0.0, eps);
  return {(w - t * u).norm(), t};
}

enum class Membership { outside, inside, inconclusive };

constexpr const char* to_string(Membership m) {
  switch (m) {
    case Membership::outside: return "outside";
    case Membership::inside: return "inside";
    case Membership::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ArcDistance {
  double distance;
  double parameter;
  bool converged;
  std::size_t samples;  // final grid size
};

struct ArcOptions {
  double tol = 1e-9;
  std::size_t start = 32;
  std::size_t cap = std::size_t{1} << 14;
};

/// min over t in [t0,t1] of dist(y, c(t)). Grid search, then golden-section
/// refinement around the best grid point; the grid doubles until two
/// successive estimates agree within tol. Each estimate is attained by an
/// actual arc point, so `distance` is always an upper bound of the minimum.
template <typename Curve, typename Dist>
ArcDistance arc_distance(const Curve& c, double t0, double t1, const Point& y, const Dist& dist,
                         const ArcOptions& opt = {}) {
  auto f = [&](double t) { return dist(y, c(t)); };
  auto estimate = [&](std::size_t n) {
    const double h = (t1 - t0) / static_cast<double>(n);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= n; ++i) {
      const double d = f(i == n ? t1 : t0 + h * static_cast<double>(i));
      if (d < best_d) best_d = d, best = i;
    }
    double lo = best == 0 ? t0 : t0 + h * static_cast<double>(best - 1);
    double hi = best == n ? t1 : t0 + h * static_cast<double>(best + 1);
    constexpr double g = 0.6180339887498949;
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    for (int it = 0; it < 60 && hi - lo > 1e-15 * (1 + std::abs(hi)); ++it) {
      if (fa < fb) {
        hi = b, b = a, fb = fa;
        a = hi - g * (hi - lo), fa = f(a);
      } else {
        lo = a, a = b, fa = fb;
        b = lo + g * (hi - lo), fb = f(b);
      }
    }
    double t_best = best == n ? t1 : t0 + h * static_cast<double>(best);
    if (fa < best_d) best_d = fa, t_best = a;
    if (fb < best_d) best_d = fb, t_best = b;
    return std::pair{best_d, t_best};
  };
  if (!(t1 > t0)) return {f(t0), t0, true, 1};
  auto prev = estimate(opt.start);
  for (std::size_t n = 2 * opt.start; n <= opt.cap; n *= 2) {
    auto cur = estimate(n);
    const bool stable = std::abs(cur.first - prev.first) <= opt.tol;
    if (cur.first > prev.first) cur = prev;
    if (stable) return {cur.first, cur.second, true, n};
    prev = cur;
  }
  return {prev.first, prev.second, false, opt.cap};
}

/// Three-way tube test d(y, arc) < bound. "inside" is certified by an arc
/// point; "outside" needs a converged estimate clear of the bound.
inline Membership tube_verdict(const ArcDistance& a, double bound) {
  if (a.distance < bound) return Membership::inside;
  return a.converged ? Membership::outside : Membership::inconclusive;
}

/// Angle in radians between nonzero vectors.
inline double angle_between(const Point& a, const Point& b) {
  const Point ua = a / a.norm(), ub = b / b.norm();
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

}  // namespace topoderiv
