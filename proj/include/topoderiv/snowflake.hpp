#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "topoderiv/error.hpp"
#include "topoderiv/geometry.hpp"
#include "topoderiv/graded_filter.hpp"

namespace topoderiv {

inline double snowflake_distance(int m, double x, double y) {
  return std::pow(std::abs(x - y), 1.0 / static_cast<double>(m));
}

struct SnowflakeSpace {
  int m;
  double distance(double x, double y) const { return snowflake_distance(m, x, y); }
};

enum class Axis { first, second };

/// R x R with |dx| + |dy|^(1/m); `snowflake_axis` picks which coordinate is
/// snowflaked (second by default).
struct MixedProductSpace {
  int m;
  Axis snowflake_axis = Axis::second;

  double axis_term(Axis axis, double delta) const {
    return axis == snowflake_axis ? std::pow(std::abs(delta), 1.0 / m) : std::abs(delta);
  }
  double distance(const Point& a, const Point& b) const {
    return axis_term(Axis::first, a[0] - b[0]) + axis_term(Axis::second, a[1] - b[1]);
  }
};

inline void require_exponent(int m) {
  if (m < 2) throw Error(ErrorCode::ConstraintViolation, "snowflake exponent must be >= 2");
}

// ---------------------------------------------------------------- polynomials

/// Exact rational coefficients, constant term first.
struct Polynomial {
  std::vector<Rational> coeffs;

  int degree() const {
    for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k)
      if (coeffs[k] != Rational(0)) return k;
    return -1;
  }
  std::vector<double> as_double() const {
    std::vector<double> c;
    for (const auto& r : coeffs) c.push_back(boost::rational_cast<double>(r));
    return c;
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    const std::size_t n = std::max(a.coeffs.size(), b.coeffs.size());
    for (std::size_t k = 0; k < n; ++k) {
      const Rational x = k < a.coeffs.size() ? a.coeffs[k] : Rational(0);
      const Rational y = k < b.coeffs.size() ? b.coeffs[k] : Rational(0);
      if (x != y) return false;
    }
    return true;
  }
};

inline std::string describe(const Polynomial& p) {
  std::string s;
  for (int k = 0; k <= p.degree(); ++k) {
    if (p.coeffs[k] == Rational(0)) continue;
    if (!s.empty()) s += " + ";
    s += std::to_string(p.coeffs[k].numerator());
    if (p.coeffs[k].denominator() != 1) s += "/" + std::to_string(p.coeffs[k].denominator());
    if (k >= 1) s += "t";
    if (k >= 2) s += "^" + std::to_string(k);
  }
  return s.empty() ? "0" : s;
}

inline double horner(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

/// Bound on |p'| over [0, r] for r >= 0.
inline double derivative_bound(const std::vector<double>& c, double r) {
  double L = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) L += static_cast<double>(k) * std::abs(c[k]) * std::pow(r, double(k - 1));
  return L;
}

/// p(0) = 0 and 1 <= deg p <= m.
inline void validate_polynomial(const Polynomial& p, int m) {
  require_exponent(m);
  if (!p.coeffs.empty() && p.coeffs[0] != Rational(0))
    throw Error(ErrorCode::ConstraintViolation, "polynomial must vanish at 0");
  const int d = p.degree();
  if (d < 1 || d > m)
    throw Error(ErrorCode::ConstraintViolation, "degree " + std::to_string(d) + " outside [1," + std::to_string(m) + "]");
}

struct PolynomialGenerator {
  Point x;  // one coordinate on the snowflake line, two in the mixed product
  Polynomial p;
  double eps;
  double lambda;
};

inline PolynomialGenerator make_polynomial_generator(Point x, Polynomial p, int m, double eps, double lambda) {
  validate_polynomial(p, m);
  if (!(eps > 0.0) || !(lambda > 0.0 && lambda < 1.0))
    throw Error(ErrorCode::DegenerateGenerator, "need eps > 0 and lambda in (0,1)");
  return {std::move(x), std::move(p), eps, lambda};
}

// ---------------------------------------------------------------- arc minimisation

struct ArcMinimum {
  double upper;     // attained at t_upper
  double t_upper;
  double lower;     // certified lower bound of the minimum
  std::size_t nodes;
};

/// Branch and bound for min over t in [0,eps] of
///   g1(|a - t|) + g2(|b - p(t)|)
/// with g1, g2 nondecreasing. The range of p on a cell [t0,t1] is enclosed
/// by p(mid) +- L(t1-t0)/2 with L a bound on |p'|, so the lower bounds are
/// rigorous up to floating point rounding. Stops as soon as the minimum is
/// known to be below `below` or not below `above`, or the gap closes.
template <typename G1, typename G2>
ArcMinimum arc_minimum(const std::vector<double>& c, double a, double b, double eps, G1 g1, G2 g2, double below,
                       double above, double rel_gap = 1e-9, std::size_t cap = 200000) {
  struct Cell {
    double lo, t0, t1;
    bool operator<(const Cell& o) const { return lo > o.lo; }
  };
  auto value = [&](double t) { return g1(std::abs(a - t)) + g2(std::abs(b - horner(c, t))); };
  auto bound = [&](double t0, double t1) {
    const double da = a < t0 ? t0 - a : a > t1 ? a - t1 : 0.0;
    const double mid = 0.5 * (t0 + t1);
    const double L = derivative_bound(c, t1);
    const double db = std::max(0.0, std::abs(b - horner(c, mid)) - L * 0.5 * (t1 - t0));
    return g1(da) + g2(db);
  };
  ArcMinimum out{std::numeric_limits<double>::infinity(), 0.0, 0.0, 0};
  auto probe = [&](double t) {
    const double v = value(t);
    if (v < out.upper) out.upper = v, out.t_upper = t;
  };
  probe(0.0);
  probe(eps);
  probe(std::clamp(a, 0.0, eps));
  std::priority_queue<Cell> q;
  q.push({bound(0.0, eps), 0.0, eps});
  while (!q.empty()) {
    const Cell cell = q.top();
    out.lower = std::min(cell.lo, out.upper);
    if (out.upper < below || out.lower >= above) break;
    if (out.upper - out.lower <= rel_gap * out.upper || out.nodes >= cap) break;
    q.pop();
    ++out.nodes;
    const double mid = 0.5 * (cell.t0 + cell.t1);
    if (!(mid > cell.t0 && mid < cell.t1)) continue;  // cell exhausted at double resolution
    probe(mid);
    q.push({bound(cell.t0, mid), cell.t0, mid});
    q.push({bound(mid, cell.t1), mid, cell.t1});
  }
  if (q.empty()) out.lower = out.upper;
  return out;
}

/// Distance from a displacement (a,b) = y - x to the arc {(t, p(t)) : t in [0,eps]}.
inline ArcMinimum mixed_arc_minimum(const MixedProductSpace& s, const std::vector<double>& c, double a, double b,
                                    double eps, double below = -1.0,
                                    double above = std::numeric_limits<double>::infinity(), double rel_gap = 1e-9) {
  auto g1 = [&](double d) { return s.axis_term(Axis::first, d); };
  auto g2 = [&](double d) { return s.axis_term(Axis::second, d); };
  return arc_minimum(c, a, b, eps, g1, g2, below, above, rel_gap);
}

/// Distance on the snowflake line from displacement b to the arc {p(t) : t in [0,eps]}.
inline ArcMinimum line_arc_minimum(const SnowflakeSpace& s, const std::vector<double>& c, double b, double eps,
                                   double below = -1.0, double above = std::numeric_limits<double>::infinity()) {
  auto g1 = [](double) { return 0.0; };
  auto g2 = [&](double d) { return std::pow(d, 1.0 / s.m); };
  return arc_minimum(c, 0.0, b, eps, g1, g2, below, above);
}

inline Membership arc_verdict(const ArcMinimum& r, double bound) {
  if (r.upper < bound) return Membership::inside;
  if (r.lower >= bound) return Membership::outside;
  return Membership::inconclusive;
}

/// Graph reading: arc points are x + (t, p(t)).
inline Membership polynomial_arc_test(const MixedProductSpace& s, const PolynomialGenerator& g, const Point& y) {
  const double r = s.distance(g.x, y);
  if (r == 0.0) return Membership::outside;
  const double bound = g.lambda * r;
  return arc_verdict(mixed_arc_minimum(s, g.p.as_double(), y[0] - g.x[0], y[1] - g.x[1], g.eps, bound, bound), bound);
}

/// Line reading: arc points are x + p(t) on the snowflake line.
inline Membership polynomial_arc_test(const SnowflakeSpace& s, const PolynomialGenerator& g, const Point& y) {
  const double r = s.distance(g.x[0], y[0]);
  if (r == 0.0) return Membership::outside;
  const double bound = g.lambda * r;
  return arc_verdict(line_arc_minimum(s, g.p.as_double(), y[0] - g.x[0], g.eps, bound, bound), bound);
}

/// Membership in V+(x,p,eps,lambda). Undecided cases (the point sits on
/// the generator boundary to within rounding) raise BudgetExhausted.
template <typename Space>
bool polynomial_filter_contains(const PolynomialGenerator& g, const Point& y, const Space& space) {
  const auto m = polynomial_arc_test(space, g, y);
  if (m == Membership::inconclusive) throw Error(ErrorCode::BudgetExhausted, "arc distance undecided at the boundary");
  return m == Membership::inside;
}

// ---------------------------------------------------------------- separation

enum class SeparationVerdict { equal, separated, not_separated };

constexpr const char* to_string(SeparationVerdict v) {
  switch (v) {
    case SeparationVerdict::equal: return "equal";
    case SeparationVerdict::separated: return "separated";
    case SeparationVerdict::not_separated: return "not-separated";
  }
  return "?";
}

/// Sequence on the arc of `along` plus a generator of the filter of
/// `against` that every tail term is certified to leave.
struct SeparationWitness {
  bool along_first;  // sequence follows p1 (else p2)
  std::vector<double> t;
  std::vector<Point> sequence;  // displacements from the base point
  double eps;
  double lambda;
  bool verified;  // every term certified outside
};

struct SeparationResult {
  SeparationVerdict verdict;
  std::optional<SeparationWitness> witness;
  // certified lower bounds of d(y_h, other arc)/d(x,y_h) along each arc
  std::vector<double> ratios_along_p1;
  std::vector<double> ratios_along_p2;
};

struct SeparationOptions {
  int h_first = 4;
  int h_last = 60;   // t_h = 2^-h
  double eps = 0.5;  // generator length of the filter being left
  double floor = 1e-3;  // ratios below this count as decay
  double max_slope = 0.05;  // d log(ratio) / d log(t) above this counts as decay
};

/// Least-squares slope of log(ratio) against log(t) over the deeper half.
inline double decay_exponent(const std::vector<double>& ratios, int h_first) {
  const std::size_t from = ratios.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = from; i < ratios.size(); ++i) {
    const double x = -static_cast<double>(h_first + static_cast<int>(i)) * std::log(2.0);
    const double y = std::log(std::max(ratios[i], 1e-300));
    sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Decides whether mu_{x,p1} and mu_{x,p2} differ by exhibiting a
/// sequence converging to one and leaving a generator of the other. In the
/// mixed product the relevant ratio d(y, arc2)/d(x, y) along arc1 either
/// stays bounded below (separated) or decays to 0; when it decays in both
/// directions no such witness exists and the verdict is not_separated.
/// Decay is read off the slope of log(ratio) in log(t), since slow power
/// laws such as t^(1/6) stay above any fixed floor at double precision.
inline SeparationResult separate_polynomials(const Polynomial& p1, const Polynomial& p2, int m,
                                             const SeparationOptions& opt = {}) {
  validate_polynomial(p1, m);
  validate_polynomial(p2, m);
  if (p1 == p2) return {SeparationVerdict::equal, std::nullopt, {}, {}};
  const MixedProductSpace s{m};
  const Point origin = Point::Zero(2);

  auto ratios = [&](const Polynomial& along, const Polynomial& against) {
    const auto ca = along.as_double(), cb = against.as_double();
    std::vector<double> out;
    for (int h = opt.h_first; h <= opt.h_last; ++h) {
      const double t = std::ldexp(1.0, -h);
      const double a = t, b = horner(ca, t);
      const double r = s.distance(origin, vec({a, b}));
      const auto mn = mixed_arc_minimum(s, cb, a, b, opt.eps, -1.0, std::numeric_limits<double>::infinity(), 1e-3);
      out.push_back(mn.lower / r);
    }
    return out;
  };

  SeparationResult res{SeparationVerdict::not_separated, std::nullopt, ratios(p1, p2), ratios(p2, p1)};
  for (bool first : {true, false}) {
    const auto& r = first ? res.ratios_along_p1 : res.ratios_along_p2;
    const double low = *std::min_element(r.begin(), r.end());
    if (!(low > opt.floor) || decay_exponent(r, opt.h_first) > opt.max_slope) continue;
    SeparationWitness w{first, {}, {}, opt.eps, std::min(0.5 * low, 0.99), true};
    const auto& along = first ? p1 : p2;
    const auto& against = first ? p2 : p1;
    const auto ca = along.as_double();
    const auto gen = make_polynomial_generator(origin, against, m, w.eps, w.lambda);
    for (int h = opt.h_first; h <= opt.h_last; ++h) {
      const double t = std::ldexp(1.0, -h);
      w.t.push_back(t);
      w.sequence.push_back(vec({t, horner(ca, t)}));
      if (polynomial_arc_test(s, gen, w.sequence.back()) != Membership::outside) w.verified = false;
    }
    if (w.verified) {
      res.verdict = SeparationVerdict::separated;
      res.witness = std::move(w);
      return res;
    }
  }
  return res;
}

// ---------------------------------------------------------------- graph embedding

struct ScalarFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double, int)> derivative;  // k-th derivative, k >= 0
  std::function<double(double, double)> increment = {};  // f(x+h) - f(x) without cancellation, optional

  double delta(double x, double h) const { return increment ? increment(x, h) : f(x + h) - f(x); }
};

struct GraphEmbedding {
  int m;
  double lower;  // inf of d(g(x),g(y)) / d(x,y)
  double upper;  // sup of the same
  std::function<Point(double)> g;
};

/// g(x) = (x, f(x)) from the snowflake line into the mixed product whose
/// snowflaked coordinate is the first one; the first coordinate alone
/// makes g non-contracting.
inline GraphEmbedding graph_embed(const ScalarFunction& f, int m, double lo, double hi, int grid = 200) {
  require_exponent(m);
  // Adjacent difference quotients at two resolutions: for a Lipschitz f the
  // fine-grid value stays near the coarse one, otherwise it keeps growing.
  auto adjacent_lip = [&](int n) {
    double lip = 0.0, prev = f.f(lo);
    for (int i = 1; i <= n; ++i) {
      const double cur = f.f(lo + (hi - lo) * i / n);
      lip = std::max(lip, std::abs(cur - prev) * n / (hi - lo));
      prev = cur;
    }
    return lip;
  };
  const double coarse = adjacent_lip(256), fine = adjacent_lip(16384);
  if (!std::isfinite(fine) || fine > 2.0 * coarse + 1e-12 || fine > 1e6)
    throw Error(ErrorCode::NotLipschitz, f.name + " is not Lipschitz on the interval");

  const MixedProductSpace target{m, Axis::first};
  double lower = std::numeric_limits<double>::infinity(), upper = 0.0;
  std::vector<double> xs, fs;
  for (int i = 0; i <= grid; ++i) {
    xs.push_back(lo + (hi - lo) * i / grid);
    fs.push_back(f.f(xs.back()));
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double d = snowflake_distance(m, xs[i], xs[j]);
      const double dg = target.distance(vec({xs[i], fs[i]}), vec({xs[j], fs[j]}));
      lower = std::min(lower, dg / d);
      upper = std::max(upper, dg / d);
    }
  auto fn = f.f;
  return {m, lower, upper, [fn](double x) { return vec({x, fn(x)}); }};
}

/// Built-in scalar maps with closed-form derivatives.
inline ScalarFunction polynomial_function(std::vector<double> c) {
  auto derivative = [c](double y, int k) {
    double v = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < c.size(); ++i) {
      double fall = 1.0;
      for (int j = 0; j < k; ++j) fall *= static_cast<double>(i - j);
      v += c[i] * fall * std::pow(y, static_cast<double>(i - k));
    }
    return v;
  };
  // exact Taylor shift: f(x+h) - f(x) = sum_k f^(k)(x)/k! h^k
  auto increment = [c, derivative](double x, double h) {
    std::vector<double> shifted(c.size(), 0.0);
    double factorial = 1.0;
    for (std::size_t k = 1; k < c.size(); ++k) {
      factorial *= static_cast<double>(k);
      shifted[k] = derivative(x, static_cast<int>(k)) / factorial;
    }
    return horner(shifted, h);
  };
  return {"polynomial", [c](double y) { return horner(c, y); }, derivative, increment};
}

inline ScalarFunction exp_function(double a) {
  return {"exp", [a](double y) { return std::exp(a * y); },
          [a](double y, int k) { return std::pow(a, k) * std::exp(a * y); },
          [a](double x, double h) { return std::exp(a * x) * std::expm1(a * h); }};
}

/// sin(a y + b); the k-th derivative is a^k sin(a y + b + k pi/2).
inline ScalarFunction sin_function(double a, double b) {
  return {"sin", [a, b](double y) { return std::sin(a * y + b); },
          [a, b](double y, int k) { return std::pow(a, k) * std::sin(a * y + b + k * std::numbers::pi / 2); },
          [a, b](double x, double h) { return 2.0 * std::cos(a * x + b + a * h / 2) * std::sin(a * h / 2); }};
}

// ---------------------------------------------------------------- order-m development

/// Coefficients 1..m of the truncated series of t -> f(x + p(t)) - f(x),
/// obtained by composing the Taylor series of f at x with p.
inline std::vector<double> truncated_development(const ScalarFunction& f, double x, const Polynomial& p, int m) {
  const auto pc = p.as_double();
  auto mul = [m](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(m + 1, 0.0);
    for (int i = 0; i <= m; ++i)
      for (int j = 0; i + j <= m; ++j) c[i + j] += a[i] * b[j];
    return c;
  };
  std::vector<double> base(m + 1, 0.0);
  for (int k = 1; k <= m && k < static_cast<int>(pc.size()); ++k) base[k] = pc[k];
  std::vector<double> power(m + 1, 0.0), q(m + 1, 0.0);
  power[0] = 1.0;
  double factorial = 1.0;
  for (int k = 1; k <= m; ++k) {
    power = mul(power, base);
    factorial *= k;
    const double coef = f.derivative(x, k) / factorial;
    for (int i = 0; i <= m; ++i) q[i] += coef * power[i];
  }
  return q;  // q[0] == 0
}

struct PolyDerivabilityVerdict {
  std::vector<double> expected;   // analytic truncation, index = degree
  std::vector<double> empirical;  // fitted from the image arc
  double max_coefficient_error;
  std::size_t tail_checked;
  std::size_t tail_outside;  // image terms outside some generator of the expected filter
  bool match;
};

/// Pushes the arc sequence of mu_{x,p} through id x f in the mixed product
/// and compares the image with the filter of the analytic truncation q:
/// (i) a least-squares fit of the image arc recovers q's coefficients,
/// (ii) the image tail lies in generators of mu_{(x1, f(x2)), q}.
/// Increments are taken through ScalarFunction::delta to avoid cancellation.
inline PolyDerivabilityVerdict check_poly_derivable(const ScalarFunction& f, double x, const Polynomial& p, int m,
                                                    double tol = 1e-5) {
  validate_polynomial(p, m);
  PolyDerivabilityVerdict v{};
  v.expected = truncated_development(f, x, p, m);
  double scale = 0.0;
  for (int k = 1; k <= m; ++k) scale = std::max(scale, std::abs(v.expected[k]));
  if (scale < 1e-14) throw Error(ErrorCode::TrivialDevelopment, "order-" + std::to_string(m) + " development vanishes");

  const auto pc = p.as_double();
  auto image = [&](double t) { return f.delta(x, horner(pc, t)); };

  // (i) fit degree m+4 on Chebyshev nodes of [0, tau] in scaled variable
  const int deg = m + 4, nodes = 64;
  const double tau = 0.02;
  Eigen::MatrixXd V(nodes, deg);
  Eigen::VectorXd rhs(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double s = 0.5 * (1 - std::cos(std::numbers::pi * (i + 0.5) / nodes));
    for (int k = 1; k <= deg; ++k) V(i, k - 1) = std::pow(s, k);
    rhs[i] = image(s * tau);
  }
  const Eigen::VectorXd sol = V.colPivHouseholderQr().solve(rhs);
  v.empirical.assign(m + 1, 0.0);
  v.max_coefficient_error = 0.0;
  for (int k = 1; k <= m; ++k) {
    v.empirical[k] = sol[k - 1] / std::pow(tau, k);
    v.max_coefficient_error = std::max(v.max_coefficient_error, std::abs(v.empirical[k] - v.expected[k]));
  }

  // (ii) generator test on the image tail
  const MixedProductSpace s{m};
  std::vector<double> qd(v.expected.begin(), v.expected.end());
  static const double eps_grid[] = {0.5, 0.05};
  static const double lambda_grid[] = {0.5, 0.1, 0.02};
  for (int h = 24; h <= 48; ++h) {
    const double t = std::ldexp(1.0, -h);
    const double a = t, b = image(t);
    const double r = s.distance(Point::Zero(2), vec({a, b}));
    if (r == 0.0) continue;
    for (double eps : eps_grid)
      for (double lambda : lambda_grid) {
        ++v.tail_checked;
        const auto mn = mixed_arc_minimum(s, qd, a, b, eps, lambda * r, lambda * r);
        if (arc_verdict(mn, lambda * r) != Membership::inside) ++v.tail_outside;
      }
  }
  v.match = v.max_coefficient_error <= tol * std::max(1.0, scale) && v.tail_outside == 0;
  return v;
}

// ---------------------------------------------------------------- dimension

/// Box-counting estimate of the dimension of [0,1] under a metric on the
/// line: greedy covers by sets of diameter <= r over a fine grid, then a
/// least-squares slope of log N(r) against log(1/r).
inline double box_counting_dimension(const std::function<double(double, double)>& d, double r_min, double r_max,
                                     int scales = 12, std::size_t grid = std::size_t{1} << 18) {
  std::vector<double> lx, ly;
  for (int k = 0; k < scales; ++k) {
    const double r = r_min * std::pow(r_max / r_min, double(k) / (scales - 1));
    std::size_t count = 1;
    double start = 0.0;
    for (std::size_t i = 1; i <= grid; ++i) {
      const double x = double(i) / double(grid);
      if (d(start, x) > r) ++count, start = x;
    }
    lx.push_back(std::log(1.0 / r));
    ly.push_back(std::log(double(count)));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sx += lx[i], sy += ly[i], sxx += lx[i] * lx[i], sxy += lx[i] * ly[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Scale range where the grid resolves balls: r^m between 1e-4 and 1e-1.
inline double snowflake_box_dimension(int m) {
  require_exponent(m);
  return box_counting_dimension([m](double a, double b) { return snowflake_distance(m, a, b); },
                                std::pow(1e-4, 1.0 / m), std::pow(1e-1, 1.0 / m));
}

}  // namespace topoderiv
