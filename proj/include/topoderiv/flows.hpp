#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "topoderiv/error.hpp"
#include "topoderiv/geometry.hpp"
#include "topoderiv/metric_filters.hpp"
#include "topoderiv/pair_calculus.hpp"
#include "topoderiv/sampling.hpp"

namespace topoderiv {

// ---------------------------------------------------------------- flows

struct Flow {
  std::string name;
  double a;  // domain [a,b], a < 0 < b
  double b;
  std::function<Point(double, const Point&)> at;

  void require_time(double t) const {
    if (t < a - 1e-15 || t > b + 1e-15)
      throw Error(ErrorCode::DomainViolation, name + ": time " + std::to_string(t) + " outside the flow domain");
  }
};

inline Flow translation_flow(const Point& u, double a = -1.0, double b = 1.0) {
  return {"translation", a, b, [u](double t, const Point& x) -> Point { return x + t * u; }};
}

/// Rotation about the origin at angular speed omega.
inline Flow rotation_flow(double omega = 1.0, double a = -1.0, double b = 1.0) {
  return {"rotation", a, b, [omega](double t, const Point& x) -> Point {
            const double c = std::cos(omega * t), s = std::sin(omega * t);
            return vec({c * x[0] - s * x[1], s * x[0] + c * x[1]});
          }};
}

inline Flow scaling_flow(double rate = 1.0, double a = -1.0, double b = 1.0) {
  return {"scaling", a, b, [rate](double t, const Point& x) -> Point { return std::exp(rate * t) * x; }};
}

/// x -> exp(tG) x.
inline Flow linear_flow(const Eigen::MatrixXd& G, double a = -1.0, double b = 1.0) {
  return {"linear", a, b, [G](double t, const Point& x) -> Point { return (t * G).exp() * x; }};
}

/// F-bar(t,x) = F(-t,x) on [-b,-a].
inline Flow reversed(const Flow& F) {
  auto f = F.at;
  return {F.name + "-reversed", -F.b, -F.a, [f](double t, const Point& x) { return f(-t, x); }};
}

// ---------------------------------------------------------------- regions and maps

struct Region {
  std::string label;
  std::function<Point(Rng&)> sample;
};

/// Planar annulus inner <= |x - center| <= outer (inner = 0 gives a disc).
inline Region annulus(double inner, double outer, Point center = Point::Zero(2)) {
  return {"annulus", [=](Rng& rng) -> Point {
            const double r = std::sqrt(rng.uniform(inner * inner, outer * outer));
            return center + r * planar(rng.uniform(0.0, 2.0 * std::numbers::pi));
          }};
}

struct PlaneMap {
  std::string name;
  std::function<Point(const Point&)> f;
  std::function<Point(const Point&)> inverse;  // may be empty
};

inline Region mapped(const Region& r, const PlaneMap& m) {
  auto s = r.sample;
  auto f = m.f;
  return {r.label + "->" + m.name, [s, f](Rng& rng) { return f(s(rng)); }};
}

inline PlaneMap identity_plane_map() {
  return {"identity", [](const Point& p) { return p; }, [](const Point& p) { return p; }};
}

inline PlaneMap linear_plane_map(const Eigen::MatrixXd& A, std::string name = "linear") {
  const Eigen::MatrixXd Ainv = A.inverse();
  return {std::move(name), [A](const Point& p) -> Point { return A * p; },
          [Ainv](const Point& p) -> Point { return Ainv * p; }};
}

/// (x + k sin y, y), bi-Lipschitz for |k| < 1.
inline PlaneMap sine_shear_map(double k) {
  return {"sine-shear", [k](const Point& p) { return vec({p[0] + k * std::sin(p[1]), p[1]}); },
          [k](const Point& p) { return vec({p[0] - k * std::sin(p[1]), p[1]}); }};
}

/// (x, y + k x^3), bi-Lipschitz on bounded regions.
inline PlaneMap cubic_shear_map(double k) {
  return {"cubic-shear", [k](const Point& p) { return vec({p[0], p[1] + k * p[0] * p[0] * p[0]}); },
          [k](const Point& p) { return vec({p[0], p[1] - k * p[0] * p[0] * p[0]}); }};
}

/// Projection onto the first axis; Lipschitz, not bi-Lipschitz.
inline PlaneMap collapse_map() {
  return {"collapse", [](const Point& p) { return vec({p[0], 0.0}); }, {}};
}

inline PlaneMap compose(const PlaneMap& g, const PlaneMap& f) {
  auto gf = g.f, ff = f.f, gi = g.inverse, fi = f.inverse;
  PlaneMap out{g.name + "o" + f.name, [gf, ff](const Point& p) { return gf(ff(p)); }, {}};
  if (gi && fi) out.inverse = [gi, fi](const Point& p) { return fi(gi(p)); };
  return out;
}

struct BiLipschitzEstimate {
  double lower;
  double upper;
  double constant() const { return std::max(upper, lower > 0 ? 1.0 / lower : std::numeric_limits<double>::infinity()); }
};

/// Difference quotients |f(x)-f(y)|/|x-y| for pairs at scales 1e-4..0.5 in the region.
inline BiLipschitzEstimate estimate_bilipschitz(const PlaneMap& m, const Region& region, std::size_t samples,
                                                std::uint64_t seed) {
  Rng rng(derive_seed(seed, "bilipschitz:" + m.name));
  BiLipschitzEstimate e{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < samples; ++i) {
    const Point x = region.sample(rng);
    const Point y = x + rng.unit_vector(2) * rng.log_uniform(1e-4, 0.5);
    const double q = (m.f(x) - m.f(y)).norm() / (x - y).norm();
    e.lower = std::min(e.lower, q);
    e.upper = std::max(e.upper, q);
    // infinitesimal quotients: singular values of a central-difference Jacobian,
    // which catch directions the random pairs miss
    Eigen::Matrix2d J;
    constexpr double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      const Point dk = Point::Unit(2, k) * h;
      J.col(k) = (m.f(x + dk) - m.f(x - dk)) / (2 * h);
    }
    const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(J).singularValues();
    e.lower = std::min(e.lower, sv(1));
    e.upper = std::max(e.upper, sv(0));
  }
  return e;
}

inline constexpr double kInverseResidual = 1e-9;

/// (f*F)(t,x) = f(F(t, f^-1(x))); the inverse is checked on the image of the region.
inline Flow pushforward_flow(const PlaneMap& m, const Flow& F, const Region& region, std::uint64_t seed = 0,
                             std::size_t samples = 1000) {
  if (!m.inverse) throw Error(ErrorCode::InverseResidualTooLarge, m.name + " has no inverse");
  Rng rng(derive_seed(seed, "inverse:" + m.name));
  for (std::size_t i = 0; i < samples; ++i) {
    const Point x = m.f(region.sample(rng));
    const double r = (m.f(m.inverse(x)) - x).norm();
    if (!(r <= kInverseResidual * (1.0 + x.norm())))
      throw Error(ErrorCode::InverseResidualTooLarge, m.name + ": f(f^-1(x)) misses x by " + std::to_string(r));
  }
  auto f = m.f, finv = m.inverse;
  auto Fa = F.at;
  return {m.name + "*" + F.name, F.a, F.b, [f, finv, Fa](double t, const Point& x) { return f(Fa(t, finv(x))); }};
}

// ---------------------------------------------------------------- flow pair filters

/// Tube test d(y, F([0,eps],x)) < mu d(x,y); sign minus uses [-eps,0].
inline Membership flow_pair_test(const Flow& F, Sign sign, double eps, double mu, const Point& x, const Point& y,
                                 const ArcOptions& opt = {}) {
  const double r = (y - x).norm();
  if (r == 0.0) return Membership::outside;
  const double t0 = sign == Sign::plus ? 0.0 : -eps;
  const double t1 = sign == Sign::plus ? eps : 0.0;
  F.require_time(t0);
  F.require_time(t1);
  auto orbit = [&](double t) { return F.at(t, x); };
  return tube_verdict(arc_distance(orbit, t0, t1, y, euclidean, opt), mu * r);
}

struct FlowPairGenerator {
  Flow flow;
  Sign sign;
  double eps;
  double mu;
};

inline FlowPairGenerator make_flow_generator(const Flow& F, Sign sign, double eps, double mu) {
  if (!(mu > 0.0 && mu < 1.0) || !(eps > 0.0)) throw Error(ErrorCode::InvalidGenerator, "need eps > 0, mu in (0,1)");
  F.require_time(sign == Sign::plus ? eps : -eps);
  return {F, sign, eps, mu};
}

inline bool flow_pair_contains(const FlowPairGenerator& g, const Point& x, const Point& y) {
  return flow_pair_test(g.flow, g.sign, g.eps, g.mu, x, y) == Membership::inside;
}

inline GeneratedFilter<PointPair> flow_filter(const Flow& F, Sign sign) {
  return {FilterKind::flow, F.name + (sign == Sign::plus ? "+" : "-"),
          [F, sign](const PointPair& p, double eps, double mu) { return flow_pair_test(F, sign, eps, mu, p.first, p.second); }};
}

/// Member of V+(F,eps,mu) by construction: y = F(s*lambda, x) + rho w with
/// rho(1+mu) < mu |F(lambda,x) - x|, so d(y, orbit) <= rho < mu d(x,y).
inline Point sample_flow_member(Rng& rng, const Flow& F, Sign sign, double eps, double mu, const Point& x,
                                double* lambda_out = nullptr) {
  const double lambda = eps * rng.log_uniform(1e-3, 1.0);
  const Point q = F.at(sign == Sign::plus ? lambda : -lambda, x);
  const double rho = rng.uniform(0.0, 0.99) * mu * (q - x).norm() / (1.0 + mu);
  if (lambda_out) *lambda_out = lambda;
  return q + rho * rng.unit_vector(static_cast<int>(x.size()));
}

// ---------------------------------------------------------------- conditions (a)-(e)

struct FlowCheckOptions {
  std::size_t samples = 2000;  // per condition
  std::size_t e_samples_per_cell = 40;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<double> m_times{0.0, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0};
  std::vector<double> radii{1e-1, 1e-2, 1e-4, 1e-6};
  std::vector<double> deltas{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 1e-5, 1e-6};
  std::vector<double> e_eps{1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<double> e_mu{0.4, 0.2, 0.1, 0.05};
  double max_C = 1e3;
};

struct RatioRow {
  double t;
  std::vector<double> upper;  // per radius
  std::vector<double> lower;
  double M;  // from the smallest radius
};

struct ConstantCell {
  double eps1, eps2, mu1, mu2;
  double C;
};

struct FlowConditionsReport {
  std::string flow;
  double identity_residual = 0;
  bool a_pass = false;
  std::vector<std::pair<double, double>> modulus;  // (delta, omega)
  bool b_pass = false;
  std::vector<double> radii;
  std::vector<RatioRow> ratios;  // +t and -t rows
  double M0 = 0;
  bool c_pass = false;
  double group_residual = 0;
  bool d_pass = false;
  std::vector<ConstantCell> cells;
  double C = 0;
  bool e_pass = false;

  bool ok() const { return a_pass && b_pass && c_pass && d_pass && e_pass; }

  /// sup M over table times with |t| <= s.
  double sup_M(double s, bool forward_only = false) const {
    double m = 1.0;
    for (const auto& r : ratios)
      if (std::abs(r.t) <= s + 1e-15 && (!forward_only || r.t >= 0)) m = std::max(m, r.M);
    return m;
  }
  /// Largest table delta whose modulus is <= bound.
  std::optional<double> delta_for(double bound) const {
    std::optional<double> best;
    for (const auto& [d, w] : modulus)
      if (w <= bound && (!best || d > *best)) best = d;
    return best;
  }
};

template <typename T, typename Fn>
T reduce_chunks(std::size_t samples, unsigned threads, Fn fn, T init, auto combine) {
  auto parts = run_chunks(chunk_count(samples), threads, fn);
  for (const auto& p : parts) init = combine(init, p);
  return init;
}

inline FlowConditionsReport check_flow_conditions(const Flow& F, const Region& region, const FlowCheckOptions& opt = {}) {
  if (!(F.a < 0.0 && 0.0 < F.b)) throw Error(ErrorCode::DomainViolation, "flow domain must contain 0 in its interior");
  if (opt.samples == 0) throw Error(ErrorCode::BudgetExhausted, "no samples");
  FlowConditionsReport rep;
  rep.flow = F.name;
  const std::string id = "flow:" + F.name + ":";
  auto maxf = [](double a, double b) { return std::max(a, b); };

  // (a)
  rep.identity_residual = reduce_chunks<double>(
      opt.samples, opt.threads,
      [&](std::size_t c) {
        Rng rng(derive_seed(opt.seed, id + "a", c));
        double r = 0;
        for (std::size_t i = 0; i < chunk_length(opt.samples, c); ++i) {
          const Point x = region.sample(rng);
          r = std::max(r, (F.at(0.0, x) - x).norm());
        }
        return r;
      },
      0.0, maxf);
  rep.a_pass = rep.identity_residual <= 1e-9;

  // (b) modulus of continuity of t -> F(t,x), uniform over sampled x
  for (double delta : opt.deltas) {
    if (2.0 * delta >= F.b - F.a) continue;
    const double w = reduce_chunks<double>(
        opt.samples, opt.threads,
        [&](std::size_t c) {
          Rng rng(derive_seed(opt.seed, id + "b:" + std::to_string(delta), c));
          double r = 0;
          for (std::size_t i = 0; i < chunk_length(opt.samples, c); ++i) {
            const Point x = region.sample(rng);
            // s = 0 is included since the recipes measure d(x, F(+-delta, x))
            const double s = i % 4 == 0 ? 0.0 : rng.uniform(F.a + delta, F.b - delta);
            const Point base = F.at(s, x);
            r = std::max({r, (F.at(std::min(s + delta, F.b), x) - base).norm(),
                          (F.at(std::max(s - delta, F.a), x) - base).norm()});
          }
          return r;
        },
        0.0, maxf);
    rep.modulus.emplace_back(delta, w);
  }
  std::sort(rep.modulus.begin(), rep.modulus.end());
  rep.b_pass = !rep.modulus.empty() && rep.modulus.front().second <= 1e-3;
  for (std::size_t i = 1; i < rep.modulus.size(); ++i)
    if (rep.modulus[i].second + 1e-15 < rep.modulus[i - 1].second) rep.b_pass = false;

  // (c) ratio d(F(t,x),F(t,y))/d(x,y) over shrinking d(x,y)
  rep.radii = opt.radii;
  std::vector<double> times;
  for (double t : opt.m_times) {
    if (t <= F.b) times.push_back(t);
    if (t > 0 && -t >= F.a) times.push_back(-t);
  }
  std::sort(times.begin(), times.end());
  rep.c_pass = true;
  for (double t : times) {
    RatioRow row{t, {}, {}, 0};
    for (double r : opt.radii) {
      using Pair = std::pair<double, double>;
      const Pair ext = reduce_chunks<Pair>(
          opt.samples, opt.threads,
          [&](std::size_t c) {
            Rng rng(derive_seed(opt.seed, id + "c:" + std::to_string(t) + ":" + std::to_string(r), c));
            Pair e{0.0, std::numeric_limits<double>::infinity()};
            for (std::size_t i = 0; i < chunk_length(opt.samples, c); ++i) {
              const Point x = region.sample(rng);
              const Point y = x + r * rng.unit_vector(2);
              const double q = (F.at(t, x) - F.at(t, y)).norm() / (x - y).norm();
              e.first = std::max(e.first, q);
              e.second = std::min(e.second, q);
            }
            return e;
          },
          Pair{0.0, std::numeric_limits<double>::infinity()},
          [](Pair a, Pair b) { return Pair{std::max(a.first, b.first), std::min(a.second, b.second)}; });
      row.upper.push_back(ext.first);
      row.lower.push_back(ext.second);
    }
    row.M = std::max(row.upper.back(), 1.0 / row.lower.back());
    if (!std::isfinite(row.M) || row.M > 1e6) rep.c_pass = false;
    if (t == 0.0) rep.M0 = row.M;
    rep.ratios.push_back(std::move(row));
  }
  if (std::abs(rep.M0 - 1.0) > 1e-3) rep.c_pass = false;

  // (d) group law
  rep.group_residual = reduce_chunks<double>(
      opt.samples, opt.threads,
      [&](std::size_t c) {
        Rng rng(derive_seed(opt.seed, id + "d", c));
        double r = 0;
        for (std::size_t i = 0; i < chunk_length(opt.samples, c); ++i) {
          const Point x = region.sample(rng);
          const double s = rng.uniform(F.a, F.b);
          const double lo = std::max(F.a, F.a - s), hi = std::min(F.b, F.b - s);
          const double t = rng.uniform(lo, hi);
          const Point lhs = F.at(s + t, x), rhs = F.at(s, F.at(t, x));
          r = std::max(r, (lhs - rhs).norm() / (1.0 + lhs.norm()));
        }
        return r;
      },
      0.0, maxf);
  rep.d_pass = rep.group_residual <= 1e-9;

  // (e) C over a grid of small (eps', eps'', mu', mu'')
  const Flow Fbar = reversed(F);
  for (double e1 : opt.e_eps)
    for (double e2 : opt.e_eps)
      for (double m1 : opt.e_mu)
        for (double m2 : opt.e_mu) {
          if (e1 > F.b || e2 > -F.a) continue;
          Rng rng(derive_seed(opt.seed, id + "e:" + std::to_string(e1) + ":" + std::to_string(e2) + ":" +
                                            std::to_string(m1) + ":" + std::to_string(m2)));
          double C = 1.0;
          for (std::size_t i = 0; i < opt.e_samples_per_cell; ++i) {
            const Point y = region.sample(rng);
            const Point z = sample_flow_member(rng, F, Sign::plus, e1, m1, y);
            const Point x = sample_flow_member(rng, Fbar, Sign::plus, e2, m2, y);
            const double dxz = (x - z).norm();
            if (dxz == 0.0) {
              C = std::numeric_limits<double>::infinity();
              continue;
            }
            C = std::max(C, ((x - y).norm() + (y - z).norm()) / dxz);
          }
          rep.cells.push_back({e1, e2, m1, m2, C});
          rep.C = std::max(rep.C, C);
        }
  rep.e_pass = !rep.cells.empty() && std::isfinite(rep.C) && rep.C <= opt.max_C;
  return rep;
}

// ---------------------------------------------------------------- recipes

struct RecipeReport {
  std::string recipe;
  std::vector<std::pair<std::string, double>> constants;  // named choices, in recipe order
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t inconclusive = 0;
  bool ok() const { return violations == 0 && inconclusive == 0; }
  double constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
      if (k == name) return v;
    throw Error(ErrorCode::ConfigInvalid, "no constant " + name);
  }
};

struct Tally {
  std::size_t samples = 0, violations = 0, inconclusive = 0;
};

inline RecipeReport finish(RecipeReport rep, const std::vector<Tally>& parts) {
  for (const auto& t : parts) {
    rep.samples += t.samples;
    rep.violations += t.violations;
    rep.inconclusive += t.inconclusive;
  }
  return rep;
}

inline void require_targets(const Flow& F, double eps, double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorCode::InvalidGenerator, "mu must lie in (0,1)");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidGenerator, "eps must be positive");
  F.require_time(eps);
  F.require_time(-eps);
}

/// Largest table time t > 0 with M <= 2 on [-t, t] (or [0,t]).
inline std::optional<double> lambda_zero(const FlowConditionsReport& rep, bool forward_only = false) {
  std::vector<double> ts;
  for (const auto& r : rep.ratios)
    if (r.t > 0) ts.push_back(r.t);
  std::sort(ts.begin(), ts.end());
  std::optional<double> best;
  for (double t : ts) {
    if (rep.sup_M(t, forward_only) > 2.0) break;
    best = t;
  }
  return best;
}

/// Pair (x,y) in V+(F-bar, eps', mu') implies (y,x) in V+(F, eps, mu) once
///   4mu' < min(1/2, mu), lambda0 with M <= 2 on [-lambda0, lambda0],
///   eps1 = eps(lambda0) from the ratio table, 2 sigma <= eps1,
///   eps_sigma with d(x, F(-eps_sigma, x)) <= sigma,
///   eps' = min(eps, eps_sigma, lambda0).
inline RecipeReport lemacon_construct(const Flow& F, const FlowConditionsReport& rep, const Region& region, double eps,
                                      double mu, std::size_t samples, std::uint64_t seed, unsigned threads = 1) {
  require_targets(F, eps, mu);
  RecipeReport out{"lemacon", {}, 0, 0, 0};
  const double mu1 = 0.9 * std::min(0.5, mu) / 4.0;
  const auto l0 = lambda_zero(rep);
  if (!l0) throw Error(ErrorCode::RecipeUnsatisfiable, "no lambda0 with M <= 2 in the ratio table");
  // eps1: largest radius at which every row with |t| <= lambda0 keeps
  // the ratio within [1/(2M), 2M]
  std::optional<double> eps1;
  for (std::size_t k = 0; k < rep.radii.size(); ++k) {
    bool fine = true;
    for (const auto& r : rep.ratios)
      if (std::abs(r.t) <= *l0 + 1e-15 && (r.upper[k] > 2 * r.M || r.lower[k] < 1 / (2 * r.M))) fine = false;
    if (fine && (!eps1 || rep.radii[k] > *eps1)) eps1 = rep.radii[k];
  }
  if (!eps1) throw Error(ErrorCode::RecipeUnsatisfiable, "no radius satisfies the ratio bounds");
  const double sigma = *eps1 / 2.0;
  const auto eps_sigma = rep.delta_for(sigma);
  if (!eps_sigma) throw Error(ErrorCode::RecipeUnsatisfiable, "modulus table never drops below sigma");
  const double eps_prime = std::min({eps, *eps_sigma, *l0});
  out.constants = {{"mu'", mu1}, {"lambda0", *l0}, {"eps1", *eps1}, {"sigma", sigma},
                   {"eps_sigma", *eps_sigma}, {"eps'", eps_prime}};

  const Flow Fbar = reversed(F);
  auto parts = run_chunks(chunk_count(samples), threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, "lemacon:" + F.name, c));
    Tally t;
    for (std::size_t i = 0; i < chunk_length(samples, c); ++i) {
      const Point x = region.sample(rng);
      const Point y = sample_flow_member(rng, Fbar, Sign::plus, eps_prime, mu1, x);
      ++t.samples;
      const auto m = flow_pair_test(F, Sign::plus, eps, mu, y, x);
      if (m == Membership::outside) ++t.violations;
      if (m == Membership::inconclusive) ++t.inconclusive;
    }
    return t;
  });
  return finish(std::move(out), parts);
}

/// V+(F, eps, mu) inside B(eps') with mu arbitrary and eps = eps0/2, where
/// d(x, F(lambda,x)) <= (1-mu) eps' for lambda < eps0. Every member y with
/// arc witness F(lambda,x) must satisfy d(x,y) < d(x,F(lambda,x))/(1-mu) < eps'.
inline RecipeReport step1_diagonal_check(const Flow& F, const FlowConditionsReport& rep, const Region& region,
                                         double eps_target, std::size_t samples, std::uint64_t seed,
                                         unsigned threads = 1, double mu = 0.5) {
  if (!(eps_target > 0.0)) throw Error(ErrorCode::InvalidGenerator, "target radius must be positive");
  if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorCode::InvalidGenerator, "mu must lie in (0,1)");
  const auto eps0 = rep.delta_for((1.0 - mu) * eps_target);
  if (!eps0) throw Error(ErrorCode::RecipeUnsatisfiable, "modulus table never drops below (1-mu) eps'");
  const double eps = *eps0 / 2.0;
  RecipeReport out{"step1", {{"mu", mu}, {"eps0", *eps0}, {"eps", eps}}, 0, 0, 0};
  auto parts = run_chunks(chunk_count(samples), threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, "step1:" + F.name, c));
    Tally t;
    // draw until the chunk's quota of member implications is met; blind
    // probes that miss do not count, so the attempt cap is generous
    const std::size_t quota = chunk_length(samples, c);
    for (std::size_t i = 0; t.samples < quota && i < 20 * quota; ++i) {
      const Point x = region.sample(rng);
      // constructed members, and every fourth sample a blind probe near x
      Point y = i % 4 == 3 ? Point(x + rng.unit_vector(2) * rng.uniform(0.0, 2.0 * eps_target))
                           : sample_flow_member(rng, F, Sign::plus, eps, mu, x);
      auto orbit = [&](double s) { return F.at(s, x); };
      const auto arc = arc_distance(orbit, 0.0, eps, y, euclidean);
      const double dxy = (x - y).norm();
      if (!(arc.distance < mu * dxy)) continue;  // not a member (probe missed)
      ++t.samples;
      const double dxc = (x - F.at(arc.parameter, x)).norm();
      if (!(dxy < dxc / (1.0 - mu)) || !(dxy < eps_target)) ++t.violations;
    }
    return t;
  });
  return finish(std::move(out), parts);
}

/// (x,y),(y,z) in V+(F, eps', mu') imply (x,z) in V+(F, eps, mu) with
/// 2eps' < eps, sup M on [0,eps'] <= 2, and 4 mu' C < mu.
inline constexpr double kMinAperture = 1e-4;

inline RecipeReport step3_composition_check(const Flow& F, const FlowConditionsReport& rep, const Region& region,
                                            double eps, double mu, std::size_t samples, std::uint64_t seed,
                                            unsigned threads = 1) {
  require_targets(F, eps, mu);
  const auto l0 = lambda_zero(rep, true);
  if (!l0) throw Error(ErrorCode::RecipeUnsatisfiable, "no forward time with M <= 2 in the ratio table");
  const double eps_prime = std::min(0.45 * eps, *l0);
  const double mu1 = 0.9 * mu / (4.0 * rep.C);
  if (mu1 < kMinAperture)
    throw Error(ErrorCode::RecipeUnsatisfiable, "required mu' = " + std::to_string(mu1) + " below the aperture floor " +
                                                    std::to_string(kMinAperture) + " (C = " + std::to_string(rep.C) + ")");
  RecipeReport out{"step3", {{"eps'", eps_prime}, {"mu'", mu1}, {"C", rep.C}, {"supM", rep.sup_M(eps_prime, true)}}, 0, 0, 0};
  auto parts = run_chunks(chunk_count(samples), threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, "step3:" + F.name, c));
    Tally t;
    for (std::size_t i = 0; i < chunk_length(samples, c); ++i) {
      const Point x = region.sample(rng);
      const Point y = sample_flow_member(rng, F, Sign::plus, eps_prime, mu1, x);
      const Point z = sample_flow_member(rng, F, Sign::plus, eps_prime, mu1, y);
      ++t.samples;
      const auto m = flow_pair_test(F, Sign::plus, eps, mu, x, z);
      if (m == Membership::outside) ++t.violations;
      if (m == Membership::inconclusive) ++t.inconclusive;
    }
    return t;
  });
  return finish(std::move(out), parts);
}

// ---------------------------------------------------------------- transport

struct FlowTransport {
  Commutation verdict = Commutation::commute;
  double L = 1;  // bi-Lipschitz constant used
  double mu_prime = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t inconclusive = 0;
};

inline constexpr double kMinBiLipschitzLower = 1e-6;

/// f^2 maps V+(F, eps, mu/L^2) into V+(f*F, eps, mu), and f^-1 maps
/// V+(f*F, eps, mu/L^2) into V+(F, eps, mu); both directions sampled.
inline FlowTransport check_flow_transport(const PlaneMap& m, const Flow& F, const Region& region, double eps, double mu,
                                          std::size_t samples, std::uint64_t seed, unsigned threads = 1) {
  require_targets(F, eps, mu);
  const auto bl = estimate_bilipschitz(m, region, 2000, seed);
  if (!(bl.lower >= kMinBiLipschitzLower) || !std::isfinite(bl.upper))
    throw Error(ErrorCode::NotBiLipschitz, m.name + ": lower difference quotient " + std::to_string(bl.lower));
  const Flow G = pushforward_flow(m, F, region, seed);
  const Region image = mapped(region, m);
  FlowTransport out;
  out.L = bl.constant() * 1.05;  // slack for the sampled estimate
  out.mu_prime = 0.9 * mu / (out.L * out.L);
  auto parts = run_chunks(chunk_count(samples), threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, "transport:" + m.name + ":" + F.name, c));
    Tally t;
    for (std::size_t i = 0; i < chunk_length(samples, c); ++i) {
      Membership r;
      if (i % 2 == 0) {
        const Point x = region.sample(rng);
        const Point y = sample_flow_member(rng, F, Sign::plus, eps, out.mu_prime, x);
        r = flow_pair_test(G, Sign::plus, eps, mu, m.f(x), m.f(y));
      } else {
        const Point x = image.sample(rng);
        const Point y = sample_flow_member(rng, G, Sign::plus, eps, out.mu_prime, x);
        r = flow_pair_test(F, Sign::plus, eps, mu, m.inverse(x), m.inverse(y));
      }
      ++t.samples;
      if (r == Membership::outside) ++t.violations;
      if (r == Membership::inconclusive) ++t.inconclusive;
    }
    return t;
  });
  for (const auto& t : parts) out.samples += t.samples, out.violations += t.violations, out.inconclusive += t.inconclusive;
  out.verdict = out.violations > 0      ? Commutation::counterexample
                : out.inconclusive > 0 ? Commutation::inconclusive
                                       : Commutation::commute;
  return out;
}

}  // namespace topoderiv
