#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topoderiv/error.hpp"
#include "topoderiv/flows.hpp"
#include "topoderiv/metric_filters.hpp"

namespace topoderiv {

// Named built-ins shared by the suites and the command line.

namespace detail {
inline Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}
}  // namespace detail

/// Ten nonlinear diffeomorphisms (onto their images) with analytic Jacobians.
inline std::vector<SmoothMap> nonlinear_diffeomorphisms() {
  using detail::mat2;
  std::vector<SmoothMap> maps;
  maps.push_back({"quadratic-shear", 2, [](const Point& p) { return vec({p[0] + p[1] * p[1], p[1]}); },
                  [](const Point& p) { return mat2(1, 2 * p[1], 0, 1); }});
  maps.push_back({"cubic-shear", 2, [](const Point& p) { return vec({p[0], p[1] + p[0] * p[0] * p[0]}); },
                  [](const Point& p) { return mat2(1, 0, 3 * p[0] * p[0], 1); }});
  maps.push_back({"sine-shear", 2, [](const Point& p) { return vec({p[0] + 0.5 * std::sin(p[1]), p[1]}); },
                  [](const Point& p) { return mat2(1, 0.5 * std::cos(p[1]), 0, 1); }});
  maps.push_back({"exp-first", 2, [](const Point& p) { return vec({std::exp(p[0]), p[1]}); },
                  [](const Point& p) { return mat2(std::exp(p[0]), 0, 0, 1); }});
  maps.push_back({"radial-twist", 2,
                  [](const Point& p) {
                    const double th = p.squaredNorm(), c = std::cos(th), s = std::sin(th);
                    return vec({c * p[0] - s * p[1], s * p[0] + c * p[1]});
                  },
                  [](const Point& p) {
                    const double th = p.squaredNorm(), c = std::cos(th), s = std::sin(th);
                    // R(th) + (R'(th) p) grad(th)^T
                    const double r0 = -s * p[0] - c * p[1], r1 = c * p[0] - s * p[1];
                    return mat2(c + 2 * p[0] * r0, -s + 2 * p[1] * r0, s + 2 * p[0] * r1, c + 2 * p[1] * r1);
                  }});
  maps.push_back({"henon", 2, [](const Point& p) { return vec({1 - 1.4 * p[0] * p[0] + p[1], 0.3 * p[0]}); },
                  [](const Point& p) { return mat2(-2.8 * p[0], 1, 0.3, 0); }});
  maps.push_back({"sinh", 2, [](const Point& p) { return vec({std::sinh(p[0]), std::sinh(p[1])}); },
                  [](const Point& p) { return mat2(std::cosh(p[0]), 0, 0, std::cosh(p[1])); }});
  maps.push_back({"cubic-diagonal", 2, [](const Point& p) { return vec({p[0] + p[0] * p[0] * p[0], p[1] + p[1] * p[1] * p[1]}); },
                  [](const Point& p) { return mat2(1 + 3 * p[0] * p[0], 0, 0, 1 + 3 * p[1] * p[1]); }});
  maps.push_back({"triangular-3d", 3, [](const Point& p) { return vec({p[0] + p[1] * p[2], p[1] + p[2] * p[2], p[2]}); },
                  [](const Point& p) {
                    Eigen::MatrixXd J(3, 3);
                    J << 1, p[2], p[1], 0, 1, 2 * p[2], 0, 0, 1;
                    return J;
                  }});
  maps.push_back({"exp-scale-3d", 3,
                  [](const Point& p) {
                    const double e = std::exp(p[2]);
                    return vec({p[0] * e, p[1] * e, p[2]});
                  },
                  [](const Point& p) {
                    const double e = std::exp(p[2]);
                    Eigen::MatrixXd J(3, 3);
                    J << e, 0, p[0] * e, 0, e, p[1] * e, 0, 0, 1;
                    return J;
                  }});
  return maps;
}

inline SmoothMap find_smooth_map(const std::string& name) {
  for (auto& m : nonlinear_diffeomorphisms())
    if (m.name == name) return m;
  throw Error(ErrorCode::ConfigInvalid, "unknown map '" + name + "'");
}

/// The bi-Lipschitz plane maps used for flow transport.
inline std::vector<PlaneMap> bilipschitz_plane_maps() {
  using detail::mat2;
  return {linear_plane_map(mat2(1, 0.8, 0, 1), "linear-shear"), linear_plane_map(mat2(2, 1, 0, 1), "linear-upper"),
          sine_shear_map(0.5), cubic_shear_map(0.2), linear_plane_map(mat2(0.5, -1, 1, 0.5), "rotation-scale")};
}

inline PlaneMap find_plane_map(const std::string& name) {
  if (name == "identity") return identity_plane_map();
  if (name == "collapse") return collapse_map();
  for (auto& m : bilipschitz_plane_maps())
    if (m.name == name) return m;
  throw Error(ErrorCode::ConfigInvalid, "unknown plane map '" + name + "'");
}

/// A flow with the region its conditions are sampled on. Translation uses the
/// disc of radius 2; rotation and scaling fix the origin, so their region is
/// the ring 1/2 <= |x| <= 2.
struct FlowCase {
  Flow flow;
  Region region;
};

inline std::vector<FlowCase> standard_flows() {
  return {{translation_flow(vec({1, 0})), annulus(0.0, 2.0)},
          {rotation_flow(), annulus(0.5, 2.0)},
          {scaling_flow(), annulus(0.5, 2.0)}};
}

inline FlowCase find_flow(const std::string& name) {
  for (auto& c : standard_flows())
    if (c.flow.name == name) return c;
  throw Error(ErrorCode::ConfigInvalid, "unknown flow '" + name + "'");
}

}  // namespace topoderiv
