#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "carnot/gauge.hpp"
#include "carnot/group.hpp"
#include "carnot/util.hpp"

namespace carnot {

// A test function with exact Euclidean partials. Indicator fields carry no
// gradient (smooth = false) and must not reach frame_pullback.
struct ScalarField {
  std::string name;
  std::function<double(const Point&)> eval;
  std::function<Point(const Point&)> eucl_grad;
  Box support_box;
  bool smooth = true;
};

// X_i f(x) = <X_i(x), grad f(x)>, exact when the partials are exact.
inline HVec frame_pullback(const GroupSpec& g, const ScalarField& f, const Point& x) {
  if (!f.smooth || !f.eucl_grad) throw std::domain_error("frame_pullback: field has no gradient");
  const Point df = f.eucl_grad(x);
  HVec v;
  for (int i = 0; i < g.m1(); ++i) {
    const Point col = g.frame_column(x, i);
    double s = 0.0;
    for (int j = 0; j < g.n(); ++j) s += col[j] * df[j];
    v[i] = s;
  }
  return v;
}

namespace detail {

// s^2(x) = sum_i ((x_i - c_i)/radius^{w_i})^2 and its partials; the bump is
// exp(-1/(1-s^2)) inside s < 1.
struct BumpCore {
  int n;
  Point center;
  std::array<double, kMaxDim> halfwidth;

  double s2(const Point& x) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = (x[i] - center[i]) / halfwidth[static_cast<std::size_t>(i)];
      s += d * d;
    }
    return s;
  }

  double value(const Point& x) const {
    const double s = s2(x);
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s));
  }

  Point gradient(const Point& x) const {
    Point g;
    const double s = s2(x);
    if (s >= 1.0) return g;
    const double u = 1.0 - s;
    const double f = std::exp(-1.0 / u);
    const double chain = -f / (u * u);
    for (int i = 0; i < n; ++i) {
      const double hw = halfwidth[static_cast<std::size_t>(i)];
      g[i] = chain * 2.0 * (x[i] - center[i]) / (hw * hw);
    }
    return g;
  }
};

inline BumpCore make_bump_core(const GroupSpec& g, const Point& center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump: radius must be positive");
  BumpCore core;
  core.n = g.n();
  core.center = center;
  for (int i = 0; i < g.n(); ++i) {
    double hw = radius;
    for (int w = 1; w < g.weight(i); ++w) hw *= radius;
    core.halfwidth[static_cast<std::size_t>(i)] = hw;
  }
  return core;
}

inline Box core_box(const BumpCore& core) {
  Box b;
  b.n = core.n;
  for (int i = 0; i < core.n; ++i) {
    b.lo[static_cast<std::size_t>(i)] = core.center[i] - core.halfwidth[static_cast<std::size_t>(i)];
    b.hi[static_cast<std::size_t>(i)] = core.center[i] + core.halfwidth[static_cast<std::size_t>(i)];
  }
  return b;
}

}  // namespace detail

// Smooth compactly supported bump; value e^{-1} at the center, zero outside
// the weighted box center +- radius^{w_i}.
inline ScalarField bump(const GroupSpec& g, const Point& center, double radius) {
  const detail::BumpCore core = detail::make_bump_core(g, center, radius);
  ScalarField f;
  f.name = "bump";
  f.eval = [core](const Point& x) { return core.value(x); };
  f.eucl_grad = [core](const Point& x) { return core.gradient(x); };
  f.support_box = detail::core_box(core);
  return f;
}

// Linear form in the horizontal coordinates times a cutoff normalized to 1 at
// the origin, so the horizontal gradient at 0 is exactly a.
inline ScalarField poly_cutoff(const GroupSpec& g, const HVec& a, double radius) {
  const detail::BumpCore core = detail::make_bump_core(g, Point{}, radius);
  const int m1 = g.m1();
  const double scale = std::exp(1.0);  // cutoff(0) = 1
  ScalarField f;
  f.name = "poly_cutoff";
  f.eval = [core, a, m1, scale](const Point& x) {
    double lin = 0.0;
    for (int i = 0; i < m1; ++i) lin += a[i] * x[i];
    return lin * scale * core.value(x);
  };
  f.eucl_grad = [core, a, m1, scale](const Point& x) {
    double lin = 0.0;
    for (int i = 0; i < m1; ++i) lin += a[i] * x[i];
    const double cut = scale * core.value(x);
    Point grad = core.gradient(x);
    Point out;
    for (int i = 0; i < core.n; ++i) {
      out[i] = lin * scale * grad[i];
      if (i < m1) out[i] += a[i] * cut;
    }
    return out;
  };
  f.support_box = detail::core_box(core);
  return f;
}

// Indicator of the N-ball B(center, r); no gradient.
inline ScalarField ball_indicator(const GroupSpec& g, const NormSpec& norm, const Point& center,
                                  double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball_indicator: radius must be positive");
  ScalarField f;
  f.name = "ball_indicator";
  f.smooth = false;
  f.eval = [g, norm, center, r](const Point& x) {
    return norm.eval(g.multiply(g.inverse(center), x)) < r ? 1.0 : 0.0;
  };
  Box pt;
  pt.n = g.n();
  for (int i = 0; i < g.n(); ++i) {
    pt.lo[static_cast<std::size_t>(i)] = center[i];
    pt.hi[static_cast<std::size_t>(i)] = center[i];
  }
  f.support_box = g.thicken(pt, norm.bounding_box(r));
  return f;
}

namespace detail {

// C-infinity step: 1 for t <= -1, 0 for t >= 1.
inline double smooth_step(double t) {
  if (t <= -1.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double w = std::exp(-1.0 / (1.0 - t));   // ~ distance to +1
  const double v = std::exp(-1.0 / (1.0 + t));   // ~ distance to -1
  return w / (w + v);
}

inline double smooth_step_deriv(double t) {
  if (t <= -1.0 || t >= 1.0) return 0.0;
  const double w = std::exp(-1.0 / (1.0 - t));
  const double v = std::exp(-1.0 / (1.0 + t));
  const double dw = -w / ((1.0 - t) * (1.0 - t));
  const double dv = v / ((1.0 + t) * (1.0 + t));
  return (dw * v - w * dv) / ((w + v) * (w + v));
}

}  // namespace detail

// Smoothed companion of ball_indicator centered at the origin:
//   f_sigma(x) = eta((N(x) - r)/sigma),
// equal to 1 on B(0, r - sigma) and 0 outside B(0, r + sigma). Requires the
// norm's full coordinate gradient.
inline ScalarField smoothed_ball_indicator(const GroupSpec& g, const NormSpec& norm, double r,
                                           double sigma) {
  if (!(r > 0.0 && sigma > 0.0 && sigma < r)) throw std::invalid_argument("smoothed_ball_indicator: need 0 < sigma < r");
  if (!norm.eucl_grad) throw std::invalid_argument("smoothed_ball_indicator: norm lacks a coordinate gradient");
  ScalarField f;
  f.name = "smoothed_ball_indicator";
  f.eval = [norm, r, sigma](const Point& x) {
    return detail::smooth_step((norm.eval(x) - r) / sigma);
  };
  f.eucl_grad = [norm, r, sigma](const Point& x) {
    const double nx = norm.eval(x);
    const double t = (nx - r) / sigma;
    Point out;
    if (t <= -1.0 || t >= 1.0) return out;
    const double chain = detail::smooth_step_deriv(t) / sigma;
    const Point dn = norm.eucl_grad(x);
    for (int i = 0; i < kMaxDim; ++i) out.c[static_cast<std::size_t>(i)] = chain * dn.c[static_cast<std::size_t>(i)];
    return out;
  };
  Box pt;
  pt.n = g.n();
  f.support_box = g.thicken(pt, norm.bounding_box(r + sigma));
  return f;
}

}  // namespace carnot
