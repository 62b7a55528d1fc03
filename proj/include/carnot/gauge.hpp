#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "carnot/group.hpp"
#include "carnot/util.hpp"

namespace carnot {

// A homogeneous norm on a fixed GroupSpec, with optional analytic horizontal
// gradient and a coordinate bounding box for its balls.
struct NormSpec {
  std::string name;
  std::function<double(const Point&)> eval;
  std::function<HVec(const Point&)> grad;  // empty when only finite differences are available
  std::function<Point(const Point&)> eucl_grad;  // full coordinate gradient, used for smoothed radial fields
  std::function<Box(double)> bounding_box;
  bool rotation_invariant = false;
};

// --- Cygan-Koranyi norm on H^1 -------------------------------------------

inline double koranyi_norm(const Point& x) {
  const double s = x[0] * x[0] + x[1] * x[1];
  return std::pow(s * s + 16.0 * x[2] * x[2], 0.25);
}

// Closed-form horizontal gradient; undefined at the origin. Vanishes on the
// vertical axis, with |grad N| = sqrt(x1^2+x2^2)/N elsewhere.
inline HVec koranyi_grad(const Point& x) {
  const double nx = koranyi_norm(x);
  if (nx == 0.0) throw std::domain_error("koranyi_grad: undefined at the origin");
  const double s = x[0] * x[0] + x[1] * x[1];
  const double n3 = nx * nx * nx;
  HVec g;
  g[0] = (s * x[0] - 4.0 * x[1] * x[2]) / n3;
  g[1] = (s * x[1] + 4.0 * x[0] * x[2]) / n3;
  return g;
}

inline NormSpec make_koranyi_norm() {
  NormSpec n;
  n.name = "koranyi";
  n.eval = koranyi_norm;
  n.grad = koranyi_grad;
  n.eucl_grad = [](const Point& x) {
    const double nx = koranyi_norm(x);
    if (nx == 0.0) throw std::domain_error("koranyi eucl_grad: undefined at the origin");
    const double s = x[0] * x[0] + x[1] * x[1];
    const double n3 = nx * nx * nx;
    Point g;
    g[0] = s * x[0] / n3;
    g[1] = s * x[1] / n3;
    g[2] = 8.0 * x[2] / n3;
    return g;
  };
  n.bounding_box = [](double r) {
    Box b;
    b.n = 3;
    b.lo = {-r, -r, -r * r / 4.0};
    b.hi = {r, r, r * r / 4.0};
    return b;
  };
  n.rotation_invariant = true;
  return n;
}

// --- norms on Euclidean groups --------------------------------------------

inline NormSpec make_euclidean_norm(int dim) {
  NormSpec n;
  n.name = "euclidean";
  n.eval = [dim](const Point& x) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return std::sqrt(s);
  };
  n.grad = [dim, eval = n.eval](const Point& x) {
    const double nx = eval(x);
    if (nx == 0.0) throw std::domain_error("euclidean grad: undefined at the origin");
    HVec g;
    for (int i = 0; i < dim; ++i) g[i] = x[i] / nx;
    return g;
  };
  n.eucl_grad = [dim, eval = n.eval](const Point& x) {
    const double nx = eval(x);
    if (nx == 0.0) throw std::domain_error("euclidean eucl_grad: undefined at the origin");
    Point g;
    for (int i = 0; i < dim; ++i) g[i] = x[i] / nx;
    return g;
  };
  n.bounding_box = [dim](double r) {
    Box b;
    b.n = dim;
    for (int i = 0; i < dim; ++i) {
      b.lo[static_cast<std::size_t>(i)] = -r;
      b.hi[static_cast<std::size_t>(i)] = r;
    }
    return b;
  };
  n.rotation_invariant = true;
  return n;
}

// Anisotropic l^q norm on a Euclidean group, q >= 2 even recommended so the
// gradient stays smooth off the origin.
inline NormSpec make_lq_norm(int dim, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq norm: q must be >= 1");
  NormSpec n;
  n.name = "l" + std::to_string(q);
  n.eval = [dim, q](const Point& x) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += std::pow(std::abs(x[i]), q);
    return std::pow(s, 1.0 / q);
  };
  n.grad = [dim, q, eval = n.eval](const Point& x) {
    const double nx = eval(x);
    if (nx == 0.0) throw std::domain_error("lq grad: undefined at the origin");
    HVec g;
    for (int i = 0; i < dim; ++i) {
      const double a = std::abs(x[i]);
      g[i] = (a == 0.0) ? 0.0 : std::copysign(std::pow(a, q - 1.0), x[i]) * std::pow(nx, 1.0 - q);
    }
    return g;
  };
  n.eucl_grad = [dim, q, eval = n.eval](const Point& x) {
    const double nx = eval(x);
    if (nx == 0.0) throw std::domain_error("lq eucl_grad: undefined at the origin");
    Point g;
    for (int i = 0; i < dim; ++i) {
      const double a = std::abs(x[i]);
      g[i] = (a == 0.0) ? 0.0 : std::copysign(std::pow(a, q - 1.0), x[i]) * std::pow(nx, 1.0 - q);
    }
    return g;
  };
  n.bounding_box = [dim](double r) {
    Box b;
    b.n = dim;
    for (int i = 0; i < dim; ++i) {
      b.lo[static_cast<std::size_t>(i)] = -r;
      b.hi[static_cast<std::size_t>(i)] = r;
    }
    return b;
  };
  n.rotation_invariant = false;
  return n;
}

// Smooth gauge for generic step-2 groups:
//   N(x) = (sum_hor x_i^4 + sum_vert x_i^2)^{1/4}.
// Homogeneous by construction; the triangle inequality is certified only by
// sampling (norm_diagnostics).
inline NormSpec make_smooth_gauge(const GroupSpec& g) {
  if (g.step() != 2) throw std::invalid_argument("smooth gauge: step-2 groups only");
  const int n = g.n();
  const int m1 = g.m1();
  NormSpec spec;
  spec.name = "gauge4";
  spec.eval = [n, m1](const Point& x) {
    double s = 0.0;
    for (int i = 0; i < m1; ++i) s += x[i] * x[i] * x[i] * x[i];
    for (int i = m1; i < n; ++i) s += x[i] * x[i];
    return std::pow(s, 0.25);
  };
  spec.eucl_grad = [n, m1, eval = spec.eval](const Point& x) {
    const double nx = eval(x);
    if (nx == 0.0) throw std::domain_error("gauge4 eucl_grad: undefined at the origin");
    const double n3 = nx * nx * nx;
    Point g;
    for (int i = 0; i < m1; ++i) g[i] = x[i] * x[i] * x[i] / n3;
    for (int i = m1; i < n; ++i) g[i] = 0.5 * x[i] / n3;
    return g;
  };
  spec.bounding_box = [n, m1](double r) {
    Box b;
    b.n = n;
    for (int i = 0; i < n; ++i) {
      const double half = (i < m1) ? r : r * r;
      b.lo[static_cast<std::size_t>(i)] = -half;
      b.hi[static_cast<std::size_t>(i)] = half;
    }
    return b;
  };
  spec.rotation_invariant = false;
  return spec;
}

// --- gradient resolution ---------------------------------------------------

// Componentwise X_derivative of N; requires x to sit well away from the
// origin relative to the step.
inline HVec grad_norm_fd(const GroupSpec& g, const NormSpec& norm, const Point& x, double step = 1e-5) {
  if (!(norm.eval(x) > 10.0 * step)) throw std::domain_error("grad_norm_fd: too close to the origin");
  HVec v;
  for (int i = 0; i < g.m1(); ++i) v[i] = g.X_derivative(norm.eval, i, x, step);
  return v;
}

// Analytic gradient when present, finite differences otherwise.
inline HVec grad_norm(const GroupSpec& g, const NormSpec& norm, const Point& x) {
  if (norm.grad) return norm.grad(x);
  return grad_norm_fd(g, norm, x);
}

// --- diagnostics -----------------------------------------------------------

struct NormDiagnostics {
  int samples = 0;
  double min_grad_sphere = 0.0;  // min |grad N| over unit-sphere samples
  double max_grad_sphere = 0.0;
  int triangle_violations = 0;
  double max_symmetry_error = 0.0;
  double max_homogeneity_error = 0.0;
};

inline NormDiagnostics norm_diagnostics(const GroupSpec& g, const NormSpec& norm, int samples,
                                        std::uint64_t seed) {
  NormDiagnostics d;
  d.samples = samples;
  d.min_grad_sphere = std::numeric_limits<double>::infinity();
  const Box box = norm.bounding_box(1.0);
  std::uint64_t ctr = 0;
  for (int s = 0; s < samples; ++s) {
    // sphere sample: normalize a random ball point to N = 1
    Point x;
    double nx = 0.0;
    do {
      x = uniform_in_box(box, seed, ctr++);
      nx = norm.eval(x);
    } while (nx < 1e-8 || nx > 1.0);
    const Point y = g.dilate(1.0 / nx, x);
    const double gn = grad_norm(g, norm, y).norm(g.m1());
    d.min_grad_sphere = std::min(d.min_grad_sphere, gn);
    d.max_grad_sphere = std::max(d.max_grad_sphere, gn);

    const Point a = uniform_in_box(box, seed ^ 0x5eedULL, ctr);
    const Point b = uniform_in_box(box, seed ^ 0xface5ULL, ctr);
    if (norm.eval(g.multiply(a, b)) > norm.eval(a) + norm.eval(b) + 1e-12) ++d.triangle_violations;
    d.max_symmetry_error = std::max(d.max_symmetry_error, std::abs(norm.eval(g.inverse(a)) - norm.eval(a)));
    const double lambda = 0.25 + 3.0 * uniform01(seed ^ 0xddULL, ctr);
    d.max_homogeneity_error = std::max(
        d.max_homogeneity_error, std::abs(norm.eval(g.dilate(lambda, a)) - lambda * norm.eval(a)));
  }
  return d;
}

}  // namespace carnot
