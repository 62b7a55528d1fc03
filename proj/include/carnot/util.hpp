#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace carnot {

// Maximum topological dimension supported by the fixed-size point type.
inline constexpr int kMaxDim = 8;

struct Point {
  std::array<double, kMaxDim> c{};

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
};

// Coefficients in the orthonormal horizontal frame X_1..X_{m1}.
struct HVec {
  std::array<double, kMaxDim> c{};

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  double norm(int m1) const {
    double s = 0.0;
    for (int i = 0; i < m1; ++i) s += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)];
    return std::sqrt(s);
  }

  double dot(const HVec& o, int m1) const {
    double s = 0.0;
    for (int i = 0; i < m1; ++i) s += c[static_cast<std::size_t>(i)] * o.c[static_cast<std::size_t>(i)];
    return s;
  }
};

// Axis-aligned coordinate box.
struct Box {
  int n = 0;
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)];
    return v;
  }

  bool contains(const Point& p) const {
    for (int i = 0; i < n; ++i) {
      if (p[i] < lo[static_cast<std::size_t>(i)] || p[i] > hi[static_cast<std::size_t>(i)]) return false;
    }
    return true;
  }
};

// --- deterministic counter-based RNG -----------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0,1), fully determined by (seed, counter). Stateless, so
// results do not depend on evaluation order or thread decomposition.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t s = splitmix64(seed ^ splitmix64(counter));
  return static_cast<double>(s >> 11) * 0x1.0p-53;
}

inline Point uniform_in_box(const Box& b, std::uint64_t seed, std::uint64_t counter) {
  Point p;
  for (int i = 0; i < b.n; ++i) {
    const double u = uniform01(seed, counter * static_cast<std::uint64_t>(kMaxDim) + static_cast<std::uint64_t>(i));
    p[i] = b.lo[static_cast<std::size_t>(i)] + u * (b.hi[static_cast<std::size_t>(i)] - b.lo[static_cast<std::size_t>(i)]);
  }
  return p;
}

// --- reproducible summation ---------------------------------------------

// Pairwise sum; fixed association independent of any thread decomposition
// used to fill the buffer.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

// --- 1-D quadrature ------------------------------------------------------

namespace detail {
template <typename F>
double simpson(F&& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

template <typename F>
double adaptive_simpson_rec(F&& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson(f, a, m);
  const double right = simpson(f, m, b);
  const double delta = left + right - whole;
  // relative floor: stop once the panel is converged to near machine precision
  const double cut = std::max(tol, 1e-15 * std::abs(left + right));
  if (depth <= 0 || std::abs(delta) <= 15.0 * cut) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int max_depth = 40) {
  if (!(a < b)) return 0.0;
  return detail::adaptive_simpson_rec(f, a, b, detail::simpson(f, a, b), tol, max_depth);
}

// Adaptive Simpson over log-spaced panels; suited to integrands with a
// power-law singularity at the left endpoint.
template <typename F>
double log_panel_integrate(F&& f, double a, double b, double tol = 1e-10) {
  if (!(a < b)) return 0.0;
  double total = 0.0;
  double hi = b;
  for (int panel = 0; panel < 200; ++panel) {
    const double lo = std::max(a, hi * 0.5);
    const double part = adaptive_simpson(f, lo, hi, tol);
    total += part;
    hi = lo;
    if (hi <= a * 1.0000001) break;
    if (panel > 8 && std::abs(part) < tol * (1.0 + std::abs(total))) break;
  }
  return total;
}

// |a|^p with fast paths for the common exponents.
inline double pow_p(double a, double p) {
  const double x = std::abs(a);
  if (p == 2.0) return x * x;
  if (p == 1.0) return x;
  return std::pow(x, p);
}

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace carnot
