#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "carnot/gauge.hpp"
#include "carnot/group.hpp"
#include "carnot/util.hpp"

namespace carnot {

// --- threading -------------------------------------------------------------

inline int thread_count() {
  if (const char* s = std::getenv("CARNOT_THREADS")) {
    const int v = std::atoi(s);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Sum of term(i) for i in [0, n). The chunk grid is fixed (independent of the
// thread count) and chunk partials are combined pairwise, so the result is
// bit-identical for any number of threads.
template <typename Term>
double parallel_sum(std::size_t n, Term&& term) {
  if (n == 0) return 0.0;
  const std::size_t nchunks = std::min<std::size_t>(n, 256);
  std::vector<double> partial(nchunks, 0.0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mu;
  auto work = [&] {
    try {
      for (std::size_t c; (c = next.fetch_add(1)) < nchunks;) {
        if (failed.load(std::memory_order_relaxed)) return;
        const std::size_t b = c * n / nchunks;
        const std::size_t e = (c + 1) * n / nchunks;
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += term(i);
        partial[c] = s;
      }
    } catch (const std::exception& ex) {
      std::lock_guard<std::mutex> lk(error_mu);
      error = ex.what();
      failed.store(true);
    }
  };
  const int nt = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(thread_count()), nchunks));
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw std::runtime_error(error);
  return pairwise_sum(partial);
}

// --- midpoint grids ----------------------------------------------------------

// Midpoint-rule grid; every node sits at a half-cell offset, so no node lies
// on a coordinate hyperplane of the box lattice.
struct BoxGrid {
  Box box;
  std::array<int, kMaxDim> res{};

  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < box.n; ++i) s *= static_cast<std::size_t>(res[static_cast<std::size_t>(i)]);
    return s;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < box.n; ++i)
      v *= (box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)]) /
           res[static_cast<std::size_t>(i)];
    return v;
  }

  Point node(std::size_t idx) const {
    Point p;
    for (int i = 0; i < box.n; ++i) {
      const auto r = static_cast<std::size_t>(res[static_cast<std::size_t>(i)]);
      const std::size_t k = idx % r;
      idx /= r;
      const double lo = box.lo[static_cast<std::size_t>(i)];
      const double hi = box.hi[static_cast<std::size_t>(i)];
      p[i] = lo + (static_cast<double>(k) + 0.5) * (hi - lo) / static_cast<double>(r);
    }
    return p;
  }
};

inline BoxGrid make_grid(const Box& box, int res_per_axis) {
  if (res_per_axis < 1) throw std::invalid_argument("make_grid: resolution must be positive");
  BoxGrid g;
  g.box = box;
  for (int i = 0; i < box.n; ++i) g.res[static_cast<std::size_t>(i)] = res_per_axis;
  return g;
}

// Resolutions chosen so cells are roughly cubical with about `target_nodes`
// nodes in total.
inline BoxGrid make_grid_budget(const Box& box, std::size_t target_nodes) {
  BoxGrid g;
  g.box = box;
  double logvol = 0.0;
  for (int i = 0; i < box.n; ++i)
    logvol += std::log(box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)]);
  const double h = std::exp((logvol - std::log(static_cast<double>(target_nodes))) / box.n);
  for (int i = 0; i < box.n; ++i) {
    const double w = box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)];
    g.res[static_cast<std::size_t>(i)] = std::max(1, static_cast<int>(std::lround(w / h)));
  }
  return g;
}

template <typename F>
double integrate_box(F&& f, const BoxGrid& grid) {
  const double cell = grid.cell_volume();
  const double sum = parallel_sum(grid.size(), [&](std::size_t i) {
    const Point p = grid.node(i);
    const double v = f(p);
    if (!std::isfinite(v)) {
      std::string where = "integrate_box: non-finite value at (";
      for (int d = 0; d < grid.box.n; ++d) where += (d ? "," : "") + std::to_string(p[d]);
      throw std::runtime_error(where + ")");
    }
    return v;
  });
  return cell * sum;
}

// --- Monte Carlo -------------------------------------------------------------

struct MCResult {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

// Mean-value MC over a box; variance accumulated chunkwise with the same
// deterministic reduction as parallel_sum.
template <typename F>
MCResult mc_integrate_box(F&& f, const Box& box, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("mc_integrate_box: need samples");
  const std::size_t nchunks = std::min<std::size_t>(n, 256);
  std::vector<double> s1(nchunks, 0.0), s2(nchunks, 0.0);
  parallel_sum(nchunks, [&](std::size_t c) {
    const std::size_t b = c * n / nchunks;
    const std::size_t e = (c + 1) * n / nchunks;
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double v = f(uniform_in_box(box, seed, i));
      a1 += v;
      a2 += v * v;
    }
    s1[c] = a1;
    s2[c] = a2;
    return 0.0;
  });
  const double sum = pairwise_sum(s1);
  const double sumsq = pairwise_sum(s2);
  const double vol = box.volume();
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
  MCResult r;
  r.value = vol * mean;
  r.std_error = vol * std::sqrt(var / static_cast<double>(n));
  r.seed = seed;
  r.n = n;
  return r;
}

// C_N = |B_N(0,1)| by MC over the unit-ball bounding box.
inline MCResult ball_volume_mc(const GroupSpec& g, const NormSpec& norm, std::size_t n,
                               std::uint64_t seed) {
  (void)g;
  const Box box = norm.bounding_box(1.0);
  return mc_integrate_box([&](const Point& x) { return norm.eval(x) < 1.0 ? 1.0 : 0.0; }, box, n, seed);
}

inline double ball_volume_grid(const GroupSpec& g, const NormSpec& norm, int res) {
  (void)g;
  const BoxGrid grid = make_grid(norm.bounding_box(1.0), res);
  return integrate_box([&](const Point& x) { return norm.eval(x) < 1.0 ? 1.0 : 0.0; }, grid);
}

inline double sphere_measure_total(const GroupSpec& g, double ball_vol) {
  return static_cast<double>(g.Q()) * ball_vol;
}

// Integral of g over the unit N-sphere against the polar measure, via the
// shell {1 <= N <= 2}: the projected integrand is degree-0 homogeneous, so
//   int_S g dsigma = Q/(2^Q - 1) * int_shell g(delta_{1/N(x)} x) dx.
template <typename F>
MCResult sphere_integral_mc(const GroupSpec& g, const NormSpec& norm, F&& fn, std::size_t n,
                            std::uint64_t seed) {
  const Box box = norm.bounding_box(2.0);
  const double scale = static_cast<double>(g.Q()) / (std::pow(2.0, g.Q()) - 1.0);
  MCResult r = mc_integrate_box(
      [&](const Point& x) {
        const double nx = norm.eval(x);
        if (nx < 1.0 || nx > 2.0) return 0.0;
        return fn(g.dilate(1.0 / nx, x));
      },
      box, n, seed);
  r.value *= scale;
  r.std_error *= scale;
  return r;
}

// --- radial integration -------------------------------------------------------

// int_G u dx = sigma(S) * int rho(t) t^{Q-1} dt for radial u; finite support only.
template <typename F>
double radial_integral(int Q, F&& rho, double r_lo, double r_hi, double sigma_s) {
  if (!(r_hi < std::numeric_limits<double>::infinity()))
    throw std::invalid_argument("radial_integral: unbounded support");
  const double lo = std::max(r_lo, r_hi * 1e-14);
  return sigma_s * log_panel_integrate(
                       [&](double t) { return rho(t) * std::pow(t, Q - 1); }, lo, r_hi, 1e-12);
}

// --- Lp norms -----------------------------------------------------------------

template <typename F>
double lp_norm(F&& magnitude, const BoxGrid& grid, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const double v = integrate_box([&](const Point& x) { return std::pow(std::abs(magnitude(x)), p); }, grid);
  return std::pow(v, 1.0 / p);
}

template <typename F>
MCResult lp_norm_mc(F&& magnitude, const Box& box, double p, std::size_t n, std::uint64_t seed) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_mc: p must be >= 1");
  MCResult r = mc_integrate_box([&](const Point& x) { return std::pow(std::abs(magnitude(x)), p); },
                                box, n, seed);
  const double v = std::max(r.value, 0.0);
  const double root = std::pow(v, 1.0 / p);
  // delta method for the error of the p-th root
  r.std_error = (v > 0.0) ? root * r.std_error / (p * v) : r.std_error;
  r.value = root;
  return r;
}

// --- deterministic sphere rule -------------------------------------------------

// Quadrature nodes on {N = 1} with weights summing to sigma(S). Built by
// projecting a midpoint grid through a smooth radial window w(r) supported in
// (a, b), which keeps the grid error O(h^2):
//   int g(delta_{1/N(x)} x) w(N(x)) dx = int_a^b w(r) r^{Q-1} dr * int_S g dsigma.
// Nearby directions are merged by weighted centroid and re-projected.
struct SphereRule {
  std::vector<Point> y;
  std::vector<double> w;
  double total = 0.0;  // ~ sigma(S)

  template <typename F>
  double integrate(F&& fn) const {
    std::vector<double> terms(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) terms[i] = w[i] * fn(y[i]);
    return pairwise_sum(terms);
  }

  template <typename F>
  double average(F&& fn) const {
    return integrate(fn) / total;
  }
};

inline SphereRule build_sphere_rule(const GroupSpec& g, const NormSpec& norm,
                                    std::size_t fine_nodes, int bins) {
  const double a = 0.4, b = 2.0;
  auto window = [a, b](double r) {
    if (r <= a || r >= b) return 0.0;
    const double u = (r - a) * (b - r);
    return u * u * u;
  };
  const double zr = adaptive_simpson(
      [&](double r) { return window(r) * std::pow(r, g.Q() - 1); }, a, b, 1e-12);

  const BoxGrid grid = make_grid_budget(norm.bounding_box(b), fine_nodes);
  const double cell = grid.cell_volume();

  struct Bin {
    double w = 0.0;
    Point c;
  };
  std::map<std::array<int, kMaxDim>, Bin> binned;
  const double width = 2.2 / static_cast<double>(bins);
  const std::size_t total_nodes = grid.size();
  for (std::size_t i = 0; i < total_nodes; ++i) {
    const Point x = grid.node(i);
    const double nx = norm.eval(x);
    const double wv = window(nx);
    if (wv <= 0.0) continue;
    const double weight = cell * wv / zr;
    const Point y = g.dilate(1.0 / nx, x);
    std::array<int, kMaxDim> key{};
    for (int d = 0; d < g.n(); ++d)
      key[static_cast<std::size_t>(d)] = static_cast<int>(std::floor(y[d] / width));
    Bin& bin = binned[key];
    bin.w += weight;
    for (int d = 0; d < g.n(); ++d) bin.c[d] += weight * y[d];
  }

  SphereRule rule;
  rule.y.reserve(binned.size());
  rule.w.reserve(binned.size());
  for (const auto& [key, bin] : binned) {
    (void)key;
    Point c;
    for (int d = 0; d < g.n(); ++d) c[d] = bin.c[d] / bin.w;
    const double nc = norm.eval(c);
    if (!(nc > 0.0)) continue;
    rule.y.push_back(g.dilate(1.0 / nc, c));
    rule.w.push_back(bin.w);
  }
  rule.total = pairwise_sum(rule.w);
  return rule;
}

// --- cached geometry -----------------------------------------------------------

// Per (group, norm) constants and the shared sphere rule.
struct Geometry {
  GroupSpec group;
  NormSpec norm;
  double ball_vol = 0.0;  // C_N
  double sigma_s = 0.0;   // Q * C_N
  SphereRule rule;
};

inline double known_ball_volume(const GroupSpec& g, const NormSpec& norm) {
  if (norm.name == "koranyi" && g.name() == "H1") {
    const double pi = std::acos(-1.0);
    return pi * pi / 8.0;
  }
  if (norm.name == "euclidean" && g.step() == 1) {
    const double pi = std::acos(-1.0);
    const double n = g.n();
    return std::pow(pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
  }
  return 0.0;
}

inline Geometry make_geometry(const GroupSpec& g, const NormSpec& norm,
                              std::size_t rule_fine_nodes = 2'000'000, int rule_bins = 24,
                              int volume_res = 400) {
  Geometry geo;
  geo.group = g;
  geo.norm = norm;
  geo.ball_vol = known_ball_volume(g, norm);
  if (geo.ball_vol == 0.0) {
    if (g.n() <= 3) {
      const int res = g.n() >= 3 ? std::min(volume_res, 220) : volume_res;
      geo.ball_vol = ball_volume_grid(g, norm, res);
    } else {
      // grids are infeasible past three dimensions; a fixed seed keeps the
      // volume (and everything scaled by it) deterministic
      geo.ball_vol = ball_volume_mc(g, norm, 4'000'000, 0x9e3779b9ULL).value;
    }
  }
  geo.sigma_s = sphere_measure_total(g, geo.ball_vol);
  geo.rule = build_sphere_rule(g, norm, rule_fine_nodes, rule_bins);
  return geo;
}

}  // namespace carnot
