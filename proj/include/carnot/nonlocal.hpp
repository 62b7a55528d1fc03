#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "carnot/fields.hpp"
#include "carnot/gauge.hpp"
#include "carnot/group.hpp"
#include "carnot/mollifier.hpp"
#include "carnot/quad.hpp"
#include "carnot/util.hpp"

namespace carnot {

// Shared quadrature nodes for integrals of the form int F(h) rho(N(h)) dh,
// factored through polar coordinates: radial quantile nodes t_j (equal mass
// mass/J) tensor the sphere rule y_k. Every functional below reuses one node
// set, so pointwise inequalities between integrands survive discretization
// exactly.
struct PolarNodes {
  std::vector<Point> h;       // delta_{t_j} y_k
  std::vector<double> coeff;  // quadrature mass of the node; sums to profile mass
  std::vector<double> t;      // radius of the node
  std::vector<HVec> grad_n;   // grad N(y_k), degree-0 homogeneous
  std::vector<double> grad_n_abs;
  std::vector<HVec> pi_y;     // horizontal part of y_k
  double coeff_sum = 0.0;
  double grad_n_max = 0.0;
  double t_min = 0.0;
};

// Below this radius a finite difference of a smooth field is dominated by
// cancellation noise; the quotient is replaced by its linearization
// <grad f(x), pi(y)>, exact to O(t).
inline constexpr double kLinearizeBelow = 1e-6;

inline PolarNodes build_polar_nodes(const Geometry& geo, const Profile& prof, int radial_nodes) {
  if (radial_nodes < 1) throw std::invalid_argument("build_polar_nodes: need radial nodes");
  if (!prof.quantile) throw std::invalid_argument("build_polar_nodes: profile lacks a quantile");
  const SphereRule& rule = geo.rule;
  const std::size_t K = rule.y.size();
  const auto J = static_cast<std::size_t>(radial_nodes);
  PolarNodes nodes;
  nodes.h.reserve(J * K);
  nodes.coeff.reserve(J * K);
  nodes.t.reserve(J * K);
  nodes.grad_n.reserve(J * K);
  nodes.grad_n_abs.reserve(J * K);
  nodes.pi_y.reserve(J * K);

  std::vector<HVec> gn(K);
  std::vector<double> gna(K);
  for (std::size_t k = 0; k < K; ++k) {
    gn[k] = grad_norm(geo.group, geo.norm, rule.y[k]);
    gna[k] = gn[k].norm(geo.group.m1());
    nodes.grad_n_max = std::max(nodes.grad_n_max, gna[k]);
  }

  for (std::size_t j = 0; j < J; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(J);
    const double tj = prof.quantile(u);
    for (std::size_t k = 0; k < K; ++k) {
      nodes.h.push_back(geo.group.dilate(tj, rule.y[k]));
      nodes.coeff.push_back(prof.mass * rule.w[k] / (rule.total * static_cast<double>(J)));
      nodes.t.push_back(tj);
      nodes.grad_n.push_back(gn[k]);
      nodes.grad_n_abs.push_back(gna[k]);
      nodes.pi_y.push_back(geo.group.pi(rule.y[k]));
    }
  }
  nodes.coeff_sum = pairwise_sum(nodes.coeff);
  nodes.t_min = *std::min_element(nodes.t.begin(), nodes.t.end());
  return nodes;
}

namespace detail {

// Difference quotients (f(x h_i) - f(x))/t_i for one base point, with the
// tiny-radius linearization. Writing them once keeps every functional on the
// same values.
struct QuotientEval {
  const GroupSpec* g;
  const PolarNodes* nodes;
  const ScalarField* f;
  Point x;
  double fx;
  HVec dfx;
  bool linearize;

  QuotientEval(const GroupSpec& group, const PolarNodes& nd, const ScalarField& field,
               const Point& base)
      : g(&group), nodes(&nd), f(&field), x(base), fx(field.eval(base)) {
    linearize = nd.t_min < kLinearizeBelow && field.smooth;
    if (linearize) dfx = frame_pullback(group, field, base);
  }

  double operator()(std::size_t i) const {
    if (linearize && nodes->t[i] < kLinearizeBelow) {
      double s = 0.0;
      for (int a = 0; a < g->m1(); ++a) s += dfx[a] * nodes->pi_y[i][a];
      return s;
    }
    return (f->eval(g->multiply(x, nodes->h[i])) - fx) / nodes->t[i];
  }
};

}  // namespace detail

// Everything one epsilon needs: the mollifier profile, its derived kernel,
// and node sets for both.
struct NonlocalContext {
  std::shared_ptr<const Geometry> geo;
  Profile profile;
  Profile kernel;
  double p = 2.0;
  PolarNodes nodes;
  PolarNodes kernel_nodes;
};

inline NonlocalContext make_context(std::shared_ptr<const Geometry> geo, const Profile& prof,
                                    double p, int radial_nodes = 24, bool with_kernel = true) {
  if (!(p >= 1.0)) throw std::invalid_argument("make_context: p must be >= 1");
  NonlocalContext ctx;
  ctx.geo = std::move(geo);
  ctx.profile = prof;
  ctx.p = p;
  ctx.nodes = build_polar_nodes(*ctx.geo, prof, radial_nodes);
  if (with_kernel) {
    ctx.kernel = kernel_K(ctx.geo->group, ctx.geo->sigma_s, prof);
    ctx.kernel_nodes = build_polar_nodes(*ctx.geo, ctx.kernel, radial_nodes);
  }
  return ctx;
}

// --- pointwise functionals ---------------------------------------------------

// V_eps(f)(x) = Q int (f(x h) - f(x))/N(h) grad N(h) rho(N(h)) dh
inline HVec V_eps(const NonlocalContext& ctx, const ScalarField& f, const Point& x) {
  const GroupSpec& g = ctx.geo->group;
  const int m1 = g.m1();
  const detail::QuotientEval quot(g, ctx.nodes, f, x);
  HVec acc;
  const std::size_t n = ctx.nodes.h.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = ctx.nodes.coeff[i] * quot(i);
    for (int a = 0; a < m1; ++a) acc[a] += c * ctx.nodes.grad_n[i][a];
  }
  for (int a = 0; a < m1; ++a) acc[a] *= g.Q();
  return acc;
}

// Same with absolute values; +inf when the quadrature sum is not finite.
inline double V_tilde_eps(const NonlocalContext& ctx, const ScalarField& f, const Point& x) {
  const detail::QuotientEval quot(ctx.geo->group, ctx.nodes, f, x);
  double acc = 0.0;
  const std::size_t n = ctx.nodes.h.size();
  for (std::size_t i = 0; i < n; ++i)
    acc += ctx.nodes.coeff[i] * std::abs(quot(i)) * ctx.nodes.grad_n_abs[i];
  if (!std::isfinite(acc)) return std::numeric_limits<double>::infinity();
  return acc;
}

// (grad f * K_eps)(x) = int grad f(x y^{-1}) K_eps(y) dy, frame coefficients.
inline HVec convolve_gradient(const NonlocalContext& ctx, const ScalarField& f, const Point& x) {
  const GroupSpec& g = ctx.geo->group;
  const int m1 = g.m1();
  if (ctx.kernel_nodes.h.empty()) throw std::logic_error("convolve_gradient: context built without kernel");
  HVec acc;
  const std::size_t n = ctx.kernel_nodes.h.size();
  for (std::size_t i = 0; i < n; ++i) {
    const HVec df = frame_pullback(g, f, g.multiply(x, g.inverse(ctx.kernel_nodes.h[i])));
    const double c = ctx.kernel_nodes.coeff[i];
    for (int a = 0; a < m1; ++a) acc[a] += c * df[a];
  }
  return acc;
}

// --- energies ------------------------------------------------------------------

// Outer integration domain: supp f thickened by the profile support, where
// every difference quotient vanishes identically outside.
inline Box energy_domain(const NonlocalContext& ctx, const ScalarField& f) {
  return ctx.geo->group.thicken(f.support_box, ctx.geo->norm.bounding_box(ctx.profile.r_hi));
}

struct EnergyValues {
  double v_tilde_lp_p = 0.0;  // ||V~_eps(f)||_p^p
  double i_p = 0.0;           // I_{eps,p}(f)
  double i_star_p = 0.0;      // I*_{eps,p}(f)
  std::size_t grid_nodes = 0;
};

// One pass over a shared x-grid for all three quantities, so the discrete
// Jensen/termwise inequalities between them are exact.
inline EnergyValues energies(const NonlocalContext& ctx, const ScalarField& f,
                             std::size_t x_budget) {
  const GroupSpec& g = ctx.geo->group;
  const double p = ctx.p;
  const BoxGrid grid = make_grid_budget(energy_domain(ctx, f), x_budget);
  const double cell = grid.cell_volume();
  const std::size_t n = grid.size();
  const std::size_t nchunks = std::min<std::size_t>(n, 256);
  std::vector<double> vt(nchunks, 0.0), ip(nchunks, 0.0), is(nchunks, 0.0);
  parallel_sum(nchunks, [&](std::size_t c) {
    const std::size_t b = c * n / nchunks;
    const std::size_t e = (c + 1) * n / nchunks;
    double avt = 0.0, aip = 0.0, ais = 0.0;
    const std::size_t m = ctx.nodes.h.size();
    for (std::size_t xi = b; xi < e; ++xi) {
      const Point x = grid.node(xi);
      const detail::QuotientEval quot(g, ctx.nodes, f, x);
      double s_vt = 0.0, s_ip = 0.0, s_is = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = std::abs(quot(i));
        if (d == 0.0) continue;
        const double cf = ctx.nodes.coeff[i];
        const double dp = pow_p(d, p);
        s_vt += cf * d * ctx.nodes.grad_n_abs[i];
        s_ip += cf * dp * pow_p(ctx.nodes.grad_n_abs[i], p);
        s_is += cf * dp;
      }
      avt += pow_p(s_vt, p);
      aip += s_ip;
      ais += s_is;
    }
    vt[c] = avt;
    ip[c] = aip;
    is[c] = ais;
    return 0.0;
  });
  EnergyValues out;
  out.v_tilde_lp_p = cell * pairwise_sum(vt);
  out.i_p = cell * pairwise_sum(ip);
  out.i_star_p = cell * pairwise_sum(is);
  out.grid_nodes = n;
  return out;
}

inline double I_eps_p(const NonlocalContext& ctx, const ScalarField& f, std::size_t x_budget) {
  return energies(ctx, f, x_budget).i_p;
}

inline double I_star_eps_p(const NonlocalContext& ctx, const ScalarField& f, std::size_t x_budget) {
  return energies(ctx, f, x_budget).i_star_p;
}

// int int |f(x h) - f(x) - <v(x), pi(h)>|^p / N(h)^p rho(N(h)) dh dx
inline double taylor_remainder(const NonlocalContext& ctx, const ScalarField& f,
                               const std::function<HVec(const Point&)>& v, std::size_t x_budget) {
  const GroupSpec& g = ctx.geo->group;
  const int m1 = g.m1();
  const double p = ctx.p;
  const BoxGrid grid = make_grid_budget(energy_domain(ctx, f), x_budget);
  const double cell = grid.cell_volume();
  return cell * parallel_sum(grid.size(), [&](std::size_t xi) {
    const Point x = grid.node(xi);
    const detail::QuotientEval quot(g, ctx.nodes, f, x);
    const HVec vx = v(x);
    double s = 0.0;
    const std::size_t m = ctx.nodes.h.size();
    for (std::size_t i = 0; i < m; ++i) {
      double lin = 0.0;
      for (int a = 0; a < m1; ++a) lin += vx[a] * ctx.nodes.pi_y[i][a];
      s += ctx.nodes.coeff[i] * pow_p(quot(i) - lin, p);
    }
    return s;
  });
}

// --- limit objects ---------------------------------------------------------------

struct MatrixEstimate {
  int m = 0;
  std::array<std::array<double, kMaxDim>, kMaxDim> value{};
  std::array<std::array<double, kMaxDim>, kMaxDim> std_error{};
  std::uint64_t seed = 0;
  std::size_t n = 0;

  double max_deviation_from_identity() const {
    double dev = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        dev = std::max(dev, std::abs(value[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] -
                                     (a == b ? 1.0 : 0.0)));
    return dev;
  }
};

// M = Q * avg_{S} pi(y) (x) grad N(y) dsigma; the reconstruction identity
// states M = I on the horizontal layer.
inline MatrixEstimate reconstruction_matrix(const Geometry& geo, std::size_t n_samples,
                                            std::uint64_t seed) {
  const GroupSpec& g = geo.group;
  const int m1 = g.m1();
  MatrixEstimate est;
  est.m = m1;
  est.seed = seed;
  est.n = n_samples;
  const double scale = static_cast<double>(g.Q()) / geo.sigma_s;
  for (int a = 0; a < m1; ++a) {
    for (int b = 0; b < m1; ++b) {
      const MCResult r = sphere_integral_mc(
          g, geo.norm,
          [&](const Point& y) { return y[a] * grad_norm(g, geo.norm, y)[b]; }, n_samples, seed);
      est.value[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = scale * r.value;
      est.std_error[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = scale * r.std_error;
    }
  }
  return est;
}

// avg_{S} |<v, pi(y)>|^p dsigma, Monte Carlo route.
inline MCResult barbieri_constant_mc(const Geometry& geo, double p, const HVec& v,
                                     std::size_t n_samples, std::uint64_t seed) {
  const GroupSpec& g = geo.group;
  const int m1 = g.m1();
  MCResult r = sphere_integral_mc(
      g, geo.norm,
      [&](const Point& y) {
        double s = 0.0;
        for (int a = 0; a < m1; ++a) s += v[a] * y[a];
        return pow_p(s, p);
      },
      n_samples, seed);
  r.value /= geo.sigma_s;
  r.std_error /= geo.sigma_s;
  return r;
}

// Same constant through the ball integral: (p+Q)/sigma(S) int_{B(1)} |<v, pi(y)>|^p dy.
inline double barbieri_constant_ball(const Geometry& geo, double p, const HVec& v,
                                     std::size_t budget) {
  const GroupSpec& g = geo.group;
  const int m1 = g.m1();
  const BoxGrid grid = make_grid_budget(geo.norm.bounding_box(1.0), budget);
  const double integral = integrate_box(
      [&](const Point& y) {
        if (geo.norm.eval(y) >= 1.0) return 0.0;
        double s = 0.0;
        for (int a = 0; a < m1; ++a) s += v[a] * y[a];
        return pow_p(s, p);
      },
      grid);
  return (p + g.Q()) / geo.sigma_s * integral;
}

// Limit of I*_{eps,p}(f): int_x avg_S |<grad f(x), pi(y)>|^p dsigma dx, which
// equals (p+Q)/sigma(S) int_x int_{B(1)} |<grad f(x), pi(y)>|^p dy dx.
inline double bbm_limit_constant(const Geometry& geo, const ScalarField& f, double p,
                                 std::size_t x_budget) {
  const GroupSpec& g = geo.group;
  const int m1 = g.m1();
  const BoxGrid grid = make_grid_budget(f.support_box, x_budget);
  const double cell = grid.cell_volume();
  return cell * parallel_sum(grid.size(), [&](std::size_t xi) {
    const Point x = grid.node(xi);
    const HVec df = frame_pullback(g, f, x);
    return geo.rule.average([&](const Point& y) {
      double s = 0.0;
      for (int a = 0; a < m1; ++a) s += df[a] * y[a];
      return pow_p(s, p);
    });
  });
}

struct LudwigResult {
  double value = 0.0;       // eps int int_{B(R)} |f(xh)-f(x)|^p / N(h)^{Q+p-eps p} dh dx
  double tail_bound = 0.0;  // analytic bound on the part beyond B(R)
};

// The truncated Gagliardo-type energy coincides with sigma(S) R^{eps p} / p
// times I*_{eps,p} under the fractional profile; the tail beyond B(R) is
// bounded by eps 2^p ||f||_p^p sigma(S) R^{eps p - p}/(p - eps p).
inline LudwigResult ludwig_lhs(const Geometry& geo, const ScalarField& f, double p, double eps,
                               double R, std::size_t x_budget, int radial_nodes = 24) {
  if (!(eps * p < p)) throw std::invalid_argument("ludwig_lhs: need eps < 1");
  auto geo_shared = std::make_shared<Geometry>(geo);
  const Profile prof = fractional_profile(geo.group, geo.sigma_s, eps, p, R);
  NonlocalContext ctx = make_context(geo_shared, prof, p, radial_nodes, false);
  const double istar = energies(ctx, f, x_budget).i_star_p;
  LudwigResult out;
  out.value = geo.sigma_s * std::pow(R, eps * p) / p * istar;
  const BoxGrid grid = make_grid_budget(f.support_box, x_budget);
  const double fp = integrate_box(
      [&](const Point& x) { return std::pow(std::abs(f.eval(x)), p); }, grid);
  out.tail_bound =
      eps * std::pow(2.0, p) * fp * geo.sigma_s * std::pow(R, eps * p - p) / (p - eps * p);
  return out;
}

}  // namespace carnot
