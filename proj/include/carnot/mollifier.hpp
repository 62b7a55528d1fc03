#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/quad.hpp"
#include "carnot/util.hpp"

namespace carnot {

// Radial profile of a mollifier (or of a kernel derived from one). The full
// space function is rho(x) = rho_tilde(N(x)). `quantile` inverts the
// normalized radial measure sigma(S) rho_tilde(t) t^{Q-1} dt / mass; it is the
// backbone of all radial quadratures, so closed forms are supplied wherever
// the density is singular.
struct Profile {
  std::string name;
  std::function<double(double)> rho_tilde;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double mass = 1.0;
  // Exponent a with radial CDF ~ (t/r_hi)^a near zero; mass quadratures
  // substitute v = (t/r_hi)^a so the integrand stays O(1) down to v = 0.
  double sing_exp = 1.0;
  std::function<double(double)> quantile;
  // Normalized mass fraction below radius t. Closed forms matter: for small
  // sing_exp a macroscopic share of the mass sits at radii where the density
  // itself is not representable in double precision.
  std::function<double(double)> radial_cdf;
  std::function<double(double)> closed_form_K;  // optional radial form of the derived kernel
};

struct MollifierFamily {
  std::string name;
  std::function<Profile(double)> make;
};

// sigma(S) * int_lo^hi rho_tilde(t) t^{Q-1} dt, evaluated in the variable
// v = (t/r_hi)^{sing_exp} where the measure has no concentration at zero.
inline double profile_mass_between(const GroupSpec& g, double sigma_s, const Profile& p,
                                   double lo, double hi) {
  const int Q = g.Q();
  const double a = p.sing_exp;
  const double top = std::min(hi, p.r_hi);
  const double bot = std::max(lo, p.r_lo);
  if (!(bot < top) || !(p.r_hi > 0.0)) return 0.0;
  if (p.radial_cdf) return p.mass * (p.radial_cdf(top) - p.radial_cdf(bot));
  const double v_lo = std::max(std::pow(bot / p.r_hi, a), 1e-13);
  const double v_hi = std::pow(top / p.r_hi, a);
  if (!(v_lo < v_hi)) return 0.0;
  const double integral = adaptive_simpson(
      [&](double v) {
        const double t = p.r_hi * std::pow(v, 1.0 / a);
        const double val = p.rho_tilde(t) * std::pow(t, Q - 1) * (t / (a * v));
        // subnormal radii can overflow rho while t^{Q-1} underflows; the
        // affected v-band carries O(1e-12) of the mass
        return std::isfinite(val) ? val : 0.0;
      },
      v_lo, v_hi, 1e-12);
  return sigma_s * integral;
}

inline double profile_mass(const GroupSpec& g, double sigma_s, const Profile& p) {
  return profile_mass_between(g, sigma_s, p, p.r_lo, p.r_hi);
}

// Mass outside B(0, delta); the vanishing-tail axiom is checked with this.
inline double profile_tail(const GroupSpec& g, double sigma_s, const Profile& p, double delta) {
  if (delta >= p.r_hi) return 0.0;
  return profile_mass_between(g, sigma_s, p, delta, p.r_hi);
}

namespace detail {

inline double bisect_increasing(const std::function<double(double)>& f, double target, double lo,
                                double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Tabulated radial CDF on a log grid; adequate only when the support is
// bounded away from zero or the density is integrably mild at zero.
inline std::function<double(double)> numeric_quantile(std::function<double(double)> rho, int Q,
                                                      double r_lo, double r_hi) {
  const int m = 4000;
  const double lo = std::max(r_lo, r_hi * 1e-8);
  auto t_of = [lo, r_hi, m](int i) {
    return lo * std::pow(r_hi / lo, static_cast<double>(i) / m);
  };
  auto grid = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m) + 1, 0.0);
  double acc = 0.0;
  double tprev = t_of(0);
  double fprev = rho(tprev) * std::pow(tprev, Q - 1);
  for (int i = 1; i <= m; ++i) {
    const double t = t_of(i);
    const double fv = rho(t) * std::pow(t, Q - 1);
    acc += 0.5 * (fprev + fv) * (t - tprev);
    (*grid)[static_cast<std::size_t>(i)] = acc;
    tprev = t;
    fprev = fv;
  }
  if (!(acc > 0.0)) throw std::runtime_error("numeric_quantile: zero radial mass");
  for (auto& v : *grid) v /= acc;
  return [grid, lo, r_hi, m](double u) {
    if (u <= 0.0) return lo;
    if (u >= 1.0) return r_hi;
    auto it = std::lower_bound(grid->begin(), grid->end(), u);
    const int i = static_cast<int>(it - grid->begin());
    if (i <= 0) return lo;
    const double f0 = (*grid)[static_cast<std::size_t>(i - 1)];
    const double f1 = (*grid)[static_cast<std::size_t>(i)];
    const double frac = (f1 > f0) ? (u - f0) / (f1 - f0) : 0.5;
    const double t0 = lo * std::pow(r_hi / lo, static_cast<double>(i - 1) / m);
    const double t1 = lo * std::pow(r_hi / lo, static_cast<double>(i) / m);
    return t0 * std::pow(t1 / t0, frac);
  };
}

}  // namespace detail

// Uniform density on the N-ball of radius eps: rho = chi_{[0,eps)} / (C_N eps^Q).
inline Profile ball_profile(const GroupSpec& g, double ball_vol, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ball_profile: eps must be positive");
  const int Q = g.Q();
  const double height = 1.0 / (ball_vol * std::pow(eps, Q));
  Profile p;
  p.name = "ball";
  p.r_lo = 0.0;
  p.r_hi = eps;
  p.mass = 1.0;
  p.sing_exp = Q;
  p.rho_tilde = [eps, height](double t) { return (t >= 0.0 && t < eps) ? height : 0.0; };
  p.quantile = [eps, Q](double u) { return eps * std::pow(u, 1.0 / Q); };
  p.radial_cdf = [eps, Q](double t) {
    if (t <= 0.0) return 0.0;
    if (t >= eps) return 1.0;
    return std::pow(t / eps, Q);
  };
  // K(t) = Q height ln(eps/t) on (0, eps)
  p.closed_form_K = [eps, height, Q](double t) {
    if (!(t > 0.0) || t >= eps) return 0.0;
    return Q * height * std::log(eps / t);
  };
  return p;
}

// rho = c_eps N^{eps p - Q} on B(0,R), c_eps = eps p / (R^{eps p} sigma(S));
// unit mass by construction.
inline Profile fractional_profile(const GroupSpec& g, double sigma_s, double eps, double p,
                                  double R) {
  const int Q = g.Q();
  const double a = eps * p;  // singularity offset
  if (!(a > 0.0 && a < Q)) throw std::invalid_argument("fractional_profile: need 0 < eps*p < Q");
  if (!(R > 0.0)) throw std::invalid_argument("fractional_profile: R must be positive");
  const double c_eps = a / (std::pow(R, a) * sigma_s);
  Profile prof;
  prof.name = "fractional";
  prof.r_lo = 0.0;
  prof.r_hi = R;
  prof.mass = 1.0;
  prof.sing_exp = a;
  prof.rho_tilde = [c_eps, a, Q, R](double t) {
    if (!(t > 0.0) || t > R) return 0.0;
    return c_eps * std::pow(t, a - Q);
  };
  prof.quantile = [R, a](double u) { return R * std::pow(u, 1.0 / a); };
  prof.radial_cdf = [R, a](double t) {
    if (t <= 0.0) return 0.0;
    if (t >= R) return 1.0;
    return std::pow(t / R, a);
  };
  prof.closed_form_K = [c_eps, a, Q, R](double t) {
    if (!(t > 0.0) || t > R) return 0.0;
    return Q * c_eps / (Q - a) * (std::pow(t, a - Q) - std::pow(R, a - Q));
  };
  return prof;
}

// Restriction to the annulus [m, hi], renormalized to unit mass.
inline Profile annular_truncate(const GroupSpec& g, double sigma_s, const Profile& src, double m,
                                double hi) {
  const int Q = g.Q();
  const double lo = std::max(m, src.r_lo);
  const double top = std::min(hi, src.r_hi);
  if (!(lo < top)) throw std::invalid_argument("annular_truncate: empty annulus");
  const double kept = profile_mass_between(g, sigma_s, src, lo, top) / src.mass;
  if (!(kept > 1e-15)) throw std::invalid_argument("annular_truncate: no mass in the annulus");
  const double scale = 1.0 / (src.mass * kept);
  Profile out;
  out.name = src.name + "_annular";
  out.r_lo = lo;
  out.r_hi = top;
  out.mass = 1.0;
  out.rho_tilde = [rho = src.rho_tilde, lo, top, scale](double t) {
    if (t < lo || t > top) return 0.0;
    return scale * rho(t);
  };
  if (src.radial_cdf) {
    out.radial_cdf = [cdf = src.radial_cdf, lo, top](double t) {
      const double f_lo = cdf(lo), f_top = cdf(top);
      const double f = cdf(std::min(std::max(t, lo), top));
      return (f - f_lo) / (f_top - f_lo);
    };
  }
  out.quantile = detail::numeric_quantile(out.rho_tilde, Q, lo, top);
  return out;
}

// K(h) = Q int_{N(h)}^{inf} rho_tilde(t)/t dt, as a radial profile. Mass is
// inherited (||K||_1 = ||rho||_1); the quantile inverts the kernel's own
// radial CDF, by bisection on the closed forms for the shipped families.
inline Profile kernel_K(const GroupSpec& g, double sigma_s, const Profile& src) {
  const int Q = g.Q();
  Profile k;
  k.name = src.name + "_K";
  k.r_lo = 0.0;
  k.r_hi = src.r_hi;
  k.mass = src.mass;
  k.sing_exp = src.sing_exp;

  if (src.closed_form_K) {
    k.rho_tilde = src.closed_form_K;
  } else {
    k.rho_tilde = [rho = src.rho_tilde, Q, hi = src.r_hi](double t) {
      if (!(t > 0.0) || t >= hi) return 0.0;
      return Q * log_panel_integrate([&rho](double s) { return rho(s) / s; }, t, hi, 1e-10);
    };
  }

  if (src.name == "ball") {
    // CDF in v = (t/eps)^Q: F = v (1 - ln v)
    const double eps = src.r_hi;
    k.radial_cdf = [eps, Q](double t) {
      if (t <= 0.0) return 0.0;
      if (t >= eps) return 1.0;
      const double v = std::pow(t / eps, Q);
      return v > 0.0 ? v * (1.0 - std::log(v)) : 0.0;
    };
    k.quantile = [eps, Q](double u) {
      if (u <= 0.0) return 0.0;
      if (u >= 1.0) return eps;
      const double v = detail::bisect_increasing(
          [](double w) { return w * (1.0 - std::log(w)); }, u, 1e-300, 1.0);
      return eps * std::pow(v, 1.0 / Q);
    };
  } else if (src.name == "fractional") {
    // CDF in u = (t/R)^{a}: F = (Q u - a u^{Q/a}) / (Q - a), a = eps p,
    // recovered from the kernel height at the support edge
    const double R = src.r_hi;
    // infer a from rho_tilde scaling: rho(t) = c t^{a-Q} => a = Q + d ln rho/d ln t
    const double t1 = 0.5 * R, t2 = 0.25 * R;
    const double a = Q + std::log(src.rho_tilde(t1) / src.rho_tilde(t2)) / std::log(t1 / t2);
    k.radial_cdf = [R, a, Q](double t) {
      if (t <= 0.0) return 0.0;
      if (t >= R) return 1.0;
      const double u = std::pow(t / R, a);
      return (Q * u - a * std::pow(u, Q / a)) / (Q - a);
    };
    k.quantile = [R, a, Q](double u) {
      if (u <= 0.0) return 0.0;
      if (u >= 1.0) return R;
      const double v = detail::bisect_increasing(
          [a, Q](double w) { return (Q * w - a * std::pow(w, Q / a)) / (Q - a); }, u, 0.0, 1.0);
      return R * std::pow(v, 1.0 / a);
    };
  } else {
    k.quantile = detail::numeric_quantile(k.rho_tilde, Q, std::max(src.r_lo * 0.5, k.r_hi * 1e-8),
                                          k.r_hi);
  }
  return k;
}

inline MollifierFamily ball_family(const GroupSpec& g, double ball_vol) {
  MollifierFamily fam;
  fam.name = "ball";
  fam.make = [g, ball_vol](double eps) { return ball_profile(g, ball_vol, eps); };
  return fam;
}

inline MollifierFamily fractional_family(const GroupSpec& g, double sigma_s, double p, double R) {
  MollifierFamily fam;
  fam.name = "fractional";
  fam.make = [g, sigma_s, p, R](double eps) { return fractional_profile(g, sigma_s, eps, p, R); };
  return fam;
}

}  // namespace carnot
