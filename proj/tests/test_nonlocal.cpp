#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "carnot/fields.hpp"
#include "carnot/gauge.hpp"
#include "carnot/group.hpp"
#include "carnot/mollifier.hpp"
#include "carnot/nonlocal.hpp"
#include "carnot/quad.hpp"

using namespace carnot;

namespace {

std::shared_ptr<Geometry> geo_r1() {
  static auto g = std::make_shared<Geometry>(
      make_geometry(GroupSpec::euclidean(1), make_euclidean_norm(1), 20000, 8));
  return g;
}

std::shared_ptr<Geometry> geo_r2() {
  static auto g = std::make_shared<Geometry>(
      make_geometry(GroupSpec::euclidean(2), make_euclidean_norm(2), 400000, 48));
  return g;
}

std::shared_ptr<Geometry> geo_h1() {
  static auto g = std::make_shared<Geometry>(
      make_geometry(GroupSpec::heisenberg(), make_koranyi_norm(), 400000, 14));
  return g;
}

ScalarField constant_field(int n, double value) {
  ScalarField f;
  f.name = "const";
  f.eval = [value](const Point&) { return value; };
  f.eucl_grad = [](const Point&) { return Point{}; };
  f.support_box.n = n;
  for (int i = 0; i < n; ++i) {
    f.support_box.lo[static_cast<std::size_t>(i)] = -1.0;
    f.support_box.hi[static_cast<std::size_t>(i)] = 1.0;
  }
  return f;
}

}  // namespace

TEST_CASE("nonlocal gradient of a constant vanishes") {
  auto geo = geo_h1();
  const Profile prof = ball_profile(geo->group, geo->ball_vol, 0.3);
  const NonlocalContext ctx = make_context(geo, prof, 2.0, 8, false);
  const ScalarField f = constant_field(3, 2.5);
  Point x;
  x[0] = 0.2;
  const HVec v = V_eps(ctx, f, x);
  CHECK(std::abs(v[0]) <= 1e-14);
  CHECK(std::abs(v[1]) <= 1e-14);
  CHECK(V_tilde_eps(ctx, f, x) <= 1e-14);
}

TEST_CASE("pointwise bound |V| <= Q V~") {
  auto geo = geo_h1();
  const Profile prof = ball_profile(geo->group, geo->ball_vol, 0.25);
  const NonlocalContext ctx = make_context(geo, prof, 2.0, 8, false);
  const ScalarField f = bump(geo->group, Point{}, 0.8);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Point x = uniform_in_box(f.support_box, 31, s);
    const double vnorm = V_eps(ctx, f, x).norm(2);
    const double vt = V_tilde_eps(ctx, f, x);
    CHECK(vnorm <= geo->group.Q() * vt + 1e-12);
  }
}

TEST_CASE("V~ flags non-finite quadrature sums") {
  auto geo = geo_r1();
  const Profile prof = ball_profile(geo->group, geo->ball_vol, 0.1);
  const NonlocalContext ctx = make_context(geo, prof, 4, 4, false);
  ScalarField f;
  f.name = "blowup";
  f.smooth = false;
  f.eval = [](const Point& x) {
    return x[0] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  Point x;
  x[0] = -0.05;
  CHECK(std::isinf(V_tilde_eps(ctx, f, x)));
}

TEST_CASE("one-dimensional convergence to the derivative") {
  auto geo = geo_r1();
  const ScalarField f = bump(geo->group, Point{}, 1.0);
  Point x;
  x[0] = 0.4;
  const double exact = f.eucl_grad(x)[0];
  std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> errs;
  for (double e : eps) {
    const NonlocalContext ctx =
        make_context(geo, ball_profile(geo->group, geo->ball_vol, e), 2.0, 64, false);
    errs.push_back(std::abs(V_eps(ctx, f, x)[0] - exact));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] < errs[i - 1]);
  // halving eps at least halves the error
  CHECK(errs.back() <= errs.front() * std::pow(0.5, static_cast<double>(errs.size()) - 1.0));
}

TEST_CASE("V matches a dense direct quadrature in one dimension") {
  auto geo = geo_r1();
  const ScalarField f = bump(geo->group, Point{}, 1.0);
  const double eps = 0.15;
  const NonlocalContext ctx =
      make_context(geo, ball_profile(geo->group, geo->ball_vol, eps), 2.0, 400, false);
  const double height = 1.0 / (geo->ball_vol * eps);  // rho value on the interval
  for (double x0 : {-0.3, 0.1, 0.45}) {
    Point x;
    x[0] = x0;
    auto integrand = [&](double h) {
      const double sgn = h > 0.0 ? 1.0 : -1.0;
      Point xh;
      xh[0] = x0 + h;
      return (f.eval(xh) - f.eval(x)) / std::abs(h) * sgn * height;
    };
    const double direct = adaptive_simpson(integrand, -eps, -1e-9, 1e-12) +
                          adaptive_simpson(integrand, 1e-9, eps, 1e-12);
    CHECK(V_eps(ctx, f, x)[0] == doctest::Approx(direct).epsilon(2e-3));
  }
}

TEST_CASE("convolution with the kernel reproduces a constant gradient") {
  auto geo = geo_r1();
  ScalarField lin;
  lin.name = "linear";
  lin.eval = [](const Point& x) { return 1.7 * x[0]; };
  lin.eucl_grad = [](const Point&) {
    Point d;
    d[0] = 1.7;
    return d;
  };
  lin.support_box.n = 1;
  lin.support_box.lo = {-5.0};
  lin.support_box.hi = {5.0};
  const NonlocalContext ctx =
      make_context(geo, ball_profile(geo->group, geo->ball_vol, 0.2), 2.0, 16, true);
  Point x;
  x[0] = 0.3;
  CHECK(convolve_gradient(ctx, lin, x)[0] == doctest::Approx(1.7).epsilon(1e-10));
}

TEST_CASE("discrete energy inequality chain") {
  auto geo = geo_h1();
  const ScalarField f = bump(geo->group, Point{}, 0.7);
  const double p = 2.0;
  const NonlocalContext ctx =
      make_context(geo, ball_profile(geo->group, geo->ball_vol, 0.2), p, 8, false);
  const EnergyValues ev = energies(ctx, f, 4000);
  CHECK(ev.i_p > 0.0);
  CHECK(ev.v_tilde_lp_p <= ev.i_p * (1.0 + 1e-12));
  const double gmax_p = std::pow(ctx.nodes.grad_n_max, p);
  CHECK(ev.i_p <= gmax_p * ev.i_star_p * (1.0 + 1e-12));
}

TEST_CASE("Euclidean norms make both energies coincide") {
  auto geo = geo_r2();
  const ScalarField f = bump(geo->group, Point{}, 0.8);
  const NonlocalContext ctx =
      make_context(geo, ball_profile(geo->group, geo->ball_vol, 0.2), 2.0, 8, false);
  const EnergyValues ev = energies(ctx, f, 4000);
  CHECK(ev.i_p == doctest::Approx(ev.i_star_p).epsilon(1e-9));
}

TEST_CASE("Taylor remainder with the exact gradient decays") {
  auto geo = geo_h1();
  const ScalarField f = bump(geo->group, Point{}, 0.7);
  auto v = [&](const Point& x) { return frame_pullback(geo->group, f, x); };
  double prev = std::numeric_limits<double>::infinity();
  for (double e : {0.3, 0.15, 0.075}) {
    const NonlocalContext ctx =
        make_context(geo, ball_profile(geo->group, geo->ball_vol, e), 2.0, 8, false);
    const double r = taylor_remainder(ctx, f, v, 3000);
    CHECK(r >= 0.0);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("reconstruction matrix is the identity on the plane") {
  auto geo = geo_r2();
  const MatrixEstimate est = reconstruction_matrix(*geo, 200000, 13);
  CHECK(est.m == 2);
  CHECK(est.max_deviation_from_identity() <= 0.02);
}

TEST_CASE("sphere-average constant through both routes on the circle") {
  auto geo = geo_r2();
  HVec v;
  v[0] = 1.0;
  // avg over the unit circle of <e1, y>^2 is 1/2
  const MCResult mc = barbieri_constant_mc(*geo, 2.0, v, 200000, 19);
  CHECK(mc.value == doctest::Approx(0.5).epsilon(0.02));
  CHECK(barbieri_constant_ball(*geo, 2.0, v, 200000) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("truncated energy identity pieces are finite and positive") {
  auto geo = geo_r1();
  const ScalarField f = bump(geo->group, Point{}, 1.0);
  const LudwigResult lr = ludwig_lhs(*geo, f, 2.0, 0.4, 1.0, 2000, 32);
  CHECK(lr.value > 0.0);
  CHECK(lr.tail_bound > 0.0);
  CHECK(std::isfinite(lr.value));
  CHECK_THROWS(ludwig_lhs(*geo, f, 2.0, 1.5, 1.0, 100, 8));
}
