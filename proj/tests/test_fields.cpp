#include <doctest.h>

#include <cmath>

#include "carnot/fields.hpp"
#include "carnot/quad.hpp"

using namespace carnot;

namespace {
Point pt3(double a, double b, double c) {
  Point p;
  p[0] = a;
  p[1] = b;
  p[2] = c;
  return p;
}
}  // namespace

TEST_CASE("bump value, support and gradient") {
  const GroupSpec g = GroupSpec::heisenberg();
  const ScalarField f = bump(g, Point{}, 1.0);
  CHECK(f.eval(Point{}) == doctest::Approx(std::exp(-1.0)));
  CHECK(f.eval(pt3(1.1, 0.0, 0.0)) == 0.0);
  CHECK(f.eval(pt3(0.0, 0.0, 1.1)) == 0.0);  // second-layer halfwidth is radius^2

  // exact partials against central differences
  const Point x = pt3(0.3, -0.2, 0.4);
  const Point df = f.eucl_grad(x);
  for (int i = 0; i < 3; ++i) {
    Point xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    CHECK(df[i] == doctest::Approx((f.eval(xp) - f.eval(xm)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("frame pullback matches the frame on a vertical coordinate") {
  const GroupSpec g = GroupSpec::heisenberg();
  ScalarField f;
  f.name = "x3";
  f.eval = [](const Point& p) { return p[2]; };
  f.eucl_grad = [](const Point&) {
    Point d;
    d[2] = 1.0;
    return d;
  };
  // X_1 x3 = -x2/2, X_2 x3 = x1/2
  const HVec v = frame_pullback(g, f, pt3(1.0, 2.0, 0.0));
  CHECK(v[0] == doctest::Approx(-1.0));
  CHECK(v[1] == doctest::Approx(0.5));
}

TEST_CASE("poly_cutoff gradient at the origin equals its coefficients") {
  const GroupSpec g = GroupSpec::heisenberg();
  HVec a;
  a[0] = 0.8;
  a[1] = -0.6;
  const ScalarField f = poly_cutoff(g, a, 1.0);
  CHECK(f.eval(Point{}) == 0.0);
  const HVec v = frame_pullback(g, f, Point{});
  CHECK(v[0] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(-0.6).epsilon(1e-14));
}

TEST_CASE("ball indicator mass and missing gradient") {
  const GroupSpec g = GroupSpec::heisenberg();
  const NormSpec norm = make_koranyi_norm();
  const ScalarField f = ball_indicator(g, norm, Point{}, 0.7);
  CHECK(f.smooth == false);
  CHECK_THROWS(frame_pullback(g, f, Point{}));

  const double pi = std::acos(-1.0);
  const double expect = pi * pi / 8.0 * std::pow(0.7, 4);  // C_N r^Q
  const BoxGrid grid = make_grid(f.support_box, 90);
  const double mass = integrate_box([&](const Point& x) { return f.eval(x); }, grid);
  CHECK(mass == doctest::Approx(expect).epsilon(0.02));

  // off-center ball: indicator tests N(c^{-1} x) < r
  const Point c = pt3(0.5, 0.0, 0.2);
  const ScalarField fc = ball_indicator(g, norm, c, 0.3);
  CHECK(fc.eval(c) == 1.0);
  CHECK(fc.support_box.contains(c));
}

TEST_CASE("smoothed ball indicator interpolates the indicator") {
  const GroupSpec g = GroupSpec::heisenberg();
  const NormSpec norm = make_koranyi_norm();
  const ScalarField f = smoothed_ball_indicator(g, norm, 1.0, 0.25);
  CHECK(f.eval(Point{}) == 1.0);
  CHECK(f.eval(pt3(0.5, 0.0, 0.0)) == 1.0);                     // N = 0.5 <= r - sigma
  CHECK(f.eval(pt3(1.3, 0.0, 0.0)) == 0.0);                     // N = 1.3 >= r + sigma
  const double mid = f.eval(pt3(1.05, 0.0, 0.0));
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);

  const Point x = pt3(0.9, 0.3, 0.1);
  const Point df = f.eucl_grad(x);
  for (int i = 0; i < 3; ++i) {
    Point xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    CHECK(df[i] == doctest::Approx((f.eval(xp) - f.eval(xm)) / 2e-6).epsilon(1e-5));
  }
  CHECK_THROWS(smoothed_ball_indicator(g, norm, 1.0, 1.5));
}
