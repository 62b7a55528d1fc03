#include <doctest.h>

#include <cmath>

#include "carnot/group.hpp"

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

TEST_CASE("heisenberg product and inverse") {
  const GroupSpec g = GroupSpec::heisenberg();
  CHECK(g.n() == 3);
  CHECK(g.m1() == 2);
  CHECK(g.Q() == 4);

  const Point x = pt3(1.0, 2.0, 0.5);
  const Point y = pt3(-0.5, 1.0, 3.0);
  const Point z = g.multiply(x, y);
  CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(3.0).epsilon(1e-15));
  // third coordinate picks up (x1 y2 - x2 y1)/2 = (1*1 - 2*(-0.5))/2 = 1
  CHECK(z[2] == doctest::Approx(0.5 + 3.0 + 1.0).epsilon(1e-15));

  const Point xi = g.multiply(x, g.inverse(x));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(xi[i]) <= 1e-15);
}

TEST_CASE("associativity on random triples") {
  const std::vector<GroupSpec> groups = {GroupSpec::euclidean(3), GroupSpec::heisenberg()};
  for (const auto& g : groups) {
    Box box;
    box.n = g.n();
    for (int i = 0; i < g.n(); ++i) {
      box.lo[static_cast<std::size_t>(i)] = -2.0;
      box.hi[static_cast<std::size_t>(i)] = 2.0;
    }
    for (std::uint64_t s = 0; s < 1000; ++s) {
      const Point a = uniform_in_box(box, 1, 3 * s);
      const Point b = uniform_in_box(box, 1, 3 * s + 1);
      const Point c = uniform_in_box(box, 1, 3 * s + 2);
      const Point lhs = g.multiply(g.multiply(a, b), c);
      const Point rhs = g.multiply(a, g.multiply(b, c));
      for (int i = 0; i < g.n(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-12);
    }
  }
}

TEST_CASE("dilations are automorphisms") {
  const GroupSpec g = GroupSpec::heisenberg();
  const Point x = pt3(0.3, -1.2, 0.7);
  const Point y = pt3(1.1, 0.4, -0.2);
  for (double lam : {0.25, 1.0, 3.5}) {
    const Point lhs = g.dilate(lam, g.multiply(x, y));
    const Point rhs = g.multiply(g.dilate(lam, x), g.dilate(lam, y));
    for (int i = 0; i < 3; ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-13));
  }
  // weights: first layer scales by lambda, second by lambda^2
  const Point d = g.dilate(2.0, x);
  CHECK(d[0] == doctest::Approx(0.6));
  CHECK(d[2] == doctest::Approx(2.8));
}

TEST_CASE("frame columns and X derivative") {
  const GroupSpec g = GroupSpec::heisenberg();
  // X_1 = e1 - (x2/2) e3, X_2 = e2 + (x1/2) e3
  const Point x = pt3(1.0, 2.0, 0.0);
  const Point c0 = g.frame_column(x, 0);
  const Point c1 = g.frame_column(x, 1);
  CHECK(c0[0] == doctest::Approx(1.0));
  CHECK(c0[2] == doctest::Approx(-1.0));
  CHECK(c1[1] == doctest::Approx(1.0));
  CHECK(c1[2] == doctest::Approx(0.5));

  // f = x3: X_1 f = -x2/2, X_2 f = x1/2
  auto f = [](const Point& p) { return p[2]; };
  CHECK(g.X_derivative(f, 0, x, 1e-4) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(g.X_derivative(f, 1, x, 1e-4) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK_THROWS(g.X_derivative(f, 2, x, 1e-4));
}

TEST_CASE("step2 validates skew symmetry") {
  CHECK_THROWS(GroupSpec::step2(2, {{0.0, 1.0, 1.0, 0.0}}));
  CHECK_THROWS(GroupSpec::step2(2, {{0.0, 1.0, -1.0}}));
  const GroupSpec g = GroupSpec::step2(3, {{0, 1, 0, -1, 0, 0, 0, 0, 0},
                                           {0, 0, 1, 0, 0, 0, -1, 0, 0}});
  CHECK(g.n() == 5);
  CHECK(g.Q() == 7);
}

TEST_CASE("thicken contains all products") {
  const GroupSpec g = GroupSpec::heisenberg();
  Box box;
  box.n = 3;
  box.lo = {-1.0, -1.0, -0.5};
  box.hi = {1.0, 1.0, 0.5};
  Box hbox;
  hbox.n = 3;
  hbox.lo = {-0.3, -0.3, -0.1};
  hbox.hi = {0.3, 0.3, 0.1};
  const Box out = g.thicken(box, hbox);
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const Point x = uniform_in_box(box, 7, 2 * s);
    const Point h = uniform_in_box(hbox, 7, 2 * s + 1);
    CHECK(out.contains(g.multiply(x, h)));
  }
}
