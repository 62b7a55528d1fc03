#include <doctest.h>

#include <cmath>

#include "carnot/gauge.hpp"

using namespace carnot;

namespace {
Point pt3(double a, double b, double c) {
  Point p;
  p[0] = a;
  p[1] = b;
  p[2] = c;
  return p;
}

Point sample_off_origin(const Box& box, std::uint64_t ctr, const NormSpec& norm) {
  Point x;
  do {
    x = uniform_in_box(box, 11, ctr);
    ctr += 1000003;
  } while (norm.eval(x) < 0.3);
  return x;
}
}  // namespace

TEST_CASE("koranyi norm values and gradient") {
  const GroupSpec g = GroupSpec::heisenberg();
  const NormSpec norm = make_koranyi_norm();

  CHECK(norm.eval(pt3(1.0, 0.0, 0.0)) == doctest::Approx(1.0));
  CHECK(norm.eval(pt3(0.0, 0.0, 1.0)) == doctest::Approx(2.0));

  // gradient vanishes on the vertical axis
  const HVec gv = norm.grad(pt3(0.0, 0.0, 1.0));
  CHECK(std::abs(gv[0]) <= 1e-15);
  CHECK(std::abs(gv[1]) <= 1e-15);

  const Box box = norm.bounding_box(2.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Point x = sample_off_origin(box, s, norm);
    const HVec a = norm.grad(x);
    const HVec fd = grad_norm_fd(g, norm, x, 1e-6);
    const double scale = std::max(1.0, a.norm(2));
    CHECK(std::abs(a[0] - fd[0]) / scale <= 1e-6);
    CHECK(std::abs(a[1] - fd[1]) / scale <= 1e-6);
    // |grad N| = sqrt(x1^2 + x2^2) / N
    const double expect = std::sqrt(x[0] * x[0] + x[1] * x[1]) / norm.eval(x);
    CHECK(a.norm(2) == doctest::Approx(expect).epsilon(1e-10));
  }

  // |grad N| = 1 on the horizontal circle: the gauge is eikonal there
  const Point h = pt3(0.6, 0.8, 0.0);
  CHECK(norm.eval(h) == doctest::Approx(1.0));
  CHECK(norm.grad(h).norm(2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("koranyi homogeneity and symmetry") {
  const GroupSpec g = GroupSpec::heisenberg();
  const NormSpec norm = make_koranyi_norm();
  const Box box = norm.bounding_box(2.0);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Point x = uniform_in_box(box, 23, s);
    const double nx = norm.eval(x);
    CHECK(norm.eval(g.inverse(x)) == doctest::Approx(nx).epsilon(1e-12));
    for (double lam : {0.5, 2.0}) {
      CHECK(norm.eval(g.dilate(lam, x)) == doctest::Approx(lam * nx).epsilon(1e-12));
    }
  }
}

TEST_CASE("euclidean and lq norms") {
  const GroupSpec g = GroupSpec::euclidean(2);
  const NormSpec e = make_euclidean_norm(2);
  Point x;
  x[0] = 3.0;
  x[1] = 4.0;
  CHECK(e.eval(x) == doctest::Approx(5.0));
  CHECK(e.grad(x).norm(2) == doctest::Approx(1.0).epsilon(1e-14));

  const NormSpec l4 = make_lq_norm(2, 4.0);
  CHECK(l4.eval(x) == doctest::Approx(std::pow(81.0 + 256.0, 0.25)));
  const HVec a = l4.grad(x);
  const HVec fd = grad_norm_fd(g, l4, x, 1e-6);
  CHECK(a[0] == doctest::Approx(fd[0]).epsilon(1e-6));
  CHECK(a[1] == doctest::Approx(fd[1]).epsilon(1e-6));
  CHECK_THROWS(make_lq_norm(2, 0.5));
}

TEST_CASE("smooth gauge on a step-2 group") {
  const GroupSpec g = GroupSpec::heisenberg();
  const NormSpec n4 = make_smooth_gauge(g);
  const Point x = pt3(0.7, -0.4, 0.3);
  const double nx = n4.eval(x);
  CHECK(nx == doctest::Approx(std::pow(std::pow(0.7, 4) + std::pow(0.4, 4) + 0.09, 0.25)));
  for (double lam : {0.5, 3.0}) {
    CHECK(n4.eval(g.dilate(lam, x)) == doctest::Approx(lam * nx).epsilon(1e-12));
  }
  // coordinate gradient consistent with a plain central difference
  const Point dn = n4.eucl_grad(x);
  for (int i = 0; i < 3; ++i) {
    Point xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    const double fd = (n4.eval(xp) - n4.eval(xm)) / 2e-6;
    CHECK(dn[i] == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK_THROWS(make_smooth_gauge(GroupSpec::euclidean(2)));
}

TEST_CASE("norm diagnostics on clean norms") {
  const GroupSpec h = GroupSpec::heisenberg();
  const NormDiagnostics d = norm_diagnostics(h, make_koranyi_norm(), 500, 9);
  CHECK(d.triangle_violations == 0);
  CHECK(d.max_symmetry_error <= 1e-12);
  CHECK(d.max_homogeneity_error <= 1e-12);
  CHECK(d.max_grad_sphere <= 1.0 + 1e-9);
  CHECK(d.min_grad_sphere >= 0.0);

  const GroupSpec r2 = GroupSpec::euclidean(2);
  const NormDiagnostics de = norm_diagnostics(r2, make_euclidean_norm(2), 500, 9);
  CHECK(de.triangle_violations == 0);
  CHECK(de.min_grad_sphere == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(de.max_grad_sphere == doctest::Approx(1.0).epsilon(1e-9));
}
