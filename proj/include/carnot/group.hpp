#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/util.hpp"

namespace carnot {

// A Carnot group of step <= 2 in exponential coordinates. The group product
// is vector addition plus a bilinear correction on the second layer:
//   (x * y)_{m1+l} = x_{m1+l} + y_{m1+l} + 1/2 <x_hor, B_l y_hor>
// with each B_l skew-symmetric, so the identity is 0 and the inverse is -x.
class GroupSpec {
 public:
  static GroupSpec euclidean(int n) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("euclidean: bad dimension");
    GroupSpec g;
    g.n_ = n;
    g.step_ = 1;
    g.layer_dims_ = {n};
    for (int i = 0; i < n; ++i) g.weights_[static_cast<std::size_t>(i)] = 1;
    g.q_ = n;
    g.name_ = "R" + std::to_string(n);
    return g;
  }

  // First Heisenberg group: x*y adds (x1 y2 - x2 y1)/2 to the third
  // coordinate, dilations (l x1, l x2, l^2 x3), Q = 4.
  static GroupSpec heisenberg() {
    std::vector<double> b = {0.0, 1.0, -1.0, 0.0};  // row-major 2x2
    GroupSpec g = step2(2, {b});
    g.name_ = "H1";
    return g;
  }

  // Generic step-2 group from skew-symmetric m1 x m1 correction matrices,
  // one per second-layer coordinate (row-major).
  static GroupSpec step2(int m1, const std::vector<std::vector<double>>& skew) {
    const int m2 = static_cast<int>(skew.size());
    const int n = m1 + m2;
    if (m1 < 1 || m2 < 1 || n > kMaxDim) throw std::invalid_argument("step2: bad layer dims");
    GroupSpec g;
    g.n_ = n;
    g.step_ = 2;
    g.layer_dims_ = {m1, m2};
    for (int i = 0; i < m1; ++i) g.weights_[static_cast<std::size_t>(i)] = 1;
    for (int i = m1; i < n; ++i) g.weights_[static_cast<std::size_t>(i)] = 2;
    g.q_ = m1 + 2 * m2;
    g.skew_ = skew;
    for (const auto& b : skew) {
      if (static_cast<int>(b.size()) != m1 * m1) throw std::invalid_argument("step2: matrix size");
      for (int r = 0; r < m1; ++r)
        for (int c = 0; c < m1; ++c)
          if (std::abs(b[static_cast<std::size_t>(r * m1 + c)] + b[static_cast<std::size_t>(c * m1 + r)]) > 1e-12)
            throw std::invalid_argument("step2: correction matrix not skew-symmetric");
    }
    g.name_ = "step2(" + std::to_string(m1) + "+" + std::to_string(m2) + ")";
    return g;
  }

  int n() const { return n_; }
  int step() const { return step_; }
  int m1() const { return layer_dims_[0]; }
  int m2() const { return step_ == 2 ? layer_dims_[1] : 0; }
  int Q() const { return q_; }
  int weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
  const std::string& name() const { return name_; }

  Point multiply(const Point& x, const Point& y) const {
    Point z;
    for (int i = 0; i < n_; ++i) z[i] = x[i] + y[i];
    const int m1 = layer_dims_[0];
    for (int l = 0; l < m2(); ++l) {
      const auto& b = skew_[static_cast<std::size_t>(l)];
      double corr = 0.0;
      for (int r = 0; r < m1; ++r) {
        double row = 0.0;
        for (int c = 0; c < m1; ++c) row += b[static_cast<std::size_t>(r * m1 + c)] * y[c];
        corr += x[r] * row;
      }
      z[m1 + l] += 0.5 * corr;
    }
    return z;
  }

  Point inverse(const Point& x) const {
    Point z;
    for (int i = 0; i < n_; ++i) z[i] = -x[i];
    return z;
  }

  Point dilate(double lambda, const Point& x) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("dilate: lambda must be positive");
    Point z;
    for (int i = 0; i < n_; ++i) {
      double f = lambda;
      for (int w = 1; w < weights_[static_cast<std::size_t>(i)]; ++w) f *= lambda;
      z[i] = f * x[i];
    }
    return z;
  }

  // Column i of the horizontal frame at x:
  //   X_i(x) = e_i + 1/2 sum_l <x_hor, B_l e_i> e_{m1+l}.
  // At the origin the columns are the first m1 standard basis vectors.
  Point frame_column(const Point& x, int i) const {
    const int m1 = layer_dims_[0];
    if (i < 0 || i >= m1) throw std::invalid_argument("frame_column: index outside horizontal layer");
    Point col;
    col[i] = 1.0;
    for (int l = 0; l < m2(); ++l) {
      const auto& b = skew_[static_cast<std::size_t>(l)];
      double corr = 0.0;
      for (int r = 0; r < m1; ++r) corr += x[r] * b[static_cast<std::size_t>(r * m1 + i)];
      col[m1 + l] = 0.5 * corr;
    }
    return col;
  }

  // pi_x(h): coefficients of the horizontal projection; the first m1
  // coordinates of h, independent of the base point.
  HVec pi(const Point& h) const {
    HVec v;
    for (int i = 0; i < m1(); ++i) v[i] = h[i];
    return v;
  }

  // Central difference of t -> f(x * (t e_i)) along a horizontal direction.
  double X_derivative(const std::function<double(const Point&)>& f, int i, const Point& x,
                      double step) const {
    if (i < 0 || i >= m1()) throw std::invalid_argument("X_derivative: index outside horizontal layer");
    if (!(step > 0.0)) throw std::invalid_argument("X_derivative: step must be positive");
    Point e;
    e[i] = step;
    const double fp = f(multiply(x, e));
    e[i] = -step;
    const double fm = f(multiply(x, e));
    return (fp - fm) / (2.0 * step);
  }

  // Image of an axis box under {s * h : s in box, N-ball h in hbox},
  // bounded coordinatewise. Exact for the first layer; second-layer bounds
  // use |<s,B h>| <= sum |B_ab| max|s_a| hbox_b.
  Box thicken(const Box& box, const Box& hbox) const {
    Box out = box;
    const int m1 = layer_dims_[0];
    for (int i = 0; i < n_; ++i) {
      out.lo[static_cast<std::size_t>(i)] += hbox.lo[static_cast<std::size_t>(i)];
      out.hi[static_cast<std::size_t>(i)] += hbox.hi[static_cast<std::size_t>(i)];
    }
    for (int l = 0; l < m2(); ++l) {
      const auto& b = skew_[static_cast<std::size_t>(l)];
      double bound = 0.0;
      for (int r = 0; r < m1; ++r) {
        const double smax = std::max(std::abs(box.lo[static_cast<std::size_t>(r)]),
                                     std::abs(box.hi[static_cast<std::size_t>(r)]));
        for (int c = 0; c < m1; ++c) {
          const double hmax = std::max(std::abs(hbox.lo[static_cast<std::size_t>(c)]),
                                       std::abs(hbox.hi[static_cast<std::size_t>(c)]));
          bound += std::abs(b[static_cast<std::size_t>(r * m1 + c)]) * smax * hmax;
        }
      }
      out.lo[static_cast<std::size_t>(m1 + l)] -= 0.5 * bound;
      out.hi[static_cast<std::size_t>(m1 + l)] += 0.5 * bound;
    }
    return out;
  }

 private:
  int n_ = 0;
  int step_ = 1;
  int q_ = 0;
  std::vector<int> layer_dims_;
  std::array<int, kMaxDim> weights_{};
  std::vector<std::vector<double>> skew_;
  std::string name_;
};

}  // namespace carnot
