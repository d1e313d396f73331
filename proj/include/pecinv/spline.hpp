#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "pecinv/errors.hpp"

namespace pecinv {

/// Natural cubic spline through (x, y) nodes; x strictly increasing,
/// possibly non-uniform. Queries outside [x.front(), x.back()] throw.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size()) throw ShapeError("CubicSpline: x/y length mismatch");
    if (n < 3) throw ShapeError("CubicSpline: need at least 3 nodes");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw ShapeError("CubicSpline: abscissae must be strictly increasing");
    build();
  }

  double operator()(double x) const {
    const double eps = 1e-12 * (x_.back() - x_.front());
    if (x < x_.front() - eps || x > x_.back() + eps)
      throw RangeError("CubicSpline: query outside tabulated range");
    x = std::clamp(x, x_.front(), x_.back());
    std::size_t k = segment(x);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - x) / h;
    const double b = (x - x_[k]) / h;
    return a * y_[k] + b * y_[k + 1] +
           ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
  }

  double derivative(double x) const {
    const double eps = 1e-12 * (x_.back() - x_.front());
    if (x < x_.front() - eps || x > x_.back() + eps)
      throw RangeError("CubicSpline: query outside tabulated range");
    x = std::clamp(x, x_.front(), x_.back());
    std::size_t k = segment(x);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - x) / h;
    const double b = (x - x_[k]) / h;
    return (y_[k + 1] - y_[k]) / h +
           h / 6.0 * ((3.0 * b * b - 1.0) * m_[k + 1] - (3.0 * a * a - 1.0) * m_[k]);
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::size_t segment(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t k = static_cast<std::size_t>(it - x_.begin());
    if (k == 0) return 0;
    if (k >= x_.size()) return x_.size() - 2;
    return k - 1;
  }

  // Second derivatives m_ from the natural-boundary tridiagonal system.
  void build() {
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x_[i] - x_[i - 1];
      const double hr = x_[i + 1] - x_[i];
      const double sig = hl / (hl + hr);
      const double p = sig * m_[i - 1] + 2.0;
      m_[i] = (sig - 1.0) / p;
      rhs[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
      rhs[i] = (6.0 * rhs[i] / (hl + hr) - sig * rhs[i - 1]) / p;
    }
    m_[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = m_[i] * m_[i + 1] + rhs[i];
    m_[0] = 0.0;
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace pecinv
