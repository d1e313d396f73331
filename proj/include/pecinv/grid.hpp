#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "pecinv/errors.hpp"

namespace pecinv {

/// Uniform radial grid in bohr. Immutable after construction.
class RadialGrid {
 public:
  RadialGrid(double r_min, double r_max, std::size_t n_points)
      : r_min_(r_min), r_max_(r_max), n_(n_points) {
    if (!(r_min > 0.0)) throw ConfigError("RadialGrid: r_min must be positive");
    if (!(r_max > r_min)) throw ConfigError("RadialGrid: r_max must exceed r_min");
    if (n_ < 3) throw ConfigError("RadialGrid: need at least 3 points");
    h_ = (r_max_ - r_min_) / static_cast<double>(n_ - 1);
  }

  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double point(std::size_t i) const { return r_min_ + h_ * static_cast<double>(i); }

  std::vector<double> points() const {
    std::vector<double> r(n_);
    for (std::size_t i = 0; i < n_; ++i) r[i] = point(i);
    return r;
  }

  std::vector<double> sample(const std::function<double(double)>& f) const {
    std::vector<double> v(n_);
    for (std::size_t i = 0; i < n_; ++i) v[i] = f(point(i));
    return v;
  }

  bool operator==(const RadialGrid& o) const {
    return r_min_ == o.r_min_ && r_max_ == o.r_max_ && n_ == o.n_;
  }
  bool operator!=(const RadialGrid& o) const { return !(*this == o); }

 private:
  double r_min_, r_max_;
  std::size_t n_;
  double h_;
};

/// Default grid for LiRb-scale problems.
inline RadialGrid default_grid() { return RadialGrid(4.0, 20.0, 2001); }

}  // namespace pecinv
