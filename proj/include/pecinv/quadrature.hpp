#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/grid.hpp"

namespace pecinv {

/// Definite integral of uniformly sampled values with spacing h.
/// Composite Simpson for odd point counts, composite trapezoid otherwise.
inline double integrate_uniform(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) throw ShapeError("integrate: need at least 2 samples");
  if (n % 2 == 1) {
    double ends = f[0] + f[n - 1];
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i + 1 < n; i += 2) odd += f[i];
    for (std::size_t i = 2; i + 1 < n; i += 2) even += f[i];
    return h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
  }
  double s = 0.5 * (f[0] + f[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
  return h * s;
}

/// Integral of f sampled on every point of the grid.
inline double integrate(const RadialGrid& grid, std::span<const double> f) {
  if (f.size() != grid.size())
    throw ShapeError("integrate: sample length does not match grid");
  return integrate_uniform(f, grid.spacing());
}

/// Inner product <a|b> on the grid by the same quadrature rule.
inline double inner_product(const RadialGrid& grid, std::span<const double> a,
                            std::span<const double> b) {
  if (a.size() != b.size() || a.size() != grid.size())
    throw ShapeError("inner_product: sample length does not match grid");
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  return integrate_uniform(prod, grid.spacing());
}

}  // namespace pecinv
