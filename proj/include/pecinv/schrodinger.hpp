#pragma once

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/potential.hpp"
#include "pecinv/quadrature.hpp"

namespace pecinv {

/// One bound rovibrational eigenstate on the full grid.
/// Wavefunction is Simpson-normalized, sign fixed positive on the inner lobe.
struct RovibState {
  int v = 0;
  int J = 0;
  double energy = 0.0;  // hartree
  std::vector<double> wavefunction;
  bool box_contaminated = false;
};

/// Electronic curve + centrifugal term J(J+1)/(2 mu R^2), atomic units.
struct EffectivePotentialSpec {
  PotentialCurve electronic;
  double reduced_mass;  // electron masses
  int J;

  EffectivePotentialSpec(PotentialCurve pot, double mu, int j)
      : electronic(std::move(pot)), reduced_mass(mu), J(j) {
    if (!(reduced_mass > 0.0)) throw ConfigError("reduced mass must be positive");
    if (J < 0) throw ConfigError("J must be non-negative");
  }

  std::vector<double> effective_values() const {
    const auto& g = electronic.grid();
    std::vector<double> v = electronic.values();
    const double cj = static_cast<double>(J) * (J + 1) / (2.0 * reduced_mass);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = g.point(i);
      v[i] += cj / (r * r);
    }
    return v;
  }
};

namespace detail {

// 8th-order central second-derivative stencil.
inline constexpr int fd_halfwidth = 4;
inline constexpr std::array<double, 5> fd_coeff = {
    -205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};

// Upper-band column-major storage of H over the interior points
// (Dirichlet walls), ldab = kd+1; A(i,j) at ab[kd + i - j + j*(kd+1)].
inline std::vector<double> build_band(const std::vector<double>& veff, double mu,
                                      double h, lapack_int n_int) {
  const int kd = fd_halfwidth;
  const double kin = -1.0 / (2.0 * mu * h * h);
  std::vector<double> ab(static_cast<std::size_t>(kd + 1) * n_int, 0.0);
  for (lapack_int j = 0; j < n_int; ++j) {
    ab[kd + j * (kd + 1)] = kin * fd_coeff[0] + veff[static_cast<std::size_t>(j) + 1];
    for (int d = 1; d <= kd && j - d >= 0; ++d)
      ab[kd - d + j * (kd + 1)] = kin * fd_coeff[static_cast<std::size_t>(d)];
  }
  return ab;
}

// y = H x on the interior (x, y length n_int).
inline void apply_band(const std::vector<double>& veff, double mu, double h,
                       std::span<const double> x, std::span<double> y) {
  const int kd = fd_halfwidth;
  const double kin = -1.0 / (2.0 * mu * h * h);
  const lapack_int n = static_cast<lapack_int>(x.size());
  for (lapack_int i = 0; i < n; ++i) {
    double s = (kin * fd_coeff[0] + veff[static_cast<std::size_t>(i) + 1]) * x[i];
    for (int d = 1; d <= kd; ++d) {
      const double c = kin * fd_coeff[static_cast<std::size_t>(d)];
      if (i - d >= 0) s += c * x[i - d];
      if (i + d < n) s += c * x[i + d];
    }
    y[i] = s;
  }
}

}  // namespace detail

/// Strict sign changes of the wavefunction, ignoring amplitudes below 1e-8.
inline int count_nodes(std::span<const double> psi) {
  int nodes = 0;
  int last_sign = 0;
  for (double a : psi) {
    if (std::abs(a) <= 1e-8) continue;
    const int s = a > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++nodes;
    last_sign = s;
  }
  return nodes;
}

inline int count_nodes(const RovibState& state) { return count_nodes(state.wavefunction); }

/// Lowest bound eigenstates v = 0..v_max of the effective potential.
///
/// Discretization: symmetric high-order finite-difference Hamiltonian on the
/// interior grid points with Dirichlet walls; eigenvalues from a banded
/// symmetric solver, eigenvectors by banded inverse iteration.
inline std::vector<RovibState> solve_bound_states(const EffectivePotentialSpec& spec,
                                                  int v_max) {
  if (v_max < 0) throw ConfigError("solve_bound_states: v_max must be >= 0");
  const RadialGrid& grid = spec.electronic.grid();
  const double h = grid.spacing();
  const lapack_int n_int = static_cast<lapack_int>(grid.size()) - 2;
  const int n_states = v_max + 1;
  if (n_states > n_int) throw ConfigError("solve_bound_states: v_max exceeds grid size");

  const std::vector<double> veff = spec.effective_values();
  std::vector<double> ab = detail::build_band(veff, spec.reduced_mass, h, n_int);

  const int kd = detail::fd_halfwidth;
  std::vector<double> w(static_cast<std::size_t>(n_states));
  lapack_int m = 0;
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n_states));
  std::vector<double> ab_copy = ab;  // dsbevx destroys the band
  lapack_int info = LAPACKE_dsbevx(
      LAPACK_COL_MAJOR, 'N', 'I', 'U', n_int, kd, ab_copy.data(), kd + 1, nullptr, 1,
      0.0, 0.0, 1, n_states, 2.0 * LAPACKE_dlamch('S'), &m, w.data(), nullptr, 1,
      ifail.data());
  if (info != 0 || m < n_states)
    throw NumericalFailure("solve_bound_states: banded eigensolver failed (info=" +
                           std::to_string(info) + ")");

  const double asymptote = veff.back();
  int n_bound = 0;
  for (int k = 0; k < n_states; ++k)
    if (w[static_cast<std::size_t>(k)] < asymptote) ++n_bound;
  if (n_bound < n_states)
    throw TooFewBoundStates("solve_bound_states: only " + std::to_string(n_bound) +
                                " bound states below the asymptote, requested " +
                                std::to_string(n_states),
                            n_bound);

  // Inverse iteration: banded LU of (H - lambda I) in general-band storage.
  const lapack_int ldgb = 3 * kd + 1;
  std::vector<double> gb(static_cast<std::size_t>(ldgb) * n_int);
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n_int));
  std::vector<double> x(static_cast<std::size_t>(n_int)),
      y(static_cast<std::size_t>(n_int));
  std::vector<std::vector<double>> vecs;
  vecs.reserve(static_cast<std::size_t>(n_states));

  for (int k = 0; k < n_states; ++k) {
    const double lambda = w[static_cast<std::size_t>(k)];
    // general-band layout: A(i,j) at gb[2kd + i - j + j*ldgb], kl = ku = kd
    std::fill(gb.begin(), gb.end(), 0.0);
    for (lapack_int j = 0; j < n_int; ++j) {
      for (int d = -kd; d <= kd; ++d) {
        const lapack_int i = j + d;
        if (i < 0 || i >= n_int) continue;
        const lapack_int bi = std::min(i, j), bj = std::max(i, j);
        const double a = ab[static_cast<std::size_t>(kd + bi - bj + bj * (kd + 1))];
        gb[static_cast<std::size_t>(2 * kd + i - j + j * ldgb)] =
            a - (i == j ? lambda : 0.0);
      }
    }
    info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_int, n_int, kd, kd, gb.data(), ldgb,
                          ipiv.data());
    if (info < 0)
      throw NumericalFailure("solve_bound_states: band factorization failed");

    std::mt19937 rng(0xbeef1234u + static_cast<unsigned>(k));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& xi : x) xi = uni(rng);

    double resid = 1.0;
    for (int it = 0; it < 8 && resid > 1e-11; ++it) {
      info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_int, kd, kd, 1, gb.data(), ldgb,
                            ipiv.data(), x.data(), n_int);
      if (info != 0)
        throw NumericalFailure("solve_bound_states: band solve failed");
      // project out previously converged states (guards near degeneracies)
      for (const auto& prev : vecs) {
        double dot = 0.0;
        for (lapack_int i = 0; i < n_int; ++i) dot += prev[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        for (lapack_int i = 0; i < n_int; ++i) x[static_cast<std::size_t>(i)] -= dot * prev[static_cast<std::size_t>(i)];
      }
      double norm = 0.0;
      for (double xi : x) norm += xi * xi;
      norm = std::sqrt(norm);
      if (!(norm > 0.0))
        throw NumericalFailure("solve_bound_states: inverse iteration collapsed");
      for (auto& xi : x) xi /= norm;
      detail::apply_band(veff, spec.reduced_mass, h, x, y);
      resid = 0.0;
      for (lapack_int i = 0; i < n_int; ++i)
        resid = std::max(resid, std::abs(y[static_cast<std::size_t>(i)] -
                                         lambda * x[static_cast<std::size_t>(i)]));
      resid /= std::max(1.0, std::abs(lambda));
    }
    vecs.push_back(x);
  }

  // Embed, normalize by grid quadrature, fix sign, flag contamination.
  std::vector<RovibState> states;
  states.reserve(static_cast<std::size_t>(n_states));
  for (int k = 0; k < n_states; ++k) {
    RovibState st;
    st.v = k;
    st.J = spec.J;
    st.energy = w[static_cast<std::size_t>(k)];
    st.wavefunction.assign(grid.size(), 0.0);
    for (lapack_int i = 0; i < n_int; ++i)
      st.wavefunction[static_cast<std::size_t>(i) + 1] =
          vecs[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];

    const double norm = std::sqrt(inner_product(grid, st.wavefunction, st.wavefunction));
    for (auto& a : st.wavefunction) a /= norm;

    double peak = 0.0;
    for (double a : st.wavefunction) peak = std::max(peak, std::abs(a));
    for (double a : st.wavefunction) {
      if (std::abs(a) >= 1e-3 * peak) {
        if (a < 0.0)
          for (auto& b : st.wavefunction) b = -b;
        break;
      }
    }
    const double edge = std::max(std::abs(st.wavefunction[1]),
                                 std::abs(st.wavefunction[grid.size() - 2]));
    st.box_contaminated = edge >= 1e-6;
    states.push_back(std::move(st));
  }
  return states;
}

/// H psi on the full grid (endpoints zero); for variational checks.
inline std::vector<double> apply_hamiltonian(const EffectivePotentialSpec& spec,
                                             std::span<const double> psi_full) {
  const RadialGrid& grid = spec.electronic.grid();
  if (psi_full.size() != grid.size())
    throw ShapeError("apply_hamiltonian: sample length does not match grid");
  const std::vector<double> veff = spec.effective_values();
  std::vector<double> out(grid.size(), 0.0);
  detail::apply_band(veff, spec.reduced_mass, grid.spacing(),
                     psi_full.subspan(1, grid.size() - 2),
                     std::span<double>(out).subspan(1, grid.size() - 2));
  return out;
}

}  // namespace pecinv
