#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/potential.hpp"
#include "pecinv/spectrum.hpp"
#include "pecinv/units.hpp"

namespace pecinv {

/// Morse model V(R) = T_e + D_e (e^{-2 beta (R-R_e)} - 2 e^{-beta (R-R_e)}).
/// Stored in atomic units (hartree, bohr); T_e is the asymptote, so the
/// minimum is T_e - D_e at R_e.
struct MorseParams {
  double T_e = 0.0;   // hartree
  double D_e = 0.0;   // hartree
  double beta = 0.0;  // 1/bohr
  double R_e = 0.0;   // bohr
};

inline double morse_eval(const MorseParams& p, double r) {
  const double x = std::exp(-p.beta * (r - p.R_e));
  return p.T_e + p.D_e * (x * x - 2.0 * x);
}

inline PotentialCurve morse_curve(const MorseParams& p, const RadialGrid& grid) {
  return PotentialCurve::from_function(grid, [&p](double r) { return morse_eval(p, r); });
}

/// Analytic J=0 Morse level: E_v = T_e - D_e + w(v+1/2) - wx(v+1/2)^2
/// with w = beta sqrt(2 D_e / mu), wx = beta^2 / (2 mu).
inline double morse_level(const MorseParams& p, double reduced_mass, int v) {
  const double w = p.beta * std::sqrt(2.0 * p.D_e / reduced_mass);
  const double wx = p.beta * p.beta / (2.0 * reduced_mass);
  const double u = v + 0.5;
  return p.T_e - p.D_e + w * u - wx * u * u;
}

/// One observed band origin: upper-state energy (hartree, relative to the
/// ground-potential minimum gauge) at its actual J.
struct BandOrigin {
  int v = 0;
  int J = 0;
  double energy = 0.0;
};

struct MorseEnergyFit {
  MorseParams params;               // R_e left untouched from the seed (or 0)
  std::vector<double> residuals;    // input minus fitted level, hartree
  int iterations = 0;
  bool grid_refined = false;
};

namespace detail {

// Least-squares solve of E = a0 + a1 u - a2 u^2, u = v + 1/2 (exact for 3 pts).
inline std::array<double, 3> fit_level_formula(const std::vector<BandOrigin>& levels,
                                               const std::vector<double>& targets) {
  double m[3][3] = {};
  double rhs[3] = {};
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double u = levels[k].v + 0.5;
    const double row[3] = {1.0, u, -u * u};
    for (int a = 0; a < 3; ++a) {
      rhs[a] += row[a] * targets[k];
      for (int b = 0; b < 3; ++b) m[a][b] += row[a] * row[b];
    }
  }
  // Gaussian elimination with partial pivoting on the 3x3 normal equations.
  int idx[3] = {0, 1, 2};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[idx[r]][c]) > std::abs(m[idx[piv]][c])) piv = r;
    std::swap(idx[c], idx[piv]);
    const double d = m[idx[c]][c];
    if (std::abs(d) < 1e-300) throw FitInfeasible("morse fit: singular level system");
    for (int r = c + 1; r < 3; ++r) {
      const double f = m[idx[r]][c] / d;
      for (int cc = c; cc < 3; ++cc) m[idx[r]][cc] -= f * m[idx[c]][cc];
      rhs[idx[r]] -= f * rhs[idx[c]];
    }
  }
  std::array<double, 3> sol{};
  for (int c = 2; c >= 0; --c) {
    double s = rhs[idx[c]];
    for (int cc = c + 1; cc < 3; ++cc) s -= m[idx[c]][cc] * sol[static_cast<std::size_t>(cc)];
    sol[static_cast<std::size_t>(c)] = s / m[idx[c]][c];
  }
  return sol;  // {T_e - D_e, w, wx}
}

inline MorseParams params_from_formula(double offset, double w, double wx, double mu,
                                       double R_e) {
  if (!(wx > 0.0))
    throw FitInfeasible("morse fit: inferred anharmonicity is not positive");
  if (!(w > 0.0)) throw FitInfeasible("morse fit: inferred harmonic frequency <= 0");
  MorseParams p;
  p.beta = std::sqrt(2.0 * mu * wx);
  p.D_e = w * w / (4.0 * wx);
  p.T_e = offset + p.D_e;
  p.R_e = R_e;
  return p;
}

}  // namespace detail

/// Fit (T_e, D_e, beta) to observed band origins via the analytic Morse level
/// formula. With distinct J the rigid-rotor estimate J(J+1)/(2 mu R_e^2) is
/// first removed (this needs R_e). When the grid is also supplied, the fit is
/// iterated until the grid-solved levels at the actual J reproduce the inputs.
inline MorseEnergyFit fit_morse_energies(const std::vector<BandOrigin>& origins,
                                         double reduced_mass,
                                         std::optional<double> R_e = std::nullopt,
                                         std::optional<RadialGrid> grid = std::nullopt,
                                         double tol_cm = 1e-3, int max_iter = 30) {
  if (origins.size() < 3)
    throw InsufficientData("morse fit: need at least three band origins");
  bool mixed_J = false;
  for (const auto& o : origins) mixed_J |= o.J != origins.front().J;
  if (mixed_J && !R_e)
    throw InsufficientData(
        "morse fit: band origins at distinct J need an R_e estimate");

  std::vector<double> targets(origins.size());
  for (std::size_t k = 0; k < origins.size(); ++k) {
    targets[k] = origins[k].energy;
    if (R_e && origins[k].J > 0)
      targets[k] -= origins[k].J * (origins[k].J + 1.0) /
                    (2.0 * reduced_mass * *R_e * *R_e);
  }

  auto sol = detail::fit_level_formula(origins, targets);
  MorseEnergyFit fit;
  fit.params = detail::params_from_formula(sol[0], sol[1], sol[2], reduced_mass,
                                           R_e.value_or(0.0));

  if (R_e && grid) {
    // Iterate pseudo-targets so grid levels at the actual J match the inputs.
    fit.grid_refined = true;
    int v_max = 0;
    for (const auto& o : origins) v_max = std::max(v_max, o.v);
    const double tol = units::cm_to_hartree(tol_cm);
    for (int it = 0; it < max_iter; ++it) {
      ++fit.iterations;
      PotentialCurve vm = morse_curve(fit.params, *grid);
      fit.residuals.assign(origins.size(), 0.0);
      double worst = 0.0;
      for (std::size_t k = 0; k < origins.size(); ++k) {
        auto states = solve_bound_states(
            EffectivePotentialSpec(vm, reduced_mass, origins[k].J), origins[k].v);
        const double r = origins[k].energy - states.back().energy;
        fit.residuals[k] = r;
        worst = std::max(worst, std::abs(r));
      }
      if (worst < tol) return fit;
      for (std::size_t k = 0; k < origins.size(); ++k) targets[k] += fit.residuals[k];
      sol = detail::fit_level_formula(origins, targets);
      fit.params = detail::params_from_formula(sol[0], sol[1], sol[2], reduced_mass,
                                               *R_e);
    }
    throw FitInfeasible("morse fit: grid refinement did not converge");
  }

  fit.residuals.assign(origins.size(), 0.0);
  for (std::size_t k = 0; k < origins.size(); ++k) {
    double model = morse_level(fit.params, reduced_mass, origins[k].v);
    if (R_e)
      model += origins[k].J * (origins[k].J + 1.0) /
               (2.0 * reduced_mass * *R_e * *R_e);
    fit.residuals[k] = origins[k].energy - model;
  }
  return fit;
}

struct ReFitResult {
  double R_e = 0.0;
  double misfit = 0.0;
  std::vector<std::pair<double, double>> scan;  // (R_e candidate, misfit)
};

/// Scan R_e over [R_lo, R_hi], matching model Franck-Condon intensities to
/// the measured ones (both max-normalized), then golden-section refine the
/// best grid point to 1e-4 bohr.
inline ReFitResult fit_morse_Re(const MorseParams& partial,
                                const SpectrumDataset& measured,
                                const PotentialCurve& ground, double reduced_mass,
                                double R_lo, double R_hi, int steps) {
  if (steps < 3) throw ConfigError("fit_morse_Re: need at least 3 scan steps");
  if (!(R_hi > R_lo)) throw ConfigError("fit_morse_Re: empty search window");
  if (measured.lines.empty()) throw InsufficientData("fit_morse_Re: no measured lines");
  const RadialGrid& grid = ground.grid();

  // Pre-solve ground states once per band J.
  struct BandData {
    Band band;
    std::vector<RovibState> lowers;
    std::vector<std::size_t> line_idx;  // indices into measured.lines
  };
  std::vector<BandData> bands;
  for (const Band& b : measured.bands) {
    BandData bd;
    bd.band = b;
    int v_lo_max = 0;
    for (std::size_t i = 0; i < measured.lines.size(); ++i) {
      const auto& l = measured.lines[i];
      if (l.v_upper == b.v_upper && l.J_upper == b.J_upper) {
        bd.line_idx.push_back(i);
        v_lo_max = std::max(v_lo_max, l.v_lower);
      }
    }
    if (bd.line_idx.empty()) continue;
    bd.lowers = solve_bound_states(EffectivePotentialSpec(ground, reduced_mass, b.J_upper),
                                   v_lo_max);
    bands.push_back(std::move(bd));
  }
  if (bands.empty()) throw InsufficientData("fit_morse_Re: no usable bands");

  double meas_max = measured.max_intensity();
  if (!(meas_max > 0.0)) throw InsufficientData("fit_morse_Re: all intensities zero");

  auto misfit = [&](double re) {
    MorseParams p = partial;
    p.R_e = re;
    PotentialCurve vm = morse_curve(p, grid);
    std::vector<double> model, meas;
    for (const auto& bd : bands) {
      auto uppers = solve_bound_states(
          EffectivePotentialSpec(vm, reduced_mass, bd.band.J_upper), bd.band.v_upper);
      const RovibState& up = uppers.back();
      for (std::size_t idx : bd.line_idx) {
        const auto& l = measured.lines[idx];
        const double f =
            franck_condon_amplitude(grid, bd.lowers[static_cast<std::size_t>(l.v_lower)], up);
        model.push_back(f * f);
        meas.push_back(l.intensity / meas_max);
      }
    }
    const double mmax = *std::max_element(model.begin(), model.end());
    double s = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      const double d = (mmax > 0.0 ? model[i] / mmax : model[i]) - meas[i];
      s += d * d;
    }
    return s;
  };

  ReFitResult out;
  std::size_t best = 0;
  for (int i = 0; i < steps; ++i) {
    const double re = R_lo + (R_hi - R_lo) * i / (steps - 1);
    const double m = misfit(re);
    out.scan.emplace_back(re, m);
    if (m < out.scan[best].second) best = static_cast<std::size_t>(i);
  }
  if (best == 0 || best + 1 == out.scan.size())
    throw BoundaryHit("fit_morse_Re: minimizer at search boundary; widen the window");

  // golden-section on the bracketing interval
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = out.scan[best - 1].first, b = out.scan[best + 1].first;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = misfit(c), fd = misfit(d);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = misfit(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = misfit(d);
    }
  }
  out.R_e = 0.5 * (a + b);
  out.misfit = misfit(out.R_e);
  return out;
}

/// Plot-ready fit summary: parameters, per-level residuals, misfit table.
inline std::string morse_fit_report(const MorseEnergyFit& efit,
                                    const std::vector<BandOrigin>& origins,
                                    const ReFitResult* refit = nullptr) {
  std::ostringstream os;
  os.precision(10);
  const auto& p = efit.params;
  os << "# morse fit summary\n";
  os << "T_e_cm  " << units::hartree_to_cm(p.T_e) << "\n";
  os << "D_e_cm  " << units::hartree_to_cm(p.D_e) << "\n";
  os << "beta_inv_bohr  " << p.beta << "\n";
  os << "R_e_bohr  " << (refit ? refit->R_e : p.R_e) << "\n";
  os << "grid_refined  " << (efit.grid_refined ? "yes" : "no") << "\n";
  os << "# per-level residuals (input - fitted), cm-1\n";
  for (std::size_t k = 0; k < origins.size(); ++k)
    os << "residual v=" << origins[k].v << " J=" << origins[k].J << "  "
       << units::hartree_to_cm(efit.residuals[k]) << "\n";
  if (refit) {
    os << "# misfit vs R_e (bohr, sum-of-squares)\n";
    for (const auto& [re, m] : refit->scan) os << re << " " << m << "\n";
  }
  return os.str();
}

}  // namespace pecinv
