#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/morse.hpp"
#include "pecinv/potential.hpp"
#include "pecinv/spectrum.hpp"
#include "pecinv/units.hpp"

namespace pecinv {

/// One signed transition element feeding the inversion sum.
struct SignedOverlap {
  int lower_index = 0;  // ground-state v at the band's J
  double d = 0.0;       // signed overlap
  double omega_cm = 0.0;
  Provenance provenance = Provenance::measured;
  bool sign_ambiguous = false;
};

struct BandOverlaps {
  Band band;
  std::vector<SignedOverlap> entries;
  double completeness = 0.0;  // sum of d^2
  bool flagged = false;       // completeness below 0.999
};

struct SignedOverlapSet {
  std::vector<BandOverlaps> bands;
  double measured_scale = 1.0;  // factor applied to sqrt(I_meas)

  std::vector<double> completeness_per_band() const {
    std::vector<double> c;
    for (const auto& b : bands) c.push_back(b.completeness);
    return c;
  }
};

/// Ground eigenstates solved at one band's J.
struct BandGroundStates {
  Band band;
  std::vector<RovibState> states;
};

/// Per-band sum of d^2 (with unit electronic dipole this is sum of f^2).
inline std::vector<double> completeness_report(const SignedOverlapSet& overlaps) {
  return overlaps.completeness_per_band();
}

namespace detail {

inline const BandGroundStates& find_band_states(
    const std::vector<BandGroundStates>& all, const Band& band) {
  for (const auto& g : all)
    if (g.band == band) return g;
  throw ShapeError("inversion: no ground states supplied for band v'=" +
                   std::to_string(band.v_upper) + " J'=" + std::to_string(band.J_upper));
}

inline void finish_band(BandOverlaps& b) {
  std::sort(b.entries.begin(), b.entries.end(),
            [](const SignedOverlap& x, const SignedOverlap& y) {
              return x.lower_index < y.lower_index;
            });
  b.completeness = 0.0;
  for (const auto& e : b.entries) b.completeness += e.d * e.d;
  b.flagged = b.completeness < 0.999;
}

}  // namespace detail

/// Merge measured magnitudes with model-derived signs, and fill every lower
/// state missing from the measured set with the full Morse-model overlap
/// (transition energy from the Morse upper level and the ground energies).
///
/// Measured magnitudes are brought onto the model overlap scale by a single
/// least-squares factor so the two provenances are mutually consistent; the
/// inversion formula is invariant under any further global rescale.
inline SignedOverlapSet regenerate_weak_lines(
    const MorseParams& morse, const RadialGrid& grid,
    const std::vector<BandGroundStates>& ground_states, const SpectrumDataset& measured,
    double reduced_mass, int n_lower) {
  if (n_lower < 1) throw ConfigError("regenerate_weak_lines: n_lower must be >= 1");

  const PotentialCurve vm = morse_curve(morse, grid);

  struct BandModel {
    Band band;
    const BandGroundStates* gs = nullptr;
    std::vector<double> f;  // model overlaps, i = 0..n_lower-1
    double upper_energy = 0.0;
  };
  std::vector<BandModel> models;
  for (const Band& band : measured.bands) {
    BandModel bm;
    bm.band = band;
    bm.gs = &detail::find_band_states(ground_states, band);
    if (static_cast<int>(bm.gs->states.size()) < n_lower)
      throw ShapeError("regenerate_weak_lines: ground state list shorter than n_lower");
    auto uppers = solve_bound_states(
        EffectivePotentialSpec(vm, reduced_mass, band.J_upper), band.v_upper);
    const RovibState& up = uppers.back();
    bm.upper_energy = up.energy;
    bm.f.resize(static_cast<std::size_t>(n_lower));
    for (int i = 0; i < n_lower; ++i)
      bm.f[static_cast<std::size_t>(i)] = franck_condon_amplitude(
          grid, bm.gs->states[static_cast<std::size_t>(i)], up);
    models.push_back(std::move(bm));
  }

  // Global scale matching lambda * sqrt(I_meas) ~ |f_model| over measured lines.
  double num = 0.0, den = 0.0;
  for (const auto& bm : models) {
    for (const auto& l : measured.lines) {
      if (l.v_upper != bm.band.v_upper || l.J_upper != bm.band.J_upper) continue;
      if (l.v_lower < 0 || l.v_lower >= n_lower) continue;
      const double root = std::sqrt(std::max(0.0, l.intensity));
      num += std::abs(bm.f[static_cast<std::size_t>(l.v_lower)]) * root;
      den += l.intensity;
    }
  }
  const double lambda = den > 0.0 ? num / den : 1.0;

  SignedOverlapSet out;
  out.measured_scale = lambda;
  for (const auto& bm : models) {
    BandOverlaps bo;
    bo.band = bm.band;
    std::vector<bool> covered(static_cast<std::size_t>(n_lower), false);
    for (const auto& l : measured.lines) {
      if (l.v_upper != bm.band.v_upper || l.J_upper != bm.band.J_upper) continue;
      if (l.v_lower < 0 || l.v_lower >= n_lower) continue;
      const double fm = bm.f[static_cast<std::size_t>(l.v_lower)];
      SignedOverlap so;
      so.lower_index = l.v_lower;
      so.sign_ambiguous = std::abs(fm) < 1e-10;
      const double sign = fm >= 0.0 ? 1.0 : -1.0;
      so.d = sign * lambda * std::sqrt(std::max(0.0, l.intensity));
      so.omega_cm = l.omega_cm;
      so.provenance = Provenance::measured;
      bo.entries.push_back(so);
      covered[static_cast<std::size_t>(l.v_lower)] = true;
    }
    for (int i = 0; i < n_lower; ++i) {
      if (covered[static_cast<std::size_t>(i)]) continue;
      SignedOverlap so;
      so.lower_index = i;
      so.d = bm.f[static_cast<std::size_t>(i)];
      so.omega_cm = units::hartree_to_cm(
          bm.upper_energy - bm.gs->states[static_cast<std::size_t>(i)].energy);
      so.provenance = Provenance::regenerated;
      bo.entries.push_back(so);
    }
    detail::finish_band(bo);
    out.bands.push_back(std::move(bo));
  }
  return out;
}

enum class ExtrapolationMethod { linear_slope, morse_continuation };

inline ExtrapolationMethod parse_extrapolation(const std::string& name) {
  if (name == "linear-slope") return ExtrapolationMethod::linear_slope;
  if (name == "morse-continuation") return ExtrapolationMethod::morse_continuation;
  throw ConfigError("unknown extrapolation method '" + name + "'");
}

/// Pointwise-inverted excited curve plus diagnostics.
struct ExtractedPotential {
  PotentialCurve curve;
  std::size_t valid_lo = 0, valid_hi = 0;  // inclusive grid indices
  std::vector<double> density;             // inversion denominator per point
  std::string extrapolation_spec;
  std::vector<double> completeness;  // per band, echoed from the overlap set
  double density_cutoff = 0.0;

  double r_inner() const { return curve.grid().point(valid_lo); }
  double r_outer() const { return curve.grid().point(valid_hi); }
};

/// Continue an extracted curve beyond its supported range.
///
/// morse-continuation matches value and slope at each edge to the Morse form
/// with the supplied beta and well depth (inner edge on the repulsive branch);
/// linear-slope continues with the edge gradient. The junction is C1.
inline ExtractedPotential extrapolate_tail(
    const ExtractedPotential& partial, ExtrapolationMethod method,
    std::optional<MorseParams> morse = std::nullopt) {
  const RadialGrid& grid = partial.curve.grid();
  const double h = grid.spacing();
  if (partial.valid_hi <= partial.valid_lo)
    throw NoSupport("extrapolate_tail: empty valid range");
  if (method == ExtrapolationMethod::morse_continuation && !morse)
    throw ConfigError("extrapolate_tail: morse-continuation needs fitted parameters");

  std::vector<double> v = partial.curve.values();
  std::ostringstream spec;

  auto one_sided_slope = [&](std::size_t e, bool outer) {
    // 3-point one-sided derivative taken from inside the valid range
    if (outer) return (3.0 * v[e] - 4.0 * v[e - 1] + v[e - 2]) / (2.0 * h);
    return -(3.0 * v[e] - 4.0 * v[e + 1] + v[e + 2]) / (2.0 * h);
  };

  auto extend = [&](std::size_t e, bool outer) {
    const double r_e = grid.point(e);
    const double v_e = v[e];
    const double g = one_sided_slope(e, outer);
    bool linear = method == ExtrapolationMethod::linear_slope;
    double u_e = 0.0, asym = 0.0, beta = 0.0, depth = 0.0;

    if (!linear) {
      beta = morse->beta;
      depth = morse->D_e;
      const double disc = 1.0 - 2.0 * g / (beta * depth);
      if (disc < 0.0) {
        linear = true;  // slope too steep for the Morse form at this beta
      } else {
        const double root = std::sqrt(disc);
        const double u1 = 0.5 * (1.0 + root), u2 = 0.5 * (1.0 - root);
        if (!outer) {
          u_e = std::max(u1, u2);  // repulsive branch, u > 1
        } else {
          // pick the root closer to the fitted Morse's own exponent here
          const double u_fit = std::exp(-beta * (r_e - morse->R_e));
          u_e = std::abs(u1 - u_fit) < std::abs(u2 - u_fit) ? u1 : u2;
        }
        if (u_e <= 0.0) linear = true;
        else asym = v_e - depth * (u_e * u_e - 2.0 * u_e);
      }
    }

    if (outer) {
      for (std::size_t i = e + 1; i < grid.size(); ++i) {
        const double r = grid.point(i);
        v[i] = linear ? v_e + g * (r - r_e)
                      : [&] {
                          const double u = u_e * std::exp(-beta * (r - r_e));
                          return asym + depth * (u * u - 2.0 * u);
                        }();
      }
    } else {
      for (std::size_t i = e; i-- > 0;) {
        const double r = grid.point(i);
        v[i] = linear ? v_e + g * (r - r_e)
                      : [&] {
                          const double u = u_e * std::exp(-beta * (r - r_e));
                          return asym + depth * (u * u - 2.0 * u);
                        }();
      }
    }
    spec << (outer ? "outer:" : "inner:") << (linear ? "linear-slope" : "morse-continuation")
         << " ";
  };

  if (partial.valid_lo > 0) extend(partial.valid_lo, false);
  else spec << "inner:none ";
  if (partial.valid_hi + 1 < grid.size()) extend(partial.valid_hi, true);
  else spec << "outer:none ";

  ExtractedPotential out = partial;
  out.curve = PotentialCurve(grid, std::move(v));
  out.extrapolation_spec = spec.str();
  return out;
}

/// Pointwise inversion: V_ex(R) = num(R)/den(R) + V_g(R) with
///   num = sum_s (sum_i d_is w_is chi_i)(sum_j d_js chi_j),
///   den = sum_s (sum_i d_is chi_i)^2,
/// evaluated where den >= density_cutoff * max(den); tails are filled by the
/// requested extrapolation.
inline ExtractedPotential invert_potential(
    const SignedOverlapSet& overlaps, const std::vector<BandGroundStates>& ground_states,
    const PotentialCurve& V_g, double density_cutoff,
    ExtrapolationMethod method = ExtrapolationMethod::morse_continuation,
    std::optional<MorseParams> morse = std::nullopt) {
  const RadialGrid& grid = V_g.grid();
  const std::size_t n = grid.size();
  std::vector<double> num(n, 0.0), den(n, 0.0);

  for (const auto& bo : overlaps.bands) {
    const auto& gs = detail::find_band_states(ground_states, bo.band);
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (const auto& e : bo.entries) {
      if (e.lower_index < 0 || e.lower_index >= static_cast<int>(gs.states.size()))
        throw ShapeError("invert_potential: overlap references missing ground state");
      const auto& chi = gs.states[static_cast<std::size_t>(e.lower_index)].wavefunction;
      if (chi.size() != n)
        throw ShapeError("invert_potential: ground state not on the shared grid");
      const double w_au = units::cm_to_hartree(e.omega_cm);
      for (std::size_t k = 0; k < n; ++k) {
        a[k] += e.d * chi[k];
        b[k] += e.d * w_au * chi[k];
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      num[k] += a[k] * b[k];
      den[k] += a[k] * a[k];
    }
  }

  const double dmax = *std::max_element(den.begin(), den.end());
  if (!(dmax > 0.0)) throw NoSupport("invert_potential: zero density everywhere");
  const double cut = density_cutoff * dmax;
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(den.begin(), den.end()) - den.begin());
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && den[lo - 1] >= cut) --lo;
  while (hi + 1 < n && den[hi + 1] >= cut) ++hi;
  if (hi <= lo) throw NoSupport("invert_potential: density support too narrow");

  std::vector<double> v(n, 0.0);
  for (std::size_t k = lo; k <= hi; ++k) {
    v[k] = num[k] / den[k] + V_g.values()[k];
    if (!std::isfinite(v[k]))
      throw NumericalFailure("invert_potential: non-finite value at R = " +
                             std::to_string(grid.point(k)));
  }
  // provisional flat tails; replaced by extrapolate_tail below
  for (std::size_t k = 0; k < lo; ++k) v[k] = v[lo];
  for (std::size_t k = hi + 1; k < n; ++k) v[k] = v[hi];

  ExtractedPotential out{PotentialCurve(grid, std::move(v)), lo, hi, std::move(den),
                         "", overlaps.completeness_per_band(), density_cutoff};
  return extrapolate_tail(out, method, morse);
}

}  // namespace pecinv
