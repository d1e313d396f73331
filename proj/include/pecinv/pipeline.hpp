#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pecinv/analysis.hpp"
#include "pecinv/inversion.hpp"
#include "pecinv/morse.hpp"
#include "pecinv/spectrum.hpp"

namespace pecinv {

/// Knobs for the end-to-end extraction.
struct PipelineConfig {
  int n_lower = 31;
  double density_cutoff = 1e-3;
  ExtrapolationMethod extrapolation = ExtrapolationMethod::morse_continuation;
  double Re_search_lo = 0.0, Re_search_hi = 0.0;  // 0,0 = auto window
  int Re_search_steps = 61;
  bool include_regenerated = true;
};

struct PipelineResult {
  std::vector<BandGroundStates> ground_states;
  std::vector<BandOrigin> band_origins;
  MorseEnergyFit energy_fit;
  ReFitResult re_fit;
  MorseParams morse;
  SignedOverlapSet overlaps;
  std::optional<ExtractedPotential> extracted;
};

/// Ground eigenstates v = 0..n_lower-1 at each band's J.
inline std::vector<BandGroundStates> solve_ground_states(
    const PotentialCurve& ground, double reduced_mass, const std::vector<Band>& bands,
    int n_lower) {
  std::vector<BandGroundStates> out;
  for (const Band& b : bands) {
    BandGroundStates g;
    g.band = b;
    g.states = solve_bound_states(EffectivePotentialSpec(ground, reduced_mass, b.J_upper),
                                  n_lower - 1);
    out.push_back(std::move(g));
  }
  return out;
}

/// Upper-level energies recovered from measured line positions: for each band,
/// the mean over its lines of omega + E_lower.
inline std::vector<BandOrigin> band_origins_from_spectrum(
    const SpectrumDataset& measured, const std::vector<BandGroundStates>& ground_states) {
  std::vector<BandOrigin> origins;
  for (const auto& gs : ground_states) {
    double sum = 0.0;
    int n = 0;
    for (const auto& l : measured.lines) {
      if (l.v_upper != gs.band.v_upper || l.J_upper != gs.band.J_upper) continue;
      if (l.v_lower < 0 || l.v_lower >= static_cast<int>(gs.states.size())) continue;
      sum += units::cm_to_hartree(l.omega_cm) +
             gs.states[static_cast<std::size_t>(l.v_lower)].energy;
      ++n;
    }
    if (n == 0)
      throw InsufficientData("pipeline: band v'=" + std::to_string(gs.band.v_upper) +
                             " has no measured lines");
    origins.push_back({gs.band.v_upper, gs.band.J_upper, sum / n});
  }
  return origins;
}

/// Keep only the measured entries of an overlap set (for the
/// measured-only comparison inversion).
inline SignedOverlapSet measured_only(const SignedOverlapSet& overlaps) {
  SignedOverlapSet out;
  out.measured_scale = overlaps.measured_scale;
  for (const auto& b : overlaps.bands) {
    BandOverlaps bo;
    bo.band = b.band;
    for (const auto& e : b.entries)
      if (e.provenance == Provenance::measured) bo.entries.push_back(e);
    detail::finish_band(bo);
    out.bands.push_back(std::move(bo));
  }
  return out;
}

/// Full extraction: Morse energy fit -> R_e intensity fit -> grid-refined
/// energy refit -> weak-line regeneration -> inversion + tail extrapolation.
inline PipelineResult run_inversion_pipeline(const PotentialCurve& ground,
                                             const SpectrumDataset& measured,
                                             double reduced_mass,
                                             const PipelineConfig& cfg) {
  const RadialGrid& grid = ground.grid();
  PipelineResult res;
  res.ground_states = solve_ground_states(ground, reduced_mass, measured.bands,
                                          cfg.n_lower);
  res.band_origins = band_origins_from_spectrum(measured, res.ground_states);

  // pass 1: analytic levels with a rigid-rotor correction seeded at the
  // ground-state R_e, to bootstrap the intensity fit
  const double re_g = grid.point(ground.argmin());
  auto fit0 = fit_morse_energies(res.band_origins, reduced_mass, re_g);

  double lo = cfg.Re_search_lo, hi = cfg.Re_search_hi;
  if (!(hi > lo)) {
    // auto window around the ground minimum, generous on both sides
    lo = std::max(grid.r_min() + 0.5, re_g - 2.5);
    hi = std::min(grid.r_max() - 0.5, re_g + 2.5);
  }
  res.re_fit = fit_morse_Re(fit0.params, measured, ground, reduced_mass, lo, hi,
                            cfg.Re_search_steps);

  // pass 2: refit energies with the centrifugal term at the actual J,
  // then let the intensity fit settle once more
  res.energy_fit = fit_morse_energies(res.band_origins, reduced_mass, res.re_fit.R_e,
                                      grid);
  res.re_fit = fit_morse_Re(res.energy_fit.params, measured, ground, reduced_mass, lo,
                            hi, cfg.Re_search_steps);
  res.energy_fit = fit_morse_energies(res.band_origins, reduced_mass, res.re_fit.R_e,
                                      grid);
  res.morse = res.energy_fit.params;
  res.morse.R_e = res.re_fit.R_e;

  res.overlaps = regenerate_weak_lines(res.morse, grid, res.ground_states, measured,
                                       reduced_mass, cfg.n_lower);
  if (!cfg.include_regenerated) res.overlaps = measured_only(res.overlaps);
  res.extracted = invert_potential(res.overlaps, res.ground_states, ground,
                                   cfg.density_cutoff, cfg.extrapolation, res.morse);
  return res;
}

}  // namespace pecinv
