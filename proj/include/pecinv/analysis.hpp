#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/inversion.hpp"
#include "pecinv/potential.hpp"
#include "pecinv/spectrum.hpp"
#include "pecinv/units.hpp"

namespace pecinv {

/// Scoring region: grid points where the reference curve lies below the cutoff.
struct RegionSpec {
  std::string label;
  double energy_cutoff_cm = 0.0;  // same gauge as the reference curve
};

/// Regions "V < E(v'=k)" built from the reference potential's own J=0 levels.
inline std::vector<RegionSpec> regions_from_levels(const PotentialCurve& reference,
                                                   double reduced_mass,
                                                   const std::vector<int>& ks) {
  int v_max = 0;
  for (int k : ks) v_max = std::max(v_max, k);
  auto states =
      solve_bound_states(EffectivePotentialSpec(reference, reduced_mass, 0), v_max);
  std::vector<RegionSpec> regions;
  double prev = -1e300;
  for (int k : ks) {
    RegionSpec r;
    r.label = "V<E(" + std::to_string(k) + ")";
    r.energy_cutoff_cm = units::hartree_to_cm(states[static_cast<std::size_t>(k)].energy);
    if (!(r.energy_cutoff_cm > prev))
      throw ConfigError("regions_from_levels: cutoffs must be strictly increasing");
    prev = r.energy_cutoff_cm;
    regions.push_back(std::move(r));
  }
  return regions;
}

/// RMS of (test - reference) in cm-1 over grid points with reference below the
/// region cutoff. Test is resampled onto the reference grid; with align, the
/// test curve is shifted so the minima over the region's points coincide
/// before differencing (gauge removal that ignores artifacts outside the
/// scored region).
inline double rms_error(const PotentialCurve& test, const PotentialCurve& reference,
                        const RegionSpec& region, bool align = true,
                        std::size_t* n_points = nullptr) {
  const PotentialCurve t = test.resampled(reference.grid());
  const double cutoff_au = units::cm_to_hartree(region.energy_cutoff_cm);
  double shift = 0.0;
  if (align) {
    double tmin = 1e300, rmin = 1e300;
    for (std::size_t i = 0; i < reference.grid().size(); ++i) {
      if (reference.values()[i] >= cutoff_au) continue;
      tmin = std::min(tmin, t.values()[i]);
      rmin = std::min(rmin, reference.values()[i]);
    }
    if (rmin < 1e300) shift = rmin - tmin;
  }
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < reference.grid().size(); ++i) {
    if (reference.values()[i] >= cutoff_au) continue;
    const double d = t.values()[i] + shift - reference.values()[i];
    ss += d * d;
    ++count;
  }
  if (count == 0) throw EmptyRegion("rms_error: region '" + region.label +
                                    "' selects no grid points");
  if (n_points) *n_points = count;
  return units::hartree_to_cm(std::sqrt(ss / static_cast<double>(count)));
}

enum class NoiseDistribution { gaussian, uniform };

struct NoiseStudyConfig {
  std::vector<double> rel_rms_levels = {0.02, 0.05, 0.10};
  int n_trials = 100;
  std::uint64_t seed = 0;
  NoiseDistribution distribution = NoiseDistribution::gaussian;
  int jobs = 1;
};

struct PerturbResult {
  SpectrumDataset spectrum;
  int n_clamped = 0;
};

/// Add zero-mean noise of rms rel_rms * mean(intensity) to each measured line
/// (regenerated lines are never touched). Negative results clamp to zero and
/// are counted.
inline PerturbResult perturb_intensities(const SpectrumDataset& spectrum, double rel_rms,
                                         std::uint64_t seed,
                                         NoiseDistribution dist = NoiseDistribution::gaussian) {
  PerturbResult out{spectrum, 0};
  if (rel_rms == 0.0) return out;
  double mean = 0.0;
  std::size_t n_meas = 0;
  for (const auto& l : spectrum.lines)
    if (l.provenance == Provenance::measured) {
      mean += l.intensity;
      ++n_meas;
    }
  if (n_meas == 0) return out;
  mean /= static_cast<double>(n_meas);
  const double sigma = rel_rms * mean;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  // uniform on [-a, a] with the same rms: a = sigma * sqrt(3)
  std::uniform_real_distribution<double> flat(-sigma * std::sqrt(3.0),
                                              sigma * std::sqrt(3.0));
  for (auto& l : out.spectrum.lines) {
    if (l.provenance != Provenance::measured) continue;
    const double noise = dist == NoiseDistribution::gaussian ? gauss(rng) : flat(rng);
    l.intensity += noise;
    if (l.intensity < 0.0) {
      l.intensity = 0.0;
      ++out.n_clamped;
    }
    if (l.amplitude) l.amplitude = std::sqrt(l.intensity) * (*l.amplitude >= 0 ? 1 : -1);
  }
  return out;
}

/// Everything one inversion trial needs, precomputed once.
struct NoiseStudyInputs {
  PotentialCurve ground;
  SpectrumDataset measured;  // thresholded
  std::vector<BandGroundStates> ground_states;
  MorseParams morse;
  PotentialCurve reference;
  double reduced_mass = 0.0;
  int n_lower = 31;
  double density_cutoff = 1e-3;
  ExtrapolationMethod extrapolation = ExtrapolationMethod::morse_continuation;
};

struct NoiseStudyRow {
  double level = 0.0;
  std::string region;
  double mean_rms_cm = 0.0;        // RMS of the trial-averaged potential
  double trial_mean_rms_cm = 0.0;  // mean of per-trial RMS values
  double std_cm = 0.0;             // dispersion of per-trial RMS values
  double stderr_cm = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

struct NoiseStudyTable {
  std::vector<NoiseStudyRow> rows;

  std::string to_text() const {
    std::ostringstream os;
    os << "# level region avgpot_rms_cm-1 trial_mean_rms_cm-1 std_cm-1 n_ok n_failed\n";
    os << std::setprecision(10);
    for (const auto& r : rows)
      os << r.level << " " << r.region << " " << r.mean_rms_cm << " "
         << r.trial_mean_rms_cm << " " << r.std_cm << " " << r.n_ok << " "
         << r.n_failed << "\n";
    return os.str();
  }
};

namespace detail {

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t level_idx,
                                int trial) {
  std::uint64_t x = seed * 6364136223846793005ULL + 1442695040888963407ULL;
  x ^= (static_cast<std::uint64_t>(level_idx) << 32) ^ static_cast<std::uint64_t>(trial);
  x *= 0x2545F4914F6CDD1DULL;
  x ^= x >> 33;
  return x;
}

}  // namespace detail

/// Monte-Carlo noise robustness study. For each level and trial: perturb the
/// measured intensities, re-merge with the regenerated set, invert, score.
/// The headline error per region is that of the pointwise trial-averaged
/// potential; the mean and dispersion of per-trial errors ride along (the
/// per-trial mean is the statistic whose standard error the table reports).
/// Deterministic under the seed
/// regardless of the job count (each trial has its own RNG stream).
inline NoiseStudyTable run_noise_study(const NoiseStudyInputs& in,
                                       const NoiseStudyConfig& config,
                                       const std::vector<RegionSpec>& regions) {
  if (config.n_trials < 1) throw ConfigError("noise study: n_trials must be >= 1");
  for (double lv : config.rel_rms_levels)
    if (!(lv >= 0.0 && lv < 1.0))
      throw ConfigError("noise study: levels must lie in [0, 1)");

  const std::size_t n_grid = in.ground.grid().size();
  NoiseStudyTable table;

  for (std::size_t li = 0; li < config.rel_rms_levels.size(); ++li) {
    const double level = config.rel_rms_levels[li];
    const int nt = level == 0.0 ? 1 : config.n_trials;

    std::vector<std::vector<double>> curves(static_cast<std::size_t>(nt));
    std::vector<std::vector<double>> trial_rms(
        static_cast<std::size_t>(nt), std::vector<double>(regions.size(), 0.0));
    std::vector<char> ok(static_cast<std::size_t>(nt), 0);

    auto run_trial = [&](int t) {
      try {
        auto pert = perturb_intensities(in.measured, level,
                                        detail::trial_seed(config.seed, li, t),
                                        config.distribution);
        auto overlaps = regenerate_weak_lines(in.morse, in.ground.grid(),
                                              in.ground_states, pert.spectrum,
                                              in.reduced_mass, in.n_lower);
        auto extracted = invert_potential(overlaps, in.ground_states, in.ground,
                                          in.density_cutoff, in.extrapolation,
                                          in.morse);
        for (std::size_t ri = 0; ri < regions.size(); ++ri)
          trial_rms[static_cast<std::size_t>(t)][ri] =
              rms_error(extracted.curve, in.reference, regions[ri]);
        curves[static_cast<std::size_t>(t)] = extracted.curve.values();
        ok[static_cast<std::size_t>(t)] = 1;
      } catch (const Error&) {
        ok[static_cast<std::size_t>(t)] = 0;
      }
    };

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1 || nt == 1) {
      for (int t = 0; t < nt; ++t) run_trial(t);
    } else {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      for (int w = 0; w < std::min(jobs, nt); ++w)
        pool.emplace_back([&] {
          for (int t = next.fetch_add(1); t < nt; t = next.fetch_add(1)) run_trial(t);
        });
      for (auto& th : pool) th.join();
    }

    int n_ok = 0;
    std::vector<double> avg(n_grid, 0.0);
    for (int t = 0; t < nt; ++t) {
      if (!ok[static_cast<std::size_t>(t)]) continue;
      ++n_ok;
      for (std::size_t k = 0; k < n_grid; ++k)
        avg[k] += curves[static_cast<std::size_t>(t)][k];
    }
    if (n_ok == 0)
      throw NumericalFailure("noise study: every trial failed at level " +
                             std::to_string(level));
    for (auto& a : avg) a /= static_cast<double>(n_ok);
    PotentialCurve avg_curve(in.ground.grid(), std::move(avg));

    for (std::size_t ri = 0; ri < regions.size(); ++ri) {
      NoiseStudyRow row;
      row.level = level;
      row.region = regions[ri].label;
      row.mean_rms_cm = rms_error(avg_curve, in.reference, regions[ri]);
      double m = 0.0;
      for (int t = 0; t < nt; ++t)
        if (ok[static_cast<std::size_t>(t)]) m += trial_rms[static_cast<std::size_t>(t)][ri];
      m /= n_ok;
      row.trial_mean_rms_cm = m;
      double s2 = 0.0;
      for (int t = 0; t < nt; ++t)
        if (ok[static_cast<std::size_t>(t)]) {
          const double d = trial_rms[static_cast<std::size_t>(t)][ri] - m;
          s2 += d * d;
        }
      row.std_cm = n_ok > 1 ? std::sqrt(s2 / (n_ok - 1)) : 0.0;
      row.stderr_cm = row.std_cm / std::sqrt(static_cast<double>(n_ok));
      row.n_ok = n_ok;
      row.n_failed = nt - n_ok;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace pecinv
