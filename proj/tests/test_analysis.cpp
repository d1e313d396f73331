#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pecinv/analysis.hpp"
#include "pecinv/pipeline.hpp"
#include "twin_fixture.hpp"

using namespace pecinv;

TEST_CASE("rms_error basics", "[analysis]") {
  RadialGrid g = default_grid();
  PotentialCurve ref = twin::excited_truth(g);
  RegionSpec region{"all", units::hartree_to_cm(ref.min_value()) + 1500.0};

  SECTION("identical curves score zero") {
    CHECK(rms_error(ref, ref, region) == 0.0);
  }

  SECTION("a pure gauge shift is removed by alignment") {
    std::vector<double> v = ref.values();
    for (auto& x : v) x += units::cm_to_hartree(55.0);
    PotentialCurve shifted(g, std::move(v));
    CHECK(rms_error(shifted, ref, region, true) < 1e-10);
    CHECK(rms_error(shifted, ref, region, false) == Catch::Approx(55.0).margin(1e-8));
  }

  SECTION("point count reflects the cutoff") {
    std::size_t n_small = 0, n_large = 0;
    RegionSpec tight{"tight", units::hartree_to_cm(ref.min_value()) + 200.0};
    rms_error(ref, ref, tight, true, &n_small);
    rms_error(ref, ref, region, true, &n_large);
    CHECK(n_small > 0);
    CHECK(n_small < n_large);
  }

  SECTION("cutoff below the minimum selects nothing") {
    RegionSpec empty{"none", units::hartree_to_cm(ref.min_value()) - 1.0};
    CHECK_THROWS_AS(rms_error(ref, ref, empty), EmptyRegion);
  }

  SECTION("test curve on a different grid is resampled") {
    RadialGrid g2(4.0, 20.0, 1203);
    PotentialCurve t = twin::excited_truth(g2);
    CHECK(rms_error(t, ref, region) < 1e-4);  // spline resampling error only
  }
}

TEST_CASE("regions from reference levels", "[analysis]") {
  RadialGrid g = default_grid();
  PotentialCurve ref = twin::excited_truth(g);
  auto regions = regions_from_levels(ref, twin::kMass, {2, 10});
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].label == "V<E(2)");
  CHECK(regions[1].label == "V<E(10)");
  CHECK(regions[0].energy_cutoff_cm < regions[1].energy_cutoff_cm);
  // both cutoffs sit inside the well
  CHECK(regions[0].energy_cutoff_cm > units::hartree_to_cm(ref.min_value()));
  CHECK_THROWS_AS(regions_from_levels(ref, twin::kMass, std::vector<int>{10, 2}),
                  ConfigError);
}

TEST_CASE("intensity perturbation", "[analysis]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  PotentialCurve vex = twin::excited_truth(g);
  auto spec = apply_threshold(
      synthesize_spectrum(vg, vex, twin::kMass, twin::bands(), 31), 0.025);

  SECTION("zero level is the identity") {
    auto r = perturb_intensities(spec, 0.0, 42);
    REQUIRE(r.spectrum.lines.size() == spec.lines.size());
    for (std::size_t i = 0; i < spec.lines.size(); ++i)
      CHECK(r.spectrum.lines[i].intensity == spec.lines[i].intensity);
    CHECK(r.n_clamped == 0);
  }

  SECTION("deterministic under the seed") {
    auto a = perturb_intensities(spec, 0.05, 1234);
    auto b = perturb_intensities(spec, 0.05, 1234);
    auto c = perturb_intensities(spec, 0.05, 1235);
    bool differs = false;
    for (std::size_t i = 0; i < spec.lines.size(); ++i) {
      CHECK(a.spectrum.lines[i].intensity == b.spectrum.lines[i].intensity);
      if (a.spectrum.lines[i].intensity != c.spectrum.lines[i].intensity)
        differs = true;
    }
    CHECK(differs);
  }

  SECTION("intensities stay non-negative and clamps are counted") {
    auto r = perturb_intensities(spec, 0.5, 7);
    int zeros = 0;
    for (const auto& l : r.spectrum.lines) {
      CHECK(l.intensity >= 0.0);
      if (l.intensity == 0.0) ++zeros;
    }
    CHECK(r.n_clamped == zeros);
    CHECK(r.n_clamped > 0);  // 50% rms noise on weak lines must clamp some
  }

  SECTION("empirical noise rms matches the requested level") {
    // Monte-Carlo oracle: sample one line's additive noise many times
    double mean = 0.0;
    for (const auto& l : spec.lines) mean += l.intensity;
    mean /= static_cast<double>(spec.lines.size());
    const double rel = 0.05;
    const double sigma = rel * mean;

    for (NoiseDistribution dist :
         {NoiseDistribution::gaussian, NoiseDistribution::uniform}) {
      // use the strongest line so clamping never triggers
      std::size_t strongest = 0;
      for (std::size_t i = 0; i < spec.lines.size(); ++i)
        if (spec.lines[i].intensity > spec.lines[strongest].intensity) strongest = i;
      const int n = 10000;
      double ss = 0.0;
      for (int t = 0; t < n; ++t) {
        auto r = perturb_intensities(spec, rel, 9000 + static_cast<std::uint64_t>(t),
                                     dist);
        const double d =
            r.spectrum.lines[strongest].intensity - spec.lines[strongest].intensity;
        ss += d * d;
      }
      const double emp = std::sqrt(ss / n);
      CHECK(emp == Catch::Approx(sigma).epsilon(0.03));
    }
  }

  SECTION("level outside [0,1) rejected by the study config check") {
    NoiseStudyConfig cfg;
    cfg.rel_rms_levels = {-0.1};
    NoiseStudyInputs in{twin::ground(g), spec, {}, twin::excited_base(),
                        twin::excited_truth(g), twin::kMass};
    CHECK_THROWS_AS(run_noise_study(in, cfg, {}), ConfigError);
  }
}

TEST_CASE("noise study", "[analysis]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  PotentialCurve vex = twin::excited_truth(g);
  auto measured = apply_threshold(
      synthesize_spectrum(vg, vex, twin::kMass, twin::bands(), 31), 0.025);
  auto gs = solve_ground_states(vg, twin::kMass, twin::bands(), 31);

  NoiseStudyInputs in{vg, measured, gs, twin::excited_base(), vex, twin::kMass};

  auto regions = regions_from_levels(vex, twin::kMass, {2});

  SECTION("zero level reproduces the noiseless inversion") {
    NoiseStudyConfig cfg;
    cfg.rel_rms_levels = {0.0};
    cfg.n_trials = 5;  // collapsed to 1 for the exact level
    auto table = run_noise_study(in, cfg, regions);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].n_ok == 1);
    CHECK(table.rows[0].std_cm == 0.0);
    CHECK(table.rows[0].trial_mean_rms_cm == table.rows[0].mean_rms_cm);

    auto overlaps = regenerate_weak_lines(in.morse, g, gs, measured, twin::kMass, 31);
    auto ex = invert_potential(overlaps, gs, vg, in.density_cutoff, in.extrapolation,
                               in.morse);
    CHECK(table.rows[0].mean_rms_cm ==
          Catch::Approx(rms_error(ex.curve, vex, regions[0])).margin(1e-12));
  }

  SECTION("dispersion grows with the noise level; seed and jobs are immaterial") {
    NoiseStudyConfig cfg;
    cfg.rel_rms_levels = {0.02, 0.10};
    cfg.n_trials = 24;
    cfg.seed = 99;
    auto t1 = run_noise_study(in, cfg, regions);
    REQUIRE(t1.rows.size() == 2);
    CHECK(t1.rows[0].std_cm < t1.rows[1].std_cm);
    for (const auto& r : t1.rows) CHECK(r.n_ok == 24);

    cfg.jobs = 4;
    auto t4 = run_noise_study(in, cfg, regions);
    for (std::size_t i = 0; i < t1.rows.size(); ++i) {
      CHECK(t1.rows[i].mean_rms_cm == t4.rows[i].mean_rms_cm);  // bit-identical
      CHECK(t1.rows[i].std_cm == t4.rows[i].std_cm);
    }

    auto text = t1.to_text();
    CHECK(text.find("# level region avgpot_rms_cm-1") != std::string::npos);
    CHECK(text.find("V<E(2)") != std::string::npos);
  }
}
