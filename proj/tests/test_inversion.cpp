#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pecinv/analysis.hpp"
#include "pecinv/inversion.hpp"
#include "pecinv/pipeline.hpp"
#include "twin_fixture.hpp"

using namespace pecinv;

namespace {

/// Exact signed overlaps straight from an un-thresholded synthetic spectrum.
SignedOverlapSet overlaps_from_amplitudes(const SpectrumDataset& spec) {
  SignedOverlapSet out;
  for (const Band& band : spec.bands) {
    BandOverlaps bo;
    bo.band = band;
    for (const auto& l : spec.lines) {
      if (l.v_upper != band.v_upper || l.J_upper != band.J_upper) continue;
      SignedOverlap so;
      so.lower_index = l.v_lower;
      so.d = l.amplitude.value();
      so.omega_cm = l.omega_cm;
      so.provenance = Provenance::measured;
      bo.entries.push_back(so);
    }
    detail::finish_band(bo);
    out.bands.push_back(std::move(bo));
  }
  return out;
}

}  // namespace

TEST_CASE("identity-overlap limit: shifted copy of the ground potential",
          "[inversion]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  const double shift_cm = 18000.0;

  // d_is = delta_is, omega = shift: the formula must return V_g + shift
  SignedOverlapSet overlaps;
  std::vector<BandGroundStates> gs;
  for (const Band& band : twin::bands()) {
    BandGroundStates b;
    b.band = band;
    b.states = solve_bound_states(
        EffectivePotentialSpec(vg, twin::kMass, band.J_upper), band.v_upper);
    gs.push_back(b);
    BandOverlaps bo;
    bo.band = band;
    SignedOverlap so;
    so.lower_index = band.v_upper;
    so.d = 1.0;
    so.omega_cm = shift_cm;
    bo.entries.push_back(so);
    detail::finish_band(bo);
    overlaps.bands.push_back(std::move(bo));
  }

  auto ex = invert_potential(overlaps, gs, vg, 1e-3,
                             ExtrapolationMethod::linear_slope);
  for (std::size_t i = ex.valid_lo; i <= ex.valid_hi; ++i) {
    const double diff_cm =
        units::hartree_to_cm(ex.curve.values()[i] - vg.values()[i]) - shift_cm;
    CHECK(std::abs(diff_cm) < 1e-6);
  }
}

TEST_CASE("round trip with complete exact overlaps", "[inversion]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  PotentialCurve vex = twin::excited_truth(g);
  auto spec = synthesize_spectrum(vg, vex, twin::kMass, twin::bands(), 31);
  auto overlaps = overlaps_from_amplitudes(spec);
  auto gs = solve_ground_states(vg, twin::kMass, twin::bands(), 31);

  auto ex = invert_potential(overlaps, gs, vg, 1e-3,
                             ExtrapolationMethod::linear_slope);

  // classically allowed region of v' <= 2
  auto upper = solve_bound_states(EffectivePotentialSpec(vex, twin::kMass, 0), 2);
  RegionSpec region{"V<E(2)", units::hartree_to_cm(upper[2].energy)};
  const double rms = rms_error(ex.curve, vex, region, /*align=*/false);
  CHECK(rms < 0.05);
}

TEST_CASE("regeneration bookkeeping and sign recovery on a true Morse twin",
          "[inversion]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  const MorseParams morse = twin::excited_base();
  PotentialCurve vex = morse_curve(morse, g);
  auto full = synthesize_spectrum(vg, vex, twin::kMass, twin::bands(), 31);
  auto gs = solve_ground_states(vg, twin::kMass, twin::bands(), 31);

  SECTION("complete measured set: model signs, measured magnitudes") {
    auto measured = apply_threshold(full, 0.0);  // all lines, amplitudes stripped
    auto overlaps = regenerate_weak_lines(morse, g, gs, measured, twin::kMass, 31);
    REQUIRE(overlaps.bands.size() == 3);
    for (std::size_t b = 0; b < overlaps.bands.size(); ++b) {
      const auto& bo = overlaps.bands[b];
      REQUIRE(bo.entries.size() == 31);
      for (const auto& e : bo.entries) {
        CHECK(e.provenance == Provenance::measured);
        // find the generating line and compare sign and scaled magnitude
        for (const auto& l : full.lines) {
          if (l.v_upper != bo.band.v_upper || l.J_upper != bo.band.J_upper ||
              l.v_lower != e.lower_index)
            continue;
          if (std::abs(*l.amplitude) > 1e-8)
            CHECK((e.d > 0) == (*l.amplitude > 0));
          CHECK(std::abs(e.d) == Catch::Approx(overlaps.measured_scale *
                                               std::sqrt(l.intensity))
                                     .margin(1e-12));
        }
      }
      CHECK(bo.completeness > 0.999);
      CHECK_FALSE(bo.flagged);
    }
  }

  SECTION("thresholded set: missing lines regenerated") {
    auto measured = apply_threshold(full, 0.025);
    auto overlaps = regenerate_weak_lines(morse, g, gs, measured, twin::kMass, 31);
    std::size_t n_meas = 0, n_regen = 0;
    for (const auto& bo : overlaps.bands)
      for (const auto& e : bo.entries)
        (e.provenance == Provenance::measured ? n_meas : n_regen)++;
    CHECK(n_meas == measured.lines.size());
    CHECK(n_meas + n_regen == 3 * 31);
    for (const auto& bo : overlaps.bands) CHECK(bo.completeness > 0.999);
  }

  SECTION("empty measured set: pure model prediction") {
    SpectrumDataset empty;
    empty.bands = twin::bands();
    auto overlaps = regenerate_weak_lines(morse, g, gs, empty, twin::kMass, 31);
    for (const auto& bo : overlaps.bands) {
      CHECK(bo.entries.size() == 31);
      for (const auto& e : bo.entries) CHECK(e.provenance == Provenance::regenerated);
      CHECK(bo.completeness > 0.999);
    }
  }
}

TEST_CASE("completeness grows when regenerated lines are added", "[inversion]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  PotentialCurve vex = twin::excited_truth(g);
  auto full = synthesize_spectrum(vg, vex, twin::kMass, twin::bands(), 31);
  auto measured = apply_threshold(full, 0.025);
  auto gs = solve_ground_states(vg, twin::kMass, twin::bands(), 31);
  MorseParams morse = twin::excited_base();  // close enough model for this check

  auto augmented = regenerate_weak_lines(morse, g, gs, measured, twin::kMass, 31);
  auto thin = measured_only(augmented);
  auto caug = completeness_report(augmented);
  auto cthin = completeness_report(thin);
  REQUIRE(caug.size() == cthin.size());
  for (std::size_t b = 0; b < caug.size(); ++b) {
    CHECK(cthin[b] < caug[b]);
    // the deliberately crude (unfitted) model leaves a small deficit
    CHECK(caug[b] > 0.99);
  }
}

TEST_CASE("dipole-scale and gauge invariance of the inversion", "[inversion]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  PotentialCurve vex = twin::excited_truth(g);
  auto spec = synthesize_spectrum(vg, vex, twin::kMass, twin::bands(), 31);
  auto overlaps = overlaps_from_amplitudes(spec);
  auto gs = solve_ground_states(vg, twin::kMass, twin::bands(), 31);

  auto base = invert_potential(overlaps, gs, vg, 1e-3,
                               ExtrapolationMethod::linear_slope);

  SECTION("rescaling every d leaves the curve unchanged") {
    auto scaled = overlaps;
    for (auto& bo : scaled.bands)
      for (auto& e : bo.entries) e.d *= -3.7;
    auto ex = invert_potential(scaled, gs, vg, 1e-3,
                               ExtrapolationMethod::linear_slope);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = base.curve.values()[i], b = ex.curve.values()[i];
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
    }
  }

  SECTION("shifting every omega by C shifts the curve by C") {
    const double C = 123.456;
    auto shifted = overlaps;
    for (auto& bo : shifted.bands)
      for (auto& e : bo.entries) e.omega_cm += C;
    auto ex = invert_potential(shifted, gs, vg, 1e-3,
                               ExtrapolationMethod::linear_slope);
    for (std::size_t i = base.valid_lo; i <= base.valid_hi; ++i) {
      const double diff_cm =
          units::hartree_to_cm(ex.curve.values()[i] - base.curve.values()[i]);
      CHECK(std::abs(diff_cm - C) < 1e-8);
    }
  }

  SECTION("density positive inside the valid range") {
    const double dmax = *std::max_element(base.density.begin(), base.density.end());
    for (std::size_t i = base.valid_lo; i <= base.valid_hi; ++i)
      CHECK(base.density[i] >= 1e-3 * dmax);
  }
}

TEST_CASE("tail extrapolation", "[inversion]") {
  RadialGrid g = default_grid();
  const MorseParams p = twin::excited_base();

  SECTION("full valid range is the identity") {
    PotentialCurve curve = morse_curve(p, g);
    ExtractedPotential full{curve, 0, g.size() - 1,
                            std::vector<double>(g.size(), 1.0), "", {}, 0.0};
    auto out = extrapolate_tail(full, ExtrapolationMethod::morse_continuation, p);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(out.curve.values()[i] == curve.values()[i]);
  }

  SECTION("linear slope continues the edge gradient") {
    PotentialCurve curve = PotentialCurve::from_function(
        g, [](double r) { return 1e-3 * r + 0.5e-3 * (r - 12.0) * (r - 12.0); });
    std::size_t lo = 200, hi = 1500;
    ExtractedPotential part{curve, lo, hi, std::vector<double>(g.size(), 1.0), "",
                            {}, 0.0};
    auto out = extrapolate_tail(part, ExtrapolationMethod::linear_slope);
    const double h = g.spacing();
    const auto& v = out.curve.values();
    const auto& u = curve.values();
    // constant slope beyond each edge, equal to the one-sided edge derivative
    const double g_out = (3.0 * u[hi] - 4.0 * u[hi - 1] + u[hi - 2]) / (2.0 * h);
    for (std::size_t i = hi + 1; i < g.size(); ++i)
      CHECK((v[i] - v[i - 1]) / h == Catch::Approx(g_out).epsilon(1e-9));
    const double g_in = -(3.0 * u[lo] - 4.0 * u[lo + 1] + u[lo + 2]) / (2.0 * h);
    for (std::size_t i = 1; i <= lo; ++i)
      CHECK((v[i] - v[i - 1]) / h == Catch::Approx(g_in).epsilon(1e-9));
  }

  SECTION("morse continuation of a truncated true morse curve") {
    PotentialCurve curve = morse_curve(p, g);
    // keep only the region within ~1 bohr of the minimum
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.point(i) < p.R_e - 0.8) lo = i;
      if (g.point(i) < p.R_e + 1.0) hi = i;
    }
    ExtractedPotential part{curve, lo, hi, std::vector<double>(g.size(), 1.0), "",
                            {}, 0.0};
    auto out = extrapolate_tail(part, ExtrapolationMethod::morse_continuation, p);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.point(i);
      if (r < g.point(lo) - 1.0 || r > g.point(hi) + 1.0) continue;
      CHECK(units::hartree_to_cm(std::abs(out.curve.values()[i] - morse_eval(p, r))) <
            0.5);
    }
    // C1 junction: first differences across the seam agree to O(h^2)
    const double h = g.spacing();
    const auto& v = out.curve.values();
    const double inside = (v[hi] - v[hi - 1]) / h;
    const double outside = (v[hi + 1] - v[hi]) / h;
    CHECK(std::abs(outside - inside) < 2e-5);
  }

  SECTION("unknown method name rejected") {
    CHECK_THROWS_AS(parse_extrapolation("cubic-nonsense"), ConfigError);
    CHECK(parse_extrapolation("linear-slope") == ExtrapolationMethod::linear_slope);
    CHECK(parse_extrapolation("morse-continuation") ==
          ExtrapolationMethod::morse_continuation);
  }
}

TEST_CASE("inversion failure modes", "[inversion]") {
  RadialGrid g = default_grid();
  PotentialCurve vg = twin::ground(g);
  auto gs = solve_ground_states(vg, twin::kMass, {{0, 4}}, 3);

  SECTION("zero overlaps everywhere") {
    SignedOverlapSet overlaps;
    BandOverlaps bo;
    bo.band = {0, 4};
    SignedOverlap so;
    so.lower_index = 0;
    so.d = 0.0;
    so.omega_cm = 100.0;
    bo.entries.push_back(so);
    detail::finish_band(bo);
    overlaps.bands.push_back(bo);
    CHECK_THROWS_AS(invert_potential(overlaps, gs, vg, 1e-3,
                                     ExtrapolationMethod::linear_slope),
                    NoSupport);
  }

  SECTION("overlap referencing a missing ground state") {
    SignedOverlapSet overlaps;
    BandOverlaps bo;
    bo.band = {0, 4};
    SignedOverlap so;
    so.lower_index = 17;  // only 3 states supplied
    so.d = 1.0;
    so.omega_cm = 100.0;
    bo.entries.push_back(so);
    detail::finish_band(bo);
    overlaps.bands.push_back(bo);
    CHECK_THROWS_AS(invert_potential(overlaps, gs, vg, 1e-3,
                                     ExtrapolationMethod::linear_slope),
                    ShapeError);
  }
}
