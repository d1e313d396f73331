#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/schrodinger.hpp"
#include "pecinv/units.hpp"

namespace pecinv {

enum class Provenance { measured, regenerated };

inline const char* to_string(Provenance p) {
  return p == Provenance::measured ? "measured" : "regenerated";
}

/// One Q-branch emission line (J_lower == J_upper).
/// intensity is |d|^2 under the constant-dipole Franck-Condon approximation;
/// amplitude, when present, is the signed d with amplitude^2 == intensity.
struct EmissionLine {
  int v_upper = 0, J_upper = 0, v_lower = 0, J_lower = 0;
  double omega_cm = 0.0;
  double intensity = 0.0;
  std::optional<double> amplitude;
  Provenance provenance = Provenance::measured;
};

struct Band {
  int v_upper = 0;
  int J_upper = 0;
  bool operator==(const Band&) const = default;
};

struct SpectrumDataset {
  std::vector<EmissionLine> lines;
  std::vector<Band> bands;
  double threshold_fraction = 0.0;
  bool threshold_applied = false;

  double max_intensity() const {
    double m = 0.0;
    for (const auto& l : lines) m = std::max(m, l.intensity);
    return m;
  }

  void check_no_duplicates() const {
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& l : lines)
      if (!seen.insert({l.v_upper, l.J_upper, l.v_lower}).second)
        throw ShapeError("spectrum: duplicate (v_upper, J_upper, v_lower) line");
  }
};

/// Vibrational overlap f_is = integral of chi_lower * phi_upper dR.
inline double franck_condon_amplitude(const RadialGrid& grid, const RovibState& lower,
                                      const RovibState& upper) {
  if (lower.wavefunction.size() != grid.size() ||
      upper.wavefunction.size() != grid.size())
    throw ShapeError("franck_condon_amplitude: states not on the given grid");
  return inner_product(grid, lower.wavefunction, upper.wavefunction);
}

/// Q-branch emission spectrum from two potentials: for each band (v', J'),
/// lines to lower states v = 0..n_lower-1 at the same J. Intensities are
/// normalized so the strongest line in the dataset is 1.
inline SpectrumDataset synthesize_spectrum(const PotentialCurve& ground,
                                           const PotentialCurve& excited,
                                           double reduced_mass,
                                           const std::vector<Band>& bands,
                                           int n_lower) {
  if (n_lower < 1) throw ConfigError("synthesize_spectrum: n_lower must be >= 1");
  if (ground.grid() != excited.grid())
    throw ShapeError("synthesize_spectrum: potentials on different grids");
  const RadialGrid& grid = ground.grid();

  SpectrumDataset out;
  out.bands = bands;
  for (const Band& band : bands) {
    auto lowers = solve_bound_states(
        EffectivePotentialSpec(ground, reduced_mass, band.J_upper), n_lower - 1);
    auto uppers = solve_bound_states(
        EffectivePotentialSpec(excited, reduced_mass, band.J_upper), band.v_upper);
    const RovibState& up = uppers.back();
    for (const RovibState& lo : lowers) {
      const double f = franck_condon_amplitude(grid, lo, up);
      EmissionLine line;
      line.v_upper = band.v_upper;
      line.J_upper = band.J_upper;
      line.v_lower = lo.v;
      line.J_lower = lo.J;
      line.omega_cm = units::hartree_to_cm(up.energy - lo.energy);
      line.intensity = f * f;
      line.amplitude = f;
      line.provenance = Provenance::measured;
      out.lines.push_back(line);
    }
  }
  out.check_no_duplicates();

  const double imax = out.max_intensity();
  if (imax > 0.0) {
    const double s = std::sqrt(imax);
    for (auto& l : out.lines) {
      l.intensity /= imax;
      if (l.amplitude) l.amplitude = *l.amplitude / s;
    }
  }
  return out;
}

/// Drop lines weaker than fraction * max intensity and strip amplitudes
/// (measured data carries magnitudes only). With per_band, the reference
/// maximum is taken within each band instead of globally.
inline SpectrumDataset apply_threshold(const SpectrumDataset& spectrum, double fraction,
                                       bool per_band = false) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw ConfigError("apply_threshold: fraction must be in [0, 1)");
  SpectrumDataset out;
  out.bands = spectrum.bands;
  out.threshold_fraction = fraction;
  out.threshold_applied = true;

  const double gmax = spectrum.max_intensity();
  for (const auto& l : spectrum.lines) {
    double ref = gmax;
    if (per_band) {
      ref = 0.0;
      for (const auto& o : spectrum.lines)
        if (o.v_upper == l.v_upper && o.J_upper == l.J_upper)
          ref = std::max(ref, o.intensity);
    }
    if (l.intensity >= fraction * ref) {
      EmissionLine kept = l;
      kept.amplitude.reset();
      out.lines.push_back(kept);
    }
  }
  return out;
}

// ---- text I/O ----------------------------------------------------------

inline void save_spectrum(std::ostream& out, const SpectrumDataset& s) {
  out << "# v_upper J_upper v_lower J_lower omega_cm-1 intensity [amplitude] provenance\n";
  out << "# threshold_fraction " << s.threshold_fraction
      << (s.threshold_applied ? " applied" : " not-applied") << "\n";
  out << "# bands";
  for (const auto& b : s.bands) out << " " << b.v_upper << ":" << b.J_upper;
  out << "\n";
  out.precision(12);
  for (const auto& l : s.lines) {
    out << l.v_upper << " " << l.J_upper << " " << l.v_lower << " " << l.J_lower << " "
        << l.omega_cm << " " << l.intensity;
    if (l.amplitude) out << " " << *l.amplitude;
    out << " " << to_string(l.provenance) << "\n";
  }
}

inline SpectrumDataset load_spectrum(std::istream& in) {
  SpectrumDataset s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tag;
      hs >> tag;
      if (tag == "threshold_fraction") {
        std::string flag;
        hs >> s.threshold_fraction >> flag;
        s.threshold_applied = flag == "applied";
      } else if (tag == "bands") {
        std::string tok;
        while (hs >> tok) {
          auto colon = tok.find(':');
          if (colon == std::string::npos)
            throw ShapeError("spectrum file: bad band token '" + tok + "'");
          s.bands.push_back(
              {std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))});
        }
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.size() != 7 && tok.size() != 8)
      throw ShapeError("spectrum file: malformed line: " + line);
    EmissionLine l;
    l.v_upper = std::stoi(tok[0]);
    l.J_upper = std::stoi(tok[1]);
    l.v_lower = std::stoi(tok[2]);
    l.J_lower = std::stoi(tok[3]);
    l.omega_cm = std::stod(tok[4]);
    l.intensity = std::stod(tok[5]);
    if (tok.size() == 8) l.amplitude = std::stod(tok[6]);
    const std::string& prov = tok.back();
    if (prov == "measured") l.provenance = Provenance::measured;
    else if (prov == "regenerated") l.provenance = Provenance::regenerated;
    else throw ShapeError("spectrum file: unknown provenance '" + prov + "'");
    s.lines.push_back(l);
  }
  s.check_no_duplicates();
  if (s.bands.empty()) {
    for (const auto& l : s.lines) {
      Band b{l.v_upper, l.J_upper};
      if (std::find(s.bands.begin(), s.bands.end(), b) == s.bands.end())
        s.bands.push_back(b);
    }
  }
  return s;
}

inline void save_spectrum_file(const std::string& path, const SpectrumDataset& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  save_spectrum(out, s);
}

inline SpectrumDataset load_spectrum_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spectrum file: " + path);
  return load_spectrum(in);
}

}  // namespace pecinv
