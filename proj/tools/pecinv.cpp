// pecinv: extract a diatomic excited-state potential from Q-branch
// fluorescence line positions and intensities.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pecinv/analysis.hpp"
#include "pecinv/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pecinv;

namespace {

struct CommonOpts {
  double r_min = 4.0, r_max = 20.0;
  std::size_t n_points = 2001;
  double mass_amu = 0.0;
  std::vector<double> atom_masses;
  std::string out_dir = ".";
  std::uint64_t seed = 0;

  RadialGrid grid() const { return RadialGrid(r_min, r_max, n_points); }

  double mass_au() const {
    if (atom_masses.size() == 2) {
      const double mu = atom_masses[0] * atom_masses[1] / (atom_masses[0] + atom_masses[1]);
      return units::amu_to_au(mu);
    }
    if (mass_amu > 0.0) return units::amu_to_au(mass_amu);
    throw ConfigError("provide --mass or --atom-masses");
  }

  double mass_amu_effective() const { return mass_au() / units::amu_to_electron_mass; }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--r-min", o.r_min, "grid inner edge, bohr")->capture_default_str();
  cmd->add_option("--r-max", o.r_max, "grid outer edge, bohr")->capture_default_str();
  cmd->add_option("--n-points", o.n_points, "grid point count")->capture_default_str();
  cmd->add_option("--mass", o.mass_amu, "reduced mass, amu");
  cmd->add_option("--atom-masses", o.atom_masses, "two atomic masses, amu")
      ->expected(2);
  cmd->add_option("--out", o.out_dir, "output directory")
      ->envname("PECINV_OUT")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
}

std::vector<Band> parse_bands(const std::string& spec) {
  std::vector<Band> bands;
  std::istringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw ConfigError("bad band token '" + tok + "', expected v:J");
    bands.push_back({std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))});
  }
  if (bands.empty()) throw ConfigError("no bands given");
  return bands;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Every run writes a manifest with all effective settings and a hash of them.
void write_manifest(const fs::path& dir, const std::string& command,
                    const std::map<std::string, std::string>& settings) {
  std::ostringstream body;
  body << "command " << command << "\n";
  for (const auto& [k, v] : settings) body << k << " " << v << "\n";
  std::ofstream out(dir / "run_manifest.txt");
  out << "# pecinv run manifest\n";
  out << "config_hash " << std::hex << fnv1a(body.str()) << std::dec << "\n";
  out << body.str();
}

std::map<std::string, std::string> common_settings(const CommonOpts& o) {
  std::map<std::string, std::string> m;
  auto put = [&](const std::string& k, auto v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    m[k] = os.str();
  };
  put("r_min_bohr", o.r_min);
  put("r_max_bohr", o.r_max);
  put("n_points", o.n_points);
  put("reduced_mass_amu", o.mass_amu_effective());
  put("seed", o.seed);
  put("out_dir", o.out_dir);
  return m;
}

void dump_states(const fs::path& dir, const std::string& stem,
                 const std::vector<RovibState>& states, const RadialGrid& grid) {
  for (const auto& st : states) {
    std::ofstream out(dir / (stem + "_v" + std::to_string(st.v) + "_J" +
                             std::to_string(st.J) + ".txt"));
    out.precision(12);
    out << "# v J energy_cm-1\n";
    out << "# " << st.v << " " << st.J << " " << units::hartree_to_cm(st.energy) << "\n";
    if (st.box_contaminated) out << "# warning: box-contaminated\n";
    for (std::size_t i = 0; i < grid.size(); ++i) out << st.wavefunction[i] << "\n";
  }
}

std::string bands_to_string(const std::vector<Band>& bands) {
  std::ostringstream os;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (i) os << ",";
    os << bands[i].v_upper << ":" << bands[i].J_upper;
  }
  return os.str();
}

int cmd_solve(const CommonOpts& o, const std::string& pot_file, int v_max, int J) {
  const RadialGrid grid = o.grid();
  PotentialCurve pot = load_potential_file(pot_file, grid);
  auto states = solve_bound_states(EffectivePotentialSpec(pot, o.mass_au(), J), v_max);
  fs::create_directories(o.out_dir);
  dump_states(o.out_dir, "state", states, grid);
  auto settings = common_settings(o);
  settings["potential"] = pot_file;
  settings["v_max"] = std::to_string(v_max);
  settings["J"] = std::to_string(J);
  write_manifest(o.out_dir, "solve", settings);
  std::cout << "wrote " << states.size() << " states to " << o.out_dir << "\n";
  for (const auto& st : states)
    if (st.box_contaminated)
      std::cerr << "warning: state v=" << st.v << " is box-contaminated\n";
  return 0;
}

int cmd_synth(const CommonOpts& o, const std::string& ground_file,
              const std::string& excited_file, const std::string& bands_spec,
              int n_lower, double threshold, bool per_band) {
  const RadialGrid grid = o.grid();
  PotentialCurve ground = load_potential_file(ground_file, grid);
  PotentialCurve excited = load_potential_file(excited_file, grid);
  auto bands = parse_bands(bands_spec);
  SpectrumDataset spec = synthesize_spectrum(ground, excited, o.mass_au(), bands, n_lower);
  if (threshold > 0.0) spec = apply_threshold(spec, threshold, per_band);
  fs::create_directories(o.out_dir);
  save_spectrum_file((fs::path(o.out_dir) / "spectrum.txt").string(), spec);
  {
    std::ofstream stick(fs::path(o.out_dir) / "stick.txt");
    stick.precision(12);
    stick << "# omega_cm-1 intensity\n";
    for (const auto& l : spec.lines) stick << l.omega_cm << " " << l.intensity << "\n";
  }
  auto settings = common_settings(o);
  settings["ground"] = ground_file;
  settings["excited"] = excited_file;
  settings["bands"] = bands_spec;
  settings["n_lower"] = std::to_string(n_lower);
  settings["threshold_fraction"] = std::to_string(threshold);
  settings["threshold_per_band"] = per_band ? "true" : "false";
  write_manifest(o.out_dir, "synth", settings);
  std::cout << "wrote " << spec.lines.size() << " lines to " << o.out_dir
            << "/spectrum.txt (threshold " << threshold << ")\n";
  return 0;
}

struct InvertOpts {
  std::string ground_file, spectrum_file, reference_file;
  int n_lower = 31;
  double density_cutoff = 1e-3;
  std::string extrapolation = "morse-continuation";
  double re_lo = 0.0, re_hi = 0.0;
  int re_steps = 61;
  std::string region_vs = "2,5,10,20";
};

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

int cmd_invert(const CommonOpts& o, const InvertOpts& io) {
  const RadialGrid grid = o.grid();
  const double mass = o.mass_au();
  PotentialCurve ground = load_potential_file(io.ground_file, grid);
  SpectrumDataset measured = load_spectrum_file(io.spectrum_file);

  PipelineConfig cfg;
  cfg.n_lower = io.n_lower;
  cfg.density_cutoff = io.density_cutoff;
  cfg.extrapolation = parse_extrapolation(io.extrapolation);
  cfg.Re_search_lo = io.re_lo;
  cfg.Re_search_hi = io.re_hi;
  cfg.Re_search_steps = io.re_steps;

  PipelineResult res = run_inversion_pipeline(ground, measured, mass, cfg);
  const ExtractedPotential& ex = *res.extracted;

  fs::create_directories(o.out_dir);
  save_potential_file((fs::path(o.out_dir) / "extracted_potential.txt").string(),
                      ex.curve, "extracted excited-state potential");

  {
    std::ofstream diag(fs::path(o.out_dir) / "diagnostics.txt");
    diag.precision(12);
    diag << "# inversion diagnostics\n";
    diag << "valid_range_bohr " << ex.r_inner() << " " << ex.r_outer() << "\n";
    diag << "density_cutoff " << ex.density_cutoff << "\n";
    diag << "extrapolation " << ex.extrapolation_spec << "\n";
    diag << "measured_scale " << res.overlaps.measured_scale << "\n";
    for (std::size_t b = 0; b < res.overlaps.bands.size(); ++b) {
      const auto& bo = res.overlaps.bands[b];
      diag << "completeness v'=" << bo.band.v_upper << " J'=" << bo.band.J_upper << " "
           << bo.completeness << (bo.flagged ? " FLAGGED" : "") << "\n";
      if (bo.flagged)
        std::cerr << "warning: completeness below 0.999 for band v'=" << bo.band.v_upper
                  << "\n";
      for (const auto& e : bo.entries)
        if (e.sign_ambiguous)
          std::cerr << "warning: sign-ambiguous measured line v'=" << bo.band.v_upper
                    << " -> v=" << e.lower_index << "\n";
    }
    diag << "# density profile (R_bohr density)\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
      diag << grid.point(i) << " " << ex.density[i] << "\n";
  }

  {
    std::ofstream rep(fs::path(o.out_dir) / "report.txt");
    rep << morse_fit_report(res.energy_fit, res.band_origins, &res.re_fit);
    rep << "# rotational treatment: effective potential at each band's J\n";
    if (!io.reference_file.empty()) {
      PotentialCurve ref = load_potential_file(io.reference_file, grid);
      auto regions = regions_from_levels(ref, mass, parse_ints(io.region_vs));
      rep << "# region rms_cm-1\n";
      rep.precision(6);
      for (const auto& r : regions)
        rep << r.label << " " << rms_error(ex.curve, ref, r) << "\n";
    } else {
      rep << "# scoring: absent (no reference potential provided)\n";
    }
  }

  auto settings = common_settings(o);
  settings["ground"] = io.ground_file;
  settings["spectrum"] = io.spectrum_file;
  settings["reference"] = io.reference_file.empty() ? "(none)" : io.reference_file;
  settings["n_lower"] = std::to_string(io.n_lower);
  settings["density_cutoff"] = std::to_string(io.density_cutoff);
  settings["extrapolation"] = io.extrapolation;
  settings["re_search"] = std::to_string(io.re_lo) + ".." + std::to_string(io.re_hi) +
                          "/" + std::to_string(io.re_steps);
  settings["regions_v"] = io.region_vs;
  write_manifest(o.out_dir, "invert", settings);
  std::cout << "extracted potential written to " << o.out_dir
            << "/extracted_potential.txt\n";
  return 0;
}

int cmd_fit_morse(const CommonOpts& o, const std::string& ground_file,
                  const std::string& spectrum_file, double re_lo, double re_hi,
                  int re_steps, int n_lower) {
  const RadialGrid grid = o.grid();
  const double mass = o.mass_au();
  PotentialCurve ground = load_potential_file(ground_file, grid);
  SpectrumDataset measured = load_spectrum_file(spectrum_file);
  auto gs = solve_ground_states(ground, mass, measured.bands, n_lower);
  auto origins = band_origins_from_spectrum(measured, gs);
  const double re_g = grid.point(ground.argmin());
  auto fit0 = fit_morse_energies(origins, mass, re_g);
  if (!(re_hi > re_lo)) {
    re_lo = std::max(grid.r_min() + 0.5, re_g - 2.5);
    re_hi = std::min(grid.r_max() - 0.5, re_g + 2.5);
  }
  auto refit = fit_morse_Re(fit0.params, measured, ground, mass, re_lo, re_hi, re_steps);
  auto fit = fit_morse_energies(origins, mass, refit.R_e, grid);
  fs::create_directories(o.out_dir);
  {
    std::ofstream out(fs::path(o.out_dir) / "morse_fit.txt");
    out << morse_fit_report(fit, origins, &refit);
  }
  auto settings = common_settings(o);
  settings["ground"] = ground_file;
  settings["spectrum"] = spectrum_file;
  settings["n_lower"] = std::to_string(n_lower);
  write_manifest(o.out_dir, "fit-morse", settings);
  std::cout << "fit written to " << o.out_dir << "/morse_fit.txt\n";
  return 0;
}

int cmd_noise_study(const CommonOpts& o, const InvertOpts& io,
                    const std::string& levels_csv, int trials, int jobs,
                    const std::string& distribution) {
  const RadialGrid grid = o.grid();
  const double mass = o.mass_au();
  PotentialCurve ground = load_potential_file(io.ground_file, grid);
  SpectrumDataset measured = load_spectrum_file(io.spectrum_file);
  if (io.reference_file.empty())
    throw ConfigError("noise-study requires --reference for scoring");
  PotentialCurve ref = load_potential_file(io.reference_file, grid);

  PipelineConfig cfg;
  cfg.n_lower = io.n_lower;
  cfg.density_cutoff = io.density_cutoff;
  cfg.extrapolation = parse_extrapolation(io.extrapolation);
  cfg.Re_search_lo = io.re_lo;
  cfg.Re_search_hi = io.re_hi;
  cfg.Re_search_steps = io.re_steps;
  PipelineResult res = run_inversion_pipeline(ground, measured, mass, cfg);

  NoiseStudyInputs inputs{ground,
                          measured,
                          res.ground_states,
                          res.morse,
                          ref,
                          mass,
                          io.n_lower,
                          io.density_cutoff,
                          cfg.extrapolation};
  NoiseStudyConfig ncfg;
  ncfg.n_trials = trials;
  ncfg.seed = o.seed;
  ncfg.jobs = jobs;
  ncfg.rel_rms_levels.clear();
  {
    std::istringstream ss(levels_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) ncfg.rel_rms_levels.push_back(std::stod(tok));
  }
  if (distribution == "gaussian") ncfg.distribution = NoiseDistribution::gaussian;
  else if (distribution == "uniform") ncfg.distribution = NoiseDistribution::uniform;
  else throw ConfigError("unknown noise distribution '" + distribution + "'");

  auto regions = regions_from_levels(ref, mass, parse_ints(io.region_vs));
  NoiseStudyTable table = run_noise_study(inputs, ncfg, regions);
  fs::create_directories(o.out_dir);
  {
    std::ofstream out(fs::path(o.out_dir) / "noise_study.txt");
    out << table.to_text();
  }
  auto settings = common_settings(o);
  settings["ground"] = io.ground_file;
  settings["spectrum"] = io.spectrum_file;
  settings["reference"] = io.reference_file;
  settings["levels"] = levels_csv;
  settings["n_trials"] = std::to_string(trials);
  settings["jobs"] = std::to_string(jobs);
  settings["distribution"] = distribution;
  settings["n_lower"] = std::to_string(io.n_lower);
  settings["density_cutoff"] = std::to_string(io.density_cutoff);
  settings["extrapolation"] = io.extrapolation;
  write_manifest(o.out_dir, "noise-study", settings);
  std::cout << table.to_text();
  return 0;
}

int cmd_rms(const CommonOpts& o, const std::string& test_file,
            const std::string& ref_file, const std::string& region_vs, bool no_align) {
  const RadialGrid grid = o.grid();
  PotentialCurve test = load_potential_file(test_file, grid);
  PotentialCurve ref = load_potential_file(ref_file, grid);
  auto regions = regions_from_levels(ref, o.mass_au(), parse_ints(region_vs));
  std::cout << "# region rms_cm-1 n_points\n";
  for (const auto& r : regions) {
    std::size_t n = 0;
    const double e = rms_error(test, ref, r, !no_align, &n);
    std::cout << r.label << " " << e << " " << n << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extract excited-state potentials from fluorescence line data"};
  app.require_subcommand(1);
  app.set_config("--config");

  CommonOpts o;

  auto* solve = app.add_subcommand("solve", "solve bound states of a potential");
  std::string pot_file;
  int v_max = 10, J = 0;
  add_common(solve, o);
  solve->add_option("--potential", pot_file, "potential file")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--vmax", v_max, "highest vibrational level");
  solve->add_option("--j", J, "rotational quantum number");

  auto* synth = app.add_subcommand("synth", "synthesize a Q-branch emission spectrum");
  std::string ground_file, excited_file, bands_spec = "0:4,1:5,2:8";
  int n_lower = 31;
  double threshold = 0.0;
  bool per_band = false;
  add_common(synth, o);
  synth->add_option("--ground", ground_file, "ground potential file")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--excited", excited_file, "excited potential file")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--bands", bands_spec, "bands as v:J,v:J,...")->capture_default_str();
  synth->add_option("--n-lower", n_lower, "lower states per band")->capture_default_str();
  synth->add_option("--threshold", threshold, "detection threshold fraction")
      ->capture_default_str();
  synth->add_flag("--per-band-threshold", per_band, "threshold per band maximum");

  auto* fitm = app.add_subcommand("fit-morse", "fit a Morse model to a measured spectrum");
  InvertOpts fo;
  add_common(fitm, o);
  fitm->add_option("--ground", fo.ground_file, "ground potential file")
      ->required()
      ->check(CLI::ExistingFile);
  fitm->add_option("--spectrum", fo.spectrum_file, "measured spectrum file")
      ->required()
      ->check(CLI::ExistingFile);
  fitm->add_option("--re-lo", fo.re_lo, "R_e search lower bound, bohr");
  fitm->add_option("--re-hi", fo.re_hi, "R_e search upper bound, bohr");
  fitm->add_option("--re-steps", fo.re_steps, "R_e scan steps")->capture_default_str();
  fitm->add_option("--n-lower", fo.n_lower, "lower states per band")->capture_default_str();

  auto* invert = app.add_subcommand("invert", "run the full extraction pipeline");
  InvertOpts io;
  add_common(invert, o);
  invert->add_option("--ground", io.ground_file, "ground potential file")
      ->required()
      ->check(CLI::ExistingFile);
  invert->add_option("--spectrum", io.spectrum_file, "measured (thresholded) spectrum")
      ->required()
      ->check(CLI::ExistingFile);
  invert->add_option("--reference", io.reference_file, "reference potential for scoring")
      ->check(CLI::ExistingFile);
  invert->add_option("--n-lower", io.n_lower, "lower states per band")
      ->capture_default_str();
  invert->add_option("--density-cutoff", io.density_cutoff,
                     "valid-range density cutoff (fraction of max)")
      ->capture_default_str();
  invert->add_option("--extrapolation", io.extrapolation,
                     "tail method: morse-continuation | linear-slope")
      ->capture_default_str();
  invert->add_option("--re-lo", io.re_lo, "R_e search lower bound, bohr");
  invert->add_option("--re-hi", io.re_hi, "R_e search upper bound, bohr");
  invert->add_option("--re-steps", io.re_steps, "R_e scan steps")->capture_default_str();
  invert->add_option("--regions", io.region_vs, "region levels v'=k list")
      ->capture_default_str();

  auto* noise = app.add_subcommand("noise-study", "seeded intensity-noise robustness study");
  InvertOpts no_;
  std::string levels_csv = "0.02,0.05,0.10", distribution = "gaussian";
  int trials = 100, jobs = 1;
  add_common(noise, o);
  noise->add_option("--ground", no_.ground_file, "ground potential file")
      ->required()
      ->check(CLI::ExistingFile);
  noise->add_option("--spectrum", no_.spectrum_file, "measured (thresholded) spectrum")
      ->required()
      ->check(CLI::ExistingFile);
  noise->add_option("--reference", no_.reference_file, "reference potential for scoring")
      ->required()
      ->check(CLI::ExistingFile);
  noise->add_option("--levels", levels_csv, "relative rms noise levels")
      ->capture_default_str();
  noise->add_option("--trials", trials, "Monte-Carlo trials per level")
      ->capture_default_str();
  noise->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  noise->add_option("--distribution", distribution, "gaussian | uniform")
      ->capture_default_str();
  noise->add_option("--n-lower", no_.n_lower, "lower states per band")
      ->capture_default_str();
  noise->add_option("--density-cutoff", no_.density_cutoff, "density cutoff")
      ->capture_default_str();
  noise->add_option("--extrapolation", no_.extrapolation, "tail method")
      ->capture_default_str();
  noise->add_option("--re-steps", no_.re_steps, "R_e scan steps")->capture_default_str();
  noise->add_option("--regions", no_.region_vs, "region levels v'=k list")
      ->capture_default_str();

  auto* rms = app.add_subcommand("rms", "region-wise RMS error of a potential");
  std::string test_file, ref_file, region_vs = "2,5,10,20";
  bool no_align = false;
  add_common(rms, o);
  rms->add_option("--test", test_file, "test potential file")
      ->required()
      ->check(CLI::ExistingFile);
  rms->add_option("--reference", ref_file, "reference potential file")
      ->required()
      ->check(CLI::ExistingFile);
  rms->add_option("--regions", region_vs, "region levels v'=k list")
      ->capture_default_str();
  rms->add_flag("--no-align", no_align, "disable gauge alignment to the reference minimum");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(o, pot_file, v_max, J);
    if (synth->parsed())
      return cmd_synth(o, ground_file, excited_file, bands_spec, n_lower, threshold,
                       per_band);
    if (fitm->parsed())
      return cmd_fit_morse(o, fo.ground_file, fo.spectrum_file, fo.re_lo, fo.re_hi,
                           fo.re_steps, fo.n_lower);
    if (invert->parsed()) return cmd_invert(o, io);
    if (noise->parsed()) return cmd_noise_study(o, no_, levels_csv, trials, jobs,
                                                distribution);
    if (rms->parsed()) return cmd_rms(o, test_file, ref_file, region_vs, no_align);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
