#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pecinv/errors.hpp"
#include "pecinv/grid.hpp"
#include "pecinv/spline.hpp"
#include "pecinv/units.hpp"

namespace pecinv {

/// Tabulated 1D potential V(R) on a uniform grid. Values in hartree.
/// Off-node evaluation uses a natural cubic spline. Immutable.
class PotentialCurve {
 public:
  PotentialCurve(RadialGrid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw ShapeError("PotentialCurve: value count does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw ShapeError("PotentialCurve: non-finite value");
    spline_ = std::make_shared<CubicSpline>(grid_.points(), values_);
  }

  static PotentialCurve from_function(const RadialGrid& grid,
                                      const std::function<double(double)>& f) {
    return PotentialCurve(grid, grid.sample(f));
  }

  const RadialGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

  /// Spline value at r (hartree); exact at nodes.
  double operator()(double r) const {
    const double h = grid_.spacing();
    double idx = (r - grid_.r_min()) / h;
    double nearest = std::round(idx);
    if (std::abs(idx - nearest) < 1e-9 && nearest >= 0.0 &&
        nearest < static_cast<double>(grid_.size()))
      return values_[static_cast<std::size_t>(nearest)];
    return (*spline_)(r);
  }

  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

  std::size_t argmin() const {
    return static_cast<std::size_t>(
        std::min_element(values_.begin(), values_.end()) - values_.begin());
  }

  /// Resample onto another uniform grid (spline; target must lie inside).
  PotentialCurve resampled(const RadialGrid& target) const {
    if (target == grid_) return *this;
    std::vector<double> v(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) v[i] = (*spline_)(target.point(i));
    return PotentialCurve(target, std::move(v));
  }

 private:
  RadialGrid grid_;
  std::vector<double> values_;
  std::shared_ptr<const CubicSpline> spline_;
};

// ---- text I/O ----------------------------------------------------------
//
// Format: `# units: <R-unit> <E-unit>` header (bohr|angstrom, cm-1|hartree),
// `#` comments ignored, then one `R value` pair per line. Non-uniform input
// is resampled onto the requested uniform grid.

inline PotentialCurve load_potential(std::istream& in, const RadialGrid& target) {
  std::string r_unit = "bohr", e_unit = "cm-1";
  std::vector<double> rs, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tag;
      hs >> tag;
      if (tag == "units:") hs >> r_unit >> e_unit;
      continue;
    }
    std::istringstream ls(line);
    double r, v;
    if (!(ls >> r >> v)) throw ShapeError("potential file: malformed line: " + line);
    rs.push_back(r);
    vs.push_back(v);
  }
  if (rs.size() < 3) throw ShapeError("potential file: fewer than 3 data rows");

  double r_scale;
  if (r_unit == "bohr") r_scale = 1.0;
  else if (r_unit == "angstrom") r_scale = 1.0 / units::bohr_to_angstrom;
  else throw ConfigError("potential file: unknown R unit '" + r_unit + "'");
  double e_scale;
  if (e_unit == "cm-1") e_scale = 1.0 / units::hartree_to_invcm;
  else if (e_unit == "hartree") e_scale = 1.0;
  else throw ConfigError("potential file: unknown E unit '" + e_unit + "'");

  for (auto& r : rs) r *= r_scale;
  for (auto& v : vs) v *= e_scale;
  CubicSpline s(rs, vs);
  if (target.r_min() < s.x_min() - 1e-9 || target.r_max() > s.x_max() + 1e-9)
    throw RangeError("potential file: data does not cover the requested grid");
  std::vector<double> out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) out[i] = s(target.point(i));
  return PotentialCurve(target, std::move(out));
}

inline PotentialCurve load_potential_file(const std::string& path, const RadialGrid& target) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open potential file: " + path);
  return load_potential(in, target);
}

inline void save_potential(std::ostream& out, const PotentialCurve& curve,
                           const std::string& comment = "") {
  out << "# units: bohr cm-1\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out.precision(12);
  for (std::size_t i = 0; i < curve.grid().size(); ++i)
    out << curve.grid().point(i) << " " << units::hartree_to_cm(curve.values()[i]) << "\n";
}

inline void save_potential_file(const std::string& path, const PotentialCurve& curve,
                                const std::string& comment = "") {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  save_potential(out, curve, comment);
}

}  // namespace pecinv
