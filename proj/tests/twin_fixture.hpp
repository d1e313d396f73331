// Synthetic LiRb-scale twin: a fully known ground/excited pair for running
// the extraction pipeline against a verifiable truth.
#pragma once

#include <cmath>

#include "pecinv/morse.hpp"
#include "pecinv/potential.hpp"
#include "pecinv/units.hpp"

namespace twin {

inline const double kMass = pecinv::units::amu_to_au(6.4806);

inline pecinv::MorseParams ground_params() {
  pecinv::MorseParams p;
  p.T_e = pecinv::units::cm_to_hartree(5900.0);  // asymptote; minimum at zero
  p.D_e = pecinv::units::cm_to_hartree(5900.0);
  p.beta = 0.417;
  p.R_e = 6.6;
  return p;
}

inline pecinv::MorseParams excited_base() {
  pecinv::MorseParams p;
  p.T_e = pecinv::units::cm_to_hartree(20000.0);
  p.D_e = pecinv::units::cm_to_hartree(2200.0);
  p.beta = 0.42;
  p.R_e = 7.1;
  return p;
}

inline pecinv::PotentialCurve ground(const pecinv::RadialGrid& g) {
  return pecinv::morse_curve(ground_params(), g);
}

/// Non-Morse excited truth: Morse plus a smooth ~12 cm-1 bump.
inline pecinv::PotentialCurve excited_truth(const pecinv::RadialGrid& g) {
  const pecinv::MorseParams base = excited_base();
  return pecinv::PotentialCurve::from_function(g, [base](double r) {
    const double x = (r - base.R_e - 1.2) / 1.0;
    return pecinv::morse_eval(base, r) +
           pecinv::units::cm_to_hartree(12.0) * std::exp(-x * x);
  });
}

inline std::vector<pecinv::Band> bands() { return {{0, 4}, {1, 5}, {2, 8}}; }

}  // namespace twin
