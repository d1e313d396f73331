#pragma once

namespace pecinv::units {

// CODATA-derived conversion constants, fixed at build time.
inline constexpr double hartree_to_invcm = 219474.6313632;
inline constexpr double amu_to_electron_mass = 1822.888486209;

inline constexpr double bohr_to_angstrom = 0.529177210903;

inline constexpr double cm_to_hartree(double e_cm) { return e_cm / hartree_to_invcm; }
inline constexpr double hartree_to_cm(double e_au) { return e_au * hartree_to_invcm; }
inline constexpr double amu_to_au(double m_amu) { return m_amu * amu_to_electron_mass; }
inline constexpr double angstrom_to_bohr(double r_ang) { return r_ang / bohr_to_angstrom; }

}  // namespace pecinv::units
