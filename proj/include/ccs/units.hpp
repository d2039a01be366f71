#pragma once

// Physical constants and conversions between lattice units and SI.
//
// Frequencies throughout the library are expressed in units of 2*pi*c/a and
// times in units of a/(2*pi*c), where a is the photonic-crystal lattice
// constant.

#include <cmath>
#include <numbers>

namespace ccs {

inline constexpr double speed_of_light = 299792458.0;      // m/s
inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double epsilon0 = 8.8541878128e-12;       // F/m
inline constexpr double default_lattice_nm = 480.0;
inline constexpr double pi = std::numbers::pi;

// Angular frequency (rad/s) corresponding to one lattice frequency unit.
inline double rate_unit(double a_nm = default_lattice_nm) {
  return 2.0 * pi * speed_of_light / (a_nm * 1e-9);
}

inline double omega_to_rad_per_s(double omega, double a_nm = default_lattice_nm) {
  return omega * rate_unit(a_nm);
}

inline double omega_to_thz(double omega, double a_nm = default_lattice_nm) {
  return omega * speed_of_light / (a_nm * 1e-9) * 1e-12;
}

inline double omega_to_wavelength_nm(double omega, double a_nm = default_lattice_nm) {
  return a_nm / omega;
}

// Photon count of a pulse of the given energy at lattice frequency omega.
inline double photons_from_energy(double energy_fj, double omega,
                                  double a_nm = default_lattice_nm) {
  return energy_fj * 1e-15 / (hbar * omega_to_rad_per_s(omega, a_nm));
}

}  // namespace ccs
