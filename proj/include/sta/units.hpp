#pragma once

#include <numbers>

// Internal units: hbar = 1, time in ns, fields and energies in rad/ns.
// The reporting boundary uses ordinary frequencies in MHz and energies in h*MHz.
namespace sta::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Omega/2pi in MHz -> angular frequency in rad/ns.
constexpr double mhz_to_rad_per_ns(double f_mhz) { return two_pi * f_mhz * 1e-3; }

constexpr double rad_per_ns_to_mhz(double w) { return w / two_pi * 1e3; }

// Energy hbar*w (hbar = 1) expressed as E/h in MHz.
constexpr double energy_to_hmhz(double e) { return rad_per_ns_to_mhz(e); }

constexpr double hmhz_to_energy(double e_hmhz) { return mhz_to_rad_per_ns(e_hmhz); }

constexpr double energy2_to_hmhz2(double e2) {
    const double s = rad_per_ns_to_mhz(1.0);
    return e2 * s * s;
}

constexpr double us_to_ns(double t_us) { return t_us * 1e3; }

}  // namespace sta::units
