#pragma once

#include <numbers>

namespace qmem {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * pi;

// Angular frequency (rad/s) from ordinary frequency in MHz, and back.
inline constexpr double rad_from_mhz(double mhz) { return two_pi * 1e6 * mhz; }
inline constexpr double mhz_from_rad(double rad) { return rad / (two_pi * 1e6); }

inline constexpr double sec_from_ns(double ns) { return ns * 1e-9; }
inline constexpr double ns_from_sec(double s) { return s * 1e9; }

// Spectral width quoted as an ordinary-frequency bandwidth (Hz), defined as
// the reciprocal of a temporal FWHM divided by 2*pi.
inline constexpr double bandwidth_hz_from_fwhm(double fwhm_s) {
  return 1.0 / (two_pi * fwhm_s);
}

}  // namespace qmem
