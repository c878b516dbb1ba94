#pragma once

#include "qmem/grid.hpp"

namespace qmem {

// Single-longitudinal-mode cavity-enhanced SPDC below threshold.
// All rates are angular (rad/s); mode frequencies are relative to the carrier.
struct CavitySpdcParams {
  double gamma_s = 0.0;   // signal out-coupling rate
  double Gamma_s = 0.0;   // signal total cavity decay rate
  double gamma_i = 0.0;   // idler out-coupling rate
  double Gamma_i = 0.0;   // idler total cavity decay rate
  double kappa = 0.0;     // parametric coupling strength
  double Omega_q = 0.0;   // signal cavity mode frequency
  double Omega_r = 0.0;   // idler cavity mode frequency
  double omega_pump = 0.0;

  void validate() const;  // throws std::invalid_argument on violation
};

// Symmetric all-out-coupling cavity tuned so the biphoton spectral FWHM is
// 2*pi*6.2e6 rad/s, with a pair rate far below one per coherence time.
CavitySpdcParams paper_source();

struct FieldCoefficients {
  cplx A_s, B_s, A_i, B_i;
};

FieldCoefficients field_coefficients(const CavitySpdcParams& p, double omega);

// Source biphoton spectral amplitude (identity medium). With normalize set,
// rescales so the time-domain intensity integrates to 1.
ComplexSpectrum biphoton_spectrum(const CavitySpdcParams& p, const FreqGrid& grid,
                                  bool normalize = false);

// Two-photon correlation vs delay: squared magnitude of the synthesized
// time-domain amplitude (background handled by the detection model).
RealWaveform g2_waveform_from_spectrum(const ComplexSpectrum& spec);

// Default analysis grid: 2^14 points spanning +-2*pi*200 MHz.
FreqGrid default_grid();

}  // namespace qmem
