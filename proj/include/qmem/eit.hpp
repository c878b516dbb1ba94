#pragma once

#include "qmem/fitting.hpp"
#include "qmem/grid.hpp"

namespace qmem {

// Three-level Lambda-type medium, frequency-domain description.
struct EitParams {
  double optical_depth = 0.0;  // dimensionless alpha
  double Gamma = 0.0;          // excited-state decay rate [rad/s]
  double Omega_c = 0.0;        // coupling Rabi frequency [rad/s]
  double gamma_gs = 0.0;       // ground-state decoherence rate [rad/s]
  double delta_ge = 0.0;       // one-photon detuning [rad/s]
  double delta_gs = 0.0;       // two-photon detuning [rad/s]

  void validate() const;
};

struct MediumResponse {
  FreqGrid grid;
  std::vector<cplx> kernel;  // free-space phase factored out
};

// Complex medium response at one frequency: exp of -(alpha*Gamma/4) d_gs / D.
cplx kernel_value(const EitParams& p, double omega);

MediumResponse propagation_kernel(const EitParams& p, const FreqGrid& grid);

// Intensity transmission vs one-photon detuning with the two-photon detuning
// tied to it (zero coupling detuning).
std::vector<double> transmission_spectrum(const EitParams& p,
                                          std::span<const double> detuning);
double transmission(const EitParams& p, double detuning);

// FWHM of the transparency window, closed form.
double eit_bandwidth(const EitParams& p);
// Same width extracted by root-finding the half-transmission crossing.
double eit_bandwidth_numeric(const EitParams& p);
// Regime approximations for the window width.
double eit_bandwidth_low_intensity(const EitParams& p);
double eit_bandwidth_high_intensity(const EitParams& p);

// Group delay at line center from the kernel phase slope.
double group_delay(const EitParams& p);

// Coupling strength that realizes a requested group delay, holding the other
// parameters fixed.
double calibrate_omega_c(const EitParams& p, double target_delay);

// Operating point used throughout: alpha = 55, Gamma = 2*pi*5.23 MHz,
// gamma_gs = 0.065*Gamma, Omega_c set for a 75 ns group delay.
EitParams paper_medium();

struct OpticalDepthFit {
  EitParams params;   // alpha, Omega_c, gamma_gs filled from the fit
  double rms = 0.0;
  FitResult detail;
};

// Least-squares fit of the transmission model over (alpha, Omega_c, gamma_gs)
// with Gamma fixed; needs >= 20 samples spanning at least one linewidth.
OpticalDepthFit fit_optical_depth(std::span<const double> detuning,
                                  std::span<const double> transmission,
                                  double Gamma);

}  // namespace qmem
