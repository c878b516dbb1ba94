#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qmem {

using cplx = std::complex<double>;

// Uniform time grid: t_i = t0 + i*dt, i in [0, n).
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t n = 0;

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double span() const { return static_cast<double>(n) * dt; }
};

// Uniform angular-frequency grid: w_k = w0 + k*dw, k in [0, n).
struct FreqGrid {
  double w0 = 0.0;
  double dw = 1.0;
  std::size_t n = 0;

  double omega(std::size_t k) const { return w0 + static_cast<double>(k) * dw; }
  double span() const { return static_cast<double>(n) * dw; }

  // Symmetric grid about zero; for even n the sample at index n/2 is exactly 0.
  static FreqGrid centered(std::size_t n, double dw);
  // Grid conjugate to this one under the DFT, centered on t_center.
  TimeGrid conjugate_time(double t_center = 0.0) const;
};

// Centered angular-frequency grid conjugate to a time grid under the DFT.
FreqGrid conjugate_freq(const TimeGrid& g);

struct FieldWaveform {
  TimeGrid grid;
  std::vector<cplx> a;
};

struct RealWaveform {
  TimeGrid grid;
  std::vector<double> v;
};

struct ComplexSpectrum {
  FreqGrid grid;
  std::vector<cplx> a;
};

double energy(const FieldWaveform& f);           // trapezoid of |a|^2 dt
double spectral_energy(const ComplexSpectrum& s);  // (1/2pi) trapezoid of |a|^2 dw

// FWHM of the dominant lobe: walk outward from the global maximum to the
// first half-maximum crossings, linearly interpolated. Throws if either
// crossing lies outside the sampled range.
double fwhm(std::span<const double> x, std::span<const double> y);
double fwhm(const RealWaveform& w);

// Width of the region around the global maximum where y exceeds an absolute
// level (same outward walk, fixed threshold).
double width_at_level(std::span<const double> x, std::span<const double> y,
                      double level);

// Guard against spectral truncation: the grid span must exceed
// `factor` times the feature width.
void require_span(double span, double feature_width, double factor = 20.0);

}  // namespace qmem
