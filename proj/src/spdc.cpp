#include "qmem/spdc.hpp"

#include <cmath>
#include <stdexcept>

#include "qmem/fft.hpp"
#include "qmem/units.hpp"

namespace qmem {

void CavitySpdcParams::validate() const {
  if (!(gamma_s > 0.0) || !(Gamma_s >= gamma_s))
    throw std::invalid_argument("signal cavity rates need Gamma_s >= gamma_s > 0");
  if (!(gamma_i > 0.0) || !(Gamma_i >= gamma_i))
    throw std::invalid_argument("idler cavity rates need Gamma_i >= gamma_i > 0");
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  double scale = std::max(std::fabs(Omega_q) + std::fabs(Omega_r), 1.0);
  if (std::fabs(Omega_q + Omega_r - omega_pump) > 1e-9 * scale)
    throw std::invalid_argument("double resonance requires Omega_q + Omega_r = omega_pump");
}

CavitySpdcParams paper_source() {
  CavitySpdcParams p;
  // Lorentzian-squared spectrum: FWHM = sqrt(sqrt(2)-1) * Gamma_c
  const double Gamma_c = rad_from_mhz(6.2) / std::sqrt(std::sqrt(2.0) - 1.0);
  p.Gamma_s = p.gamma_s = Gamma_c;
  p.Gamma_i = p.gamma_i = Gamma_c;
  p.kappa = 1944.6;
  p.Omega_q = p.Omega_r = p.omega_pump = 0.0;
  return p;
}

FieldCoefficients field_coefficients(const CavitySpdcParams& p, double omega) {
  p.validate();
  if (!std::isfinite(omega)) throw std::invalid_argument("omega must be finite");

  const cplx i1(0.0, 1.0);
  const double ds = omega - p.Omega_q;        // signal detuning
  const double di = p.Omega_q - omega;        // idler detuning, omega_i - Omega_r
  const cplx den_s = 0.5 * p.Gamma_s - i1 * ds;
  const cplx den_i_conj = 0.5 * p.Gamma_i + i1 * di;

  FieldCoefficients c;
  c.A_s = (p.gamma_s - 0.5 * p.Gamma_s + i1 * ds) / den_s;
  c.A_i = (p.gamma_i - 0.5 * p.Gamma_i + i1 * di) / (0.5 * p.Gamma_i - i1 * di);
  cplx b = p.kappa * std::sqrt(p.gamma_s * p.gamma_i) / (den_s * den_i_conj);
  c.B_s = -i1 * b;
  c.B_i = i1 * b;
  return c;
}

FreqGrid default_grid() {
  const std::size_t n = 1 << 14;
  const double span = 2.0 * rad_from_mhz(200.0);
  return FreqGrid::centered(n, span / static_cast<double>(n));
}

ComplexSpectrum biphoton_spectrum(const CavitySpdcParams& p, const FreqGrid& grid,
                                  bool normalize) {
  p.validate();
  if (grid.n < 8) throw std::invalid_argument("frequency grid too short");

  ComplexSpectrum out;
  out.grid = grid;
  out.a.resize(grid.n);
  std::vector<double> x(grid.n), mag2(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) {
    double w = grid.omega(k);
    FieldCoefficients c = field_coefficients(p, w);
    out.a[k] = std::conj(c.A_s) * c.B_i;
    x[k] = w;
    mag2[k] = std::norm(out.a[k]);
  }

  if (p.kappa > 0.0) {
    double width = fwhm(x, mag2);  // throws if the peak is clipped by the grid
    require_span(grid.span(), width);
  }

  if (normalize) {
    double e = spectral_energy(out);
    if (!(e > 0.0)) throw std::runtime_error("cannot normalize an identically zero spectrum");
    double s = 1.0 / std::sqrt(e);
    for (auto& v : out.a) v *= s;
  }
  return out;
}

RealWaveform g2_waveform_from_spectrum(const ComplexSpectrum& spec) {
  FieldWaveform psi = time_from_spectrum(spec);
  RealWaveform g2;
  g2.grid = psi.grid;
  g2.v.resize(psi.a.size());
  for (std::size_t i = 0; i < psi.a.size(); ++i) g2.v[i] = std::norm(psi.a[i]);
  return g2;
}

}  // namespace qmem
