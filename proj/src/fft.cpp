#include "qmem/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "qmem/units.hpp"

namespace qmem {

namespace {

std::mutex plan_mutex;

// Unnormalized DFT, sign = FFTW_FORWARD (-1) or FFTW_BACKWARD (+1), in place.
void run_dft(std::vector<cplx>& buf, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mutex);
    plan = fftw_plan_dft_1d(static_cast<int>(buf.size()), p, p, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fftw plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lk(plan_mutex);
    fftw_destroy_plan(plan);
  }
}

double center_parity(std::size_t n) {
  // i^n for even n
  return (n % 4 == 0) ? 1.0 : -1.0;
}

}  // namespace

ComplexSpectrum spectrum_from_time(const FieldWaveform& f) {
  const std::size_t n = f.grid.n;
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("transform needs an even number of samples");
  if (f.a.size() != n) throw std::invalid_argument("waveform sample count does not match its grid");

  std::vector<cplx> buf(n);
  for (std::size_t j = 0; j < n; ++j)
    buf[j] = (j % 2 == 0 ? f.a[j] : -f.a[j]);
  run_dft(buf, FFTW_BACKWARD);

  ComplexSpectrum out;
  out.grid = conjugate_freq(f.grid);
  out.a.resize(n);
  const double tc = f.grid.t0 + f.grid.dt * static_cast<double>(n / 2);
  const double par = center_parity(n);
  for (std::size_t k = 0; k < n; ++k) {
    double ph = out.grid.omega(k) * tc;
    cplx rot(std::cos(ph), std::sin(ph));
    double sgn = (k % 2 == 0 ? 1.0 : -1.0) * par;
    out.a[k] = f.grid.dt * sgn * rot * buf[k];
  }
  return out;
}

FieldWaveform time_from_spectrum(const ComplexSpectrum& s, double t_center) {
  const std::size_t n = s.grid.n;
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("transform needs an even number of samples");
  if (s.a.size() != n) throw std::invalid_argument("spectrum sample count does not match its grid");

  FieldWaveform out;
  out.grid = s.grid.conjugate_time(t_center);
  const double tc = out.grid.t0 + out.grid.dt * static_cast<double>(n / 2);
  const double wc = s.grid.w0 + s.grid.dw * static_cast<double>(n / 2);

  std::vector<cplx> buf(n);
  for (std::size_t k = 0; k < n; ++k) {
    double ph = -(s.grid.omega(k) - wc) * tc;
    cplx rot(std::cos(ph), std::sin(ph));
    buf[k] = (k % 2 == 0 ? 1.0 : -1.0) * rot * s.a[k];
  }
  run_dft(buf, FFTW_FORWARD);

  out.a.resize(n);
  const double scale = s.grid.dw / two_pi;
  const double par = center_parity(n);
  for (std::size_t j = 0; j < n; ++j) {
    double ph = -wc * out.grid.time(j);
    cplx rot(std::cos(ph), std::sin(ph));
    out.a[j] = scale * (j % 2 == 0 ? 1.0 : -1.0) * par * rot * buf[j];
  }
  return out;
}

}  // namespace qmem
