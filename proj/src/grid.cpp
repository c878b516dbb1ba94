#include "qmem/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmem/units.hpp"

namespace qmem {

FreqGrid FreqGrid::centered(std::size_t n, double dw) {
  if (n == 0 || dw <= 0.0) throw std::invalid_argument("freq grid needs n > 0 and dw > 0");
  FreqGrid g;
  g.dw = dw;
  g.n = n;
  g.w0 = -dw * static_cast<double>(n / 2);
  return g;
}

TimeGrid FreqGrid::conjugate_time(double t_center) const {
  TimeGrid t;
  t.n = n;
  t.dt = two_pi / (dw * static_cast<double>(n));
  t.t0 = t_center - t.dt * static_cast<double>(n / 2);
  return t;
}

FreqGrid conjugate_freq(const TimeGrid& g) {
  return FreqGrid::centered(g.n, two_pi / (g.dt * static_cast<double>(g.n)));
}

double energy(const FieldWaveform& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < f.a.size(); ++i)
    acc += 0.5 * (std::norm(f.a[i]) + std::norm(f.a[i + 1]));
  return acc * f.grid.dt;
}

double spectral_energy(const ComplexSpectrum& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < s.a.size(); ++i)
    acc += 0.5 * (std::norm(s.a[i]) + std::norm(s.a[i + 1]));
  return acc * s.grid.dw / two_pi;
}

namespace {

double cross_left(std::span<const double> x, std::span<const double> y,
                  std::size_t ipk, double level) {
  for (std::size_t i = ipk; i-- > 0;) {
    if (y[i] <= level) {
      double f = (level - y[i]) / (y[i + 1] - y[i]);
      return x[i] + f * (x[i + 1] - x[i]);
    }
  }
  throw std::runtime_error("half-level crossing left of peak lies outside sampled range");
}

double cross_right(std::span<const double> x, std::span<const double> y,
                   std::size_t ipk, double level) {
  for (std::size_t i = ipk + 1; i < y.size(); ++i) {
    if (y[i] <= level) {
      double f = (y[i - 1] - level) / (y[i - 1] - y[i]);
      return x[i - 1] + f * (x[i] - x[i - 1]);
    }
  }
  throw std::runtime_error("half-level crossing right of peak lies outside sampled range");
}

double width_around_peak(std::span<const double> x, std::span<const double> y,
                         double level) {
  if (x.size() != y.size() || y.size() < 3)
    throw std::invalid_argument("width needs matching x/y with at least 3 samples");
  std::size_t ipk = static_cast<std::size_t>(
      std::max_element(y.begin(), y.end()) - y.begin());
  return cross_right(x, y, ipk, level) - cross_left(x, y, ipk, level);
}

}  // namespace

double fwhm(std::span<const double> x, std::span<const double> y) {
  double pk = *std::max_element(y.begin(), y.end());
  if (!(pk > 0.0)) throw std::invalid_argument("fwhm needs a positive peak");
  return width_around_peak(x, y, 0.5 * pk);
}

double fwhm(const RealWaveform& w) {
  std::vector<double> x(w.grid.n);
  for (std::size_t i = 0; i < w.grid.n; ++i) x[i] = w.grid.time(i);
  return fwhm(x, w.v);
}

double width_at_level(std::span<const double> x, std::span<const double> y,
                      double level) {
  return width_around_peak(x, y, level);
}

void require_span(double span, double feature_width, double factor) {
  if (!(span >= factor * feature_width))
    throw std::runtime_error("grid span too narrow for the spectral feature; widen it to avoid truncation");
}

}  // namespace qmem
