#include "qmem/eit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmem/units.hpp"

namespace qmem {

void EitParams::validate() const {
  if (optical_depth < 0.0) throw std::invalid_argument("optical depth must be non-negative");
  if (!(Gamma > 0.0)) throw std::invalid_argument("Gamma must be positive");
  if (Omega_c < 0.0) throw std::invalid_argument("Omega_c must be non-negative");
  if (gamma_gs < 0.0) throw std::invalid_argument("gamma_gs must be non-negative");
  if (!std::isfinite(delta_ge) || !std::isfinite(delta_gs))
    throw std::invalid_argument("detunings must be finite");
}

cplx kernel_value(const EitParams& p, double omega) {
  const cplx i1(0.0, 1.0);
  cplx d_ge = 0.5 * p.Gamma - i1 * (omega + p.delta_ge);
  cplx d_gs = 0.5 * p.gamma_gs - i1 * (omega + p.delta_gs);
  // without coupling the d_gs factor cancels; dividing it out first avoids a
  // 0/0 when the ground-state term vanishes on resonance
  if (p.Omega_c == 0.0) return std::exp(-0.25 * p.optical_depth * p.Gamma / d_ge);
  cplx D = d_ge * d_gs + 0.25 * p.Omega_c * p.Omega_c;
  cplx lam = 0.25 * p.optical_depth * p.Gamma * d_gs / D;
  return std::exp(-lam);
}

MediumResponse propagation_kernel(const EitParams& p, const FreqGrid& grid) {
  p.validate();
  MediumResponse r;
  r.grid = grid;
  r.kernel.resize(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) r.kernel[k] = kernel_value(p, grid.omega(k));
  return r;
}

double transmission(const EitParams& p, double detuning) {
  EitParams q = p;
  q.delta_ge = detuning;
  q.delta_gs = detuning;
  return std::norm(kernel_value(q, 0.0));
}

std::vector<double> transmission_spectrum(const EitParams& p,
                                          std::span<const double> detuning) {
  p.validate();
  std::vector<double> out(detuning.size());
  for (std::size_t i = 0; i < detuning.size(); ++i) out[i] = transmission(p, detuning[i]);
  return out;
}

namespace {

constexpr double ln2 = 0.6931471805599453;

void require_window(const EitParams& p) {
  p.validate();
  if (!(p.optical_depth > ln2))
    throw std::domain_error("absorption depth needs to surpass 0.5 to define the transparency window");
  if (!(p.Omega_c > 0.0))
    throw std::domain_error("a transparency window needs a non-zero coupling field");
}

double xy_x(const EitParams& p) { return p.optical_depth / (2.0 * ln2) - 0.5; }
double xy_y(const EitParams& p) { return p.Omega_c * p.Omega_c / (p.Gamma * p.Gamma); }

}  // namespace

double eit_bandwidth(const EitParams& p) {
  require_window(p);
  double x = xy_x(p), y = xy_y(p);
  double s = x + y;
  double inner = 1.0 - std::sqrt(std::max(0.0, 1.0 - y * y / (s * s)));
  return std::sqrt(s * inner) * p.Gamma;
}

double eit_bandwidth_numeric(const EitParams& p) {
  require_window(p);
  EitParams q = p;
  q.gamma_gs = 0.0;  // the closed form describes the decoherence-free window
  q.delta_ge = q.delta_gs = 0.0;

  // Walk outward in fine multiplicative steps: near the Autler-Townes regime
  // the sub-half-transmission pocket is only a few percent wide in detuning,
  // so a coarse doubling bracket can step straight over it.
  double lo = 0.0, hi = 0.0;
  for (double d = 1e-8 * p.Gamma; d < 1e6 * p.Gamma; d *= 1.005) {
    if (transmission(q, d) <= 0.5) {
      hi = d;
      break;
    }
    lo = d;
  }
  if (hi == 0.0)
    throw std::runtime_error("no half-transmission crossing found for the transparency window");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (transmission(q, mid) > 0.5)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-14 * hi) break;
  }
  return lo + hi;  // full width = 2 * half-width
}

double eit_bandwidth_low_intensity(const EitParams& p) {
  require_window(p);
  return xy_y(p) / std::sqrt(2.0 * xy_x(p)) * p.Gamma;
}

double eit_bandwidth_high_intensity(const EitParams& p) {
  require_window(p);
  return p.Omega_c * (1.0 - std::sqrt(xy_x(p) / (2.0 * xy_y(p))));
}

double group_delay(const EitParams& p) {
  p.validate();
  if (!(p.Omega_c > 0.0))
    throw std::domain_error("group delay is undefined for an absorbing medium without coupling");
  double h = 1e-6 * std::min(p.Gamma, p.Omega_c * p.Omega_c / p.Gamma);
  cplx kp = kernel_value(p, h);
  cplx km = kernel_value(p, -h);
  return std::arg(kp / km) / (2.0 * h);
}

double calibrate_omega_c(const EitParams& p, double target_delay) {
  p.validate();
  if (!(target_delay > 0.0)) throw std::invalid_argument("target delay must be positive");
  if (!(p.optical_depth > 0.0)) throw std::invalid_argument("calibration needs a non-zero optical depth");

  EitParams q = p;
  auto delay_at = [&](double w) {
    q.Omega_c = w;
    return group_delay(q);
  };
  double w0 = std::sqrt(p.optical_depth * p.Gamma / target_delay);
  double lo = w0, hi = w0;
  // delay decreases with coupling strength; expand until the target is bracketed
  for (int it = 0; it < 200 && delay_at(lo) < target_delay; ++it) lo *= 0.5;
  for (int it = 0; it < 200 && delay_at(hi) > target_delay; ++it) hi *= 2.0;
  if (delay_at(lo) < target_delay || delay_at(hi) > target_delay)
    throw std::runtime_error("requested group delay is out of reach for these parameters");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (delay_at(mid) > target_delay)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-14 * hi) break;
  }
  return 0.5 * (lo + hi);
}

EitParams paper_medium() {
  EitParams p;
  p.optical_depth = 55.0;
  p.Gamma = rad_from_mhz(5.23);
  p.gamma_gs = 0.065 * p.Gamma;
  p.Omega_c = 1.0;  // placeholder for calibration
  p.Omega_c = calibrate_omega_c(p, sec_from_ns(75.0));
  return p;
}

OpticalDepthFit fit_optical_depth(std::span<const double> detuning,
                                  std::span<const double> transmission_meas,
                                  double Gamma) {
  if (detuning.size() != transmission_meas.size())
    throw std::invalid_argument("detuning and transmission arrays must match");
  if (detuning.size() < 20)
    throw std::invalid_argument("optical-depth fit needs at least 20 samples");
  if (!(Gamma > 0.0)) throw std::invalid_argument("Gamma must be positive");

  auto [mn_it, mx_it] = std::minmax_element(detuning.begin(), detuning.end());
  if (*mx_it - *mn_it < Gamma)
    throw std::invalid_argument("samples must span at least one absorption linewidth");
  auto [tmn, tmx] = std::minmax_element(transmission_meas.begin(), transmission_meas.end());
  if (*tmx - *tmn < 1e-6)
    throw std::invalid_argument("flat transmission spectrum: optical depth unidentifiable");

  // initial point: raw absorption depth, window width inverted for coupling
  double t_floor = std::max(*tmn, 1e-12);
  double alpha0 = -std::log(t_floor);
  double y0 = 0.25;  // fallback when no transparency window is resolvable
  if (alpha0 > ln2) {
    std::vector<double> x(detuning.begin(), detuning.end());
    std::vector<double> t(transmission_meas.begin(), transmission_meas.end());
    try {
      double w = width_at_level(x, t, 0.5 * (*tmx + t_floor));
      double u = w / Gamma;
      u = u * u;
      double xx = alpha0 / (2.0 * ln2) - 0.5;
      y0 = u + std::sqrt(std::max(2.0 * xx * u, 0.0));
    } catch (const std::exception&) {
      // keep fallback
    }
  }
  double omega0 = std::sqrt(y0) * Gamma;
  std::size_t i_center = 0;
  for (std::size_t i = 1; i < detuning.size(); ++i)
    if (std::fabs(detuning[i]) < std::fabs(detuning[i_center])) i_center = i;
  double tc = transmission_meas[i_center];
  double l0 = -std::log(std::clamp(tc, 1e-12, 1.0));
  double g0 = (alpha0 > l0 && l0 > 0.0)
                  ? l0 * omega0 * omega0 / (Gamma * (alpha0 - l0))
                  : 0.0;

  EitParams model;
  model.Gamma = Gamma;

  ResidualFn f = [&](const std::vector<double>& q, std::vector<double>& r) {
    EitParams m = model;
    m.optical_depth = q[0];
    m.Omega_c = q[1];
    m.gamma_gs = q[2];
    for (std::size_t i = 0; i < detuning.size(); ++i)
      r[i] = transmission(m, detuning[i]) - transmission_meas[i];
  };

  FitOptions opt;
  opt.lower = {0.0, 0.0, 0.0};
  opt.upper = {1e4, 1e3 * Gamma, 1e2 * Gamma};
  FitResult res = fit_least_squares(f, {alpha0, omega0, g0}, detuning.size(), opt);

  OpticalDepthFit out;
  out.params = model;
  out.params.optical_depth = res.params[0];
  out.params.Omega_c = res.params[1];
  out.params.gamma_gs = res.params[2];
  out.rms = res.rms;
  out.detail = std::move(res);
  return out;
}

}  // namespace qmem
