#include "qmem/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qmem/rng.hpp"

namespace qmem {

void DetectionParams::validate() const {
  if (collection_eff < 0.0 || collection_eff > 1.0)
    throw std::invalid_argument("collection efficiency must lie in [0, 1]");
  if (dark_rate < 0.0 || accidental_rate < 0.0 || leak_coeff < 0.0)
    throw std::invalid_argument("detection rates must be non-negative");
  if (n_triggers == 0) throw std::invalid_argument("need at least one trigger");
}

void G2Model::validate() const {
  if (N_si < 0.0 || gamma_s < 0.0 || leak_coeff < 0.0 || N_b < 0.0)
    throw std::invalid_argument("model parameters must be non-negative");
}

RealWaveform delay_waveform(RealWaveform w, double delay) {
  w.grid.t0 += delay;
  return w;
}

namespace {

// Per-trigger signal probability per bin: collection_eff * integral of G2.
std::vector<double> signal_probability(const RealWaveform& g2, const DetectionParams& d,
                                       const HistogramGeometry& geom) {
  if (geom.n_bins == 0 || !(geom.bin_width > 0.0))
    throw std::invalid_argument("histogram needs positive bin width and bin count");
  if (g2.grid.t0 > geom.window_start ||
      g2.grid.time(g2.grid.n - 1) < geom.window_end())
    throw std::invalid_argument("correlation waveform does not cover the detection window");

  // Each sample owns a slab of width dt centered on it; the slab's mass is
  // split across the bins it overlaps. Keeps the integral exact and the
  // bin assignment insensitive to edge rounding.
  std::vector<double> p(geom.n_bins, 0.0);
  const double start = geom.window_start;
  const double end = geom.window_end();
  const double width = geom.bin_width;
  for (std::size_t i = 0; i < g2.grid.n; ++i) {
    if (g2.v[i] < 0.0) throw std::invalid_argument("correlation waveform must be non-negative");
    const double t = g2.grid.time(i);
    const double lo = std::max(t - 0.5 * g2.grid.dt, start);
    const double hi = std::min(t + 0.5 * g2.grid.dt, end);
    if (hi <= lo) continue;
    double first = std::floor((lo - start) / width);
    auto k = static_cast<std::size_t>(std::clamp(first, 0.0,
                                                 static_cast<double>(geom.n_bins - 1)));
    for (; k < geom.n_bins; ++k) {
      const double seg_lo = std::max(lo, start + static_cast<double>(k) * width);
      const double seg_hi = std::min(hi, start + static_cast<double>(k + 1) * width);
      if (seg_hi > seg_lo) p[k] += g2.v[i] * (seg_hi - seg_lo);
      if (start + static_cast<double>(k + 1) * width >= hi) break;
    }
  }
  for (double& v : p) v *= d.collection_eff;
  return p;
}

double background_per_bin(const DetectionParams& d, double xi,
                          const HistogramGeometry& geom) {
  double window = geom.bin_width * static_cast<double>(geom.n_bins);
  double per_window = (d.dark_rate + d.accidental_rate) * window + d.leak_coeff * xi;
  return per_window / static_cast<double>(geom.n_bins);
}

}  // namespace

std::vector<double> expected_counts(const RealWaveform& g2, const DetectionParams& d,
                                    double xi, const HistogramGeometry& geom) {
  d.validate();
  if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
  std::vector<double> p = signal_probability(g2, d, geom);
  double bg = background_per_bin(d, xi, geom);
  std::vector<double> out(geom.n_bins);
  for (std::size_t k = 0; k < geom.n_bins; ++k)
    out[k] = static_cast<double>(d.n_triggers) * (p[k] + bg);
  return out;
}

CorrelationHistogram monte_carlo_histogram(const RealWaveform& g2,
                                           const DetectionParams& d, double xi,
                                           std::uint64_t seed,
                                           const HistogramGeometry& geom) {
  d.validate();
  if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
  std::vector<double> p = signal_probability(g2, d, geom);
  const double bg = background_per_bin(d, xi, geom);

  CorrelationHistogram h;
  h.geom = geom;
  h.counts.assign(geom.n_bins, 0);
  h.n_triggers = d.n_triggers;
  for (double v : p)
    if (v + bg > 1.0) h.sparse_warning = true;

  std::mt19937_64 gen(seed);
  for (std::uint64_t tr = 0; tr < d.n_triggers; ++tr)
    for (std::size_t k = 0; k < geom.n_bins; ++k)
      if (rng::bernoulli(gen, std::min(p[k], 1.0))) ++h.counts[k];

  const double lam = bg * static_cast<double>(d.n_triggers);
  for (std::size_t k = 0; k < geom.n_bins; ++k) h.counts[k] += rng::poisson(gen, lam);
  return h;
}

G2Estimate estimate_g2(const CorrelationHistogram& h) {
  const std::size_t n = h.counts.size();
  if (n < 11) throw std::invalid_argument("too few bins to designate a correlation floor");

  std::size_t peak = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (h.counts[k] > h.counts[peak]) peak = k;  // ties stay at the earlier bin

  const std::size_t n_floor = std::min<std::size_t>(20, n - 1);
  // farthest bins from the peak, earlier bins first among equals
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto da = a > peak ? a - peak : peak - a;
    auto db = b > peak ? b - peak : peak - b;
    if (da != db) return da > db;
    return a < b;
  });

  double floor_sum = 0.0;
  for (std::size_t i = 0; i < n_floor; ++i) floor_sum += static_cast<double>(h.counts[order[i]]);
  if (floor_sum <= 0.0)
    throw std::runtime_error("correlation floor is empty; g2 is undefined");

  const double floor_mean = floor_sum / static_cast<double>(n_floor);
  const double npk = static_cast<double>(h.counts[peak]);

  G2Estimate e;
  e.g2 = npk / floor_mean;
  e.tau_d = h.geom.bin_center(peak);
  e.sigma = (npk > 0.0) ? e.g2 * std::sqrt(1.0 / npk + 1.0 / floor_sum)
                        : 1.0 / floor_mean;
  return e;
}

double g2_peak_model(const G2Model& m, double xi) {
  m.validate();
  if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
  return m.N_si * std::sqrt(xi) * std::exp(-m.gamma_s * xi) / (m.leak_coeff * xi + m.N_b);
}

ModelPeak g2_model_peak(const G2Model& m, double xi_lo, double xi_hi) {
  m.validate();
  if (m.N_si <= 0.0) throw std::invalid_argument("peak search needs a non-zero scale");
  if (m.gamma_s <= 0.0 && m.leak_coeff <= 0.0)
    throw std::invalid_argument("model has no interior maximum without decay or leakage");
  if (xi_hi <= xi_lo)
    xi_hi = (m.gamma_s > 0.0) ? std::max(10.0 / m.gamma_s, 10.0 * xi_lo) : 1e6;

  double a = xi_lo, b = xi_hi;
  for (int it = 0; it < 300; ++it) {
    double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (g2_peak_model(m, m1) < g2_peak_model(m, m2))
      a = m1;
    else
      b = m2;
    if (b - a <= 1e-12 * b) break;
  }
  ModelPeak pk;
  pk.xi_star = 0.5 * (a + b);
  pk.g2_star = g2_peak_model(m, pk.xi_star);
  return pk;
}

G2ModelFit fit_g2_model(std::span<const G2Point> points, double fixed_n_b) {
  if (points.size() < 4)
    throw std::invalid_argument("model fit needs at least 4 points");
  double xmin = points[0].xi, xmax = points[0].xi;
  for (const auto& pt : points) {
    if (!(pt.xi > 0.0)) throw std::invalid_argument("xi values must be positive");
    if (!(pt.sigma > 0.0)) throw std::invalid_argument("uncertainties must be positive");
    xmin = std::min(xmin, pt.xi);
    xmax = std::max(xmax, pt.xi);
  }
  if (xmax / xmin < 4.0)
    throw std::invalid_argument("model fit needs xi values spanning a ratio of at least 4");
  const bool pin_nb = std::isfinite(fixed_n_b);
  if (pin_nb && !(fixed_n_b > 0.0))
    throw std::invalid_argument("fixed background must be positive");

  // start at unit background (or the pinned one), mild decay, scale from the
  // first point
  double nb0 = pin_nb ? fixed_n_b : 1.0, gs0 = 0.1, lk0 = 0.1;
  double nsi0 = points[0].g2 * (lk0 * points[0].xi + nb0) /
                (std::sqrt(points[0].xi) * std::exp(-gs0 * points[0].xi));

  ResidualFn f = [&](const std::vector<double>& q, std::vector<double>& r) {
    G2Model m{q[0], q[1], q[2], pin_nb ? fixed_n_b : q[3]};
    for (std::size_t i = 0; i < points.size(); ++i) {
      double v = m.N_si * std::sqrt(points[i].xi) * std::exp(-m.gamma_s * points[i].xi) /
                 (m.leak_coeff * points[i].xi + m.N_b);
      r[i] = (v - points[i].g2) / points[i].sigma;
    }
  };

  FitOptions opt;
  G2ModelFit out;
  if (pin_nb) {
    opt.lower = {0.0, 0.0, 0.0};
    opt.upper = {1e9, 50.0, 1e6};
    FitResult res = fit_least_squares(f, {nsi0, gs0, lk0}, points.size(), opt);
    out.model = G2Model{res.params[0], res.params[1], res.params[2], fixed_n_b};
    out.covariance.assign(16, 0.0);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        out.covariance[4 * r + c] = res.covariance[3 * r + c];
    out.rms = res.rms;
  } else {
    opt.lower = {0.0, 0.0, 0.0, 1e-12};  // N_b > 0 keeps the model finite
    opt.upper = {1e9, 50.0, 1e6, 1e9};
    FitResult res = fit_least_squares(f, {nsi0, gs0, lk0, nb0}, points.size(), opt);
    out.model = G2Model{res.params[0], res.params[1], res.params[2], res.params[3]};
    out.covariance = res.covariance;
    out.rms = res.rms;
  }
  return out;
}

CorrelationHistogram histogram_from_events(const std::string& csv_path,
                                           const HistogramGeometry& geom,
                                           std::uint64_t n_triggers) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open event file: " + csv_path);

  CorrelationHistogram h;
  h.geom = geom;
  h.counts.assign(geom.n_bins, 0);

  std::string line;
  std::uint64_t max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::uint64_t id;
    double t_ns;
    if (!(ss >> id >> t_ns)) {
      if (!any) continue;  // tolerate one header line
      throw std::runtime_error("malformed event row: " + line);
    }
    any = true;
    max_id = std::max(max_id, id);
    double t = t_ns * 1e-9;
    if (t < geom.window_start || t >= geom.window_end()) continue;
    auto k = static_cast<std::size_t>((t - geom.window_start) / geom.bin_width);
    if (k < geom.n_bins) ++h.counts[k];
  }
  if (!any) throw std::runtime_error("event file holds no detections: " + csv_path);
  h.n_triggers = n_triggers > 0 ? n_triggers : max_id + 1;
  return h;
}

DetectionParams paper_detection() {
  DetectionParams d;
  d.collection_eff = 0.25;
  d.dark_rate = 0.0;
  d.accidental_rate = 18666.7;  // 2.8 counts/bin over 30000 triggers at 5 ns
  d.leak_coeff = 1.4333e-3;     // 0.43 counts/bin per unit xi at the same statistics
  d.n_triggers = 30000;
  return d;
}

double paper_detection_delay() { return 802.5e-9; }

}  // namespace qmem
