#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "qmem/fitting.hpp"
#include "qmem/grid.hpp"

namespace qmem {

struct DetectionParams {
  double collection_eff = 0.25;   // overall signal-path transmission
  double dark_rate = 0.0;         // [1/s]
  double accidental_rate = 0.0;   // uncorrelated background [1/s]
  double leak_coeff = 0.0;        // counts per unit xi per trigger window
  std::uint64_t n_triggers = 30000;

  void validate() const;
};

struct HistogramGeometry {
  double window_start = 700e-9;  // [s] after the trigger
  double bin_width = 5e-9;       // [s]
  std::size_t n_bins = 100;

  double window_end() const { return window_start + bin_width * static_cast<double>(n_bins); }
  double bin_center(std::size_t k) const {
    return window_start + bin_width * (static_cast<double>(k) + 0.5);
  }
};

struct CorrelationHistogram {
  HistogramGeometry geom;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_triggers = 0;
  bool sparse_warning = false;  // some bin exceeded one expected count per trigger
};

// Detection-axis shift: waveform times are offset by `delay` (the electronic
// delay between the trigger and the signal detector).
RealWaveform delay_waveform(RealWaveform w, double delay);

// Expected counts per bin over all triggers (signal plus flat backgrounds),
// matching exactly what the Monte Carlo draws from.
std::vector<double> expected_counts(const RealWaveform& g2, const DetectionParams& d,
                                    double xi, const HistogramGeometry& geom = {});

CorrelationHistogram monte_carlo_histogram(const RealWaveform& g2,
                                           const DetectionParams& d, double xi,
                                           std::uint64_t seed,
                                           const HistogramGeometry& geom = {});

struct G2Estimate {
  double g2 = 0.0;
  double tau_d = 0.0;   // center of the peak bin [s]
  double sigma = 0.0;   // Poisson-propagated uncertainty
};

// Peak bin over the mean of the 20 bins farthest from it in time.
G2Estimate estimate_g2(const CorrelationHistogram& h);

// Peak-correlation model vs read/write ratio.
struct G2Model {
  double N_si = 0.0;
  double gamma_s = 0.0;
  double leak_coeff = 0.0;  // per-bin floor counts per unit xi
  double N_b = 0.0;

  void validate() const;
};

double g2_peak_model(const G2Model& m, double xi);

struct ModelPeak {
  double xi_star = 0.0;
  double g2_star = 0.0;
};

// Interior maximum located by bracketed trisection (the model is unimodal).
ModelPeak g2_model_peak(const G2Model& m, double xi_lo = 1e-3, double xi_hi = 0.0);

struct G2Point {
  double xi = 0.0;
  double g2 = 0.0;
  double sigma = 1.0;
};

struct G2ModelFit {
  G2Model model;
  std::vector<double> covariance;  // 4x4 row-major
  double rms = 0.0;
};

// Weighted fit of (N_si, gamma_s, leak_coeff, N_b), all bounded below by 0;
// needs >= 4 points whose xi values span a ratio of at least 4. The model is
// invariant under a common rescaling of (N_si, leak_coeff, N_b), so those are
// determined only up to scale unless fixed_n_b pins the flat background to an
// independently measured value (its covariance rows are then zero).
G2ModelFit fit_g2_model(std::span<const G2Point> points,
                        double fixed_n_b = std::numeric_limits<double>::quiet_NaN());

// Time-tag import: CSV rows (trigger_id, detection_time_ns). Trigger count is
// inferred as max id + 1 when n_triggers is 0.
CorrelationHistogram histogram_from_events(const std::string& csv_path,
                                           const HistogramGeometry& geom = {},
                                           std::uint64_t n_triggers = 0);

// Detection-chain presets matched to the source preset: 25% collection,
// 30000 triggers, flat background of 2.8 counts per bin plus 0.43 counts
// per bin per unit xi, signal peak arriving 802.5 ns after the trigger.
DetectionParams paper_detection();
double paper_detection_delay();

}  // namespace qmem
