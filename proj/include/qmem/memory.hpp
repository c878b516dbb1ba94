#pragma once

#include <limits>

#include "qmem/eit.hpp"
#include "qmem/fitting.hpp"
#include "qmem/grid.hpp"

namespace qmem {

// Piecewise coupling timeline: write plateau, raised-cosine fall completing at
// t_off, dark window, raised-cosine rise starting at t_on toward the read
// plateau at sqrt(xi) times the write Rabi frequency.
struct CouplingSchedule {
  double write_rabi = 0.0;       // [rad/s]
  double t_off = 0.0;            // coupling reaches zero here [s]
  double t_on = 0.0;             // coupling starts rising here [s]
  double xi = 1.0;               // read/write power ratio
  double switch_duration = 20e-9;  // 10-90% edge time [s]

  void validate() const;
  double read_rabi() const;      // write_rabi * sqrt(xi)
  double edge_width() const;     // full raised-cosine edge duration
  double rabi(double t) const;   // instantaneous coupling Rabi frequency
};

// Ground-state decoherence: a static rate plus a channel that scales with the
// instantaneous coupling intensity. The channel strength is fixed once by
// calibration against the target exponential efficiency decay coefficient.
struct DecoherenceModel {
  double gamma_0 = 0.0;        // static decoherence [rad/s]
  double gamma_s_coeff = 0.0;  // target efficiency-decay coefficient (per unit xi)
  double channel_rate = std::numeric_limits<double>::quiet_NaN();
  // channel_rate: decoherence added at write intensity [rad/s]; NaN = not yet
  // calibrated (required only when gamma_s_coeff > 0)

  bool needs_calibration() const;
  // instantaneous rate given (Omega(t)/write_rabi)^2
  double rate(double intensity_ratio) const;
  void validate() const;
};

struct SolverOptions {
  std::size_t nz = 400;        // spatial slices through the medium
  double dt_factor = 40.0;     // dt <= 1 / (dt_factor * max(Omega, Gamma))
  double read_tail = 500e-9;   // simulated time kept after t_on [s]
};

struct EnergyLedger {
  double input = 0.0;
  double leaked = 0.0;        // transmitted before t_off
  double dark = 0.0;          // emitted between t_off and t_on
  double retrieved = 0.0;     // emitted from t_on onward
  double switch_window = 0.0; // part of retrieved inside [t_on, t_on + edge]
  double dissipated = 0.0;    // decay and decoherence losses
  double remaining = 0.0;     // atomic excitation left at the end
  double closure_rel_err = 0.0;
};

struct StorageResult {
  FieldWaveform out;               // exit field over the full simulated span
  double efficiency = 0.0;         // retrieved / input
  double efficiency_settled = 0.0; // same, excluding the switch window
  double leakage = 0.0;            // leaked / input
  double retrieved_bandwidth_hz = 0.0;
  EnergyLedger energy;
};

// Time-domain write/store/read simulation. The medium's static gamma_gs is
// superseded by the decoherence model for the duration of the run.
StorageResult simulate_storage(const FieldWaveform& in, const EitParams& p,
                               const CouplingSchedule& sched,
                               const DecoherenceModel& dec,
                               const SolverOptions& opt = {});

struct SlowLightResult {
  ComplexSpectrum out_spec;
  RealWaveform g2;
  double efficiency = 0.0;
  double bandwidth_hz = 0.0;
  double delay = 0.0;  // shift of the correlation peak vs the input
};

SlowLightResult slow_light(const ComplexSpectrum& spec, const EitParams& p);

// Band-limited resampling of a spectrum onto a dense time grid, sliced to
// [t0, t1]; used to feed the storage solver without interpolation loss.
FieldWaveform dense_input_from_spectrum(const ComplexSpectrum& spec,
                                        double dt_max, double t0, double t1);

// Solver input built from a source spectrum: the correlation waveform sliced
// from well before its peak up to the read onset, densely resampled.
FieldWaveform storage_input(const ComplexSpectrum& spec,
                            const CouplingSchedule& sched);

// Correlation waveform of the stored-and-retrieved photon (no background).
RealWaveform retrieved_g2(const ComplexSpectrum& spec, const EitParams& p,
                          const CouplingSchedule& sched, const DecoherenceModel& dec,
                          const SolverOptions& opt = {});

struct SweepRow {
  double xi = 0.0;
  double efficiency = 0.0;
  double bandwidth_hz = 0.0;
};

struct ExponentialFit {
  double amplitude = 0.0;   // efficiency extrapolated to xi = 0
  double decay = 0.0;       // fitted coefficient of e^{-decay * xi}
  double r2 = 0.0;          // on log-efficiency axes
};

struct SweepTable {
  std::vector<SweepRow> rows;
  ExponentialFit efficiency_fit;
  PowerLawFit bandwidth_fit;  // bandwidth_hz = c * xi^p
};

struct SweepError : std::runtime_error {
  SweepTable partial;
  SweepError(const std::string& what, SweepTable t)
      : std::runtime_error(what), partial(std::move(t)) {}
};

SweepTable bandwidth_vs_xi(std::span<const double> xis, const ComplexSpectrum& spec,
                           const EitParams& p, const CouplingSchedule& sched_base,
                           const DecoherenceModel& dec, const SolverOptions& opt = {});

// Fixes the decoherence channel strength so the sweep's fitted decay equals
// gamma_s_coeff; returns the model with channel_rate set.
DecoherenceModel calibrate_decoherence(const ComplexSpectrum& spec, const EitParams& p,
                                       const CouplingSchedule& sched_base,
                                       DecoherenceModel dec,
                                       const SolverOptions& opt = {});

// Write/store/read operating point matched to the calibrated medium: coupling
// off at 40 ns, back on after a 100 ns storage window, 20 ns switch edges.
CouplingSchedule paper_schedule(const EitParams& p, double xi = 1.0);
DecoherenceModel paper_decoherence();

}  // namespace qmem
