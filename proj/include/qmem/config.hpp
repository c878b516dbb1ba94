#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>

#include "qmem/coincidence.hpp"
#include "qmem/eit.hpp"
#include "qmem/memory.hpp"
#include "qmem/spdc.hpp"

namespace qmem {

// Key/value sections parsed from the TOML-shaped config text. Section "" holds
// top-level keys.
struct ConfigData {
  std::map<std::string, std::map<std::string, std::string>> sections;
};

ConfigData parse_config_text(const std::string& text);
ConfigData load_config_file(const std::string& path);

// Fully resolved experiment description: interface units (MHz, ns, ratios)
// converted to SI angular units exactly once, here.
struct ExperimentConfig {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  FreqGrid grid;
  CavitySpdcParams source;
  EitParams medium;
  CouplingSchedule schedule;
  DecoherenceModel decoherence;
  DetectionParams detection;
  double detection_delay = 0.0;
  std::string coincidence_mode = "retrieved";  // source | slowlight | retrieved
  std::string fit_input;
  // flat background per bin held fixed during the correlation-model fit;
  // NaN lets the fit float it (the model then fixes its scale ray by inertia)
  double fit_n_b = std::numeric_limits<double>::quiet_NaN();

  std::string hash;        // 16 hex digits over the canonical resolved form
  std::string canonical;   // sorted key=value dump used for the hash
};

// Parses, applies defaults (the documented operating point), validates, and
// rejects unknown keys with their section-qualified path.
ExperimentConfig resolve_config(const ConfigData& data);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace qmem
