#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmem/config.hpp"

namespace qmem {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

// Output file path: <out_dir>/<scenario>-<hash>-<name>. Creates out_dir.
std::string output_path(const ExperimentConfig& cfg, const std::string& name);

// Column-oriented CSV writer; all columns must share one length. Values are
// printed with %.17g so round-trips are exact.
void write_csv(const std::string& path, const std::vector<std::string>& headers,
               const std::vector<std::vector<double>>& columns);

// Numeric CSV reader for the fit scenarios: skips '#' comments and blank
// lines, tolerates one non-numeric header line, accepts comma or whitespace
// separators. Returns exactly n_cols columns.
std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                  std::size_t n_cols);

// Base manifest: tool version, scenario, seed, config hash, and the resolved
// parameter set.
ordered_json manifest_base(const ExperimentConfig& cfg);

void write_manifest(const std::string& path, const ordered_json& j);

}  // namespace qmem
