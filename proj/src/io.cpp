#include "qmem/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmem {

std::string output_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
  std::filesystem::create_directories(dir);
  return (dir / (cfg.scenario + "-" + cfg.hash + "-" + name)).string();
}

void write_csv(const std::string& path, const std::vector<std::string>& headers,
               const std::vector<std::vector<double>>& columns) {
  if (headers.size() != columns.size())
    throw std::invalid_argument("csv writer: header and column counts differ");
  if (columns.empty()) throw std::invalid_argument("csv writer: no columns");
  const std::size_t rows = columns.front().size();
  for (const auto& col : columns)
    if (col.size() != rows)
      throw std::invalid_argument("csv writer: ragged columns");

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (std::size_t c = 0; c < headers.size(); ++c)
    out << (c ? "," : "") << headers[c];
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", columns[c][r]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                  std::size_t n_cols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::vector<double>> cols(n_cols);
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.empty()) {
      std::string word;
      std::istringstream probe(line);
      if (probe >> word) {
        if (header_seen)
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": expected numeric row");
        header_seen = true;
      }
      continue;
    }
    if (row.size() != n_cols)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(n_cols) + " columns, got " +
                               std::to_string(row.size()));
    for (std::size_t c = 0; c < n_cols; ++c) cols[c].push_back(row[c]);
  }
  if (cols.front().empty()) throw std::runtime_error(path + ": no data rows");
  return cols;
}

ordered_json manifest_base(const ExperimentConfig& cfg) {
  ordered_json j;
  j["version"] = kToolVersion;
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.hash;
  ordered_json params;
  std::istringstream ss(cfg.canonical);
  std::string line;
  while (std::getline(ss, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    char* end = nullptr;
    double x = std::strtod(val.c_str(), &end);
    if (end != val.c_str() && *end == '\0')
      params[key] = x;
    else
      params[key] = val;
  }
  j["params"] = params;
  return j;
}

void write_manifest(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qmem
