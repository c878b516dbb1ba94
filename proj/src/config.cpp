#include "qmem/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qmem/units.hpp"

namespace qmem {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& path, const std::string& v) {
  const char* c = v.c_str();
  char* end = nullptr;
  double x = std::strtod(c, &end);
  if (end == c || *end != '\0' || !std::isfinite(x))
    throw std::invalid_argument("config key " + path + " needs a finite number, got '" + v + "'");
  return x;
}

std::uint64_t parse_count(const std::string& path, const std::string& v) {
  double x = parse_number(path, v);
  if (x < 0.0 || x != std::floor(x))
    throw std::invalid_argument("config key " + path + " needs a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

// tracks which keys were consumed so leftovers can be reported by path
struct Reader {
  const ConfigData& data;
  std::set<std::string> used;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = data.sections.find(sec);
    return s != data.sections.end() && s->second.count(key) > 0;
  }
  std::string raw(const std::string& sec, const std::string& key) {
    used.insert(sec + "\x1f" + key);
    return data.sections.at(sec).at(key);
  }
  double num(const std::string& sec, const std::string& key, double fallback) {
    if (!has(sec, key)) return fallback;
    return parse_number(path(sec, key), raw(sec, key));
  }
  std::uint64_t count(const std::string& sec, const std::string& key, std::uint64_t fallback) {
    if (!has(sec, key)) return fallback;
    return parse_count(path(sec, key), raw(sec, key));
  }
  std::string text(const std::string& sec, const std::string& key, const std::string& fallback) {
    if (!has(sec, key)) return fallback;
    return unquote(raw(sec, key));
  }
  static std::string path(const std::string& sec, const std::string& key) {
    return sec.empty() ? key : sec + "." + key;
  }
  void check_all_used() const {
    for (const auto& [sec, kv] : data.sections)
      for (const auto& [key, val] : kv)
        if (!used.count(sec + "\x1f" + key))
          throw std::invalid_argument("unknown config key: " + path(sec, key));
  }
};

void append_kv(std::string& out, const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += key;
  out += '=';
  out += buf;
  out += '\n';
}

}  // namespace

ConfigData parse_config_text(const std::string& text) {
  ConfigData d;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty section name");
      d.sections[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key or value");
    if (d.sections[section].count(key))
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key " + key);
    d.sections[section][key] = val;
  }
  return d;
}

ConfigData load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig resolve_config(const ConfigData& data) {
  bool empty = true;
  for (const auto& [sec, kv] : data.sections)
    if (!kv.empty()) empty = false;
  if (empty) throw std::invalid_argument("config file is empty");

  Reader r{data, {}};
  ExperimentConfig c;

  c.scenario = r.text("", "scenario", "");
  c.seed = r.count("", "seed", 1);
  c.out_dir = r.text("", "out_dir", ".");

  // analysis grid
  {
    auto n = r.count("grid", "n", 1 << 14);
    double span = rad_from_mhz(r.num("grid", "span_mhz", 400.0));
    if (n < 8 || n % 2 != 0)
      throw std::invalid_argument("config key grid.n needs an even sample count >= 8");
    c.grid = FreqGrid::centered(n, span / static_cast<double>(n));
  }

  // biphoton source
  {
    CavitySpdcParams def = paper_source();
    double bw = r.num("source", "bandwidth_mhz", 6.2);
    double gc = rad_from_mhz(bw) / std::sqrt(std::sqrt(2.0) - 1.0);
    c.source.Gamma_s = rad_from_mhz(r.num("source", "Gamma_s_mhz", mhz_from_rad(gc)));
    c.source.Gamma_i = rad_from_mhz(r.num("source", "Gamma_i_mhz", mhz_from_rad(gc)));
    c.source.gamma_s = rad_from_mhz(r.num("source", "gamma_s_mhz", mhz_from_rad(c.source.Gamma_s)));
    c.source.gamma_i = rad_from_mhz(r.num("source", "gamma_i_mhz", mhz_from_rad(c.source.Gamma_i)));
    c.source.kappa = r.num("source", "kappa", def.kappa);
    c.source.Omega_q = rad_from_mhz(r.num("source", "omega_q_mhz", 0.0));
    c.source.Omega_r = rad_from_mhz(r.num("source", "omega_r_mhz", 0.0));
    c.source.omega_pump = rad_from_mhz(
        r.num("source", "pump_mhz", mhz_from_rad(c.source.Omega_q + c.source.Omega_r)));
    c.source.validate();
  }

  // medium
  {
    c.medium.optical_depth = r.num("medium", "optical_depth", 55.0);
    c.medium.Gamma = rad_from_mhz(r.num("medium", "gamma_mhz", 5.23));
    c.medium.gamma_gs = r.num("medium", "gamma_gs_ratio", 0.065) * c.medium.Gamma;
    c.medium.delta_ge = rad_from_mhz(r.num("medium", "delta_ge_mhz", 0.0));
    c.medium.delta_gs = rad_from_mhz(r.num("medium", "delta_gs_mhz", 0.0));
    double coupling = r.num("medium", "coupling_mhz", 0.0);
    double td = r.num("medium", "group_delay_ns", 75.0);
    if (coupling > 0.0) {
      c.medium.Omega_c = rad_from_mhz(coupling);
      c.medium.validate();
    } else {
      c.medium.Omega_c = 1.0;  // placeholder for validation
      c.medium.validate();
      c.medium.Omega_c = calibrate_omega_c(c.medium, sec_from_ns(td));
    }
  }

  // coupling schedule
  {
    double t_off = r.num("schedule", "t_off_ns", 40.0);
    double storage = r.num("schedule", "storage_ns", 100.0);
    c.schedule.write_rabi = c.medium.Omega_c;
    c.schedule.t_off = sec_from_ns(t_off);
    c.schedule.t_on = sec_from_ns(t_off + storage);
    c.schedule.switch_duration = sec_from_ns(r.num("schedule", "switch_ns", 20.0));
    c.schedule.xi = r.num("schedule", "xi", 1.0);
    c.schedule.validate();
  }

  // decoherence
  {
    c.decoherence.gamma_0 = r.num("decoherence", "gamma0_ratio", 0.065) * c.medium.Gamma;
    c.decoherence.gamma_s_coeff = r.num("decoherence", "gamma_s", 0.055);
    if (r.has("decoherence", "channel_ratio"))
      c.decoherence.channel_rate =
          r.num("decoherence", "channel_ratio", 0.0) * c.medium.Gamma;
    c.decoherence.validate();
  }

  // detection
  {
    DetectionParams def = paper_detection();
    c.detection.collection_eff = r.num("detection", "collection_eff", def.collection_eff);
    c.detection.dark_rate = r.num("detection", "dark_rate_hz", def.dark_rate);
    c.detection.accidental_rate = r.num("detection", "accidental_rate_hz", def.accidental_rate);
    c.detection.leak_coeff = r.num("detection", "leak_coeff", def.leak_coeff);
    c.detection.n_triggers = r.count("detection", "n_triggers", def.n_triggers);
    c.detection.validate();
    c.detection_delay = sec_from_ns(r.num("detection", "delay_ns", 802.5));
    c.coincidence_mode = r.text("detection", "mode", "retrieved");
    if (c.coincidence_mode != "source" && c.coincidence_mode != "slowlight" &&
        c.coincidence_mode != "retrieved")
      throw std::invalid_argument(
          "config key detection.mode must be source, slowlight, or retrieved");
  }

  c.fit_input = r.text("fit", "input_csv", "");
  if (r.has("fit", "n_b")) {
    c.fit_n_b = r.num("fit", "n_b", 0.0);
    if (!(c.fit_n_b > 0.0))
      throw std::invalid_argument("config key fit.n_b needs a positive value");
  }

  r.check_all_used();

  // canonical resolved form, stable ordering, used for the output file hash
  std::string s;
  s += "scenario=" + c.scenario + "\n";
  append_kv(s, "seed", static_cast<double>(c.seed));
  append_kv(s, "grid.n", static_cast<double>(c.grid.n));
  append_kv(s, "grid.dw", c.grid.dw);
  append_kv(s, "source.gamma_s", c.source.gamma_s);
  append_kv(s, "source.Gamma_s", c.source.Gamma_s);
  append_kv(s, "source.gamma_i", c.source.gamma_i);
  append_kv(s, "source.Gamma_i", c.source.Gamma_i);
  append_kv(s, "source.kappa", c.source.kappa);
  append_kv(s, "source.Omega_q", c.source.Omega_q);
  append_kv(s, "source.Omega_r", c.source.Omega_r);
  append_kv(s, "source.omega_pump", c.source.omega_pump);
  append_kv(s, "medium.optical_depth", c.medium.optical_depth);
  append_kv(s, "medium.Gamma", c.medium.Gamma);
  append_kv(s, "medium.Omega_c", c.medium.Omega_c);
  append_kv(s, "medium.gamma_gs", c.medium.gamma_gs);
  append_kv(s, "medium.delta_ge", c.medium.delta_ge);
  append_kv(s, "medium.delta_gs", c.medium.delta_gs);
  append_kv(s, "schedule.write_rabi", c.schedule.write_rabi);
  append_kv(s, "schedule.t_off", c.schedule.t_off);
  append_kv(s, "schedule.t_on", c.schedule.t_on);
  append_kv(s, "schedule.switch_duration", c.schedule.switch_duration);
  append_kv(s, "schedule.xi", c.schedule.xi);
  append_kv(s, "decoherence.gamma_0", c.decoherence.gamma_0);
  append_kv(s, "decoherence.gamma_s_coeff", c.decoherence.gamma_s_coeff);
  append_kv(s, "decoherence.channel_rate", c.decoherence.channel_rate);
  append_kv(s, "detection.collection_eff", c.detection.collection_eff);
  append_kv(s, "detection.dark_rate", c.detection.dark_rate);
  append_kv(s, "detection.accidental_rate", c.detection.accidental_rate);
  append_kv(s, "detection.leak_coeff", c.detection.leak_coeff);
  append_kv(s, "detection.n_triggers", static_cast<double>(c.detection.n_triggers));
  append_kv(s, "detection.delay", c.detection_delay);
  s += "detection.mode=" + c.coincidence_mode + "\n";
  s += "fit.input_csv=" + c.fit_input + "\n";
  append_kv(s, "fit.n_b", c.fit_n_b);
  c.canonical = s;

  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(s)));
  c.hash = buf;
  return c;
}

}  // namespace qmem
