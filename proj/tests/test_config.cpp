#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qmem/config.hpp"
#include "qmem/io.hpp"
#include "qmem/units.hpp"

using namespace qmem;
using doctest::Approx;

namespace {

ExperimentConfig resolve_text(const std::string& text) {
  return resolve_config(parse_config_text(text));
}

}  // namespace

TEST_CASE("config text parsing") {
  ConfigData d = parse_config_text(
      "# full-line comment\n"
      "scenario = \"store\"   # trailing comment\n"
      "seed=9\n"
      "\n"
      "[ medium ]\n"
      "  optical_depth =  55  \n"
      "[detection]\n"
      "mode = source\n");
  CHECK(d.sections[""].at("scenario") == "\"store\"");
  CHECK(d.sections[""].at("seed") == "9");
  CHECK(d.sections["medium"].at("optical_depth") == "55");
  CHECK(d.sections["detection"].at("mode") == "source");

  SUBCASE("line-numbered diagnostics") {
    CHECK_THROWS_WITH_AS(parse_config_text("a = 1\nb = 2\nrubbish\n"),
                         "config line 3: expected key = value", std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("seed = 1\nseed = 2\n"),
                         "config line 2: duplicate key seed", std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[medium\n"),
                         "config line 1: unterminated section header",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[]\n"), "config line 1: empty section name",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("x = 1\n\n\nkey =\n"),
                         "config line 4: empty key or value", std::invalid_argument);
  }
  SUBCASE("duplicates in different sections are distinct keys") {
    ConfigData two = parse_config_text("[a]\nk = 1\n[b]\nk = 2\n");
    CHECK(two.sections["a"].at("k") == "1");
    CHECK(two.sections["b"].at("k") == "2");
  }
}

TEST_CASE("defaults resolve to the documented operating point") {
  ExperimentConfig c = resolve_text("scenario = store\n");

  CHECK(c.scenario == "store");
  CHECK(c.seed == 1);
  CHECK(c.out_dir == ".");

  CHECK(c.grid.n == 16384);
  CHECK(c.grid.dw == Approx(rad_from_mhz(400.0) / 16384.0).epsilon(1e-14));
  CHECK(c.grid.omega(c.grid.n / 2) == 0.0);

  double gc = rad_from_mhz(6.2) / std::sqrt(std::sqrt(2.0) - 1.0);
  CHECK(c.source.Gamma_s == Approx(gc).epsilon(1e-14));
  CHECK(c.source.Gamma_s == Approx(60528428.786682107).epsilon(1e-12));
  CHECK(c.source.gamma_s == Approx(c.source.Gamma_s).epsilon(1e-14));
  CHECK(c.source.Gamma_i == Approx(gc).epsilon(1e-14));
  CHECK(c.source.kappa == Approx(1944.6));
  CHECK(c.source.Omega_q == 0.0);
  CHECK(c.source.omega_pump == 0.0);

  CHECK(c.medium.optical_depth == Approx(55.0));
  CHECK(c.medium.Gamma == Approx(rad_from_mhz(5.23)).epsilon(1e-14));
  CHECK(c.medium.gamma_gs == Approx(0.065 * c.medium.Gamma).epsilon(1e-14));
  // coupling defaults to whatever produces the 75 ns group delay
  CHECK(c.medium.Omega_c == Approx(154767354.29370925).epsilon(1e-9));
  CHECK(group_delay(c.medium) == Approx(75e-9).epsilon(1e-6));

  CHECK(c.schedule.write_rabi == c.medium.Omega_c);
  CHECK(c.schedule.t_off == Approx(40e-9));
  CHECK(c.schedule.t_on == Approx(140e-9));
  CHECK(c.schedule.switch_duration == Approx(20e-9));
  CHECK(c.schedule.xi == Approx(1.0));

  CHECK(c.decoherence.gamma_0 == Approx(0.065 * c.medium.Gamma).epsilon(1e-14));
  CHECK(c.decoherence.gamma_s_coeff == Approx(0.055));
  CHECK(c.decoherence.needs_calibration());

  DetectionParams d = paper_detection();
  CHECK(c.detection.collection_eff == Approx(d.collection_eff));
  CHECK(c.detection.accidental_rate == Approx(d.accidental_rate));
  CHECK(c.detection.leak_coeff == Approx(d.leak_coeff));
  CHECK(c.detection.n_triggers == d.n_triggers);
  CHECK(c.detection_delay == Approx(802.5e-9));
  CHECK(c.coincidence_mode == "retrieved");

  CHECK(c.fit_input.empty());
  CHECK(std::isnan(c.fit_n_b));
  CHECK(c.hash.size() == 16);
  CHECK(c.hash.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("explicit keys override the defaults") {
  ExperimentConfig c = resolve_text(
      "scenario = coincidence\n"
      "seed = 12\n"
      "out_dir = run7\n"
      "[grid]\nn = 4096\nspan_mhz = 800\n"
      "[source]\nbandwidth_mhz = 3.1\n"
      "[medium]\ncoupling_mhz = 24\ngamma_gs_ratio = 0\n"
      "[schedule]\nt_off_ns = 50\nstorage_ns = 200\nxi = 2.5\n"
      "[decoherence]\nchannel_ratio = 0.365\n"
      "[detection]\nmode = slowlight\nn_triggers = 5000\ndelay_ns = 600\n"
      "[fit]\nn_b = 2.8\n");

  CHECK(c.seed == 12);
  CHECK(c.out_dir == "run7");
  CHECK(c.grid.n == 4096);
  CHECK(c.grid.span() == Approx(rad_from_mhz(800.0)).epsilon(1e-14));
  CHECK(c.source.Gamma_s ==
        Approx(rad_from_mhz(3.1) / std::sqrt(std::sqrt(2.0) - 1.0)).epsilon(1e-14));
  CHECK(c.medium.Omega_c == Approx(rad_from_mhz(24.0)).epsilon(1e-14));
  CHECK(c.medium.gamma_gs == 0.0);
  CHECK(c.schedule.t_off == Approx(50e-9));
  CHECK(c.schedule.t_on == Approx(250e-9));
  CHECK(c.schedule.xi == Approx(2.5));
  CHECK(c.decoherence.channel_rate == Approx(0.365 * c.medium.Gamma).epsilon(1e-14));
  CHECK_FALSE(c.decoherence.needs_calibration());
  CHECK(c.coincidence_mode == "slowlight");
  CHECK(c.detection.n_triggers == 5000);
  CHECK(c.detection_delay == Approx(600e-9));
  CHECK(c.fit_n_b == Approx(2.8));

  SUBCASE("group-delay targets re-derive the coupling") {
    ExperimentConfig slow = resolve_text("scenario = slowlight\n[medium]\ngroup_delay_ns = 150\n");
    CHECK(group_delay(slow.medium) == Approx(150e-9).epsilon(1e-6));
    CHECK(slow.medium.Omega_c < 154767354.29370925);
  }
}

TEST_CASE("config rejection paths") {
  CHECK_THROWS_WITH_AS(resolve_text(""), "config file is empty", std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("[medium]\n"), "config file is empty",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("scenario = x\nfoo = 1\n"),
                       "unknown config key: foo", std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("scenario = x\n[medium]\nbogus = 1\n"),
                       "unknown config key: medium.bogus", std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("seed = -3\n"),
                       "config key seed needs a non-negative integer",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("[grid]\nspan_mhz = abc\n"),
                       "config key grid.span_mhz needs a finite number, got 'abc'",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("[grid]\nn = 7\n"),
                       "config key grid.n needs an even sample count >= 8",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("[grid]\nn = 9\n"),
                       "config key grid.n needs an even sample count >= 8",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("[detection]\nmode = upside\n"),
                       "config key detection.mode must be source, slowlight, or retrieved",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(resolve_text("[fit]\nn_b = 0\n"),
                       "config key fit.n_b needs a positive value", std::invalid_argument);
  // physics validation still applies to resolved values
  CHECK_THROWS_AS(resolve_text("[medium]\noptical_depth = -5\n"), std::invalid_argument);
  CHECK_THROWS_AS(resolve_text("[schedule]\nxi = 0\n"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_config_file("missing_config.toml"),
                       "cannot open config file: missing_config.toml",
                       std::runtime_error);
}

TEST_CASE("hash identifies the resolved physics") {
  ExperimentConfig a = resolve_text("scenario = coincidence\nseed = 7\n");
  ExperimentConfig b = resolve_text("scenario = coincidence\nseed = 7\n");
  CHECK(a.hash == b.hash);
  CHECK(a.canonical == b.canonical);

  CHECK(resolve_text("scenario = coincidence\nseed = 8\n").hash != a.hash);
  CHECK(resolve_text("scenario = spectrum\nseed = 7\n").hash != a.hash);
  CHECK(resolve_text("scenario = coincidence\nseed = 7\n[schedule]\nxi = 2\n").hash != a.hash);
  // the output directory is bookkeeping, not physics
  CHECK(resolve_text("scenario = coincidence\nseed = 7\nout_dir = elsewhere\n").hash == a.hash);
  // quoting does not change the resolved value
  CHECK(resolve_text("scenario = \"coincidence\"\nseed = 7\n").hash == a.hash);
  // spelling a default explicitly resolves to the same experiment
  CHECK(resolve_text("scenario = coincidence\nseed = 7\n[schedule]\nxi = 1\n").hash == a.hash);

  SUBCASE("hash primitive matches the reference vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  }
}

TEST_CASE("output naming and csv round trips") {
  ExperimentConfig cfg = resolve_text("scenario = spectrum\nout_dir = cfg_test_out\n");
  std::string path = output_path(cfg, "waveform.csv");
  CHECK(path == "cfg_test_out/spectrum-" + cfg.hash + "-waveform.csv");
  CHECK(std::filesystem::is_directory("cfg_test_out"));

  std::vector<double> t = {0.0, 1.0 / 3.0, -0.0, 6.62607015e-34, 3.141592653589793e17};
  std::vector<double> v = {1e-300, -2.5, 0.1, 7.0, -1.0 / 7.0};
  write_csv(path, {"t", "v"}, {t, v});
  auto cols = read_csv_columns(path, 2);
  REQUIRE(cols.size() == 2);
  REQUIRE(cols[0].size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(cols[0][i] == t[i]);
    CHECK(cols[1][i] == v[i]);
  }

  SUBCASE("writer guards") {
    CHECK_THROWS_WITH_AS(write_csv(path, {"a"}, {t, v}),
                         "csv writer: header and column counts differ",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(write_csv(path, {}, {}), "csv writer: no columns",
                         std::invalid_argument);
    std::vector<double> shorter = {1.0};
    CHECK_THROWS_WITH_AS(write_csv(path, {"a", "b"}, {t, shorter}),
                         "csv writer: ragged columns", std::invalid_argument);
  }
  SUBCASE("reader guards") {
    CHECK_THROWS_WITH_AS(read_csv_columns("missing.csv", 2),
                         "cannot open file: missing.csv", std::runtime_error);
    const char* bad = "cfg_test_out/bad.csv";
    {
      std::ofstream out(bad);
      out << "x,y\n1,2\noops,3\n";
    }
    CHECK_THROWS_WITH_AS(read_csv_columns(bad, 2),
                         doctest::Contains(":3: expected numeric row"), std::runtime_error);
    {
      std::ofstream out(bad);
      out << "1,2,3\n";
    }
    CHECK_THROWS_WITH_AS(read_csv_columns(bad, 2),
                         doctest::Contains(":1: expected 2 columns, got 3"),
                         std::runtime_error);
    {
      std::ofstream out(bad);
      out << "# only a comment\nx,y\n";
    }
    CHECK_THROWS_WITH_AS(read_csv_columns(bad, 2), doctest::Contains(": no data rows"),
                         std::runtime_error);
    std::remove(bad);
  }
  std::remove(path.c_str());
  std::error_code ec;
  std::filesystem::remove_all("cfg_test_out", ec);
}

TEST_CASE("manifest carries the resolved experiment") {
  ExperimentConfig cfg = resolve_text("scenario = store\nseed = 4\n");
  ordered_json j = manifest_base(cfg);
  CHECK(j["version"] == "1.0.0");
  CHECK(j["scenario"] == "store");
  CHECK(j["seed"] == 4);
  CHECK(j["config_hash"] == cfg.hash);
  CHECK(j["params"]["medium.Gamma"].get<double>() == Approx(rad_from_mhz(5.23)));
  CHECK(j["params"]["medium.Omega_c"].get<double>() == Approx(154767354.29370925));
  CHECK(j["params"]["detection.mode"] == "retrieved");
  CHECK(j["params"]["schedule.xi"].get<double>() == Approx(1.0));
}

TEST_CASE("shipped example configs resolve cleanly") {
  const std::vector<std::pair<std::string, std::string>> files = {
      {"spectrum.toml", "spectrum"},       {"slowlight.toml", "slowlight"},
      {"store.toml", "store"},             {"sweep_xi.toml", "sweep-xi"},
      {"coincidence.toml", "coincidence"}, {"fit_g2.toml", "fit-g2"},
      {"fit_od.toml", "fit-od"}};
  for (const auto& [file, scenario] : files) {
    CAPTURE(file);
    ExperimentConfig c = resolve_config(
        load_config_file(std::string(QMEM_CONFIG_DIR) + "/" + file));
    CHECK(c.scenario == scenario);
    CHECK(c.hash.size() == 16);
  }
}
