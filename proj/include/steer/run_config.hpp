// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: an INI-style document of [section] blocks with
// `key = value` lines. Every key has a default matching the paper-28ghz
// preset; unknown keys are rejected with their line number. Angles are in
// degrees, powers and INRs in dB.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steer/csv.hpp"
#include "steer/simharness.hpp"

namespace steer {

struct RunConfig {
  // [array]
  std::string array_preset = "paper-28ghz";
  UpaGeometry geometry{16, 16, 0.5, {}, 0.0};
  double carrier_hz = 28e9;
  // [codebook]
  AngleRange codebook_az{-56.0, 56.0};
  AngleRange codebook_el{-24.0, 24.0};
  double codebook_spacing_deg = 8.0;
  // [platform]
  double panel_separation_m = 0.3;
  double normal_separation_deg = 120.0;
  // [oracle]
  std::string oracle_model = "spherical-wave";
  std::uint64_t oracle_seed = 7;
  std::optional<double> si_ref_inr_db;  // nullopt = calibrate
  double calibration_median_inr_db = 20.0;
  double noise_sigma_db = 0.0;
  std::optional<double> clip_ceiling_db;
  std::string grid_path;
  // [steer] + [scenario]
  Scenario scenario;
  // [sweep]
  std::vector<double> sweep_targets_db{kNegInf, -20.0, -15.0, -10.0, -7.0, -5.0, 0.0, 5.0, 10.0};
  std::vector<NeighborhoodSpec> sweep_neighborhoods{
      {0.0, 0.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}, {2.0, 1.0, 1.0, 1.0}, {2.0, 2.0, 1.0, 1.0}, {3.0, 3.0, 1.0, 1.0}};
  std::vector<double> sweep_snr_tx_db{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  std::vector<double> sweep_snr_rx_db{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  // [run]
  unsigned threads = 1;
};

namespace detail {

struct RawValue {
  std::string value;
  std::size_t line = 0;  // 0 = command-line override
};

using RawConfig = std::map<std::string, RawValue>;

inline const std::vector<std::string_view>& known_config_keys() {
  static const std::vector<std::string_view> keys{
      "array.preset", "array.rows", "array.cols", "array.spacing_wavelengths", "array.carrier_ghz",
      "codebook.az_lo_deg", "codebook.az_hi_deg", "codebook.el_lo_deg", "codebook.el_hi_deg",
      "codebook.spacing_deg",
      "platform.panel_separation_m", "platform.normal_separation_deg",
      "oracle.model", "oracle.seed", "oracle.si_ref_inr_db", "oracle.calibration_median_inr_db",
      "oracle.noise_sigma_db", "oracle.clip_ceiling_db", "oracle.grid_path",
      "steer.delta_theta_deg", "steer.delta_phi_deg", "steer.res_theta_deg", "steer.res_phi_deg",
      "steer.inr_target_db",
      "scenario.mode", "scenario.n_drops", "scenario.seed", "scenario.drop_az_lo_deg", "scenario.drop_az_hi_deg",
      "scenario.drop_el_lo_deg", "scenario.drop_el_hi_deg", "scenario.snrbar_tx_db", "scenario.snrbar_rx_db",
      "scenario.inr_tx_db",
      "sweep.targets_db", "sweep.neighborhoods", "sweep.snr_tx_db", "sweep.snr_rx_db",
      "run.threads"};
  return keys;
}

inline bool is_known_key(std::string_view key) {
  for (auto k : known_config_keys()) {
    if (k == key) return true;
  }
  return false;
}

inline std::string where(const RawValue& v) {
  return v.line == 0 ? std::string("--set") : "line " + std::to_string(v.line);
}

inline void put(RawConfig& raw, std::string key, std::string value, std::size_t line) {
  if (!is_known_key(key)) {
    throw ConfigError("unknown key '" + key + "' at " + where(RawValue{"", line}));
  }
  raw[std::move(key)] = RawValue{std::move(value), line};
}

inline RawConfig parse_ini(std::istream& in) {
  RawConfig raw;
  std::string section;
  csv::Line line;
  std::map<std::string, std::size_t> seen;
  while (csv::next_line(in, line)) {
    std::string_view text = csv::trim(line.text);
    if (text.empty() || text.front() == '#' || text.front() == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("malformed section header at line " + std::to_string(line.number));
      section = std::string(csv::trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected 'key = value' at line " + std::to_string(line.number));
    }
    std::string key = std::string(csv::trim(text.substr(0, eq)));
    std::string_view value = csv::trim(text.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string_view::npos) value = csv::trim(value.substr(0, hash));
    const std::string full = section.empty() ? key : section + "." + key;
    if (auto it = seen.find(full); it != seen.end()) {
      throw ConfigError("duplicate key '" + full + "' at line " + std::to_string(line.number) +
                        " (first at line " + std::to_string(it->second) + ")");
    }
    seen[full] = line.number;
    put(raw, full, std::string(value), line.number);
  }
  return raw;
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const RawValue* find(std::string_view key) const {
    auto it = raw_.find(std::string(key));
    return it == raw_.end() ? nullptr : &it->second;
  }

  void get(std::string_view key, double& out) const {
    if (auto v = find(key)) out = number(key, *v);
  }
  void get(std::string_view key, std::string& out) const {
    if (auto v = find(key)) out = v->value;
  }
  void get(std::string_view key, int& out) const {
    if (auto v = find(key)) out = static_cast<int>(integer(key, *v));
  }
  void get(std::string_view key, std::uint64_t& out) const {
    if (auto v = find(key)) {
      const auto i = integer(key, *v);
      if (i < 0) fail(key, *v, "must be >= 0");
      out = static_cast<std::uint64_t>(i);
    }
  }
  void get(std::string_view key, std::size_t& out, bool) const {
    std::uint64_t tmp = out;
    get(key, tmp);
    out = static_cast<std::size_t>(tmp);
  }
  void get_optional(std::string_view key, std::optional<double>& out, std::string_view none_word) const {
    if (auto v = find(key)) {
      if (v->value == none_word || v->value == "none") {
        out.reset();
      } else {
        out = number(key, *v);
      }
    }
  }
  void get_list(std::string_view key, std::vector<double>& out) const {
    auto v = find(key);
    if (!v) return;
    out.clear();
    for (auto field : csv::split(v->value)) {
      out.push_back(number(key, RawValue{std::string(csv::trim(field)), v->line}));
    }
    if (out.empty()) fail(key, *v, "list must not be empty");
  }
  void get_specs(std::string_view key, std::vector<NeighborhoodSpec>& out) const {
    auto v = find(key);
    if (!v) return;
    out.clear();
    for (auto field : csv::split(v->value)) {
      const auto parts = csv::split(csv::trim(field), ':');
      if (parts.size() != 4) fail(key, *v, "neighborhoods are written dtheta:dphi:rtheta:rphi");
      NeighborhoodSpec s;
      s.delta_theta_deg = number(key, RawValue{std::string(csv::trim(parts[0])), v->line});
      s.delta_phi_deg = number(key, RawValue{std::string(csv::trim(parts[1])), v->line});
      s.res_theta_deg = number(key, RawValue{std::string(csv::trim(parts[2])), v->line});
      s.res_phi_deg = number(key, RawValue{std::string(csv::trim(parts[3])), v->line});
      out.push_back(s);
    }
  }

  [[noreturn]] static void fail(std::string_view key, const RawValue& v, std::string_view why) {
    throw ConfigError("key '" + std::string(key) + "' at " + where(v) + ": " + std::string(why));
  }

 private:
  static double number(std::string_view key, const RawValue& v) {
    try {
      return csv::parse_double(v.value, v.line);
    } catch (const ParseError&) {
      fail(key, v, "expected a number, got '" + v.value + "'");
    }
  }
  static std::int64_t integer(std::string_view key, const RawValue& v) {
    try {
      return csv::parse_int(v.value, v.line);
    } catch (const ParseError&) {
      fail(key, v, "expected an integer, got '" + v.value + "'");
    }
  }

  const RawConfig& raw_;
};

}  // namespace detail

/// Parses a configuration document and applies `--set key=value` overrides.
/// All values are validated before returning.
inline RunConfig parse_run_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
  detail::RawConfig raw = detail::parse_ini(in);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not KEY=VALUE");
    std::string key(csv::trim(std::string_view(o).substr(0, eq)));
    std::string value(csv::trim(std::string_view(o).substr(eq + 1)));
    if (!detail::is_known_key(key)) throw ConfigError("unknown key '" + key + "' at --set");
    raw[key] = detail::RawValue{value, 0};
  }

  RunConfig cfg;
  const detail::Reader r(raw);

  r.get("array.preset", cfg.array_preset);
  const ArrayPreset preset = array_preset(cfg.array_preset);
  cfg.geometry = preset.geometry;
  cfg.carrier_hz = preset.carrier_hz;
  cfg.codebook_az = preset.azimuth_range_deg;
  cfg.codebook_el = preset.elevation_range_deg;
  cfg.codebook_spacing_deg = preset.spacing_deg;

  r.get("array.rows", cfg.geometry.rows);
  r.get("array.cols", cfg.geometry.cols);
  r.get("array.spacing_wavelengths", cfg.geometry.element_spacing_wavelengths);
  double carrier_ghz = cfg.carrier_hz / 1e9;
  r.get("array.carrier_ghz", carrier_ghz);
  cfg.carrier_hz = carrier_ghz * 1e9;
  r.get("codebook.az_lo_deg", cfg.codebook_az.lo);
  r.get("codebook.az_hi_deg", cfg.codebook_az.hi);
  r.get("codebook.el_lo_deg", cfg.codebook_el.lo);
  r.get("codebook.el_hi_deg", cfg.codebook_el.hi);
  r.get("codebook.spacing_deg", cfg.codebook_spacing_deg);
  r.get("platform.panel_separation_m", cfg.panel_separation_m);
  r.get("platform.normal_separation_deg", cfg.normal_separation_deg);

  r.get("oracle.model", cfg.oracle_model);
  r.get("oracle.seed", cfg.oracle_seed);
  r.get_optional("oracle.si_ref_inr_db", cfg.si_ref_inr_db, "auto");
  r.get("oracle.calibration_median_inr_db", cfg.calibration_median_inr_db);
  r.get("oracle.noise_sigma_db", cfg.noise_sigma_db);
  r.get_optional("oracle.clip_ceiling_db", cfg.clip_ceiling_db, "off");
  r.get("oracle.grid_path", cfg.grid_path);

  NeighborhoodSpec spec = cfg.scenario.steer_config.tx_spec;
  r.get("steer.delta_theta_deg", spec.delta_theta_deg);
  r.get("steer.delta_phi_deg", spec.delta_phi_deg);
  r.get("steer.res_theta_deg", spec.res_theta_deg);
  r.get("steer.res_phi_deg", spec.res_phi_deg);
  double target = cfg.scenario.steer_config.inr_target_db;
  r.get("steer.inr_target_db", target);
  cfg.scenario.steer_config = SteerConfig(spec, target);

  Scenario& s = cfg.scenario;
  std::string mode(to_string(s.mode));
  r.get("scenario.mode", mode);
  s.mode = duplex_mode_from_string(mode);
  r.get("scenario.n_drops", s.n_drops, true);
  r.get("scenario.seed", s.seed);
  r.get("scenario.drop_az_lo_deg", s.drop_region_az.lo);
  r.get("scenario.drop_az_hi_deg", s.drop_region_az.hi);
  r.get("scenario.drop_el_lo_deg", s.drop_region_el.lo);
  r.get("scenario.drop_el_hi_deg", s.drop_region_el.hi);
  r.get("scenario.snrbar_tx_db", s.budget.snrbar_tx_db);
  r.get("scenario.snrbar_rx_db", s.budget.snrbar_rx_db);
  r.get("scenario.inr_tx_db", s.budget.inr_tx_db);

  r.get_list("sweep.targets_db", cfg.sweep_targets_db);
  r.get_specs("sweep.neighborhoods", cfg.sweep_neighborhoods);
  r.get_list("sweep.snr_tx_db", cfg.sweep_snr_tx_db);
  r.get_list("sweep.snr_rx_db", cfg.sweep_snr_rx_db);

  std::uint64_t threads = cfg.threads;
  r.get("run.threads", threads);
  cfg.threads = static_cast<unsigned>(threads);

  // Validation up front so no computation starts on a bad document.
  cfg.geometry.validate();
  if (!(cfg.carrier_hz > 0.0)) throw ConfigError("array.carrier_ghz must be positive");
  if (cfg.oracle_model != "spherical-wave" && cfg.oracle_model != "rayleigh" && cfg.oracle_model != "file") {
    throw ConfigError("oracle.model must be spherical-wave, rayleigh or file");
  }
  if (cfg.oracle_model == "file" && cfg.grid_path.empty()) {
    throw ConfigError("oracle.grid_path is required when oracle.model = file");
  }
  if (!(cfg.noise_sigma_db >= 0.0)) throw ConfigError("oracle.noise_sigma_db must be >= 0");
  if (cfg.si_ref_inr_db && !std::isfinite(*cfg.si_ref_inr_db)) {
    throw ConfigError("oracle.si_ref_inr_db must be finite or 'auto'");
  }
  if (!std::isfinite(cfg.calibration_median_inr_db)) {
    throw ConfigError("oracle.calibration_median_inr_db must be finite");
  }
  if (!std::isfinite(s.budget.snrbar_tx_db) || !std::isfinite(s.budget.snrbar_rx_db)) {
    throw ConfigError("scenario SNRs must be finite");
  }
  if (std::isnan(s.budget.inr_tx_db) || s.budget.inr_tx_db == std::numeric_limits<double>::infinity()) {
    throw ConfigError("scenario.inr_tx_db must be finite or -inf");
  }
  s.steer_config.validate();
  for (const auto& ns : cfg.sweep_neighborhoods) ns.validate();
  if (s.n_drops == 0) throw ConfigError("scenario.n_drops must be >= 1");
  const Codebook probe = build_codebook(UpaGeometry{1, 1, 0.5, {}, 0.0}, cfg.codebook_az, cfg.codebook_el,
                                        cfg.codebook_spacing_deg);
  validate_scenario(s, probe, probe);
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_run_config(in, overrides);
}

/// Runtime objects built from a configuration.
struct Testbed {
  Codebook codebook_tx;
  Codebook codebook_rx;
  std::unique_ptr<InrOracle> oracle;
  double si_ref_inr_db = 0.0;
};

/// Builds codebooks and the oracle. For UL-UL the panels swap roles, so the
/// synthetic SI channel is generated with the receive panel transmitting.
inline Testbed make_testbed(const RunConfig& cfg) {
  Testbed tb;
  PanelPair panels = default_platform(cfg.geometry, cfg.panel_separation_m, cfg.normal_separation_deg);
  if (cfg.scenario.mode == DuplexMode::UlUl) std::swap(panels.tx, panels.rx);
  tb.codebook_tx = build_codebook(panels.tx, cfg.codebook_az, cfg.codebook_el, cfg.codebook_spacing_deg);
  tb.codebook_rx = build_codebook(panels.rx, cfg.codebook_az, cfg.codebook_el, cfg.codebook_spacing_deg);

  if (cfg.oracle_model == "file") {
    tb.oracle = import_grid(cfg.grid_path);
    return tb;
  }
  SyntheticOracleOptions opts;
  opts.si_ref_inr_db = cfg.si_ref_inr_db.value_or(0.0);
  opts.noise_sigma_db = cfg.noise_sigma_db;
  opts.noise_seed = cfg.oracle_seed;
  opts.clip_ceiling_db = cfg.clip_ceiling_db;
  SiChannel si = synthesize_si_channel(panels.tx, panels.rx, wavelength_m(cfg.carrier_hz), cfg.oracle_model,
                                       cfg.oracle_seed);
  tb.oracle = std::make_unique<SyntheticOracle>(panels.tx, panels.rx, std::move(si), opts);
  if (cfg.si_ref_inr_db) {
    tb.si_ref_inr_db = *cfg.si_ref_inr_db;
  } else {
    tb.si_ref_inr_db = calibrate_reference(*tb.oracle, tb.codebook_tx, tb.codebook_rx, cfg.calibration_median_inr_db);
  }
  return tb;
}

}  // namespace steer
