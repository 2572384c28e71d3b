#ifndef BIPHOTON_WORKBENCH_HPP
#define BIPHOTON_WORKBENCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biphoton/constants.hpp"
#include "biphoton/counts.hpp"
#include "biphoton/coupler.hpp"
#include "biphoton/dispersion.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/hom.hpp"
#include "biphoton/io.hpp"
#include "biphoton/jsa.hpp"
#include "biphoton/metrology.hpp"
#include "biphoton/numerics.hpp"
#include "biphoton/presets.hpp"

namespace biphoton {
namespace workbench {

inline std::string tool_version() { return "biphoton 1.0.0"; }

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

// Optional rectangular filter on the signal axis.  The width may be given in
// signal-wavelength nanometres (converted about the degeneracy wavelength) or
// directly in rad/s; a zero centre means the degeneracy frequency.
struct FilterConfig {
  bool enabled = false;
  double center_rad_per_s = 0.0;
  double width_nm = 0.0;
  double width_rad_per_s = 0.0;
};

// One JSON document describes a full scenario; every field has a default, so
// an empty document is a valid configuration (taper-1 device, no filter).
// CLI flags override individual fields after the document is loaded.
struct DeviceConfig {
  std::string preset = "taper1";
  std::string taper_profile_csv;  // optional width-profile override (z_m,w_m)
  double taper_length_m = 0.0;    // 0 = preset default
  std::string dispersion_pump;    // optional model overrides (.json or .csv)
  std::string dispersion_signal;
  std::string dispersion_idler;
  std::string measured_te;        // optional measured transmission per pol
  std::string measured_tm;
  double pump_wavelength_m = 780e-9;
  double grid_half_span_m = 40e-9;  // signal-wavelength half span about degeneracy
  std::size_t grid_points = 4096;
  FilterConfig filter;
  CountsScenario counts;
  std::uint64_t seed = 42;
  double smooth_nm = 2.0;  // moving-average window for measured spectra; 0 = off
  bool anyonic_comparison = false;
  double anyonic_alpha = 0.5;
};

namespace detail {

inline void require_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) { known = true; break; }
    if (!known)
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out,
                const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline DeviceConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  using detail::require_keys;
  require_keys(j,
               {"preset", "taper_profile_csv", "taper_length_m", "dispersion",
                "measured_transmission", "pump_wavelength_m", "grid_half_span_m",
                "grid_points", "filter", "counts", "seed", "smooth_nm",
                "anyonic_comparison", "anyonic_alpha"},
               "config");
  DeviceConfig cfg;
  read_field(j, "preset", cfg.preset, "config");
  read_field(j, "taper_profile_csv", cfg.taper_profile_csv, "config");
  read_field(j, "taper_length_m", cfg.taper_length_m, "config");
  if (j.contains("dispersion")) {
    const auto& d = j.at("dispersion");
    require_keys(d, {"pump", "signal", "idler"}, "config.dispersion");
    read_field(d, "pump", cfg.dispersion_pump, "config.dispersion");
    read_field(d, "signal", cfg.dispersion_signal, "config.dispersion");
    read_field(d, "idler", cfg.dispersion_idler, "config.dispersion");
  }
  if (j.contains("measured_transmission")) {
    const auto& m = j.at("measured_transmission");
    require_keys(m, {"te", "tm"}, "config.measured_transmission");
    read_field(m, "te", cfg.measured_te, "config.measured_transmission");
    read_field(m, "tm", cfg.measured_tm, "config.measured_transmission");
  }
  read_field(j, "pump_wavelength_m", cfg.pump_wavelength_m, "config");
  read_field(j, "grid_half_span_m", cfg.grid_half_span_m, "config");
  read_field(j, "grid_points", cfg.grid_points, "config");
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    require_keys(f, {"enabled", "center_rad_per_s", "width_nm", "width_rad_per_s"},
                 "config.filter");
    cfg.filter.enabled = true;  // presence enables unless explicitly disabled
    read_field(f, "enabled", cfg.filter.enabled, "config.filter");
    read_field(f, "center_rad_per_s", cfg.filter.center_rad_per_s, "config.filter");
    read_field(f, "width_nm", cfg.filter.width_nm, "config.filter");
    read_field(f, "width_rad_per_s", cfg.filter.width_rad_per_s, "config.filter");
  }
  if (j.contains("counts")) {
    try {
      cfg.counts = scenario_from_json(j.at("counts"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.counts: ") + e.what());
    }
  }
  read_field(j, "seed", cfg.seed, "config");
  read_field(j, "smooth_nm", cfg.smooth_nm, "config");
  read_field(j, "anyonic_comparison", cfg.anyonic_comparison, "config");
  read_field(j, "anyonic_alpha", cfg.anyonic_alpha, "config");
  if (!(cfg.pump_wavelength_m > 0.0))
    throw ConfigError("config.pump_wavelength_m must be positive");
  if (!(cfg.grid_half_span_m > 0.0))
    throw ConfigError("config.grid_half_span_m must be positive");
  if (cfg.smooth_nm < 0.0) throw ConfigError("config.smooth_nm must be non-negative");
  return cfg;
}

inline DeviceConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// Fully resolved snapshot; defaulted fields are spelled out so the manifest
// pins the exact scenario.
inline nlohmann::json config_to_json(const DeviceConfig& cfg) {
  nlohmann::json j;
  j["preset"] = cfg.preset;
  j["taper_profile_csv"] = cfg.taper_profile_csv;
  j["taper_length_m"] = cfg.taper_length_m;
  j["dispersion"] = {{"pump", cfg.dispersion_pump},
                     {"signal", cfg.dispersion_signal},
                     {"idler", cfg.dispersion_idler}};
  j["measured_transmission"] = {{"te", cfg.measured_te}, {"tm", cfg.measured_tm}};
  j["pump_wavelength_m"] = cfg.pump_wavelength_m;
  j["grid_half_span_m"] = cfg.grid_half_span_m;
  j["grid_points"] = cfg.grid_points;
  j["filter"] = {{"enabled", cfg.filter.enabled},
                 {"center_rad_per_s", cfg.filter.center_rad_per_s},
                 {"width_nm", cfg.filter.width_nm},
                 {"width_rad_per_s", cfg.filter.width_rad_per_s}};
  j["counts"] = scenario_to_json(cfg.counts);
  j["seed"] = cfg.seed;
  j["smooth_nm"] = cfg.smooth_nm;
  j["anyonic_comparison"] = cfg.anyonic_comparison;
  j["anyonic_alpha"] = cfg.anyonic_alpha;
  return j;
}

// ---------------------------------------------------------------------------
// measured-spectrum ingestion
// ---------------------------------------------------------------------------

// Loads a transmission CSV (columns omega_rad_per_s,T; ascending frequency).
// With `smooth` set, a moving average over `window_nm` of wavelength is
// applied (reflected boundaries) to average out cavity oscillations; for a
// flat spectrum this is the identity.
inline TransmissionSpectrum ingest_transmission(const std::string& path,
                                                Polarization pol, bool smooth = false,
                                                double window_nm = 2.0) {
  const CsvTable t = read_csv_file(path);
  const std::size_t co = t.column("omega_rad_per_s");
  const std::size_t ct = t.column("T");
  TransmissionSpectrum s;
  s.pol = pol;
  s.provenance = "measured-file";
  s.omega.reserve(t.rows.size());
  s.value.reserve(t.rows.size());
  std::string bad_rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double om = t.rows[r][co];
    const double tv = t.rows[r][ct];
    // rows are reported as file lines, counting the header line as row 1
    if (!s.omega.empty() && !(om > s.omega.back()))
      throw IoError(path + ": omega must be strictly increasing (row " +
                    std::to_string(r + 2) + ")");
    if (tv < 0.0 || tv > 1.0) {
      if (!bad_rows.empty()) bad_rows += ", ";
      bad_rows += std::to_string(r + 2) + " (T = " + format_double(tv) + ")";
    }
    s.omega.push_back(om);
    s.value.push_back(tv);
  }
  if (s.omega.size() < 2)
    throw IoError(path + ": transmission spectrum needs at least 2 rows");
  if (!bad_rows.empty())
    throw IoError(path + ": transmission outside [0, 1] at row(s) " + bad_rows);
  if (!smooth || !(window_nm > 0.0)) return s;

  // window half-count from the median wavelength spacing of the samples
  const std::size_t n = s.omega.size();
  std::vector<double> dl;
  dl.reserve(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    dl.push_back(std::abs(omega_to_wavelength(s.omega[i]) -
                          omega_to_wavelength(s.omega[i - 1])));
  std::nth_element(dl.begin(), dl.begin() + dl.size() / 2, dl.end());
  const double med = dl[dl.size() / 2];
  if (!(med > 0.0)) return s;
  const auto k = static_cast<std::size_t>(std::llround(0.5 * window_nm * 1e-9 / med));
  if (k == 0) return s;
  std::vector<double> smoothed(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t m = 0; m <= 2 * k; ++m) {
      auto idx = static_cast<long long>(i) + static_cast<long long>(m) -
                 static_cast<long long>(k);
      if (idx < 0) idx = -idx;  // reflect at both ends
      const auto nn = static_cast<long long>(n);
      if (idx >= nn) idx = 2 * nn - 2 - idx;
      acc += s.value[static_cast<std::size_t>(idx)];
    }
    smoothed[i] = acc / static_cast<double>(2 * k + 1);
  }
  s.value = std::move(smoothed);
  return s;
}

// ---------------------------------------------------------------------------
// device resolution
// ---------------------------------------------------------------------------

// Configuration turned into a concrete device: preset model with any file
// overrides applied, plus the per-polarization transmission actually used by
// the couple stage.  `input_hashes` records every file that was read.
struct ResolvedDevice {
  presets::DeviceModel model;
  std::optional<TransmissionSpectrum> t_te, t_tm;
  std::map<std::string, std::string> input_hashes;
};

namespace detail {

inline std::string content_hash(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return std::string("fnv1a64:") + buf;
}

inline std::string hash_file(const std::string& path,
                             std::map<std::string, std::string>& hashes) {
  const std::string text = read_text_file(path);
  hashes[path] = content_hash(text);
  return text;
}

inline DispersionModel load_dispersion_override(ModeLabel label,
                                                const std::string& path) {
  if (ends_with(path, ".json")) return DispersionModel::from_polynomial_json(label, path);
  if (ends_with(path, ".csv")) return DispersionModel::from_table_csv(label, path);
  throw ConfigError("dispersion override \"" + path +
                    "\" must be a .json polynomial or a .csv table");
}

}  // namespace detail

// `need_transmission` skips the coupled-mode transmission solve when no stage
// will consume it (for example a source-only pipeline).
inline ResolvedDevice resolve_device(const DeviceConfig& cfg,
                                     bool need_transmission = true) {
  ResolvedDevice rd;
  rd.model = presets::device(cfg.preset, cfg.taper_length_m);
  if (cfg.pump_wavelength_m > 0.0)
    rd.model.pump_frequency = wavelength_to_omega(cfg.pump_wavelength_m);

  if (!cfg.dispersion_pump.empty()) {
    detail::hash_file(cfg.dispersion_pump, rd.input_hashes);
    rd.model.pump = detail::load_dispersion_override(ModeLabel::pump_te,
                                                     cfg.dispersion_pump);
  }
  if (!cfg.dispersion_signal.empty()) {
    detail::hash_file(cfg.dispersion_signal, rd.input_hashes);
    rd.model.signal = detail::load_dispersion_override(ModeLabel::signal_te,
                                                       cfg.dispersion_signal);
  }
  if (!cfg.dispersion_idler.empty()) {
    detail::hash_file(cfg.dispersion_idler, rd.input_hashes);
    rd.model.idler = detail::load_dispersion_override(ModeLabel::idler_tm,
                                                      cfg.dispersion_idler);
  }

  if (!cfg.taper_profile_csv.empty()) {
    if (!rd.model.has_coupler)
      throw ConfigError("taper_profile_csv given, but preset \"" + cfg.preset +
                        "\" has no transfer stage");
    detail::hash_file(cfg.taper_profile_csv, rd.input_hashes);
    auto [z, w] = load_width_profile_csv(cfg.taper_profile_csv);
    const double w_lo = rd.model.taper.te.n_a.w_min();
    const double w_hi = rd.model.taper.te.n_a.w_max();
    for (double wi : w)
      if (wi < w_lo || wi > w_hi)
        throw ConfigError("taper profile width " + format_double(wi) +
                          " m outside the preset index tables [" +
                          format_double(w_lo) + ", " + format_double(w_hi) + "] m");
    TaperProfile p = make_taper_profile(std::move(z), std::move(w),
                                        rd.model.taper.te, rd.model.taper.tm);
    if (cfg.taper_length_m > 0.0) p = p.rescaled(cfg.taper_length_m);
    rd.model.taper = std::move(p);
  }

  if (!need_transmission) return rd;
  const bool smooth = cfg.smooth_nm > 0.0;
  if (!cfg.measured_te.empty()) {
    detail::hash_file(cfg.measured_te, rd.input_hashes);
    rd.t_te = ingest_transmission(cfg.measured_te, Polarization::te, smooth,
                                  cfg.smooth_nm);
  }
  if (!cfg.measured_tm.empty()) {
    detail::hash_file(cfg.measured_tm, rd.input_hashes);
    rd.t_tm = ingest_transmission(cfg.measured_tm, Polarization::tm, smooth,
                                  cfg.smooth_nm);
  }
  if (rd.model.has_coupler) {
    if (!rd.t_te) rd.t_te = presets::model_transmission(rd.model, Polarization::te);
    if (!rd.t_tm) rd.t_tm = presets::model_transmission(rd.model, Polarization::tm);
  }
  return rd;
}

// Degeneracy wavelength of the configured pump: the reference for converting
// nanometre spans on the signal axis into rad/s.
inline double degeneracy_wavelength(const presets::DeviceModel& model) {
  return omega_to_wavelength(0.5 * model.pump_frequency);
}

inline double grid_half_span_omega(const DeviceConfig& cfg,
                                   const presets::DeviceModel& model) {
  return bandwidth_to_omega(cfg.grid_half_span_m, degeneracy_wavelength(model));
}

inline SpectralFilter resolved_filter(const DeviceConfig& cfg,
                                      const presets::DeviceModel& model) {
  if (!cfg.filter.enabled) throw ConfigError("no spectral filter configured");
  SpectralFilter f;
  f.center = cfg.filter.center_rad_per_s > 0.0 ? cfg.filter.center_rad_per_s
                                               : 0.5 * model.pump_frequency;
  if (cfg.filter.width_rad_per_s > 0.0) {
    f.full_width = cfg.filter.width_rad_per_s;
  } else if (cfg.filter.width_nm > 0.0) {
    f.full_width =
        bandwidth_to_omega(cfg.filter.width_nm * 1e-9, degeneracy_wavelength(model));
  } else {
    throw ConfigError("filter needs width_nm or width_rad_per_s");
  }
  return f;
}

// Stage phase of one arm sampled on the state grid once (in parallel) and
// served by exact-index lookup: the pipeline only ever evaluates arm phases
// at grid frequencies.
inline PhaseFunction tabulated_arm_phase(const TaperProfile& taper, Polarization pol,
                                         const BiphotonSpectrum& grid) {
  auto table = std::make_shared<std::vector<double>>(grid.size(), 0.0);
  parallel_for(grid.size(),
               [&](std::size_t i) { (*table)[i] = taper_phase(taper, pol, grid.omega(i)); });
  const double omega0 = grid.omega(0);
  const double step = grid.step();
  const double n = static_cast<double>(grid.size());
  return [table, omega0, step, n](double omega) {
    const double x = (omega - omega0) / step;
    const double r = std::round(x);
    if (r < -0.5 || r > n - 0.5 || std::abs(x - r) > 1e-6)
      throw DomainError("arm phase queried off the state grid at omega = " +
                        format_double(omega) + " rad/s");
    return (*table)[static_cast<std::size_t>(r)];
  };
}

// ---------------------------------------------------------------------------
// run manifest
// ---------------------------------------------------------------------------

// Provenance record written before any other artifact.  It contains no
// timestamps: identical configuration and inputs give a byte-identical
// manifest, and any change to either changes it.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::string> input_hashes;
  std::vector<std::string> outputs;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["tool_version"] = tool_version();
  j["config"] = m.config;
  j["input_hashes"] = nlohmann::json::object();
  for (const auto& [path, hash] : m.input_hashes) j["input_hashes"][path] = hash;
  j["outputs"] = m.outputs;
  return j;
}

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void remove_outputs(const std::vector<std::string>& written) {
  for (const auto& p : written) {
    std::error_code ec;
    std::filesystem::remove(p, ec);  // best-effort cleanup on abort
  }
}

// Runs one pipeline stage; on any error the partial outputs are removed and
// the error is rethrown with the same type, prefixed by the stage name.
template <typename Fn>
void run_stage(const char* name, std::vector<std::string>& written, Fn&& fn) {
  const std::string prefix = std::string("stage ") + name + ": ";
  try {
    fn();
  } catch (const ConfigError& e) {
    remove_outputs(written);
    throw ConfigError(prefix + e.what());
  } catch (const NumericError& e) {
    remove_outputs(written);
    throw NumericError(prefix + e.what());
  } catch (const IoError& e) {
    remove_outputs(written);
    throw IoError(prefix + e.what());
  } catch (const DomainError& e) {
    remove_outputs(written);
    throw DomainError(prefix + e.what());
  } catch (const std::exception& e) {
    remove_outputs(written);
    throw NumericError(prefix + e.what());
  }
}

inline std::string transmission_to_csv(const TransmissionSpectrum& t) {
  std::ostringstream out;
  out << "omega_rad_per_s,T\n";
  for (std::size_t i = 0; i < t.omega.size(); ++i)
    out << format_double(t.omega[i]) << ',' << format_double(t.value[i]) << '\n';
  return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

// Stage names in execution order.  A request must be a prefix of the chain
// this configuration defines: source, couple, then filter only when one is
// configured, then hom, then metrology.
inline std::vector<std::string> stage_chain(const DeviceConfig& cfg) {
  std::vector<std::string> chain = {"source", "couple"};
  if (cfg.filter.enabled) chain.push_back("filter");
  chain.push_back("hom");
  chain.push_back("metrology");
  return chain;
}

// Validates a requested stage set (order-insensitive) against the chain and
// returns the number of chain stages to run.  An empty request selects the
// whole chain.
inline std::size_t resolve_stages(const DeviceConfig& cfg,
                                  const std::vector<std::string>& requested) {
  const std::vector<std::string> chain = stage_chain(cfg);
  if (requested.empty()) return chain.size();
  std::vector<bool> seen(chain.size(), false);
  for (const auto& name : requested) {
    bool found = false;
    for (std::size_t i = 0; i < chain.size(); ++i)
      if (chain[i] == name) {
        seen[i] = true;
        found = true;
        break;
      }
    if (found) continue;
    if (name == "filter")
      throw ConfigError("stage \"filter\" requested but the configuration "
                        "defines no spectral filter");
    throw ConfigError("unknown pipeline stage \"" + name +
                      "\" (expected source, couple, filter, hom or metrology)");
  }
  std::size_t depth = 0;
  while (depth < chain.size() && seen[depth]) ++depth;
  for (std::size_t i = depth; i < chain.size(); ++i)
    if (seen[i])
      throw ConfigError("stages must form a prefix of the chain " +
                        [&chain] {
                          std::string s;
                          for (const auto& c : chain) s += (s.empty() ? "" : " -> ") + c;
                          return s;
                        }() +
                        "; stage \"" + chain[i] + "\" needs \"" + chain[depth] + "\"");
  return depth;
}

struct PipelineResult {
  std::vector<std::string> artifacts;  // manifest first, then stage outputs
  BiphotonSpectrum source;
  BiphotonSpectrum state;  // after the last state-transforming stage that ran
  std::optional<HomCurve> curve, reference;
  nlohmann::json manifest, hom_report, metrology_report;
};

inline PipelineResult run_pipeline(const DeviceConfig& cfg,
                                   const std::vector<std::string>& requested,
                                   const std::string& out_dir) {
  const std::size_t depth = resolve_stages(cfg, requested);
  const std::vector<std::string> chain = stage_chain(cfg);
  const bool run_couple = depth >= 2;
  ResolvedDevice rd = resolve_device(cfg, /*need_transmission=*/run_couple);

  auto path = [&](const char* name) { return detail::join_path(out_dir, name); };
  PipelineResult res;
  std::vector<std::string> planned = {path("manifest.json"), path("source_state.csv"),
                                      path("source_state.json")};
  const bool run_filter = cfg.filter.enabled && depth >= 3;
  const bool run_hom = depth >= (cfg.filter.enabled ? 4u : 3u);
  const bool run_metrology = depth == chain.size();
  if (run_couple) {
    if (rd.t_te) planned.push_back(path("transmission_te.csv"));
    if (rd.t_tm) planned.push_back(path("transmission_tm.csv"));
    planned.push_back(path("coupled_state.csv"));
    planned.push_back(path("coupled_state.json"));
  }
  if (run_filter) {
    planned.push_back(path("filtered_state.csv"));
    planned.push_back(path("filtered_state.json"));
  }
  if (run_hom) {
    planned.push_back(path("interferogram.csv"));
    planned.push_back(path("reference_interferogram.csv"));
    if (cfg.anyonic_comparison) planned.push_back(path("synthetic_interferogram.csv"));
    planned.push_back(path("hom_report.json"));
  }
  if (run_metrology) planned.push_back(path("metrology_report.json"));

  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.config = config_to_json(cfg);
  manifest.input_hashes = rd.input_hashes;
  manifest.outputs = planned;
  res.manifest = manifest_to_json(manifest);

  std::vector<std::string> written;
  auto write = [&](const std::string& p, const std::string& content) {
    write_file_atomic(p, content);
    written.push_back(p);
  };
  detail::run_stage("manifest", written,
                    [&] { write(path("manifest.json"), res.manifest.dump(2) + "\n"); });

  detail::run_stage("source", written, [&] {
    res.source = presets::source_state(rd.model, cfg.grid_points,
                                       grid_half_span_omega(cfg, rd.model));
    res.state = res.source;
    write(path("source_state.csv"), state_to_csv(res.source));
    write(path("source_state.json"), state_sidecar_json(res.source));
  });

  if (run_couple)
    detail::run_stage("couple", written, [&] {
      if (rd.model.has_coupler) {
        res.state = apply_transmission(res.state, *rd.t_te, *rd.t_tm);
        const PhaseFunction th_te =
            tabulated_arm_phase(rd.model.taper, Polarization::te, res.state);
        const PhaseFunction th_tm =
            tabulated_arm_phase(rd.model.taper, Polarization::tm, res.state);
        const bool signal_te = rd.model.pols.signal == Polarization::te;
        res.state = apply_coupler_phase(res.state, signal_te ? th_te : th_tm,
                                        signal_te ? th_tm : th_te);
      }
      if (rd.t_te) write(path("transmission_te.csv"), detail::transmission_to_csv(*rd.t_te));
      if (rd.t_tm) write(path("transmission_tm.csv"), detail::transmission_to_csv(*rd.t_tm));
      write(path("coupled_state.csv"), state_to_csv(res.state));
      write(path("coupled_state.json"), state_sidecar_json(res.state));
    });

  if (run_filter)
    detail::run_stage("filter", written, [&] {
      res.state = apply_bandpass(res.state, resolved_filter(cfg, rd.model));
      write(path("filtered_state.csv"), state_to_csv(res.state));
      write(path("filtered_state.json"), state_sidecar_json(res.state));
    });

  if (run_hom)
    detail::run_stage("hom", written, [&] {
      const std::vector<double> delays = default_delay_grid();
      res.curve = coincidence_curve(res.state, delays);
      res.reference = coincidence_curve(res.source, delays);
      const VisibilityResult vis = visibility(*res.curve);
      const AsymmetryResult asym = asymmetry_score(*res.curve);
      nlohmann::json rep;
      rep["baseline"] = vis.baseline;
      rep["visibility"] = vis.visibility;
      rep["p_min"] = vis.p_min;
      rep["tau_dip_s"] = vis.tau_dip;
      rep["dip_shift_s"] = dip_shift(*res.curve, *res.reference);
      rep["asymmetry_score"] = asym.score;
      rep["recenter_tau_s"] = asym.recenter_tau;
      write(path("interferogram.csv"), hom_curve_to_csv(*res.curve));
      write(path("reference_interferogram.csv"), hom_curve_to_csv(*res.reference));
      if (cfg.anyonic_comparison) {
        const BiphotonSpectrum synth =
            synthetic_exchange_state(res.state, cfg.anyonic_alpha);
        const HomCurve sc = coincidence_curve(synth, delays);
        rep["synthetic_comparison"] = {
            {"alpha", cfg.anyonic_alpha},
            {"asymmetry_score", asymmetry_score(sc).score}};
        write(path("synthetic_interferogram.csv"), hom_curve_to_csv(sc));
      }
      res.hom_report = rep;
      write(path("hom_report.json"), rep.dump(2) + "\n");
    });

  if (run_metrology)
    detail::run_stage("metrology", written, [&] {
      const std::vector<double> delays = default_delay_grid();
      const FisherCurve fc = fisher_curve(res.state, delays, 1.0);
      const double qfi = quantum_fisher_information(res.state);
      const double fmax = max_fisher(fc);
      nlohmann::json rep;
      rep["qfi_s2"] = qfi;
      rep["max_fi_s2"] = fmax;
      rep["ratio"] = qfi > 0.0 ? fmax / qfi : 0.0;
      rep["visibility"] = res.hom_report.at("visibility");
      rep["gamma_model"] = "uniform-contrast";
      res.metrology_report = rep;
      write(path("metrology_report.json"), rep.dump(2) + "\n");
    });

  res.artifacts = written;
  return res;
}

// ---------------------------------------------------------------------------
// taper-length sweep
// ---------------------------------------------------------------------------

struct TaperLengthRow {
  double length_m = 0.0;
  double visibility = 0.0;
  double crossed_transmission = 0.0;  // T_TE(omega_p/2) * T_TM(omega_p/2), model
  double asymmetry_score = 0.0;
};

// Rescales the taper shape to each length and recomputes the arm phases while
// holding the transmission amplitude spectrum fixed at the reference device's
// (a deliberately non-physical scenario that isolates the phase effect).  The
// crossed transmission is always the coupled-mode model of the rescaled taper.
inline std::vector<TaperLengthRow> sweep_taper_length(const DeviceConfig& cfg,
                                                      const std::vector<double>& lengths) {
  if (lengths.empty()) throw ConfigError("taper-length sweep needs at least one length");
  for (double l : lengths)
    if (!(l > 0.0)) throw ConfigError("taper lengths must be positive");
  const ResolvedDevice rd = resolve_device(cfg);
  if (!rd.model.has_coupler)
    throw ConfigError("taper-length sweep: preset \"" + cfg.preset +
                      "\" has no transfer stage");
  const BiphotonSpectrum src = presets::source_state(
      rd.model, cfg.grid_points, grid_half_span_omega(cfg, rd.model));
  const BiphotonSpectrum base = apply_transmission(src, *rd.t_te, *rd.t_tm);
  const double omega_d = 0.5 * rd.model.pump_frequency;
  const bool signal_te = rd.model.pols.signal == Polarization::te;
  const std::vector<double> delays = default_delay_grid();

  std::vector<TaperLengthRow> rows;
  rows.reserve(lengths.size());
  for (double l : lengths) {
    const TaperProfile taper = rd.model.taper.rescaled(l);
    const PhaseFunction th_te = tabulated_arm_phase(taper, Polarization::te, base);
    const PhaseFunction th_tm = tabulated_arm_phase(taper, Polarization::tm, base);
    BiphotonSpectrum st = apply_coupler_phase(base, signal_te ? th_te : th_tm,
                                              signal_te ? th_tm : th_te);
    if (cfg.filter.enabled) st = apply_bandpass(st, resolved_filter(cfg, rd.model));
    const HomCurve curve = coincidence_curve(st, delays);
    TaperLengthRow row;
    row.length_m = l;
    row.visibility = visibility(curve).visibility;
    row.asymmetry_score = asymmetry_score(curve).score;
    row.crossed_transmission =
        std::clamp(std::norm(cmt_transfer(taper, Polarization::te, omega_d).b_out), 0.0,
                   1.0) *
        std::clamp(std::norm(cmt_transfer(taper, Polarization::tm, omega_d).b_out), 0.0,
                   1.0);
    rows.push_back(row);
  }
  return rows;
}

inline std::string taper_sweep_csv(const std::vector<TaperLengthRow>& rows) {
  std::ostringstream out;
  out << "length_m,visibility,crossed_transmission,asymmetry_score\n";
  for (const auto& r : rows)
    out << format_double(r.length_m) << ',' << format_double(r.visibility) << ','
        << format_double(r.crossed_transmission) << ','
        << format_double(r.asymmetry_score) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// commands (shared by the CLI): each writes a manifest first and returns the
// list of artifacts it produced
// ---------------------------------------------------------------------------

namespace detail {

// Transmission reshaping plus arm phases of the transfer stage; identity for
// a device without one.
inline BiphotonSpectrum couple_state(const ResolvedDevice& rd,
                                     const BiphotonSpectrum& src) {
  if (!rd.model.has_coupler) return src;
  BiphotonSpectrum st = apply_transmission(src, *rd.t_te, *rd.t_tm);
  const PhaseFunction th_te = tabulated_arm_phase(rd.model.taper, Polarization::te, st);
  const PhaseFunction th_tm = tabulated_arm_phase(rd.model.taper, Polarization::tm, st);
  const bool signal_te = rd.model.pols.signal == Polarization::te;
  return apply_coupler_phase(st, signal_te ? th_te : th_tm, signal_te ? th_tm : th_te);
}

struct CommandWriter {
  std::vector<std::string> written;
  std::string dir;

  explicit CommandWriter(std::string out_dir) : dir(std::move(out_dir)) {}

  std::string path(const std::string& name) const { return join_path(dir, name); }

  void write(const std::string& name, const std::string& content) {
    const std::string p = path(name);
    write_file_atomic(p, content);
    written.push_back(p);
  }

  void manifest(const std::string& command, const DeviceConfig& cfg,
                const std::map<std::string, std::string>& hashes,
                const std::vector<std::string>& planned_names) {
    RunManifest m;
    m.command = command;
    m.config = config_to_json(cfg);
    m.input_hashes = hashes;
    m.outputs.push_back(path("manifest.json"));
    for (const auto& n : planned_names) m.outputs.push_back(path(n));
    write("manifest.json", manifest_to_json(m).dump(2) + "\n");
  }
};

template <typename Fn>
std::vector<std::string> guarded_command(CommandWriter& cw, Fn&& fn) {
  try {
    fn();
  } catch (...) {
    remove_outputs(cw.written);
    throw;
  }
  return cw.written;
}

}  // namespace detail

// Sweep of sampled counting statistics versus pump power (defaults: nine
// log-spaced powers over 0.5..10 mW).  The global seed drives the per-point
// sub-seeds.
inline std::vector<std::string> cmd_counts_sweep(const DeviceConfig& cfg,
                                                 const std::string& out_dir,
                                                 double lo_mw = 0.5, double hi_mw = 10.0,
                                                 std::size_t n_points = 9,
                                                 const std::string& stem = "counts_sweep") {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    CountsScenario sc = cfg.counts;
    sc.rng_seed = cfg.seed;
    cw.manifest("counts-sweep", cfg, {}, {stem + ".csv", stem + "_scenario.json"});
    const std::vector<SweepRow> rows =
        power_sweep(sc, log_spaced_powers(lo_mw, hi_mw, n_points), cfg.seed);
    cw.write(stem + ".csv", sweep_to_csv(rows));
    cw.write(stem + "_scenario.json", scenario_to_json(sc).dump(2) + "\n");
  });
}

namespace detail {

// V,ratio table for one device: targets above the device's full-contrast
// visibility are unreachable and silently dropped.
inline std::string scaling_csv(const DeviceConfig& cfg, const ResolvedDevice& rd,
                               std::vector<double> targets) {
  if (targets.empty())
    for (int i = 0; i < 10; ++i) targets.push_back(0.50 + 0.05 * i);
  const BiphotonSpectrum st = couple_state(
      rd, presets::source_state(rd.model, cfg.grid_points,
                                grid_half_span_omega(cfg, rd.model)));
  const std::vector<double> delays = default_delay_grid();
  const double v_full = visibility(coincidence_curve(st, delays)).visibility;
  std::vector<double> reachable;
  for (double t : targets)
    if (t <= v_full) reachable.push_back(t);
  const std::vector<ScalingRow> rows = visibility_scaling(st, delays, reachable);
  std::ostringstream csv;
  csv << "V,ratio\n";
  for (const auto& r : rows)
    csv << format_double(r.visibility) << ',' << format_double(r.fi_ratio) << '\n';
  return csv.str();
}

}  // namespace detail

// Fisher-information scaling versus target visibility for the configured
// preset (full device chain, no filter).
inline std::vector<std::string> cmd_scaling(const DeviceConfig& cfg,
                                            const std::string& out_dir,
                                            std::vector<double> targets = {},
                                            const std::string& stem = "scaling") {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    DeviceConfig c = cfg;
    c.filter = FilterConfig{};
    const ResolvedDevice rd = resolve_device(c);
    cw.manifest("scaling", c, rd.input_hashes, {stem + ".csv"});
    cw.write(stem + ".csv", detail::scaling_csv(c, rd, std::move(targets)));
  });
}

inline std::vector<std::string> cmd_sweep_taper(const DeviceConfig& cfg,
                                                const std::string& out_dir,
                                                const std::vector<double>& lengths,
                                                const std::string& stem = "taper_sweep") {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    cw.manifest("sweep-taper", cfg, resolve_device(cfg, false).input_hashes,
                {stem + ".csv"});
    cw.write(stem + ".csv", taper_sweep_csv(sweep_taper_length(cfg, lengths)));
  });
}

// ---------------------------------------------------------------------------
// figure-reproduction commands
// ---------------------------------------------------------------------------

namespace detail {

// Unit-magnitude template on the configured grid: applying arm phases to it
// exposes the exchanged phase of the transfer stage alone.
inline BiphotonSpectrum flat_template(const DeviceConfig& cfg,
                                      const presets::DeviceModel& model) {
  BiphotonSpectrum st(model.pump_frequency, grid_half_span_omega(cfg, model),
                      cfg.grid_points);
  st.pols = model.pols;
  for (auto& a : st.amplitude()) a = {1.0, 0.0};
  st.normalize();
  return st;
}

inline BiphotonSpectrum stage_phase_template(const DeviceConfig& cfg,
                                             const presets::DeviceModel& model,
                                             const TaperProfile& taper) {
  const BiphotonSpectrum tmpl = flat_template(cfg, model);
  const PhaseFunction th_te = tabulated_arm_phase(taper, Polarization::te, tmpl);
  const PhaseFunction th_tm = tabulated_arm_phase(taper, Polarization::tm, tmpl);
  const bool signal_te = model.pols.signal == Polarization::te;
  return apply_coupler_phase(tmpl, signal_te ? th_te : th_tm,
                             signal_te ? th_tm : th_te);
}

inline DeviceConfig with_preset(DeviceConfig cfg, const std::string& preset) {
  cfg.preset = preset;
  return cfg;
}

}  // namespace detail

// Sampled counting statistics versus pump power (counts module defaults).
inline std::vector<std::string> fig1c(const DeviceConfig& cfg, const std::string& out_dir) {
  return cmd_counts_sweep(cfg, out_dir, 0.5, 10.0, 9, "fig1c_counts");
}

// Exchanged phase of the transfer stage for the three presets and for the
// uncoupled (single-material) taper, on a unit-magnitude template.
inline std::vector<std::string> fig3(const DeviceConfig& cfg, const std::string& out_dir) {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    cw.manifest("fig3", cfg, {}, {"fig3_delta_theta.csv"});
    const presets::DeviceModel ref = presets::device("taper1", cfg.taper_length_m);
    std::vector<std::vector<double>> cols;
    const std::vector<std::string> names = {"taper1", "taper2", "taper3"};
    for (const auto& name : names) {
      const presets::DeviceModel dev = presets::device(name, cfg.taper_length_m);
      cols.push_back(
          delta_theta(detail::stage_phase_template(cfg, dev, dev.taper)).value);
    }
    presets::TaperDesign d;
    if (cfg.taper_length_m > 0.0) d.length = cfg.taper_length_m;
    cols.push_back(
        delta_theta(detail::stage_phase_template(cfg, ref, presets::uncoupled_taper(d)))
            .value);
    const BiphotonSpectrum grid = detail::flat_template(cfg, ref);
    std::ostringstream csv;
    csv << "omega_s_rad_per_s,dtheta_taper1,dtheta_taper2,dtheta_taper3,"
           "dtheta_uncoupled\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      csv << format_double(grid.omega(i));
      for (const auto& c : cols) csv << ',' << format_double(c[i]);
      csv << '\n';
    }
    cw.write("fig3_delta_theta.csv", csv.str());
  });
}

// Model transmission of the transfer stage for all three presets and both
// polarizations on a shared frequency grid.
inline std::vector<std::string> fig4a(const DeviceConfig& cfg, const std::string& out_dir) {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    cw.manifest("fig4a", cfg, {}, {"fig4a_transmission.csv"});
    std::vector<std::vector<double>> cols;
    std::vector<double> grid;
    for (const auto& name : {"taper1", "taper2", "taper3"}) {
      const presets::DeviceModel dev = presets::device(name, cfg.taper_length_m);
      for (Polarization pol : {Polarization::te, Polarization::tm}) {
        const TransmissionSpectrum t = presets::model_transmission(dev, pol);
        if (grid.empty()) grid = t.omega;
        cols.push_back(t.value);
      }
    }
    std::ostringstream csv;
    csv << "omega_rad_per_s,taper1_te,taper1_tm,taper2_te,taper2_tm,taper3_te,"
           "taper3_tm\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      csv << format_double(grid[i]);
      for (const auto& c : cols) csv << ',' << format_double(c[i]);
      csv << '\n';
    }
    cw.write("fig4a_transmission.csv", csv.str());
  });
}

// Asymmetry score and dip shift of the taper-1 device versus the width of a
// degeneracy-centred rectangular filter.
inline std::vector<std::string> fig4c(const DeviceConfig& cfg, const std::string& out_dir,
                                      std::vector<double> widths_nm = {}) {
  if (widths_nm.empty()) widths_nm = {5, 10, 15, 20, 25, 30, 35, 40};
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    DeviceConfig c1 = detail::with_preset(cfg, "taper1");
    c1.filter = FilterConfig{};
    const ResolvedDevice rd = resolve_device(c1);
    cw.manifest("fig4c", c1, rd.input_hashes, {"fig4c_filter_sweep.csv"});
    const BiphotonSpectrum src = presets::source_state(
        rd.model, c1.grid_points, grid_half_span_omega(c1, rd.model));
    const BiphotonSpectrum st = detail::couple_state(rd, src);
    const std::vector<double> delays = default_delay_grid();
    const HomCurve ref = coincidence_curve(src, delays);
    const double lambda_d = degeneracy_wavelength(rd.model);
    std::ostringstream csv;
    csv << "filter_width_nm,asymmetry_score,dip_shift_s\n";
    for (double wnm : widths_nm) {
      SpectralFilter f;
      f.center = 0.5 * rd.model.pump_frequency;
      f.full_width = bandwidth_to_omega(wnm * 1e-9, lambda_d);
      const HomCurve curve = coincidence_curve(apply_bandpass(st, f), delays);
      csv << format_double(wnm) << ',' << format_double(asymmetry_score(curve).score)
          << ',' << format_double(dip_shift(curve, ref)) << '\n';
    }
    cw.write("fig4c_filter_sweep.csv", csv.str());
  });
}

// Visibility, crossed transmission and asymmetry score of the taper-2 device
// versus taper length (transmission held fixed at the reference device's).
inline std::vector<std::string> fig4d(const DeviceConfig& cfg, const std::string& out_dir,
                                      std::vector<double> lengths = {}) {
  if (lengths.empty())
    lengths = {300e-6, 400e-6, 500e-6, 600e-6, 800e-6, 1000e-6, 1200e-6, 1600e-6};
  return cmd_sweep_taper(detail::with_preset(cfg, "taper2"), out_dir, lengths,
                         "fig4d_length_sweep");
}

// Taper-2 interferogram next to the fractional exchange-phase reference of
// order alpha = 1/2, with both asymmetry scores.
inline std::vector<std::string> fig4e(const DeviceConfig& cfg, const std::string& out_dir) {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    DeviceConfig c2 = detail::with_preset(cfg, "taper2");
    c2.filter = FilterConfig{};
    const ResolvedDevice rd = resolve_device(c2);
    cw.manifest("fig4e", c2, rd.input_hashes,
                {"fig4e_interferogram.csv", "fig4e_synthetic.csv", "fig4e_report.json"});
    const BiphotonSpectrum st = detail::couple_state(
        rd, presets::source_state(rd.model, c2.grid_points,
                                  grid_half_span_omega(c2, rd.model)));
    const std::vector<double> delays = default_delay_grid();
    const HomCurve curve = coincidence_curve(st, delays);
    const HomCurve synth =
        coincidence_curve(synthetic_exchange_state(st, 0.5), delays);
    nlohmann::json rep;
    rep["asymmetry_score"] = asymmetry_score(curve).score;
    rep["visibility"] = visibility(curve).visibility;
    rep["synthetic_comparison"] = {{"alpha", 0.5},
                                   {"asymmetry_score", asymmetry_score(synth).score}};
    cw.write("fig4e_interferogram.csv", hom_curve_to_csv(curve));
    cw.write("fig4e_synthetic.csv", hom_curve_to_csv(synth));
    cw.write("fig4e_report.json", rep.dump(2) + "\n");
  });
}

// Fisher-information ratio versus visibility for every preset.
inline std::vector<std::string> fig4f(const DeviceConfig& cfg, const std::string& out_dir) {
  detail::CommandWriter cw(out_dir);
  return detail::guarded_command(cw, [&] {
    DeviceConfig base = cfg;
    base.filter = FilterConfig{};
    std::vector<std::string> planned;
    for (const auto& name : presets::preset_names())
      planned.push_back("fig4f_" + name + ".csv");
    cw.manifest("fig4f", base, {}, planned);
    for (const auto& name : presets::preset_names()) {
      const DeviceConfig c = detail::with_preset(base, name);
      cw.write("fig4f_" + name + ".csv",
               detail::scaling_csv(c, resolve_device(c), {}));
    }
  });
}

inline std::vector<std::string> run_figure(const DeviceConfig& cfg, const std::string& id,
                                           const std::string& out_dir) {
  if (id == "1c") return fig1c(cfg, out_dir);
  if (id == "3") return fig3(cfg, out_dir);
  if (id == "4a") return fig4a(cfg, out_dir);
  if (id == "4c") return fig4c(cfg, out_dir);
  if (id == "4d") return fig4d(cfg, out_dir);
  if (id == "4e") return fig4e(cfg, out_dir);
  if (id == "4f") return fig4f(cfg, out_dir);
  throw ConfigError("unknown figure id \"" + id +
                    "\" (expected 1c, 3, 4a, 4c, 4d, 4e or 4f)");
}

}  // namespace workbench
}  // namespace biphoton

#endif  // BIPHOTON_WORKBENCH_HPP
