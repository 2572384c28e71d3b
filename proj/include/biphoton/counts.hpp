#ifndef BIPHOTON_COUNTS_HPP
#define BIPHOTON_COUNTS_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"

namespace biphoton {

// Detection chain for coincidence counting: pairs generated at
// internal_pgr_per_mw per milliwatt of pump, heralded through per-arm
// efficiencies, with uncorrelated dark counts and a fixed coincidence window.
struct CountsScenario {
  double internal_pgr_per_mw = 1.2e6;  // generated pairs per second per mW
  double pump_power = 1.0;             // [mW]
  double arm_efficiency_s = 0.10;
  double arm_efficiency_i = 0.10;
  double dark_rate_s = 100.0;          // [1/s]
  double dark_rate_i = 100.0;          // [1/s]
  double coincidence_window = 2.8e-9;  // [s]
  double integration_time = 60.0;      // [s]
  std::uint64_t rng_seed = 42;

  void validate() const {
    if (internal_pgr_per_mw < 0.0)
      throw ConfigError("internal pair-generation rate must be non-negative");
    if (pump_power < 0.0) throw ConfigError("pump power must be non-negative");
    if (!(arm_efficiency_s > 0.0) || arm_efficiency_s > 1.0 ||
        !(arm_efficiency_i > 0.0) || arm_efficiency_i > 1.0)
      throw ConfigError("arm efficiencies must lie in (0, 1]");
    if (dark_rate_s < 0.0 || dark_rate_i < 0.0)
      throw ConfigError("dark-count rates must be non-negative");
    if (!(coincidence_window > 0.0))
      throw ConfigError("coincidence window must be positive");
    if (!(integration_time > 0.0))
      throw ConfigError("integration time must be positive");
  }
};

inline nlohmann::json scenario_to_json(const CountsScenario& sc) {
  nlohmann::json j;
  j["internal_pgr_per_mw"] = sc.internal_pgr_per_mw;
  j["pump_power"] = sc.pump_power;
  j["arm_efficiency_s"] = sc.arm_efficiency_s;
  j["arm_efficiency_i"] = sc.arm_efficiency_i;
  j["dark_rate_s"] = sc.dark_rate_s;
  j["dark_rate_i"] = sc.dark_rate_i;
  j["coincidence_window"] = sc.coincidence_window;
  j["integration_time"] = sc.integration_time;
  j["rng_seed"] = sc.rng_seed;
  return j;
}

// Missing keys keep their defaults; unknown keys are rejected so typos do not
// silently fall back.
inline CountsScenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("counts scenario must be a JSON object");
  CountsScenario sc;
  static const char* known[] = {"internal_pgr_per_mw", "pump_power",
                                "arm_efficiency_s",    "arm_efficiency_i",
                                "dark_rate_s",         "dark_rate_i",
                                "coincidence_window",  "integration_time",
                                "rng_seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("counts scenario: unknown key \"" + it.key() + "\"");
  }
  try {
    if (j.contains("internal_pgr_per_mw"))
      sc.internal_pgr_per_mw = j.at("internal_pgr_per_mw").get<double>();
    if (j.contains("pump_power")) sc.pump_power = j.at("pump_power").get<double>();
    if (j.contains("arm_efficiency_s"))
      sc.arm_efficiency_s = j.at("arm_efficiency_s").get<double>();
    if (j.contains("arm_efficiency_i"))
      sc.arm_efficiency_i = j.at("arm_efficiency_i").get<double>();
    if (j.contains("dark_rate_s")) sc.dark_rate_s = j.at("dark_rate_s").get<double>();
    if (j.contains("dark_rate_i")) sc.dark_rate_i = j.at("dark_rate_i").get<double>();
    if (j.contains("coincidence_window"))
      sc.coincidence_window = j.at("coincidence_window").get<double>();
    if (j.contains("integration_time"))
      sc.integration_time = j.at("integration_time").get<double>();
    if (j.contains("rng_seed")) sc.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("counts scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

// Rates per second, used both for analytic expectations and for sampled
// acquisitions (sampled counts divided by the integration time):
//   pair rate    R   = internal_pgr_per_mw * pump_power
//   singles      S_x = R eta_x + dark_x
//   true coinc.  C_t = R eta_s eta_i
//   accidentals  C_a = S_s S_i * window
//   CAR          (C_t + C_a) / C_a
//   estimated_pgr = C_t / (eta_s eta_i)
// With darks off, (CAR - 1) * R * window == 1 identically.
struct CountsResult {
  double singles_s = 0.0;          // [1/s]
  double singles_i = 0.0;          // [1/s]
  double true_coincidences = 0.0;  // [1/s]
  double accidentals = 0.0;        // [1/s]
  double car = 0.0;
  double car_sigma = 0.0;
  double estimated_pgr = 0.0;      // [1/s]
};

inline CountsResult expected_rates(const CountsScenario& sc) {
  sc.validate();
  CountsResult r;
  const double pair_rate = sc.internal_pgr_per_mw * sc.pump_power;
  r.singles_s = pair_rate * sc.arm_efficiency_s + sc.dark_rate_s;
  r.singles_i = pair_rate * sc.arm_efficiency_i + sc.dark_rate_i;
  r.true_coincidences = pair_rate * sc.arm_efficiency_s * sc.arm_efficiency_i;
  r.accidentals = r.singles_s * r.singles_i * sc.coincidence_window;
  if (!(r.accidentals > 0.0))
    throw NumericError("CAR undefined: expected accidental rate is zero");
  r.car = (r.true_coincidences + r.accidentals) / r.accidentals;
  const double nc = (r.true_coincidences + r.accidentals) * sc.integration_time;
  const double na = r.accidentals * sc.integration_time;
  r.car_sigma = r.car * std::sqrt(1.0 / nc + 1.0 / na);
  r.estimated_pgr = r.true_coincidences / (sc.arm_efficiency_s * sc.arm_efficiency_i);
  return r;
}

// One simulated acquisition over the integration time.  Singles, true
// coincidences and accidentals are independent Poisson draws (in that fixed
// order, from mt19937_64 seeded with rng_seed), then converted back to rates.
// The CAR uncertainty is first-order propagation of the Poisson variances of
// the measured coincidence and accidental counts:
//   sigma_CAR = CAR sqrt(1/N_c + 1/N_a),   N_c = N_true + N_acc.
inline CountsResult sample_counts(const CountsScenario& sc) {
  const CountsResult mean = expected_rates(sc);
  std::mt19937_64 rng(sc.rng_seed);
  const double t = sc.integration_time;
  auto draw = [&rng](double m) {
    std::poisson_distribution<std::int64_t> dist(m);
    return dist(rng);
  };
  const std::int64_t n_ss = draw(mean.singles_s * t);
  const std::int64_t n_si = draw(mean.singles_i * t);
  const std::int64_t n_true = draw(mean.true_coincidences * t);
  const std::int64_t n_acc = draw(mean.accidentals * t);
  if (n_acc <= 0)
    throw NumericError("CAR undefined: sampled accidental count is zero "
                       "(increase the integration time or dark rates)");
  CountsResult r;
  r.singles_s = static_cast<double>(n_ss) / t;
  r.singles_i = static_cast<double>(n_si) / t;
  r.true_coincidences = static_cast<double>(n_true) / t;
  r.accidentals = static_cast<double>(n_acc) / t;
  const double nc = static_cast<double>(n_true + n_acc);
  const double na = static_cast<double>(n_acc);
  r.car = nc / na;
  r.car_sigma = nc > 0.0 ? r.car * std::sqrt(1.0 / nc + 1.0 / na) : 1.0 / na;
  r.estimated_pgr = r.true_coincidences / (sc.arm_efficiency_s * sc.arm_efficiency_i);
  return r;
}

struct SweepRow {
  double power_mw = 0.0;
  CountsResult expected;
  CountsResult sampled;
};

inline std::vector<double> log_spaced_powers(double lo_mw = 0.5, double hi_mw = 10.0,
                                             std::size_t n = 9) {
  if (n < 2 || !(lo_mw > 0.0) || !(hi_mw > lo_mw))
    throw ConfigError("power sweep needs n >= 2 and 0 < lo < hi");
  std::vector<double> p(n);
  const double ratio = std::log(hi_mw / lo_mw) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    p[i] = lo_mw * std::exp(ratio * static_cast<double>(i));
  return p;
}

// Each sweep point uses the sub-seed (base seed XOR point index), so the sweep
// is reproducible as a whole and per point.
inline std::vector<SweepRow> power_sweep(const CountsScenario& base,
                                         const std::vector<double>& powers_mw,
                                         std::uint64_t seed) {
  std::vector<SweepRow> rows;
  rows.reserve(powers_mw.size());
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    CountsScenario sc = base;
    sc.pump_power = powers_mw[i];
    sc.rng_seed = seed ^ static_cast<std::uint64_t>(i);
    SweepRow row;
    row.power_mw = powers_mw[i];
    row.expected = expected_rates(sc);
    row.sampled = sample_counts(sc);
    rows.push_back(row);
  }
  return rows;
}

// Sweep table: sampled pair-generation rate and CAR per pump power.
inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "power_mw,pgr_per_s,car,car_sigma\n";
  for (const auto& r : rows) {
    out << format_double(r.power_mw) << ',' << format_double(r.sampled.estimated_pgr)
        << ',' << format_double(r.sampled.car) << ','
        << format_double(r.sampled.car_sigma) << '\n';
  }
  return out.str();
}

}  // namespace biphoton

#endif  // BIPHOTON_COUNTS_HPP
