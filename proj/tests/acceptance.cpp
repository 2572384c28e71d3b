// Acceptance gate: runs every headline requirement end to end and prints one
// PASS/FAIL line per criterion.  Exit status 0 only when all criteria pass.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <biphoton/workbench.hpp>

using namespace biphoton;
using workbench::DeviceConfig;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

// Symmetric Gaussian template with zero phase (unit visibility); sigma is the
// standard deviation of the marginal intensity |phi|^2.
BiphotonSpectrum gaussian_template(std::size_t n, double sigma_scale = 1.0 / 6.0) {
  const double wp = wavelength_to_omega(780e-9);
  const double half =
      bandwidth_to_omega(40e-9, omega_to_wavelength(0.5 * wp));
  BiphotonSpectrum st(wp, half, n);
  const double sigma = sigma_scale * half;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = st.offset(i) / sigma;
    st.amplitude()[i] = std::exp(-0.25 * x * x);
  }
  st.normalize();
  return st;
}

BiphotonSpectrum uniform_template(std::size_t n) {
  const double wp = wavelength_to_omega(780e-9);
  const double half =
      bandwidth_to_omega(40e-9, omega_to_wavelength(0.5 * wp));
  BiphotonSpectrum st(wp, half, n);
  for (auto& a : st.amplitude()) a = 1.0;
  st.normalize();
  return st;
}

struct Gate {
  int passed = 0;
  int failed = 0;

  void run(int id, const std::string& what,
           const std::function<std::pair<bool, std::string>()>& body) {
    bool ok = false;
    std::string detail;
    try {
      std::tie(ok, detail) = body();
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  criterion %2d: %s — %s\n", ok ? "PASS" : "FAIL", id,
                what.c_str(), detail.c_str());
    std::fflush(stdout);
    (ok ? passed : failed) += 1;
  }
};

// Pipelines shared between criteria; each is run at most once.
struct Shared {
  std::filesystem::path scratch;
  std::optional<workbench::PipelineResult> taper1, taper2;
  double taper1_seconds = -1.0;

  const workbench::PipelineResult& t1() {
    if (!taper1) {
      DeviceConfig cfg;
      cfg.preset = "taper1";
      const auto start = std::chrono::steady_clock::now();
      taper1 = workbench::run_pipeline(cfg, {}, (scratch / "taper1").string());
      taper1_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
    }
    return *taper1;
  }

  const workbench::PipelineResult& t2() {
    if (!taper2) {
      DeviceConfig cfg;
      cfg.preset = "taper2";
      taper2 = workbench::run_pipeline(cfg, {}, (scratch / "taper2").string());
    }
    return *taper2;
  }
};

}  // namespace

int main() {
  Gate gate;
  Shared sh;
  sh.scratch = std::filesystem::current_path() / "acceptance_scratch";
  std::filesystem::remove_all(sh.scratch);
  std::filesystem::create_directories(sh.scratch);

  const std::vector<double> delays_full = default_delay_grid();
  const std::vector<double> delays_1025 = linspace(-4e-12, 4e-12, 1025);
  const std::vector<double> delays_257 = linspace(-4e-12, 4e-12, 257);

  gate.run(1, "taper-1 dip shift vs straight source is 0.52 ps +/- 0.02 ps in < 30 s",
           [&]() -> std::pair<bool, std::string> {
             const auto& r = sh.t1();
             const double shift_ps =
                 r.hom_report.at("dip_shift_s").get<double>() * 1e12;
             const bool ok = std::abs(std::abs(shift_ps) - 0.52) <= 0.02 &&
                             sh.taper1_seconds < 30.0;
             return {ok, fmt("dip shift = %+.4f ps, pipeline runtime = %.1f s",
                             shift_ps, sh.taper1_seconds)};
           });

  gate.run(2, "half-step exchange state scores 1.00 +/- 1e-3; taper-2 scores in [0.75, 0.87]",
           [&]() -> std::pair<bool, std::string> {
             const BiphotonSpectrum tmpl = gaussian_template(2048);
             const BiphotonSpectrum synth = synthetic_exchange_state(tmpl, 0.5);
             const double s_half =
                 asymmetry_score(coincidence_curve(synth, delays_full)).score;
             const double s_dev =
                 sh.t2().hom_report.at("asymmetry_score").get<double>();
             const bool ok = std::abs(s_half - 1.0) <= 1e-3 && s_dev >= 0.75 &&
                             s_dev <= 0.87;
             return {ok, fmt("S(alpha=1/2) = %.6f, S(taper2) = %.4f", s_half, s_dev)};
           });

  gate.run(3, "30 nm filter on taper-1 removes the asymmetry but not the dip shift",
           [&]() -> std::pair<bool, std::string> {
             const double shift_unf = sh.t1().hom_report.at("dip_shift_s").get<double>();
             DeviceConfig cfg;
             cfg.preset = "taper1";
             cfg.filter.enabled = true;
             cfg.filter.width_nm = 30.0;
             const workbench::PipelineResult rf = workbench::run_pipeline(
                 cfg, {}, (sh.scratch / "taper1_filtered").string());
             const double s_f = rf.hom_report.at("asymmetry_score").get<double>();
             const double shift_f = rf.hom_report.at("dip_shift_s").get<double>();
             const double dshift_ps = (shift_f - shift_unf) * 1e12;
             const bool ok = s_f < 0.05 && std::abs(dshift_ps) < 0.02;
             return {ok, fmt("filtered S = %.4f, dip-shift change = %+.4f ps", s_f,
                             dshift_ps)};
           });

  gate.run(4, "even spectral phase (orders 2 and 4) leaves every coincidence sample unchanged",
           [&]() -> std::pair<bool, std::string> {
             const BiphotonSpectrum& st = sh.t1().state;
             const double wp = st.pump_frequency();
             const double half = std::abs(st.offset(0));
             const HomCurve base = coincidence_curve(st, delays_257);
             std::mt19937 gen(2024);
             std::uniform_real_distribution<double> u(-1.0, 1.0);
             double worst = 0.0;
             for (int trial = 0; trial < 100; ++trial) {
               const double c2 = u(gen) * 2.0 / (half * half);
               const double c4 = u(gen) * 4.0 / (half * half * half * half);
               const PhaseFunction even = [=](double omega) {
                 const double x = omega - 0.5 * wp;
                 return c2 * x * x + c4 * x * x * x * x;
               };
               const HomCurve cur =
                   coincidence_curve(apply_coupler_phase(st, even, {}), delays_257);
               for (std::size_t i = 0; i < cur.p_c.size(); ++i)
                 worst = std::max(worst, std::abs(cur.p_c[i] - base.p_c[i]));
             }
             return {worst <= 1e-9,
                     fmt("largest |delta P_c| over 100 trials = %.3g", worst)};
           });

  gate.run(5, "linear spectral phase beta1 translates the dip by exactly -beta1",
           [&]() -> std::pair<bool, std::string> {
             const BiphotonSpectrum tmpl = gaussian_template(2048);
             const HomCurve ref = coincidence_curve(tmpl, delays_full);
             std::mt19937 gen(7);
             std::uniform_real_distribution<double> u(-2e-12, 2e-12);
             double worst = 0.0;
             for (int trial = 0; trial < 20; ++trial) {
               const double beta1 = u(gen);
               const double wp = tmpl.pump_frequency();
               const PhaseFunction lin = [=](double omega) {
                 return beta1 * (0.5 * wp - omega);
               };
               const HomCurve cur =
                   coincidence_curve(apply_coupler_phase(tmpl, lin, {}), delays_full);
               worst = std::max(worst, std::abs(dip_shift(cur, ref) + beta1));
             }
             const double step = ref.delay_step();
             return {worst <= step, fmt("largest |shift + beta1| = %.3g s (grid step "
                                        "%.3g s)",
                                        worst, step)};
           });

  gate.run(6, "Fisher information stays below the quantum bound and the V^2 scaling law",
           [&]() -> std::pair<bool, std::string> {
             struct Entry {
               std::string name;
               BiphotonSpectrum state;
               HomCurve curve;
             };
             std::vector<Entry> entries;
             entries.push_back({"taper1", sh.t1().state, *sh.t1().curve});
             entries.push_back({"taper2", sh.t2().state, *sh.t2().curve});
             for (const char* name : {"straight", "taper3"}) {
               DeviceConfig cfg;
               cfg.preset = name;
               const workbench::PipelineResult r = workbench::run_pipeline(
                   cfg, {"source", "couple"}, (sh.scratch / name).string());
               entries.push_back(
                   {name, r.state, coincidence_curve(r.state, delays_full)});
             }
             bool ok = true;
             std::string note;
             double worst_margin = 1e9;
             for (const Entry& e : entries) {
               const double qfi = quantum_fisher_information(e.state);
               for (double gamma : {0.2, 0.4, 0.6, 0.8, 1.0}) {
                 const double fmax =
                     max_fisher(fisher_curve(e.state, delays_1025, gamma));
                 const double v =
                     visibility(degrade_contrast(e.curve, gamma)).visibility;
                 const double ratio = fmax / qfi;
                 worst_margin = std::min(worst_margin, v * v + 1e-3 - ratio);
                 if (!(fmax <= qfi * (1.0 + 1e-6)) || !(ratio <= v * v + 1e-3)) {
                   ok = false;
                   note = fmt("%s at gamma %.1f: ratio %.4f vs V^2 %.4f",
                              e.name.c_str(), gamma, ratio, v * v);
                 }
               }
             }
             const BiphotonSpectrum flat = gaussian_template(4096);
             const double flat_ratio =
                 max_fisher(fisher_curve(flat, delays_full, 1.0)) /
                 quantum_fisher_information(flat);
             if (!(flat_ratio >= 0.95)) {
               ok = false;
               note = fmt("flat-phase ratio %.4f < 0.95", flat_ratio);
             }
             if (note.empty())
               note = fmt("tightest V^2 margin %.2e, flat-phase ratio = %.4f",
                          worst_margin, flat_ratio);
             return {ok, note};
           });

  gate.run(7, "quantum Fisher information: W^2/3 uniform, 4 sigma^2 Gaussian, phase invariant",
           [&]() -> std::pair<bool, std::string> {
             const BiphotonSpectrum uni = uniform_template(4096);
             const double half = std::abs(uni.offset(0));
             const double q_uni = quantum_fisher_information(uni);
             const double rel_uni =
                 std::abs(q_uni - 4.0 * half * half / 3.0) / (4.0 * half * half / 3.0);

             const BiphotonSpectrum gau = gaussian_template(4096);
             const double sigma = half / 6.0;
             const double q_gau = quantum_fisher_information(gau);
             const double rel_gau =
                 std::abs(q_gau - 4.0 * sigma * sigma) / (4.0 * sigma * sigma);

             std::mt19937 gen(5);
             std::uniform_real_distribution<double> u(-1.0, 1.0);
             const double c1 = u(gen) * 2.0 / half;
             const double c2 = u(gen) * 2.0 / (half * half);
             const double c3 = u(gen) * 2.0 / (half * half * half);
             const double wp = gau.pump_frequency();
             const PhaseFunction poly = [=](double omega) {
               const double x = omega - 0.5 * wp;
               return c1 * x + c2 * x * x + c3 * x * x * x;
             };
             const double q_phase =
                 quantum_fisher_information(apply_coupler_phase(gau, poly, {}));
             const double rel_inv = std::abs(q_phase - q_gau) / q_gau;

             const bool ok = rel_uni <= 1e-6 && rel_gau <= 1e-4 && rel_inv <= 1e-10;
             return {ok, fmt("uniform rel %.2e, Gaussian rel %.2e, invariance rel %.2e",
                             rel_uni, rel_gau, rel_inv)};
           });

  gate.run(8, "counting model: PGR >= 1e6 /s/mW, CAR >= 500 and falling, darks-off identity",
           [&]() -> std::pair<bool, std::string> {
             CountsScenario sc;
             const std::vector<SweepRow> rows =
                 power_sweep(sc, log_spaced_powers(0.5, 10.0, 9), sc.rng_seed);
             bool ok = true;
             double min_pgr = 1e300;
             for (const SweepRow& r : rows) {
               const double pgr_per_mw = r.sampled.estimated_pgr / r.power_mw;
               min_pgr = std::min(min_pgr, pgr_per_mw);
               if (!(pgr_per_mw >= 1e6)) ok = false;
             }
             const double car0 = rows.front().sampled.car;
             if (!(car0 >= 500.0)) ok = false;
             for (std::size_t i = 1; i < rows.size(); ++i)
               if (!(rows[i].sampled.car < rows[i - 1].sampled.car)) ok = false;
             double worst_identity = 0.0;
             for (double p : {0.5, 1.0, 4.0}) {
               CountsScenario dark_free = sc;
               dark_free.dark_rate_s = 0.0;
               dark_free.dark_rate_i = 0.0;
               dark_free.pump_power = p;
               const CountsResult r = expected_rates(dark_free);
               worst_identity = std::max(
                   worst_identity,
                   std::abs((r.car - 1.0) * r.estimated_pgr *
                                dark_free.coincidence_window -
                            1.0));
             }
             if (!(worst_identity <= 1e-12)) ok = false;
             return {ok, fmt("min PGR %.3g /s/mW, CAR(0.5 mW) = %.0f, identity "
                             "residual %.1e",
                             min_pgr, car0, worst_identity)};
           });

  gate.run(9, "transfer stage: unitary, sin^2(kappa l) law, > 40 nm pass band, phase model agreement",
           [&]() -> std::pair<bool, std::string> {
             bool ok = true;
             std::string note;
             const presets::DeviceModel dev = presets::device("taper1");
             const double wd = 0.5 * dev.pump_frequency;

             double worst_cons = 0.0;
             for (Polarization pol : {Polarization::te, Polarization::tm})
               for (double omega : {wd - 2.5e13, wd, wd + 2.5e13}) {
                 const CmtResult r = cmt_transfer(dev.taper, pol, omega);
                 worst_cons = std::max(
                     worst_cons,
                     std::abs(std::norm(r.a_out) + std::norm(r.b_out) - 1.0));
               }
             if (!(worst_cons <= 1e-8)) {
               ok = false;
               note = fmt("power conservation residual %.2e", worst_cons);
             }

             const double kap = 2000.0;
             const CouplerModeData sync = CouplerModeData(
                 {1.0e-6, 2.0e-6}, {2.0e15, 2.8e15}, {{3.0, 3.0}, {3.0, 3.0}},
                 {3.0, 3.0}, {kap, kap});
             double worst_sync = 0.0;
             for (double length : {200e-6, 500e-6, 1200e-6}) {
               const std::vector<double> z = {0.0, 0.5 * length, length};
               const std::vector<double> w = {1.5e-6, 1.5e-6, 1.5e-6};
               const TaperProfile p = make_taper_profile(z, w, sync, sync);
               const CmtResult r = cmt_transfer(p, Polarization::te, 2.4e15);
               const double expect = std::sin(kap * length) * std::sin(kap * length);
               worst_sync = std::max(worst_sync, std::abs(std::norm(r.b_out) - expect));
             }
             if (!(worst_sync <= 1e-8)) {
               ok = false;
               note = fmt("sin^2(kappa l) residual %.2e", worst_sync);
             }

             double band_nm = 1e9;
             for (Polarization pol : {Polarization::te, Polarization::tm}) {
               const TransmissionSpectrum t = presets::model_transmission(dev, pol);
               const double w1560 = wavelength_to_omega(1560e-9);
               std::size_t at = 0;
               while (at + 1 < t.omega.size() && t.omega[at] < w1560) ++at;
               if (!(t.value[at] > 0.5)) {
                 ok = false;
                 note = "transmission at 1560 nm not above 0.5";
                 band_nm = 0.0;
                 break;
               }
               std::size_t lo = at, hi = at;
               while (lo > 0 && t.value[lo - 1] > 0.5) --lo;
               while (hi + 1 < t.value.size() && t.value[hi + 1] > 0.5) ++hi;
               const double width_nm = (omega_to_wavelength(t.omega[lo]) -
                                        omega_to_wavelength(t.omega[hi])) *
                                       1e9;
               band_nm = std::min(band_nm, width_nm);
             }
             if (!(band_nm >= 40.0)) ok = false;

             const TaperProfile slow = dev.taper.rescaled(1600e-6);
             const double score = adiabaticity_score(slow, Polarization::te, wd);
             const CmtResult r16 = cmt_transfer(slow, Polarization::te, wd);
             const double dphi = std::abs(wrap_angle(
                 std::arg(r16.b_out) - taper_phase(slow, Polarization::te, wd)));
             if (!(score < 0.05 && dphi <= 0.05)) {
               ok = false;
               note = fmt("1600 um: score %.3f, phase gap %.3f rad", score, dphi);
             }
             if (note.empty())
               note = fmt("conservation %.1e, sin^2 law %.1e, pass band %.0f nm, "
                          "phase gap %.3f rad at score %.3f",
                          worst_cons, worst_sync, band_nm, dphi, score);
             return {ok, note};
           });

  gate.run(10, "shorter taper-2: higher visibility but lower crossed transmission",
           [&]() -> std::pair<bool, std::string> {
             DeviceConfig cfg;
             cfg.preset = "taper2";
             const std::vector<workbench::TaperLengthRow> rows =
                 workbench::sweep_taper_length(cfg, {400e-6, 800e-6});
             const bool ok = rows[0].visibility > rows[1].visibility &&
                             rows[1].crossed_transmission > rows[0].crossed_transmission;
             return {ok, fmt("V(400 um) = %.4f vs V(800 um) = %.4f; T_x(800 um) = "
                             "%.4f vs T_x(400 um) = %.4f",
                             rows[0].visibility, rows[1].visibility,
                             rows[1].crossed_transmission,
                             rows[0].crossed_transmission)};
           });

  std::printf("%d of %d criteria passed\n", gate.passed, gate.passed + gate.failed);
  return gate.failed == 0 ? 0 : 1;
}
