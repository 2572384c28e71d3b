#ifndef BIPHOTON_PRESETS_HPP
#define BIPHOTON_PRESETS_HPP

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "biphoton/constants.hpp"
#include "biphoton/coupler.hpp"
#include "biphoton/dispersion.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/jsa.hpp"
#include "biphoton/numerics.hpp"

namespace biphoton {
namespace presets {

// --- fundamental scales --------------------------------------------------

inline double pump_wavelength() { return 780e-9; }
inline double pump_frequency() { return wavelength_to_omega(pump_wavelength()); }
inline double degenerate_frequency() { return 0.5 * pump_frequency(); }
inline double degenerate_wavelength() { return 2.0 * pump_wavelength(); }

inline std::size_t default_grid_points() { return 4096; }
// +-40 nm about degeneracy on the signal axis
inline double default_half_span() {
  return bandwidth_to_omega(40e-9, degenerate_wavelength());
}

// --- generation region ---------------------------------------------------
//
// Effective indices of the source waveguide as cubic expansions about the
// degeneracy point (pump: about the pump frequency).  The constant terms
// satisfy n_p = (n_TE + n_TM)/2, which puts exact phase matching at
// degeneracy; the modal group-index split n_g(TE) - n_g(TM) = 0.015 keeps the
// phase-matched lobe wider than the default grid and gives the bare source
// only a feeble arm delay (tens of fs), so the transfer stage dominates the
// engineered exchanged phase.

inline double source_length() { return 2e-3; }

namespace detail {

inline std::pair<double, double> signal_window() {
  return {wavelength_to_omega(1750e-9), wavelength_to_omega(1400e-9)};
}

inline std::vector<double> te_coeffs() {
  const double wd = degenerate_frequency();
  return {3.2000, 0.400 / wd, -2.50e-31, 1.00e-46};
}

inline std::vector<double> tm_coeffs() {
  const double wd = degenerate_frequency();
  return {3.1960, 0.389 / wd, -2.55e-31, 0.90e-46};
}

}  // namespace detail

inline DispersionModel signal_te_model() {
  const auto [lo, hi] = detail::signal_window();
  return DispersionModel::polynomial(ModeLabel::signal_te, degenerate_frequency(),
                                     detail::te_coeffs(), lo, hi);
}

inline DispersionModel signal_tm_model() {
  const auto [lo, hi] = detail::signal_window();
  return DispersionModel::polynomial(ModeLabel::signal_tm, degenerate_frequency(),
                                     detail::tm_coeffs(), lo, hi);
}

inline DispersionModel idler_te_model() {
  const auto [lo, hi] = detail::signal_window();
  return DispersionModel::polynomial(ModeLabel::idler_te, degenerate_frequency(),
                                     detail::te_coeffs(), lo, hi);
}

inline DispersionModel idler_tm_model() {
  const auto [lo, hi] = detail::signal_window();
  return DispersionModel::polynomial(ModeLabel::idler_tm, degenerate_frequency(),
                                     detail::tm_coeffs(), lo, hi);
}

inline DispersionModel pump_model() {
  const double wp = pump_frequency();
  return DispersionModel::polynomial(
      ModeLabel::pump_te, wp, {3.1980, (3.900 - 3.198) / wp},
      wavelength_to_omega(800e-9), wavelength_to_omega(760e-9));
}

// --- taper-coupler design ------------------------------------------------
//
// One shared geometry: the feeding waveguide narrows from w0 to w1 along
//   w(s) = w0 - (w0 - w1) q(s),   q(s) = 1 - (1-s)^6,
// so the index crossing with the adjacent guide sits mid-device on the steep
// part of the profile (strongly adiabatic there) while the zero-slope far end
// parks the exit just past the crossing.  The crossed power is then set by
// the end-point mixing angle (an interferometric projection), not by diabatic
// leakage, so a sub-0.2 adiabaticity score coexists with a crossed
// transmission near 0.8.
//
// Index model sampled into the tables consumed by the coupler module:
//   n_a(w, omega) = n_src(omega) - q(w) D,     q(w) = (w0 - w)/(w0 - w1)
//   n_b(omega)    = b0 + b1 (omega - omega_d) + b3 (omega - omega_d)^3
//   kappa(omega)  = kappa0 exp(-((omega - omega_d)/kappa_sigma)^2)
// D is frequency-flat, so it sets the end detuning (hence the crossed power)
// without touching group delays; the polarization-split group index of the
// adjacent guide (ngb) carries the arm-delay contrast that shifts the dip,
// and the per-preset cubic b3 on its TM branch sets the odd cubic of the
// exchanged phase.

struct TaperDesign {
  double length = 800e-6;
  double w0 = 4.0e-6;
  double w1 = 1.6e-6;
  std::size_t z_samples = 257;
  std::size_t w_rows = 9;
  std::size_t omega_samples = 181;

  double d_te = 0.8134;  // end-point index depression
  double d_tm = 0.8054;
  double kappa_te = 3.6e4;  // rad/m
  double kappa_tm = 3.4e4;
  double kappa_sigma = 8.0e13;
  double b0_te = 2.4000;  // adjacent guide: index and group index at degeneracy
  double b0_tm = 2.4020;
  double ngb_te = 4.0000;
  double ngb_tm = 3.587232;
  double b3_tm = 0.0;  // s^3 per index unit; preset-specific
};

// Per-preset cubic coefficients (TM adjacent guide).
inline double taper1_b3() { return -1.10e-43; }
inline double taper2_b3() { return -4.36e-43; }
inline double taper3_b3() { return 0.0; }

// Adjacent-guide widths of the three fabricated variants; the width only
// enters the model through the b0/ngb/b3 coefficients above, but is carried
// as metadata so outputs can name the geometry.
inline double silicon_width(const std::string& preset) {
  if (preset == "taper1") return 550e-9;
  if (preset == "taper2") return 560e-9;
  if (preset == "taper3") return 570e-9;
  return 0.0;
}

namespace detail {

inline CouplerModeData sample_mode_data(const TaperDesign& d, Polarization pol) {
  const double wd = degenerate_frequency();
  const auto [w_lo, w_hi] = signal_window();
  // keep the sampled range strictly inside the validity window of the
  // source polynomials so the stencil of group_velocity stays legal
  const double margin = 0.02 * (w_hi - w_lo);
  const double olo = w_lo + margin;
  const double ohi = w_hi - margin;
  const bool te = pol == Polarization::te;
  const std::vector<double>& cs = te ? te_coeffs() : tm_coeffs();
  const double dd = te ? d.d_te : d.d_tm;
  const double k0 = te ? d.kappa_te : d.kappa_tm;
  const double b0 = te ? d.b0_te : d.b0_tm;
  const double b1 = ((te ? d.ngb_te : d.ngb_tm) - b0) / wd;
  const double b3 = te ? 0.0 : d.b3_tm;

  std::vector<double> omega(d.omega_samples);
  for (std::size_t i = 0; i < d.omega_samples; ++i)
    omega[i] = olo + (ohi - olo) * static_cast<double>(i) /
                         static_cast<double>(d.omega_samples - 1);

  auto n_src = [&](double w) {
    const double x = w - wd;
    double acc = 0.0;
    for (std::size_t k = cs.size(); k-- > 0;) acc = acc * x + cs[k];
    return acc;
  };

  std::vector<double> widths(d.w_rows);
  std::vector<std::vector<double>> n_a(d.w_rows, std::vector<double>(d.omega_samples));
  for (std::size_t r = 0; r < d.w_rows; ++r) {
    const double w = d.w1 + (d.w0 - d.w1) * static_cast<double>(r) /
                               static_cast<double>(d.w_rows - 1);
    widths[r] = w;
    const double q = (d.w0 - w) / (d.w0 - d.w1);
    for (std::size_t i = 0; i < d.omega_samples; ++i)
      n_a[r][i] = n_src(omega[i]) - q * dd;
  }
  std::vector<double> n_b(d.omega_samples), kap(d.omega_samples);
  for (std::size_t i = 0; i < d.omega_samples; ++i) {
    const double x = omega[i] - wd;
    n_b[i] = b0 + b1 * x + b3 * x * x * x;
    const double u = x / d.kappa_sigma;
    kap[i] = k0 * std::exp(-u * u);
  }
  return CouplerModeData(widths, omega, n_a, n_b, kap);
}

inline std::vector<double> taper_width_samples(const TaperDesign& d) {
  std::vector<double> w(d.z_samples);
  for (std::size_t i = 0; i < d.z_samples; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(d.z_samples - 1);
    const double q = 1.0 - std::pow(1.0 - s, 6);
    w[i] = d.w0 - (d.w0 - d.w1) * q;
  }
  return w;
}

inline std::vector<double> taper_z_samples(const TaperDesign& d) {
  std::vector<double> z(d.z_samples);
  for (std::size_t i = 0; i < d.z_samples; ++i)
    z[i] = d.length * static_cast<double>(i) / static_cast<double>(d.z_samples - 1);
  return z;
}

}  // namespace detail

namespace detail {

// Remove the adjacent guide entirely: zero coupling, and its index pushed far
// below every source-guide value so the followed branch is the source guide's
// own index at every z (with the real n_b kept, the branch ordering would flip
// at the index crossing even though nothing couples).
inline CouplerModeData isolated_variant(CouplerModeData md) {
  md.kappa = CubicSpline({md.omega_lo, md.omega_hi}, {0.0, 0.0});
  md.n_b = CubicSpline({md.omega_lo, md.omega_hi}, {1.0, 1.0});
  return md;
}

}  // namespace detail

// `coupled = false` keeps the full width profile but removes the adjacent
// guide: the narrowing waveguide alone, used as the single-material
// comparison when judging how much exchanged phase the hybrid transfer adds.
inline TaperProfile make_taper(TaperDesign d, bool coupled = true) {
  CouplerModeData te = detail::sample_mode_data(d, Polarization::te);
  CouplerModeData tm = detail::sample_mode_data(d, Polarization::tm);
  if (!coupled) {
    te = detail::isolated_variant(std::move(te));
    tm = detail::isolated_variant(std::move(tm));
  }
  return make_taper_profile(detail::taper_z_samples(d), detail::taper_width_samples(d),
                            std::move(te), std::move(tm));
}

inline TaperProfile uncoupled_taper(TaperDesign d = {}) {
  return make_taper(std::move(d), /*coupled=*/false);
}

// --- assembled devices ---------------------------------------------------

struct DeviceModel {
  std::string preset;
  double pump_frequency = 0.0;
  double source_length = 0.0;
  DispersionModel pump, signal, idler;  // models of the generation region
  PolAssignment pols;                   // signal on TE, idler on TM
  bool has_coupler = false;
  TaperProfile taper;
  double silicon_width_m = 0.0;

  PhaseMismatchContext source_context() const {
    return PhaseMismatchContext{pump_frequency, source_length, pump, signal, idler};
  }
};

inline std::vector<std::string> preset_names() {
  return {"straight", "taper1", "taper2", "taper3"};
}

// `straight` is the bare generation region (no transfer stage): the
// uncoupled-source reference of every comparison.  The three taper presets
// share the geometry and differ in the adjacent-guide cubic.
inline DeviceModel device(const std::string& preset, double taper_length = 0.0) {
  DeviceModel dev;
  dev.preset = preset;
  dev.pump_frequency = pump_frequency();
  dev.source_length = source_length();
  dev.pump = pump_model();
  dev.signal = signal_te_model();
  dev.idler = idler_tm_model();
  dev.pols = PolAssignment{Polarization::te, Polarization::tm};
  dev.silicon_width_m = silicon_width(preset);
  TaperDesign d;
  if (taper_length > 0.0) d.length = taper_length;
  if (preset == "straight") {
    dev.has_coupler = false;
  } else if (preset == "taper1" || preset == "taper2" || preset == "taper3") {
    d.b3_tm = preset == "taper1"   ? taper1_b3()
              : preset == "taper2" ? taper2_b3()
                                   : taper3_b3();
    dev.has_coupler = true;
    dev.taper = make_taper(d);
  } else {
    throw ConfigError("unknown device preset '" + preset +
                      "' (expected straight, taper1, taper2 or taper3)");
  }
  return dev;
}

inline BiphotonSpectrum source_state(const DeviceModel& dev,
                                     std::size_t n = default_grid_points(),
                                     double half_span = 0.0) {
  const double h = half_span > 0.0 ? half_span : default_half_span();
  return build_source_jsa(dev.source_context(), h, n, dev.pols);
}

// Spectral phase the transfer stage imprints on one arm.
inline PhaseFunction arm_phase(const DeviceModel& dev, Polarization pol) {
  if (!dev.has_coupler) return {};
  const TaperProfile& taper = dev.taper;
  return [taper, pol](double omega) { return taper_phase(taper, pol, omega); };
}

// Model transmission |B(l)|^2 of the transfer stage, sampled on the mode-table
// frequency window and interpolated linearly in between.
inline TransmissionSpectrum model_transmission(const DeviceModel& dev, Polarization pol,
                                               std::size_t n_samples = 181) {
  if (!dev.has_coupler)
    throw ConfigError("model_transmission: preset '" + dev.preset +
                      "' has no transfer stage");
  const CouplerModeData& md = dev.taper.mode(pol);
  std::vector<double> grid(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    grid[i] = md.omega_lo + (md.omega_hi - md.omega_lo) * static_cast<double>(i) /
                                static_cast<double>(n_samples - 1);
  return transmission_spectrum(dev.taper, pol, grid);
}

// Phase-only assembled state (no transmission reshaping).
inline BiphotonSpectrum coupled_state(const DeviceModel& dev,
                                      std::size_t n = default_grid_points(),
                                      double half_span = 0.0) {
  BiphotonSpectrum st = source_state(dev, n, half_span);
  if (!dev.has_coupler) return st;
  return apply_coupler_phase(st, arm_phase(dev, dev.pols.signal),
                             arm_phase(dev, dev.pols.idler));
}

// --- synthetic measured transmission -------------------------------------
//
// Flat-top passbands with soft tanh edges, sampled every 0.2 nm: stand-ins
// for chip calibration data, used to exercise the ingestion path.  They are
// not derived from the coupled-mode model and are flagged as such.

inline double measured_transmission_value(Polarization pol, double lambda_m) {
  const bool te = pol == Polarization::te;
  const double tmax = te ? 0.80 : 0.78;
  const double lo_nm = te ? 1537.0 : 1538.0;
  const double hi_nm = te ? 1583.0 : 1582.0;
  const double edge_nm = te ? 3.0 : 3.5;
  const double l_nm = lambda_m * 1e9;
  return tmax * 0.25 * (1.0 + std::tanh((l_nm - lo_nm) / edge_nm)) *
         (1.0 + std::tanh((hi_nm - l_nm) / edge_nm));
}

// Rows ascend in angular frequency (wavelengths 1620 nm down to 1500 nm).
inline std::string measured_transmission_csv(Polarization pol) {
  std::ostringstream out;
  out << "omega_rad_per_s,T\n";
  for (int i = 600; i >= 0; --i) {
    const double l_nm = 1500.0 + 0.2 * i;
    out << format_double(wavelength_to_omega(l_nm * 1e-9)) << ','
        << format_double(measured_transmission_value(pol, l_nm * 1e-9)) << '\n';
  }
  return out.str();
}

}  // namespace presets
}  // namespace biphoton

#endif  // BIPHOTON_PRESETS_HPP
