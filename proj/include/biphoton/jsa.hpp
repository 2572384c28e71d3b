#ifndef BIPHOTON_JSA_HPP
#define BIPHOTON_JSA_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biphoton/constants.hpp"
#include "biphoton/coupler.hpp"
#include "biphoton/dispersion.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"
#include "biphoton/numerics.hpp"

namespace biphoton {

struct PolAssignment {
  Polarization signal = Polarization::te;
  Polarization idler = Polarization::tm;
};

// One-dimensional joint spectral amplitude phi(omega_s) for a monochromatic
// pump: the idler frequency is always omega_p - omega_s, so the state lives on
// the signal-frequency axis alone.
//
// The grid is stored as (center, step, n) and realised as
//   omega_i = center + (i - (n-1)/2) * step ,
// which makes it uniform and symmetric about omega_p/2 by construction: the
// mirrored sample of index i is exactly index n-1-i.
class BiphotonSpectrum {
 public:
  BiphotonSpectrum() = default;

  BiphotonSpectrum(double pump_frequency, double half_span, std::size_t n)
      : pump_(pump_frequency), n_(n), amp_(n, {0.0, 0.0}) {
    if (n < 2048) throw ConfigError("spectral grid needs at least 2048 points");
    if (!(half_span > 0.0) || !(pump_frequency > 0.0))
      throw ConfigError("pump frequency and half span must be positive");
    step_ = 2.0 * half_span / static_cast<double>(n - 1);
  }

  double pump_frequency() const { return pump_; }
  double center() const { return 0.5 * pump_; }
  double step() const { return step_; }
  std::size_t size() const { return n_; }
  double half_span() const { return 0.5 * step_ * static_cast<double>(n_ - 1); }

  double offset(std::size_t i) const {
    return (static_cast<double>(i) - 0.5 * static_cast<double>(n_ - 1)) * step_;
  }
  double omega(std::size_t i) const { return center() + offset(i); }
  std::size_t mirror_index(std::size_t i) const { return n_ - 1 - i; }

  const std::vector<std::complex<double>>& amplitude() const { return amp_; }
  std::vector<std::complex<double>>& amplitude() { return amp_; }

  PolAssignment pols;

  // integral of |phi|^2 d omega (trapezoid)
  double norm() const {
    std::vector<double> f(n_);
    for (std::size_t i = 0; i < n_; ++i) f[i] = std::norm(amp_[i]);
    return trapezoid_uniform(f, step_);
  }

  void normalize() {
    const double nrm = norm();
    if (!(nrm > 0.0)) throw NumericError("cannot normalize an identically zero amplitude");
    const double s = 1.0 / std::sqrt(nrm);
    for (auto& a : amp_) a *= s;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& a : amp_) m = std::max(m, std::abs(a));
    return m;
  }

 private:
  double pump_ = 0.0, step_ = 0.0;
  std::size_t n_ = 0;
  std::vector<std::complex<double>> amp_;
};

// Source amplitude of the generation region:
//   phi(omega_s) = e^{i dk L/2} sinc(dk L/2) / sqrt(v_g^s(omega_s) v_g^i(omega_i)),
// normalized to unit norm on the grid.
inline BiphotonSpectrum build_source_jsa(const PhaseMismatchContext& ctx, double half_span,
                                         std::size_t n, PolAssignment pols = {}) {
  BiphotonSpectrum st(ctx.pump_frequency, half_span, n);
  st.pols = pols;
  auto& amp = st.amplitude();
  for (std::size_t i = 0; i < st.size(); ++i) {
    const double omega_s = st.omega(i);
    const double omega_i = ctx.pump_frequency - omega_s;
    const double arg = 0.5 * phase_mismatch(ctx, omega_s) * ctx.length;
    const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
    const double vg_s = group_velocity(ctx.signal, omega_s);
    const double vg_i = group_velocity(ctx.idler, omega_i);
    const double mag = sinc / std::sqrt(vg_s * vg_i);  // signed: sinc lobes alternate
    amp[i] = mag * std::polar(1.0, arg);
  }
  st.normalize();
  return st;
}

// Intensity filtering by per-arm transmission:
//   |phi'|^2 = |phi|^2 T_u(omega_s) T_v(omega_p - omega_s).
// The norm is recomputed, not renormalized: norm(out)/norm(in) is the pair
// transmission through the device.
inline BiphotonSpectrum apply_transmission(const BiphotonSpectrum& in,
                                           const TransmissionSpectrum& t_signal,
                                           const TransmissionSpectrum& t_idler) {
  BiphotonSpectrum out = in;
  auto& amp = out.amplitude();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double tu = t_signal.at(out.omega(i));
    const double tv = t_idler.at(out.omega(out.mirror_index(i)));
    if (tu < 0.0 || tv < 0.0)
      throw NumericError("transmission must be non-negative");
    amp[i] *= std::sqrt(tu * tv);
  }
  return out;
}

using PhaseFunction = std::function<double(double)>;

// Spectral phase imprint of the coupling stage:
//   phi'(omega_s) = phi(omega_s) e^{i [theta_u(omega_s) + theta_v(omega_p-omega_s)]}.
// Moduli and norm are untouched.
inline BiphotonSpectrum apply_coupler_phase(const BiphotonSpectrum& in,
                                            const PhaseFunction& theta_signal,
                                            const PhaseFunction& theta_idler) {
  BiphotonSpectrum out = in;
  auto& amp = out.amplitude();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double ph = 0.0;
    if (theta_signal) ph += theta_signal(out.omega(i));
    if (theta_idler) ph += theta_idler(out.omega(out.mirror_index(i)));
    amp[i] *= std::polar(1.0, ph);
  }
  return out;
}

// Continuous unwrapped phase along the grid, anchored at the two central
// samples and grown outward.  Points with negligible amplitude are masked and
// bridged by linear interpolation so the unwrap does not pick up noise.
struct UnwrappedPhase {
  std::vector<double> value;
  std::vector<char> masked;
};

inline UnwrappedPhase unwrap_phase(const BiphotonSpectrum& st, double mask_rel = 1e-12) {
  const std::size_t n = st.size();
  const double floor_abs = mask_rel * st.max_abs();
  UnwrappedPhase up;
  up.value.assign(n, 0.0);
  up.masked.assign(n, 0);
  std::vector<double> raw(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = st.amplitude()[i];
    if (std::abs(a) <= floor_abs) {
      up.masked[i] = 1;
    } else {
      raw[i] = std::arg(a);
    }
  }
  // anchor at the first unmasked point at/above the centre pair
  const std::size_t hi_center = n / 2;
  std::size_t anchor = hi_center;
  while (anchor < n && up.masked[anchor]) ++anchor;
  if (anchor == n) {
    anchor = hi_center;
    while (anchor > 0 && up.masked[anchor]) --anchor;
    if (up.masked[anchor]) return up;  // all masked: zero phase
  }
  up.value[anchor] = raw[anchor];
  double ref = raw[anchor];
  for (std::size_t i = anchor + 1; i < n; ++i) {
    if (up.masked[i]) { up.value[i] = ref; continue; }
    up.value[i] = unwrap_step(raw[i], ref);
    ref = up.value[i];
  }
  ref = up.value[anchor];
  for (std::size_t i = anchor; i-- > 0;) {
    if (up.masked[i]) { up.value[i] = ref; continue; }
    up.value[i] = unwrap_step(raw[i], ref);
    ref = up.value[i];
  }
  // bridge masked runs linearly for continuity of downstream consumers
  std::size_t i = 0;
  while (i < n) {
    if (!up.masked[i]) { ++i; continue; }
    std::size_t j = i;
    while (j < n && up.masked[j]) ++j;
    const bool have_left = i > 0;
    const bool have_right = j < n;
    for (std::size_t k = i; k < j; ++k) {
      if (have_left && have_right) {
        const double t = static_cast<double>(k - i + 1) / static_cast<double>(j - i + 1);
        up.value[k] = (1.0 - t) * up.value[i - 1] + t * up.value[j];
      } else if (have_left) {
        up.value[k] = up.value[i - 1];
      } else if (have_right) {
        up.value[k] = up.value[j];
      }
    }
    i = j;
  }
  return up;
}

// Exchanged-phase diagnostic  delta_theta(omega_s) = arg phi(omega_s) -
// arg phi(omega_p - omega_s), using the continuity-unwrapped phase.  Odd about
// the degeneracy point by construction.
struct DeltaTheta {
  std::vector<double> value;
  std::vector<char> masked;
};

inline DeltaTheta delta_theta(const BiphotonSpectrum& st, double mask_rel = 1e-12) {
  const UnwrappedPhase up = unwrap_phase(st, mask_rel);
  DeltaTheta dt;
  const std::size_t n = st.size();
  dt.value.assign(n, 0.0);
  dt.masked.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = st.mirror_index(i);
    dt.value[i] = up.value[i] - up.value[m];
    dt.masked[i] = up.masked[i] | up.masked[m];
  }
  return dt;
}

// Weighted least-squares polynomial fit of the unwrapped spectral phase in
// powers of x = (omega_p/2 - omega_s), weights |phi|^2:
//   theta(omega_s) ~ theta0 + b1 x + b2 x^2 + b3 x^3.
// Coefficients are in SI units (s, s^2, s^3).
struct PhaseFit {
  double theta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;

  double coefficient(int k) const {
    switch (k) {
      case 0: return theta0;
      case 1: return beta1;
      case 2: return beta2;
      case 3: return beta3;
    }
    throw ConfigError("phase-fit coefficient index must be 0..3");
  }
};

inline PhaseFit fit_phase_polynomial(const BiphotonSpectrum& st, int order = 3,
                                     double window_half_width = 0.0) {
  if (order < 1 || order > 3)
    throw ConfigError("fit_phase_polynomial supports orders 1..3");
  const double win = window_half_width > 0.0 ? window_half_width : st.half_span();
  const UnwrappedPhase up = unwrap_phase(st);
  // scaled basis u = x / win keeps the normal equations well conditioned
  const int dim = order + 1;
  double ata[4][4] = {};
  double atb[4] = {};
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (up.masked[i]) continue;
    const double x = -st.offset(i);  // omega_p/2 - omega_s
    if (std::abs(x) > win) continue;
    const double wgt = std::norm(st.amplitude()[i]);
    if (wgt <= 0.0) continue;
    ++distinct;
    const double u = x / win;
    double basis[4] = {1.0, u, u * u, u * u * u};
    for (int r = 0; r < dim; ++r) {
      atb[r] += wgt * basis[r] * up.value[i];
      for (int cidx = 0; cidx < dim; ++cidx) ata[r][cidx] += wgt * basis[r] * basis[cidx];
    }
  }
  if (distinct < static_cast<std::size_t>(dim))
    throw NumericError("fit_phase_polynomial: fewer than order+1 frequencies with "
                       "nonzero weight inside the fit window");
  // Gaussian elimination with partial pivoting on the (dim x dim) system
  double m[4][5];
  for (int r = 0; r < dim; ++r) {
    for (int cidx = 0; cidx < dim; ++cidx) m[r][cidx] = ata[r][cidx];
    m[r][dim] = atb[r];
  }
  for (int col = 0; col < dim; ++col) {
    int piv = col;
    for (int r = col + 1; r < dim; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-300)
      throw NumericError("fit_phase_polynomial: rank-deficient normal equations");
    if (piv != col)
      for (int cidx = 0; cidx <= dim; ++cidx) std::swap(m[piv][cidx], m[col][cidx]);
    for (int r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int cidx = col; cidx <= dim; ++cidx) m[r][cidx] -= f * m[col][cidx];
    }
  }
  double sol[4] = {};
  for (int r = 0; r < dim; ++r) sol[r] = m[r][dim] / m[r][r];
  PhaseFit fit;
  fit.theta0 = sol[0];
  if (order >= 1) fit.beta1 = sol[1] / win;
  if (order >= 2) fit.beta2 = sol[2] / (win * win);
  if (order >= 3) fit.beta3 = sol[3] / (win * win * win);
  return fit;
}

// --- serialization -------------------------------------------------------

// CSV columns omega_s_rad_per_s,re_phi,im_phi plus a JSON sidecar carrying
// pump frequency, norm and polarization assignment.
inline std::string state_to_csv(const BiphotonSpectrum& st) {
  std::ostringstream out;
  out << "omega_s_rad_per_s,re_phi,im_phi\n";
  for (std::size_t i = 0; i < st.size(); ++i) {
    out << format_double(st.omega(i)) << ',' << format_double(st.amplitude()[i].real())
        << ',' << format_double(st.amplitude()[i].imag()) << '\n';
  }
  return out.str();
}

inline std::string state_sidecar_json(const BiphotonSpectrum& st) {
  nlohmann::json j;
  j["pump_frequency_rad_per_s"] = st.pump_frequency();
  j["norm"] = st.norm();
  j["pol_assignment"] = {{"signal", to_string(st.pols.signal)},
                        {"idler", to_string(st.pols.idler)}};
  return j.dump(2) + "\n";
}

inline void save_state(const BiphotonSpectrum& st, const std::string& csv_path,
                       const std::string& json_path) {
  write_file_atomic(csv_path, state_to_csv(st));
  write_file_atomic(json_path, state_sidecar_json(st));
}

inline BiphotonSpectrum load_state(const std::string& csv_path,
                                   const std::string& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json_path + ": " + e.what());
  }
  double pump = 0.0;
  PolAssignment pols;
  try {
    pump = j.at("pump_frequency_rad_per_s").get<double>();
    const std::string ps = j.at("pol_assignment").at("signal").get<std::string>();
    const std::string pi = j.at("pol_assignment").at("idler").get<std::string>();
    pols.signal = ps == "TM" ? Polarization::tm : Polarization::te;
    pols.idler = pi == "TM" ? Polarization::tm : Polarization::te;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json_path + ": " + e.what());
  }
  const CsvTable t = read_csv_file(csv_path);
  const std::size_t co = t.column("omega_s_rad_per_s");
  const std::size_t cr = t.column("re_phi");
  const std::size_t ci = t.column("im_phi");
  const std::size_t n = t.rows.size();
  if (n < 2048) throw IoError(csv_path + ": fewer than 2048 samples");
  const double lo = t.rows.front()[co];
  const double hi = t.rows.back()[co];
  const double step = (hi - lo) / static_cast<double>(n - 1);
  const double tol = 1e-9 * (0.5 * pump);
  for (std::size_t i = 0; i < n; ++i) {
    const double expect = lo + static_cast<double>(i) * step;
    if (std::abs(t.rows[i][co] - expect) > tol)
      throw IoError(csv_path + ": frequency grid is not uniform at row " +
                    std::to_string(i + 2));
  }
  if (std::abs(0.5 * (lo + hi) - 0.5 * pump) > tol)
    throw IoError(csv_path + ": grid is not symmetric about half the pump frequency");
  BiphotonSpectrum st(pump, 0.5 * (hi - lo), n);
  st.pols = pols;
  for (std::size_t i = 0; i < n; ++i)
    st.amplitude()[i] = {t.rows[i][cr], t.rows[i][ci]};
  return st;
}

}  // namespace biphoton

#endif  // BIPHOTON_JSA_HPP
