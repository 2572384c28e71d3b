#ifndef BIPHOTON_HOM_HPP
#define BIPHOTON_HOM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "biphoton/constants.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"
#include "biphoton/jsa.hpp"
#include "biphoton/numerics.hpp"

namespace biphoton {

// Two-photon interferogram P_c(tau) on a uniform delay grid.
struct HomCurve {
  std::vector<double> tau;
  std::vector<double> p_c;

  double delay_step() const {
    if (tau.size() < 2) throw NumericError("interferogram needs at least 2 delays");
    return (tau.back() - tau.front()) / static_cast<double>(tau.size() - 1);
  }
};

inline std::vector<double> default_delay_grid(double half_width = 4e-12,
                                              std::size_t n = 4097) {
  if (n < 3) throw ConfigError("delay grid needs at least 3 points");
  std::vector<double> tau(n);
  const double step = 2.0 * half_width / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    tau[i] = -half_width + static_cast<double>(i) * step;
  return tau;
}

// Coincidence probability after the balanced beam splitter:
//   P_c(tau) = 1/2 (1 - Re[ int phi(omega_s) phi*(omega_p - omega_s)
//                              e^{i (omega_p - 2 omega_s) tau} d omega_s ] / norm).
// With delta = omega_s - omega_p/2 the kernel phase is e^{-2 i delta tau} and the
// mirrored amplitude is the exact reversed-index sample, so no interpolation
// enters the kernel.  Round-off can push the probability a hair below zero at a
// perfect dip; such values are clamped to exactly 0.
inline HomCurve coincidence_curve(const BiphotonSpectrum& st,
                                  const std::vector<double>& delays) {
  const std::size_t n = st.size();
  const double nrm = st.norm();
  if (!(nrm > 0.0)) throw NumericError("coincidence_curve: state has zero norm");
  // trapezoid weights and the 1/norm folded into the kernel samples
  std::vector<std::complex<double>> f(n);
  const double scale = st.step() / nrm;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    f[i] = st.amplitude()[i] * std::conj(st.amplitude()[st.mirror_index(i)]) * (w * scale);
  }
  const double step = st.step();
  const double x0 = -0.5 * static_cast<double>(n - 1);
  HomCurve curve;
  curve.tau = delays;
  curve.p_c.assign(delays.size(), 0.0);
  parallel_for(delays.size(), [&](std::size_t j) {
    const double tau = delays[j];
    const std::complex<double> ratio = std::polar(1.0, -2.0 * step * tau);
    std::complex<double> phase;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 256 == 0)  // periodic resync bounds the recurrence round-off
        phase = std::polar(1.0, -2.0 * (x0 + static_cast<double>(i)) * step * tau);
      acc += f[i] * phase;
      phase *= ratio;
    }
    curve.p_c[j] = std::max(0.0, 0.5 * (1.0 - acc.real()));
  });
  return curve;
}

// Mean of the outer 10% of delay samples (both tails), the far-from-overlap
// coincidence level.
inline double baseline_level(const HomCurve& curve) {
  const std::size_t n = curve.p_c.size();
  if (n < 3) throw NumericError("interferogram needs at least 3 delays");
  std::size_t tail = std::max<std::size_t>(1, n / 20);  // 5% each side
  double sum = 0.0;
  for (std::size_t i = 0; i < tail; ++i) sum += curve.p_c[i] + curve.p_c[n - 1 - i];
  return sum / static_cast<double>(2 * tail);
}

struct DipInfo {
  double tau_dip = 0.0;
  double p_min = 0.0;
  std::size_t index = 0;
};

// Discrete minimum refined by the vertex of the parabola through the three
// neighbouring samples.  A minimum sitting on the grid edge means the dip was
// not captured by the delay window, which is reported as an error rather than
// a bogus refined position.
inline DipInfo find_dip(const HomCurve& curve) {
  const std::size_t n = curve.p_c.size();
  if (n < 3) throw NumericError("interferogram needs at least 3 delays");
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (curve.p_c[i] < curve.p_c[k]) k = i;
  if (k == 0 || k == n - 1)
    throw NumericError("find_dip: no interior minimum (lowest sample sits on the "
                       "delay-grid edge at tau = " + format_double(curve.tau[k]) + " s)");
  DipInfo d;
  d.index = k;
  const double y0 = curve.p_c[k - 1], y1 = curve.p_c[k], y2 = curve.p_c[k + 1];
  const double h = curve.delay_step();
  d.tau_dip = quadratic_vertex(curve.tau[k], h, y0, y1, y2);
  const double u = (d.tau_dip - curve.tau[k]) / h;
  d.p_min = y1 + 0.5 * (y2 - y0) * u + 0.5 * (y0 - 2.0 * y1 + y2) * u * u;
  return d;
}

// Signed difference between the refined dip positions of two interferograms
// (curve minus reference).
inline double dip_shift(const HomCurve& curve, const HomCurve& reference) {
  return find_dip(curve).tau_dip - find_dip(reference).tau_dip;
}

struct VisibilityResult {
  double visibility = 0.0;
  double baseline = 0.0;
  double p_min = 0.0;
  double tau_dip = 0.0;
};

inline VisibilityResult visibility(const HomCurve& curve) {
  VisibilityResult v;
  v.baseline = baseline_level(curve);
  const DipInfo d = find_dip(curve);
  v.p_min = d.p_min;
  v.tau_dip = d.tau_dip;
  if (!(v.baseline > 0.0))
    throw NumericError("visibility: baseline level is not positive");
  v.visibility = (v.baseline - v.p_min) / v.baseline;
  return v;
}

// Catmull-Rom interpolation on the uniform delay grid (clamped ends).
inline double sample_curve(const std::vector<double>& y, double x0, double step,
                           double x) {
  const std::size_t n = y.size();
  double t = (x - x0) / step;
  if (t <= 0.0) return y.front();
  if (t >= static_cast<double>(n - 1)) return y.back();
  const std::size_t k = static_cast<std::size_t>(t);
  const double u = t - static_cast<double>(k);
  const double p1 = y[k];
  const double p2 = y[k + 1];
  const double p0 = k > 0 ? y[k - 1] : p1;
  const double p3 = k + 2 < n ? y[k + 2] : p2;
  return p1 + 0.5 * u * (p2 - p0 +
         u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
         u * (3.0 * (p1 - p2) + p3 - p0)));
}

struct AsymmetryResult {
  double score = 0.0;
  double recenter_tau = 0.0;  // energy centroid of the analysed signal
};

// Exchange-statistics asymmetry of an interferogram.  The baseline-subtracted
// dip g = baseline - P_c (or the raw P_c when `use_raw_p` is set) is recentered
// at its energy centroid
//   tau_c = int tau g^2 / int g^2,
// resampled on the largest delay window symmetric about tau_c, and split into
// odd and even parts there.  The score is the odd fraction of the energy:
//   S = sqrt( int g_odd^2 / int g^2 ),
// so a symmetric dip anywhere scores 0 and a purely odd curve scores 1.  The
// centroid (rather than the extremum) is used for recentering because it is the
// unique choice for which a purely odd profile keeps a score of exactly 1.
inline AsymmetryResult asymmetry_score(const HomCurve& curve, bool recenter = true,
                                       bool use_raw_p = false) {
  const std::size_t n = curve.p_c.size();
  if (n < 5) throw NumericError("asymmetry_score needs at least 5 delays");
  const double b = baseline_level(curve);
  std::vector<double> g(n);
  double energy = 0.0, moment = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = use_raw_p ? curve.p_c[i] : b - curve.p_c[i];
    energy += g[i] * g[i];
    moment += curve.tau[i] * g[i] * g[i];
    peak = std::max(peak, std::abs(g[i]));
  }
  const double scale = std::max(std::abs(b), 1e-300);
  if (!(peak > 1e-9 * scale))
    throw NumericError("asymmetry_score: undefined for a flat interferogram "
                       "(signal vanishes after baseline subtraction)");
  AsymmetryResult r;
  r.recenter_tau = recenter ? moment / energy : 0.0;
  const double lo = curve.tau.front();
  const double hi = curve.tau.back();
  double w = std::min(hi - r.recenter_tau, r.recenter_tau - lo);
  if (!(w > 0.0))
    throw NumericError("asymmetry_score: recentering window is empty (signal "
                       "centroid sits on the delay-grid edge)");
  const double step = curve.delay_step();
  const std::size_t m = std::max<std::size_t>(5, static_cast<std::size_t>(2.0 * w / step) + 1);
  std::vector<double> h(m);
  const double ustep = 2.0 * w / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const double u = -w + static_cast<double>(k) * ustep;
    h[k] = sample_curve(g, lo, step, r.recenter_tau + u);
  }
  double odd2 = 0.0, tot2 = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double o = 0.5 * (h[k] - h[m - 1 - k]);
    odd2 += o * o;
    tot2 += h[k] * h[k];
  }
  r.score = tot2 > 0.0 ? std::sqrt(odd2 / tot2) : 0.0;
  return r;
}

// Rectangular spectral window applied on the signal-frequency axis.
struct SpectralFilter {
  std::string shape = "rectangular";
  double center = 0.0;      // [rad/s]
  double full_width = 0.0;  // [rad/s]
};

// Zeroes the amplitude at signal frequencies outside [center - w/2, center + w/2].
// The filter support must lie inside the state grid; the norm decreases
// accordingly and is not restored.
inline BiphotonSpectrum apply_bandpass(const BiphotonSpectrum& in,
                                       const SpectralFilter& filter) {
  if (filter.shape != "rectangular")
    throw ConfigError("spectral filter: unsupported shape \"" + filter.shape +
                      "\" (only \"rectangular\" is available)");
  if (!(filter.full_width > 0.0))
    throw ConfigError("spectral filter: full_width must be positive");
  const double lo = filter.center - 0.5 * filter.full_width;
  const double hi = filter.center + 0.5 * filter.full_width;
  const double grid_lo = in.omega(0);
  const double grid_hi = in.omega(in.size() - 1);
  const double tol = 1e-9 * (grid_hi - grid_lo);
  if (lo < grid_lo - tol || hi > grid_hi + tol)
    throw ConfigError("spectral filter: support [" + format_double(lo) + ", " +
                      format_double(hi) + "] rad/s extends beyond the state grid [" +
                      format_double(grid_lo) + ", " + format_double(grid_hi) + "] rad/s");
  BiphotonSpectrum out = in;
  auto& amp = out.amplitude();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ws = out.omega(i);
    if (ws < lo || ws > hi) amp[i] = {0.0, 0.0};
  }
  return out;
}

// Exchange-phase profile of fractional order alpha:
//   theta(omega_s) = sign(omega_p - 2 omega_s) * alpha * pi/2,
// zero at the degeneracy point.  alpha = 0 is bosonic, alpha = 1 fermionic.
inline PhaseFunction anyonic_phase(double pump_frequency, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("anyonic_phase: alpha must lie in [0, 1], got " +
                      format_double(alpha));
  return [pump_frequency, alpha](double omega_s) {
    const double d = pump_frequency - 2.0 * omega_s;
    if (d == 0.0) return 0.0;
    return (d > 0.0 ? 1.0 : -1.0) * alpha * pi / 2.0;
  };
}

// Reference state with the fractional exchange-phase profile: magnitudes are
// copied from the template and the spectral phase is set to the step
//   theta(omega_s) = sign(omega_p - 2 omega_s) * alpha * pi/2,
// so the exchanged-arm phase difference is sign(omega_p - 2 omega_s) * alpha*pi.
// The grid has no sample exactly at the degeneracy point, so the sign is
// always well defined.
inline BiphotonSpectrum synthetic_exchange_state(const BiphotonSpectrum& tmpl,
                                                 double alpha) {
  const PhaseFunction theta = anyonic_phase(tmpl.pump_frequency(), alpha);
  BiphotonSpectrum out = tmpl;
  auto& amp = out.amplitude();
  for (std::size_t i = 0; i < out.size(); ++i)
    amp[i] = std::polar(std::abs(amp[i]), theta(out.omega(i)));
  return out;
}

inline std::string hom_curve_to_csv(const HomCurve& curve) {
  std::ostringstream out;
  out << "tau_s,P_c\n";
  for (std::size_t i = 0; i < curve.tau.size(); ++i)
    out << format_double(curve.tau[i]) << ',' << format_double(curve.p_c[i]) << '\n';
  return out.str();
}

inline HomCurve hom_curve_from_csv(const CsvTable& t) {
  HomCurve c;
  const std::size_t ct = t.column("tau_s");
  const std::size_t cp = t.column("P_c");
  c.tau.reserve(t.rows.size());
  c.p_c.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    c.tau.push_back(row[ct]);
    c.p_c.push_back(row[cp]);
  }
  return c;
}

}  // namespace biphoton

#endif  // BIPHOTON_HOM_HPP
