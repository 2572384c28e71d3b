#ifndef BIPHOTON_METROLOGY_HPP
#define BIPHOTON_METROLOGY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "biphoton/errors.hpp"
#include "biphoton/hom.hpp"
#include "biphoton/jsa.hpp"
#include "biphoton/numerics.hpp"

namespace biphoton {

// Delay-estimation bound from the spectral width of the state:
//   QFI = 4 Var(omega_s),  variance taken under |phi|^2 / norm.
// Moments are accumulated in offsets from the degeneracy point, which leaves
// the (shift-invariant) variance free of cancellation against omega ~ 1e15.
inline double quantum_fisher_information(const BiphotonSpectrum& st) {
  const std::size_t n = st.size();
  double w0 = 0.0, w1 = 0.0, w2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double p = w * std::norm(st.amplitude()[i]);
    const double d = st.offset(i);
    w0 += p;
    w1 += p * d;
    w2 += p * d * d;
  }
  if (!(w0 > 0.0)) throw NumericError("quantum_fisher_information: zero-norm state");
  const double mean = w1 / w0;
  const double var = w2 / w0 - mean * mean;
  return 4.0 * var;
}

// Overlap kernel and its delay derivative, normalized so K(0) <= 1:
//   K(tau)  = int phi(omega_s) phi*(omega_p-omega_s) e^{-2 i delta tau} / norm,
//   K'(tau) = int ... * (-2 i delta) ...
struct KernelMoments {
  std::complex<double> k;
  std::complex<double> dk;
};

inline KernelMoments kernel_moments(const BiphotonSpectrum& st, double tau) {
  const std::size_t n = st.size();
  const double nrm = st.norm();
  if (!(nrm > 0.0)) throw NumericError("kernel_moments: state has zero norm");
  const double step = st.step();
  const double x0 = -0.5 * static_cast<double>(n - 1);
  const std::complex<double> ratio = std::polar(1.0, -2.0 * step * tau);
  std::complex<double> phase;
  std::complex<double> k{0.0, 0.0}, dk{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 256 == 0)  // periodic resync bounds the recurrence round-off
      phase = std::polar(1.0, -2.0 * (x0 + static_cast<double>(i)) * step * tau);
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const std::complex<double> f =
        st.amplitude()[i] * std::conj(st.amplitude()[st.mirror_index(i)]) * (w * step / nrm);
    const std::complex<double> fe = f * phase;
    const double delta = (x0 + static_cast<double>(i)) * step;
    k += fe;
    dk += fe * std::complex<double>(0.0, -2.0 * delta);
    phase *= ratio;
  }
  return {k, dk};
}

// Single-shot Fisher information of the binary coincidence outcome at delay
// tau, optionally with interference contrast gamma in (0, 1]:
//   P = 1/2 (1 - gamma Re K),   FI = (dP/dtau)^2 / (P (1 - P)).
// The derivative is analytic (no finite differencing).  Points where
// P(1-P) < 1e-12 carry no usable information; they are flagged as masked
// (never reported as infinite) and excluded from maxima.
struct FisherPoint {
  double p = 0.0;
  double dp_dtau = 0.0;
  double fi = 0.0;
  bool masked = false;
};

inline FisherPoint fisher_point(const BiphotonSpectrum& st, double tau,
                                double gamma = 1.0) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw ConfigError("contrast gamma must lie in (0, 1]");
  const KernelMoments m = kernel_moments(st, tau);
  FisherPoint out;
  out.p = 0.5 * (1.0 - gamma * m.k.real());
  out.dp_dtau = -0.5 * gamma * m.dk.real();
  const double denom = out.p * (1.0 - out.p);
  out.masked = denom < 1e-12;
  out.fi = out.masked ? 0.0 : out.dp_dtau * out.dp_dtau / denom;
  return out;
}

struct FisherCurve {
  std::vector<double> tau;
  std::vector<double> p;
  std::vector<double> dp_dtau;
  std::vector<double> fi;
  std::vector<char> masked;
};

inline FisherCurve fisher_curve(const BiphotonSpectrum& st,
                                const std::vector<double>& delays,
                                double gamma = 1.0) {
  FisherCurve c;
  c.tau = delays;
  c.p.assign(delays.size(), 0.0);
  c.dp_dtau.assign(delays.size(), 0.0);
  c.fi.assign(delays.size(), 0.0);
  c.masked.assign(delays.size(), 0);
  parallel_for(delays.size(), [&](std::size_t j) {
    const FisherPoint fp = fisher_point(st, delays[j], gamma);
    c.p[j] = fp.p;
    c.dp_dtau[j] = fp.dp_dtau;
    c.fi[j] = fp.fi;
    c.masked[j] = fp.masked ? 1 : 0;
  });
  return c;
}

// Largest FI over the unmasked delay samples.
inline double max_fisher(const FisherCurve& c) {
  double m = 0.0;
  for (std::size_t i = 0; i < c.fi.size(); ++i)
    if (!(i < c.masked.size() && c.masked[i])) m = std::max(m, c.fi[i]);
  return m;
}

// P -> 1/2 (1 - gamma (1 - 2P)): the same curve at reduced contrast.
inline HomCurve degrade_contrast(const HomCurve& curve, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw ConfigError("contrast gamma must lie in (0, 1]");
  HomCurve out = curve;
  for (auto& p : out.p_c) p = 0.5 - gamma * (0.5 - p);
  return out;
}

// One row of the metrological scaling study: the contrast that realises a
// target visibility, and the Fisher/QFI ratio attained there.
struct ScalingRow {
  double target_visibility = 0.0;
  double gamma = 0.0;
  double visibility = 0.0;
  double fi_max = 0.0;
  double qfi = 0.0;
  double fi_ratio = 0.0;
};

// Bisection on gamma in (0, 1]; visibility grows monotonically with contrast.
// Converges until the achieved visibility matches the target to 1e-6.  A
// target above the full-contrast visibility cannot be reached and raises.
inline ScalingRow solve_contrast_for_visibility(const BiphotonSpectrum& st,
                                                const std::vector<double>& delays,
                                                double target_visibility,
                                                double gamma_tol = 1e-10) {
  constexpr double kVisibilityTol = 1e-6;
  if (!(target_visibility > 0.0))
    throw ConfigError("target visibility must be positive");
  const HomCurve full = coincidence_curve(st, delays);
  const double v_full = visibility(full).visibility;
  if (target_visibility > v_full + kVisibilityTol)
    throw NumericError("target visibility " + std::to_string(target_visibility) +
                       " exceeds the full-contrast visibility " + std::to_string(v_full));
  double lo = 0.0, hi = 1.0;
  double gamma = 1.0;
  for (int it = 0; it < 200 && hi - lo > gamma_tol; ++it) {
    gamma = 0.5 * (lo + hi);
    const double v_at = visibility(degrade_contrast(full, gamma)).visibility;
    if (v_at < target_visibility) lo = gamma; else hi = gamma;
  }
  gamma = std::min(1.0, 0.5 * (lo + hi));
  ScalingRow row;
  row.target_visibility = target_visibility;
  row.gamma = gamma;
  row.visibility = visibility(degrade_contrast(full, gamma)).visibility;
  if (std::abs(row.visibility - target_visibility) > kVisibilityTol)
    throw NumericError("contrast bisection failed to match visibility " +
                       std::to_string(target_visibility) + " (achieved " +
                       std::to_string(row.visibility) + ")");
  const FisherCurve fc = fisher_curve(st, delays, gamma);
  row.fi_max = max_fisher(fc);
  row.qfi = quantum_fisher_information(st);
  row.fi_ratio = row.qfi > 0.0 ? row.fi_max / row.qfi : 0.0;
  return row;
}

inline std::vector<ScalingRow> visibility_scaling(const BiphotonSpectrum& st,
                                                  const std::vector<double>& delays,
                                                  const std::vector<double>& targets) {
  std::vector<ScalingRow> rows;
  rows.reserve(targets.size());
  for (double t : targets) rows.push_back(solve_contrast_for_visibility(st, delays, t));
  return rows;
}

}  // namespace biphoton

#endif  // BIPHOTON_METROLOGY_HPP
