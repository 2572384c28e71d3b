#ifndef BIPHOTON_COUPLER_HPP
#define BIPHOTON_COUPLER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "biphoton/constants.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"
#include "biphoton/numerics.hpp"

namespace biphoton {

enum class Polarization { te, tm };

inline std::string to_string(Polarization p) {
  return p == Polarization::te ? "TE" : "TM";
}

// Local two-guide mode data for one polarization: source-guide index versus
// (width, frequency), destination-guide index and coupling versus frequency.
struct CouplerModeData {
  Table2D n_a;         // source guide n_eff(w, omega)
  CubicSpline n_b;     // destination guide n_eff(omega)
  CubicSpline kappa;   // coupling [rad/m] (omega)
  double omega_lo = 0.0, omega_hi = 0.0;  // common validity window

  CouplerModeData() = default;

  // All three datasets on one shared frequency grid.
  CouplerModeData(std::vector<double> widths, std::vector<double> omega,
                  const std::vector<std::vector<double>>& n_a_grid,
                  std::vector<double> n_b_values, std::vector<double> kappa_values)
      : n_a(std::move(widths), omega, n_a_grid),
        n_b(omega, std::move(n_b_values)),
        kappa(omega, std::move(kappa_values)),
        omega_lo(omega.front()),
        omega_hi(omega.back()) {}

  // Same indices, coupling identically zero (isolated guides).
  CouplerModeData with_zero_coupling() const {
    CouplerModeData out = *this;
    out.kappa = CubicSpline({omega_lo, omega_hi}, {0.0, 0.0});
    return out;
  }

  void check_window(double omega) const {
    if (omega < omega_lo || omega > omega_hi)
      throw DomainError("coupler mode data: omega " + format_double(omega) +
                        " outside validity window [" + format_double(omega_lo) + ", " +
                        format_double(omega_hi) + "] rad/s");
  }
};

// Sampled taper geometry shared by both polarizations.
struct TaperProfile {
  double length = 0.0;          // [m]
  std::vector<double> z;        // ascending, z.front()=0, z.back()=length
  std::vector<double> w;        // guide width at z [m]
  CubicSpline w_of_z;           // smooth interpolant of the samples
  CouplerModeData te, tm;

  const CouplerModeData& mode(Polarization p) const {
    return p == Polarization::te ? te : tm;
  }

  double width_at(double zq) const { return w_of_z(zq); }

  // Same shape, new length: the z axis is rescaled, all tables shared.
  TaperProfile rescaled(double new_length) const {
    if (!(new_length > 0.0)) throw ConfigError("taper length must be positive");
    TaperProfile out = *this;
    const double f = new_length / length;
    for (double& zi : out.z) zi *= f;
    out.length = new_length;
    out.w_of_z = CubicSpline(out.z, out.w);
    return out;
  }
};

inline TaperProfile make_taper_profile(std::vector<double> z, std::vector<double> w,
                                       CouplerModeData te, CouplerModeData tm) {
  if (z.size() < 3 || z.size() != w.size())
    throw ConfigError("taper profile needs >= 3 matched (z, w) samples");
  if (z.front() != 0.0) throw ConfigError("taper profile must start at z = 0");
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1])) throw ConfigError("taper z samples must be strictly increasing");
  TaperProfile p;
  p.length = z.back();
  p.w_of_z = CubicSpline(z, w);
  p.z = std::move(z);
  p.w = std::move(w);
  p.te = std::move(te);
  p.tm = std::move(tm);
  return p;
}

// CSV columns: z_m,w_m
inline std::pair<std::vector<double>, std::vector<double>> load_width_profile_csv(
    const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cz = t.column("z_m");
  const std::size_t cw = t.column("w_m");
  std::vector<double> z, w;
  for (const auto& row : t.rows) {
    z.push_back(row[cz]);
    w.push_back(row[cw]);
  }
  return {std::move(z), std::move(w)};
}

// CSV columns: w_m,omega_rad_per_s,n_eff describing a complete rectangular grid.
inline Table2D load_local_index_csv(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cw = t.column("w_m");
  const std::size_t co = t.column("omega_rad_per_s");
  const std::size_t cn = t.column("n_eff");
  std::vector<double> ws, omegas;
  for (const auto& row : t.rows) {
    ws.push_back(row[cw]);
    omegas.push_back(row[co]);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(ws);
  uniq(omegas);
  if (ws.size() * omegas.size() != t.rows.size())
    throw IoError(path + ": rows do not form a complete (w, omega) grid");
  std::vector<std::vector<double>> grid(ws.size(), std::vector<double>(omegas.size(), 0.0));
  for (const auto& row : t.rows) {
    const auto iw = static_cast<std::size_t>(
        std::lower_bound(ws.begin(), ws.end(), row[cw]) - ws.begin());
    const auto io = static_cast<std::size_t>(
        std::lower_bound(omegas.begin(), omegas.end(), row[co]) - omegas.begin());
    grid[iw][io] = row[cn];
  }
  return Table2D(std::move(ws), std::move(omegas), grid);
}

// CSV columns: omega_rad_per_s,kappa_rad_per_m
inline CubicSpline load_kappa_csv(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const std::size_t co = t.column("omega_rad_per_s");
  const std::size_t ck = t.column("kappa_rad_per_m");
  std::vector<double> omega, kappa;
  for (const auto& row : t.rows) {
    omega.push_back(row[co]);
    kappa.push_back(row[ck]);
  }
  return CubicSpline(std::move(omega), std::move(kappa));
}

// Supermode effective indices of the coupled two-guide cross-section:
//   n_pm = (n_a+n_b)/2 +- sqrt( ((n_a-n_b)/2)^2 + (kappa c/omega)^2 )
inline std::pair<double, double> supermode_indices(double n_a, double n_b, double kappa,
                                                   double omega) {
  const double half_split = 0.5 * (n_a - n_b);
  const double coupling_index = kappa * c_light / omega;
  const double rad = std::sqrt(half_split * half_split + coupling_index * coupling_index);
  const double mean = 0.5 * (n_a + n_b);
  return {mean + rad, mean - rad};
}

inline std::pair<double, double> supermode_indices(const TaperProfile& p, Polarization pol,
                                                   double z, double omega) {
  if (z < 0.0 || z > p.length)
    throw DomainError("supermode_indices: z = " + format_double(z) +
                      " outside the taper [0, " + format_double(p.length) + "] m");
  const CouplerModeData& md = p.mode(pol);
  md.check_window(omega);
  return supermode_indices(md.n_a(p.width_at(z), omega), md.n_b(omega), md.kappa(omega),
                           omega);
}

namespace detail {

// Which supermode branch is localized in the source guide at z = 0.
inline bool follow_upper_branch(const TaperProfile& p, Polarization pol, double omega) {
  const CouplerModeData& md = p.mode(pol);
  const double na0 = md.n_a(p.width_at(0.0), omega);
  const double nb0 = md.n_b(omega);
  const double kap = md.kappa(omega);
  if (na0 == nb0 && kap == 0.0)
    throw NumericError("branch selection is degenerate: guides are exactly "
                       "index-matched with zero coupling at z = 0");
  return na0 > nb0;
}

}  // namespace detail

// Accumulated phase of the followed local supermode:
//   theta(omega) = (omega/c) * integral_0^l n_follow(z, omega) dz
// where n_follow tracks the branch that starts localized in the source guide.
// Composite Simpson on the profile's z samples.
inline double taper_phase(const TaperProfile& p, Polarization pol, double omega) {
  const CouplerModeData& md = p.mode(pol);
  md.check_window(omega);
  const bool upper = detail::follow_upper_branch(p, pol, omega);
  const double nb = md.n_b(omega);
  const double kap = md.kappa(omega);
  std::vector<double> n_follow(p.z.size());
  for (std::size_t i = 0; i < p.z.size(); ++i) {
    const auto [np, nm] = supermode_indices(md.n_a(p.w[i], omega), nb, kap, omega);
    n_follow[i] = upper ? np : nm;
  }
  // the preset profiles are uniformly sampled; tolerate mild non-uniformity
  const double step = p.length / static_cast<double>(p.z.size() - 1);
  return omega / c_light * simpson_uniform(n_follow, step);
}

// Result of integrating the coupled-local-mode equations across the taper.
struct CmtResult {
  std::complex<double> b_out;  // destination-guide amplitude B(l)
  std::complex<double> a_out;  // source-guide amplitude A(l)
};

// Coupled equations  d/dz [A;B] = i [beta_a(z), kappa; kappa, beta_b] [A;B],
// A(0)=1, B(0)=0, beta = n omega / c.
//
// The common phase (beta_a+beta_b)/2 is accumulated analytically; the traceless
// remainder is advanced with 4th-order Magnus exponential steps (two-point
// Gauss quadrature) which are unitary to round-off, so |A|^2+|B|^2 is conserved
// exactly.  Adaptive step doubling supplies a 5th-order error estimate against
// the requested relative tolerance.
inline CmtResult cmt_transfer(const TaperProfile& p, Polarization pol, double omega,
                              double rel_tol = 1e-9) {
  const CouplerModeData& md = p.mode(pol);
  md.check_window(omega);
  const double kap = md.kappa(omega);
  const double nb = md.n_b(omega);
  const double k_scale = omega / c_light;

  auto beta_a = [&](double zq) { return md.n_a(p.width_at(zq), omega) * k_scale; };
  const double beta_b = nb * k_scale;

  struct State {
    std::complex<double> a, b;
    double common;  // integrated mean phase [rad]
  };

  constexpr double gauss_off = 0.28867513459481288225;  // sqrt(3)/6

  auto magnus_step = [&](const State& s, double z0, double h) {
    const double z1 = z0 + (0.5 - gauss_off) * h;
    const double z2 = z0 + (0.5 + gauss_off) * h;
    const double ba1 = beta_a(z1);
    const double ba2 = beta_a(z2);
    const double d1 = 0.5 * (ba1 - beta_b);
    const double d2 = 0.5 * (ba2 - beta_b);
    const double az = 0.5 * h * (d1 + d2);                    // sigma_z coefficient
    const double ax = h * kap;                                // sigma_x
    const double ay = (std::sqrt(3.0) / 6.0) * h * h * kap * (d1 - d2);  // sigma_y
    const double norm = std::sqrt(az * az + ax * ax + ay * ay);
    double cosn = std::cos(norm);
    double sinc = norm > 1e-30 ? std::sin(norm) / norm : 1.0;
    const std::complex<double> i1(0.0, 1.0);
    // U = cos|v| I + i sinc(|v|) (ax sx + ay sy + az sz)
    const std::complex<double> u00 = cosn + i1 * sinc * az;
    const std::complex<double> u01 = i1 * sinc * ax + sinc * ay;
    const std::complex<double> u10 = i1 * sinc * ax - sinc * ay;
    const std::complex<double> u11 = cosn - i1 * sinc * az;
    State out;
    out.a = u00 * s.a + u01 * s.b;
    out.b = u10 * s.a + u11 * s.b;
    out.common = s.common + 0.25 * h * (ba1 + ba2 + 2.0 * beta_b);
    return out;
  };

  State s{1.0, 0.0, 0.0};
  double zpos = 0.0;
  double h = p.length / 64.0;
  const double h_min = p.length * 1e-12;
  int max_iter = 2000000;
  while (zpos < p.length) {
    if (--max_iter == 0)
      throw NumericError("cmt_transfer: step budget exhausted (stiff profile?)");
    if (h < h_min)
      throw NumericError("cmt_transfer: step-size underflow at z = " + format_double(zpos) +
                         " m; profile too stiff for requested tolerance");
    if (zpos + h > p.length) h = p.length - zpos;
    const State full = magnus_step(s, zpos, h);
    const State half1 = magnus_step(s, zpos, 0.5 * h);
    const State half2 = magnus_step(half1, zpos + 0.5 * h, 0.5 * h);
    const double err = std::sqrt(std::norm(half2.a - full.a) + std::norm(half2.b - full.b));
    const double tol_step = rel_tol * std::max(h / p.length, 1e-6);
    if (err <= tol_step) {
      s = half2;
      zpos += h;
      const double grow = err > 0.0 ? 0.9 * std::pow(tol_step / err, 0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(tol_step / err, 0.2));
    }
  }
  const std::complex<double> phase = std::exp(std::complex<double>(0.0, s.common));
  return {s.b * phase, s.a * phase};
}

// Worst-case ratio |d theta_m / dz| / delta_beta along the taper, where
// theta_m = atan2(2 kappa c/omega, n_a - n_b)/2 is the local mixing angle and
// delta_beta the local supermode splitting.  << 1 means adiabatic following.
inline double adiabaticity_score(const TaperProfile& p, Polarization pol, double omega,
                                 std::size_t refine = 4) {
  const CouplerModeData& md = p.mode(pol);
  md.check_window(omega);
  const double kap = md.kappa(omega);
  if (kap == 0.0) return 0.0;  // mixing angle is piecewise constant
  const double g = 2.0 * kap * c_light / omega;
  const std::size_t n = (p.z.size() - 1) * refine + 1;
  const double step = p.length / static_cast<double>(n - 1);
  std::vector<double> delta(n);
  const double nb = md.n_b(omega);
  for (std::size_t i = 0; i < n; ++i)
    delta[i] = md.n_a(p.width_at(static_cast<double>(i) * step), omega) - nb;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dprime = (delta[i + 1] - delta[i - 1]) / (2.0 * step);
    const double denom2 = delta[i] * delta[i] + g * g;
    const double theta_rate = 0.5 * std::abs(g * dprime) / denom2;  // |d theta_m/dz|
    const double split = omega / c_light * std::sqrt(denom2);       // delta_beta
    worst = std::max(worst, theta_rate / split);
  }
  return worst;
}

// Frequency-resolved transfer data; also the container for measured spectra.
// `provenance` records where the numbers came from: "simulated" for model
// output, "measured-file" for ingested lab data (synthetic stand-ins shipped
// with the presets carry "measured-file;synthetic-stand-in").
struct TransmissionSpectrum {
  std::vector<double> omega;  // ascending [rad/s]
  std::vector<double> value;  // T in [0, 1]
  Polarization pol = Polarization::te;
  std::string provenance = "simulated";

  double at(double om) const {
    if (omega.size() < 2) throw ConfigError("transmission spectrum needs >= 2 samples");
    if (om < omega.front() || om > omega.back())
      throw DomainError("transmission spectrum: omega " + format_double(om) +
                        " outside data range [" + format_double(omega.front()) + ", " +
                        format_double(omega.back()) + "] rad/s");
    auto it = std::upper_bound(omega.begin(), omega.end(), om);
    std::size_t i = it == omega.end() ? omega.size() - 1
                                      : static_cast<std::size_t>(it - omega.begin());
    if (i == 0) i = 1;
    const double t = (om - omega[i - 1]) / (omega[i] - omega[i - 1]);
    return (1.0 - t) * value[i - 1] + t * value[i];
  }
};

// |B(l)|^2 on a frequency grid; evaluations are independent per frequency and
// run concurrently with index-ordered (deterministic) output.
inline TransmissionSpectrum transmission_spectrum(const TaperProfile& p, Polarization pol,
                                                  const std::vector<double>& omega_grid,
                                                  double rel_tol = 1e-9) {
  TransmissionSpectrum out;
  out.omega = omega_grid;
  out.value.assign(omega_grid.size(), 0.0);
  out.pol = pol;
  out.provenance = "simulated";
  parallel_for(omega_grid.size(), [&](std::size_t i) {
    const CmtResult r = cmt_transfer(p, pol, omega_grid[i], rel_tol);
    out.value[i] = std::clamp(std::norm(r.b_out), 0.0, 1.0);
  });
  return out;
}

}  // namespace biphoton

#endif  // BIPHOTON_COUPLER_HPP
