#ifndef BIPHOTON_DISPERSION_HPP
#define BIPHOTON_DISPERSION_HPP

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biphoton/constants.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"
#include "biphoton/numerics.hpp"

namespace biphoton {

enum class ModeLabel {
  pump_te,
  signal_te,
  signal_tm,
  idler_te,
  idler_tm,
  si_te,
  si_tm,
};

inline std::string to_string(ModeLabel m) {
  switch (m) {
    case ModeLabel::pump_te: return "pump_TE";
    case ModeLabel::signal_te: return "signal_TE";
    case ModeLabel::signal_tm: return "signal_TM";
    case ModeLabel::idler_te: return "idler_TE";
    case ModeLabel::idler_tm: return "idler_TM";
    case ModeLabel::si_te: return "si_TE";
    case ModeLabel::si_tm: return "si_TM";
  }
  return "?";
}

// Effective-index model n_eff(omega) for one guided mode.  Either a
// polynomial about a reference frequency or a cubic-spline table; both carry
// an explicit validity window and refuse evaluation outside it.
class DispersionModel {
 public:
  static DispersionModel polynomial(ModeLabel label, double ref_omega,
                                    std::vector<double> coeffs,
                                    double omega_lo, double omega_hi) {
    DispersionModel m;
    m.label_ = label;
    m.ref_omega_ = ref_omega;
    m.coeffs_ = std::move(coeffs);
    m.omega_lo_ = omega_lo;
    m.omega_hi_ = omega_hi;
    m.validate_window();
    if (m.coeffs_.empty()) throw ConfigError("polynomial model needs >= 1 coefficient");
    return m;
  }

  static DispersionModel table(ModeLabel label, std::vector<double> omega,
                               std::vector<double> n_eff) {
    DispersionModel m;
    m.label_ = label;
    if (omega.size() < 4)
      throw ConfigError("table model needs >= 4 samples for cubic interpolation");
    m.omega_lo_ = omega.front();
    m.omega_hi_ = omega.back();
    m.spline_ = std::make_shared<CubicSpline>(std::move(omega), std::move(n_eff));
    m.validate_window();
    return m;
  }

  // CSV columns: omega_rad_per_s,n_eff (monotone increasing frequency).
  static DispersionModel from_table_csv(ModeLabel label, const std::string& path) {
    const CsvTable t = read_csv_file(path);
    const std::size_t co = t.column("omega_rad_per_s");
    const std::size_t cn = t.column("n_eff");
    std::vector<double> omega, n;
    omega.reserve(t.rows.size());
    n.reserve(t.rows.size());
    for (const auto& row : t.rows) {
      omega.push_back(row[co]);
      n.push_back(row[cn]);
    }
    for (std::size_t i = 1; i < omega.size(); ++i)
      if (!(omega[i] > omega[i - 1]))
        throw IoError(path + ": omega_rad_per_s must be strictly increasing (row " +
                      std::to_string(i + 2) + ")");
    return table(label, std::move(omega), std::move(n));
  }

  // JSON schema: {"ref_omega": <rad/s>, "coeffs": [...]} with an optional
  // "window": [lo, hi]; without one the model is valid on ref_omega +- 20%.
  static DispersionModel from_polynomial_json(ModeLabel label, const std::string& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ": " + e.what());
    }
    try {
      const double ref = j.at("ref_omega").get<double>();
      std::vector<double> coeffs = j.at("coeffs").get<std::vector<double>>();
      double lo = 0.8 * ref, hi = 1.2 * ref;
      if (j.contains("window")) {
        const auto window = j.at("window").get<std::vector<double>>();
        if (window.size() != 2) throw IoError(path + ": window must be [lo, hi]");
        lo = window[0];
        hi = window[1];
      }
      return polynomial(label, ref, std::move(coeffs), lo, hi);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ": " + e.what());
    }
  }

  ModeLabel label() const { return label_; }
  double omega_lo() const { return omega_lo_; }
  double omega_hi() const { return omega_hi_; }
  bool is_polynomial() const { return !spline_; }
  double ref_omega() const { return ref_omega_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  bool in_window(double omega) const {
    return omega >= omega_lo_ && omega <= omega_hi_;
  }

  double operator()(double omega) const {
    if (!in_window(omega))
      throw DomainError(to_string(label_) + ": omega " + format_double(omega) +
                        " outside validity window [" + format_double(omega_lo_) +
                        ", " + format_double(omega_hi_) + "] rad/s");
    if (spline_) return (*spline_)(omega);
    const double x = omega - ref_omega_;
    double acc = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
    return acc;
  }

 private:
  void validate_window() const {
    if (!(omega_lo_ < omega_hi_) || !std::isfinite(omega_lo_) || !std::isfinite(omega_hi_))
      throw ConfigError("validity window must be finite with lo < hi");
  }

  ModeLabel label_ = ModeLabel::signal_te;
  double ref_omega_ = 0.0;
  std::vector<double> coeffs_;
  std::shared_ptr<const CubicSpline> spline_;
  double omega_lo_ = 0.0, omega_hi_ = 0.0;
};

inline double eval_index(const DispersionModel& m, double omega) { return m(omega); }

// k(omega) = n_eff(omega) * omega / c  [rad/m]
inline double wavevector(const DispersionModel& m, double omega) {
  return m(omega) * omega / c_light;
}

// Group velocity from the 5-point central stencil on k(omega) with
// h = 1e-6 * omega.  The full stencil must sit inside the validity window.
inline double group_velocity(const DispersionModel& m, double omega) {
  const double h = 1e-6 * std::abs(omega);
  if (!(h > 0.0)) throw DomainError("group_velocity: omega must be non-zero");
  if (!m.in_window(omega - 2.0 * h) || !m.in_window(omega + 2.0 * h))
    throw DomainError(to_string(m.label()) +
                      ": group-velocity stencil leaves validity window [" +
                      format_double(m.omega_lo()) + ", " + format_double(m.omega_hi()) +
                      "] at omega " + format_double(omega));
  const double km2 = wavevector(m, omega - 2.0 * h);
  const double km1 = wavevector(m, omega - h);
  const double kp1 = wavevector(m, omega + h);
  const double kp2 = wavevector(m, omega + 2.0 * h);
  const double dk_domega = (km2 - 8.0 * km1 + 8.0 * kp1 - kp2) / (12.0 * h);
  if (dk_domega == 0.0) throw NumericError("group_velocity: dk/domega vanished");
  return 1.0 / dk_domega;
}

// Everything needed to evaluate collinear phase mismatch for a fixed pump.
struct PhaseMismatchContext {
  double pump_frequency = 0.0;   // omega_p [rad/s]
  double length = 0.0;           // generation-region length [m]
  DispersionModel pump;
  DispersionModel signal;
  DispersionModel idler;
};

// delta_k(omega_s) = k_p(omega_p) - k_s(omega_s) - k_i(omega_p - omega_s)
inline double phase_mismatch(const PhaseMismatchContext& ctx, double omega_s) {
  const double omega_i = ctx.pump_frequency - omega_s;
  return wavevector(ctx.pump, ctx.pump_frequency) - wavevector(ctx.signal, omega_s) -
         wavevector(ctx.idler, omega_i);
}

}  // namespace biphoton

#endif  // BIPHOTON_DISPERSION_HPP
