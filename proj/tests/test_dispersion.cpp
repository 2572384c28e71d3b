#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <biphoton/dispersion.hpp>
#include <biphoton/presets.hpp>

#include "test_util.hpp"

using namespace biphoton;

namespace {

constexpr double kC = 299792458.0;

DispersionModel cubic_model(ModeLabel label, double ref, double c0, double c1,
                            double c2, double c3) {
  return DispersionModel::polynomial(label, ref, {c0, c1, c2, c3}, 0.5 * ref,
                                     1.5 * ref);
}

}  // namespace

TEST_CASE("polynomial index model evaluates its Taylor series exactly") {
  const double ref = 2.4e15;
  const double c0 = 3.2, c1 = 1.7e-16, c2 = -2.5e-31, c3 = 1.0e-46;
  const DispersionModel m = cubic_model(ModeLabel::signal_te, ref, c0, c1, c2, c3);
  for (double omega : {2.0e15, 2.4e15, 2.8e15}) {
    const double d = omega - ref;
    const double expect = c0 + d * (c1 + d * (c2 + d * c3));
    REQUIRE(m(omega) == Catch::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("index models refuse evaluation outside their validity window") {
  const DispersionModel m = DispersionModel::polynomial(
      ModeLabel::signal_te, 2.4e15, {3.2}, 2.0e15, 2.8e15);
  REQUIRE_NOTHROW(m(2.0e15));
  REQUIRE_NOTHROW(m(2.8e15));
  REQUIRE_THROWS_AS(m(1.99e15), DomainError);
  REQUIRE_THROWS_AS(m(2.81e15), DomainError);
  REQUIRE_THROWS_AS(
      DispersionModel::polynomial(ModeLabel::signal_te, 2.4e15, {3.2}, 2.8e15, 2.0e15),
      ConfigError);
  REQUIRE_THROWS_AS(DispersionModel::polynomial(ModeLabel::signal_te, 2.4e15, {},
                                                2.0e15, 2.8e15),
                    ConfigError);
}

TEST_CASE("wavevector matches n(omega) * omega / c") {
  const double ref = 2.4e15;
  const DispersionModel m =
      cubic_model(ModeLabel::idler_tm, ref, 3.196, 1.6e-16, -2.5e-31, 0.9e-46);
  for (double omega : {2.1e15, 2.4e15, 2.7e15}) {
    REQUIRE(wavevector(m, omega) ==
            Catch::Approx(m(omega) * omega / kC).epsilon(1e-14));
  }
}

TEST_CASE("group velocity matches the analytic derivative for cubic models") {
  // k(omega) is quartic for a cubic index model; the five-point stencil is
  // exact through quartics, so the comparison should hit machine precision.
  const double ref = 2.4e15;
  const double c0 = 3.2, c1 = 1.7e-16, c2 = -2.5e-31, c3 = 1.0e-46;
  const DispersionModel m = cubic_model(ModeLabel::signal_te, ref, c0, c1, c2, c3);
  for (double omega : {2.1e15, 2.4e15, 2.65e15}) {
    const double d = omega - ref;
    const double n = c0 + d * (c1 + d * (c2 + d * c3));
    const double dn = c1 + d * (2.0 * c2 + d * 3.0 * c3);
    const double dk_domega = (n + omega * dn) / kC;
    REQUIRE(group_velocity(m, omega) ==
            Catch::Approx(1.0 / dk_domega).epsilon(1e-10));
  }
  // stencil must fit inside the window
  const DispersionModel tight = DispersionModel::polynomial(
      ModeLabel::signal_te, 2.4e15, {3.2}, 2.0e15, 2.8e15);
  REQUIRE_THROWS_AS(group_velocity(tight, 2.0e15), DomainError);
}

TEST_CASE("tabulated model reproduces linear data exactly and smooth data closely") {
  std::vector<double> omega, lin, smooth;
  const double lo = 2.0e15, hi = 2.8e15;
  const std::size_t n = 201;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    omega.push_back(w);
    lin.push_back(3.0 + 0.5e-15 * (w - lo));
    smooth.push_back(3.2 + 0.02 * std::sin((w - lo) / 2.0e14));
  }
  const DispersionModel ml = DispersionModel::table(ModeLabel::si_te, omega, lin);
  const DispersionModel ms = DispersionModel::table(ModeLabel::si_tm, omega, smooth);
  for (double w : {2.13e15, 2.4e15, 2.66e15}) {
    REQUIRE(ml(w) ==
            Catch::Approx(3.0 + 0.5e-15 * (w - lo)).epsilon(1e-12));
    REQUIRE(ms(w) ==
            Catch::Approx(3.2 + 0.02 * std::sin((w - lo) / 2.0e14)).margin(1e-8));
  }
  REQUIRE_THROWS_AS(DispersionModel::table(ModeLabel::si_te, {1.0, 2.0, 3.0},
                                           {1.0, 1.0, 1.0}),
                    ConfigError);
}

TEST_CASE("table CSV loader enforces monotone frequency and names the row") {
  const auto dir = test_util::fresh_dir("dispersion_csv");
  const auto good = dir / "good.csv";
  test_util::write_file(good,
                        "omega_rad_per_s,n_eff\n"
                        "2.0e15,3.00\n2.1e15,3.01\n2.2e15,3.02\n2.3e15,3.03\n");
  const DispersionModel m =
      DispersionModel::from_table_csv(ModeLabel::signal_tm, good.string());
  REQUIRE(m(2.15e15) == Catch::Approx(3.015).epsilon(1e-9));

  const auto bad = dir / "bad.csv";
  test_util::write_file(bad,
                        "omega_rad_per_s,n_eff\n"
                        "2.0e15,3.00\n2.2e15,3.01\n2.1e15,3.02\n2.3e15,3.03\n");
  REQUIRE_THROWS_WITH(
      DispersionModel::from_table_csv(ModeLabel::signal_tm, bad.string()),
      Catch::Matchers::ContainsSubstring("row 4"));
  REQUIRE_THROWS_AS(
      DispersionModel::from_table_csv(ModeLabel::signal_tm, (dir / "none.csv").string()),
      IoError);
}

TEST_CASE("polynomial JSON loader honours coefficients and optional window") {
  const auto dir = test_util::fresh_dir("dispersion_json");
  const auto path = dir / "mode.json";
  test_util::write_file(path,
                        "{\"ref_omega\": 2.4e15, \"coeffs\": [3.2, 1.0e-16],"
                        " \"window\": [2.2e15, 2.6e15]}");
  const DispersionModel m =
      DispersionModel::from_polynomial_json(ModeLabel::signal_te, path.string());
  REQUIRE(m(2.5e15) == Catch::Approx(3.2 + 1.0e-16 * 1.0e14).epsilon(1e-14));
  REQUIRE(m.omega_lo() == 2.2e15);
  REQUIRE(m.omega_hi() == 2.6e15);
  REQUIRE_THROWS_AS(m(2.7e15), DomainError);

  const auto defaulted = dir / "defaulted.json";
  test_util::write_file(defaulted, "{\"ref_omega\": 2.4e15, \"coeffs\": [3.2]}");
  const DispersionModel md =
      DispersionModel::from_polynomial_json(ModeLabel::signal_te, defaulted.string());
  REQUIRE(md.omega_lo() == Catch::Approx(0.8 * 2.4e15));
  REQUIRE(md.omega_hi() == Catch::Approx(1.2 * 2.4e15));

  const auto broken = dir / "broken.json";
  test_util::write_file(broken, "{\"coeffs\": [3.2]}");
  REQUIRE_THROWS_AS(
      DispersionModel::from_polynomial_json(ModeLabel::signal_te, broken.string()),
      IoError);
  REQUIRE_THROWS_AS(DispersionModel::from_polynomial_json(ModeLabel::signal_te,
                                                          (dir / "nope.json").string()),
                    IoError);
}

TEST_CASE("mode labels map to their canonical names") {
  REQUIRE(to_string(ModeLabel::pump_te) == "pump_TE");
  REQUIRE(to_string(ModeLabel::signal_te) == "signal_TE");
  REQUIRE(to_string(ModeLabel::signal_tm) == "signal_TM");
  REQUIRE(to_string(ModeLabel::idler_te) == "idler_TE");
  REQUIRE(to_string(ModeLabel::idler_tm) == "idler_TM");
  REQUIRE(to_string(ModeLabel::si_te) == "si_TE");
  REQUIRE(to_string(ModeLabel::si_tm) == "si_TM");
}

TEST_CASE("phase mismatch vanishes identically for index-matched constant models") {
  const double wp = 4.8e15, wd = 2.4e15;
  PhaseMismatchContext ctx;
  ctx.pump_frequency = wp;
  ctx.length = 2e-3;
  ctx.pump = DispersionModel::polynomial(ModeLabel::pump_te, wp, {3.2}, 0.9 * wp, 1.1 * wp);
  ctx.signal = DispersionModel::polynomial(ModeLabel::signal_te, wd, {3.2}, 0.5 * wd, 1.5 * wd);
  ctx.idler = DispersionModel::polynomial(ModeLabel::idler_tm, wd, {3.2}, 0.5 * wd, 1.5 * wd);
  for (double off : {-2.0e13, 0.0, 1.5e13})
    REQUIRE(std::abs(phase_mismatch(ctx, wd + off)) < 1e-6);
}

TEST_CASE("phase mismatch matches an independent recomputation") {
  PhaseMismatchContext ctx;
  ctx.pump_frequency = 4.8e15;
  ctx.length = 2e-3;
  ctx.pump = cubic_model(ModeLabel::pump_te, 4.8e15, 3.198, 1.2e-16, -1.0e-31, 0.0);
  ctx.signal = cubic_model(ModeLabel::signal_te, 2.4e15, 3.2, 1.7e-16, -2.5e-31, 1.0e-46);
  ctx.idler = cubic_model(ModeLabel::idler_tm, 2.4e15, 3.196, 1.6e-16, -2.55e-31, 0.9e-46);
  for (double ws : {2.38e15, 2.4e15, 2.43e15}) {
    const double wi = ctx.pump_frequency - ws;
    const double expect = wavevector(ctx.pump, ctx.pump_frequency) -
                          wavevector(ctx.signal, ws) - wavevector(ctx.idler, wi);
    REQUIRE(phase_mismatch(ctx, ws) == Catch::Approx(expect).margin(1e-9));
  }
}

TEST_CASE("preset source is phase matched at the degeneracy point") {
  const presets::DeviceModel dev = presets::device("straight");
  const PhaseMismatchContext ctx = dev.source_context();
  const double wd = 0.5 * ctx.pump_frequency;
  // |dk| ~ 1e7 rad/m away from degeneracy; matched to round-off at the centre
  REQUIRE(std::abs(phase_mismatch(ctx, wd)) < 1e-3);
  REQUIRE(std::abs(phase_mismatch(ctx, wd + 2.0e13)) > 1.0);
}
