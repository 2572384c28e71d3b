#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <biphoton/coupler.hpp>
#include <biphoton/presets.hpp>

#include "test_util.hpp"

using namespace biphoton;

namespace {

constexpr double kC = 299792458.0;

// Two-guide cross-section data that is constant in both width and frequency.
CouplerModeData uniform_mode_data(double na, double nb, double kap) {
  return CouplerModeData({1.0e-6, 2.0e-6}, {2.0e15, 2.8e15},
                         {{na, na}, {na, na}}, {nb, nb}, {kap, kap});
}

TaperProfile uniform_profile(double length, double width, const CouplerModeData& md) {
  const std::vector<double> z = {0.0, 0.5 * length, length};
  const std::vector<double> w = {width, width, width};
  return make_taper_profile(z, w, md, md);
}

// n_a varies linearly with width (3.0 at 1 um, 3.4 at 2 um), isolated guide.
CouplerModeData linear_isolated_data() {
  return CouplerModeData({1.0e-6, 2.0e-6}, {2.0e15, 2.8e15},
                         {{3.0, 3.0}, {3.4, 3.4}}, {1.0, 1.0}, {0.0, 0.0});
}

}  // namespace

TEST_CASE("supermode indices follow the two-level avoided-crossing formula") {
  const double na = 3.0, nb = 2.9, kap = 5.0e4, omega = 2.4e15;
  const auto [np, nm] = supermode_indices(na, nb, kap, omega);
  const double rad =
      std::sqrt(0.25 * (na - nb) * (na - nb) + (kap * kC / omega) * (kap * kC / omega));
  REQUIRE(np == Catch::Approx(0.5 * (na + nb) + rad).epsilon(1e-14));
  REQUIRE(nm == Catch::Approx(0.5 * (na + nb) - rad).epsilon(1e-14));
  // zero coupling: the split collapses to the bare index difference
  const auto [zp, zm] = supermode_indices(na, nb, 0.0, omega);
  REQUIRE(zp == Catch::Approx(na).epsilon(1e-14));
  REQUIRE(zm == Catch::Approx(nb).epsilon(1e-14));
}

TEST_CASE("synchronous uniform coupler transfers power as sin^2(kappa l)") {
  const double kap = 2000.0;  // rad/m
  const CouplerModeData md = uniform_mode_data(3.0, 3.0, kap);
  for (double length : {200e-6, 500e-6, 1200e-6}) {
    const TaperProfile p = uniform_profile(length, 1.5e-6, md);
    const CmtResult r = cmt_transfer(p, Polarization::te, 2.4e15);
    const double expect = std::sin(kap * length) * std::sin(kap * length);
    REQUIRE(std::abs(std::norm(r.b_out) - expect) < 1e-8);
    REQUIRE(std::abs(std::norm(r.a_out) + std::norm(r.b_out) - 1.0) < 1e-8);
  }
}

TEST_CASE("coupled-mode integration conserves power on the preset taper") {
  const presets::TaperDesign d;
  const TaperProfile p = presets::make_taper(d);
  const double wd = presets::degenerate_frequency();
  for (Polarization pol : {Polarization::te, Polarization::tm}) {
    for (double omega : {wd - 2.5e13, wd, wd + 2.5e13}) {
      const CmtResult r = cmt_transfer(p, pol, omega);
      REQUIRE(std::abs(std::norm(r.a_out) + std::norm(r.b_out) - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("accumulated taper phase integrates a linear profile exactly") {
  const CouplerModeData md = linear_isolated_data();
  const double length = 800e-6;
  std::vector<double> z, w;
  const std::size_t n = 9;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    z.push_back(s * length);
    w.push_back(1.2e-6 + 0.6e-6 * s);
  }
  const TaperProfile p = make_taper_profile(z, w, md, md);
  const double omega = 2.4e15;
  // n_a is linear in w, w linear in z: the exact integral is the midpoint mean
  const double n_mean = 0.5 * (3.0 + 0.4 * 0.2 + 3.0 + 0.4 * 0.8);
  const double expect = omega / kC * length * n_mean;
  REQUIRE(taper_phase(p, Polarization::te, omega) ==
          Catch::Approx(expect).epsilon(1e-13));

  // stretching the profile scales the phase linearly
  const double th1 = taper_phase(p, Polarization::te, omega);
  const double th2 = taper_phase(p.rescaled(2.0 * length), Polarization::te, omega);
  REQUIRE(th2 == Catch::Approx(2.0 * th1).epsilon(1e-12));
}

TEST_CASE("rescaling preserves the relative width profile") {
  const presets::TaperDesign d;
  const TaperProfile p = presets::make_taper(d);
  const TaperProfile q = p.rescaled(0.5 * p.length);
  for (double s : {0.1, 0.35, 0.8}) {
    REQUIRE(q.width_at(s * q.length) ==
            Catch::Approx(p.width_at(s * p.length)).epsilon(1e-12));
  }
  REQUIRE_THROWS_AS(p.rescaled(0.0), ConfigError);
}

TEST_CASE("branch following is refused when the start is exactly degenerate") {
  const CouplerModeData md = uniform_mode_data(3.0, 3.0, 0.0);
  const TaperProfile p = uniform_profile(400e-6, 1.5e-6, md);
  REQUIRE_THROWS_AS(taper_phase(p, Polarization::te, 2.4e15), NumericError);
}

TEST_CASE("taper profile construction validates its sampling") {
  const CouplerModeData md = uniform_mode_data(3.0, 2.9, 0.0);
  REQUIRE_THROWS_AS(make_taper_profile({0.0, 1e-4}, {1e-6, 1e-6}, md, md), ConfigError);
  REQUIRE_THROWS_AS(
      make_taper_profile({1e-5, 2e-5, 3e-5}, {1e-6, 1e-6, 1e-6}, md, md), ConfigError);
  REQUIRE_THROWS_AS(
      make_taper_profile({0.0, 2e-5, 2e-5}, {1e-6, 1e-6, 1e-6}, md, md), ConfigError);
  const TaperProfile p = uniform_profile(400e-6, 1.5e-6, md);
  REQUIRE_THROWS_AS(supermode_indices(p, Polarization::te, -1e-6, 2.4e15), DomainError);
  REQUIRE_THROWS_AS(supermode_indices(p, Polarization::te, 1e-4, 1.0e15), DomainError);
}

TEST_CASE("adiabaticity score vanishes for trivial geometries") {
  const CouplerModeData isolated = uniform_mode_data(3.0, 2.9, 0.0);
  REQUIRE(adiabaticity_score(uniform_profile(400e-6, 1.5e-6, isolated),
                             Polarization::te, 2.4e15) == 0.0);
  const CouplerModeData coupled = uniform_mode_data(3.0, 2.9, 3.0e4);
  REQUIRE(adiabaticity_score(uniform_profile(400e-6, 1.5e-6, coupled),
                             Polarization::te, 2.4e15) == 0.0);
}

TEST_CASE("longer tapers are more adiabatic") {
  const presets::TaperDesign d;
  const TaperProfile p = presets::make_taper(d);
  const double wd = presets::degenerate_frequency();
  const double s800 = adiabaticity_score(p, Polarization::te, wd);
  const double s1600 = adiabaticity_score(p.rescaled(1600e-6), Polarization::te, wd);
  REQUIRE(s800 > 0.0);
  REQUIRE(s1600 < s800);
  REQUIRE(s1600 == Catch::Approx(0.5 * s800).epsilon(0.05));
}

TEST_CASE("adiabatic phase matches the integrated transfer phase on a slow taper") {
  const presets::TaperDesign d;
  const TaperProfile p = presets::make_taper(d).rescaled(1600e-6);
  const double wd = presets::degenerate_frequency();
  REQUIRE(adiabaticity_score(p, Polarization::te, wd) < 0.05);
  const CmtResult r = cmt_transfer(p, Polarization::te, wd);
  const double theta = taper_phase(p, Polarization::te, wd);
  REQUIRE(std::abs(wrap_angle(std::arg(r.b_out) - theta)) < 0.05);
}

TEST_CASE("simulated transmission spectra are clamped, labelled, interpolable") {
  const presets::TaperDesign d;
  const TaperProfile p = presets::make_taper(d);
  const double wd = presets::degenerate_frequency();
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(wd - 2.0e13 + 4.0e12 * i);
  const TransmissionSpectrum t = transmission_spectrum(p, Polarization::te, grid);
  REQUIRE(t.pol == Polarization::te);
  REQUIRE(t.provenance == "simulated");
  REQUIRE(t.omega.size() == grid.size());
  for (double v : t.value) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
  // linear interpolation between samples, domain errors outside
  const double mid = 0.5 * (grid[3] + grid[4]);
  REQUIRE(t.at(mid) == Catch::Approx(0.5 * (t.value[3] + t.value[4])).margin(1e-12));
  REQUIRE(t.at(grid[0]) == Catch::Approx(t.value[0]).margin(1e-12));
  REQUIRE_THROWS_AS(t.at(grid[0] - 1.0e12), DomainError);
  REQUIRE_THROWS_AS(t.at(grid[10] + 1.0e12), DomainError);
  TransmissionSpectrum tiny;
  tiny.omega = {wd};
  tiny.value = {0.5};
  REQUIRE_THROWS_AS(tiny.at(wd), ConfigError);
}

TEST_CASE("width-profile CSV loader round-trips") {
  const auto dir = test_util::fresh_dir("coupler_csv");
  const auto path = dir / "widths.csv";
  test_util::write_file(path,
                        "z_m,w_m\n0,4.0e-6\n2.0e-4,3.0e-6\n4.0e-4,2.2e-6\n"
                        "6.0e-4,1.8e-6\n8.0e-4,1.6e-6\n");
  const auto [z, w] = load_width_profile_csv(path.string());
  REQUIRE(z.size() == 5);
  REQUIRE(z[2] == 4.0e-4);
  REQUIRE(w[4] == 1.6e-6);
}

TEST_CASE("local-index CSV loader demands a complete rectangular grid") {
  const auto dir = test_util::fresh_dir("coupler_index_csv");
  const auto good = dir / "grid.csv";
  test_util::write_file(good,
                        "w_m,omega_rad_per_s,n_eff\n"
                        "1.0e-6,2.0e15,3.00\n1.0e-6,2.8e15,3.02\n"
                        "2.0e-6,2.0e15,3.40\n2.0e-6,2.8e15,3.44\n");
  const Table2D tab = load_local_index_csv(good.string());
  REQUIRE(tab(1.0e-6, 2.0e15) == Catch::Approx(3.00).epsilon(1e-14));
  REQUIRE(tab(1.5e-6, 2.4e15) == Catch::Approx(0.5 * (3.01 + 3.42)).epsilon(1e-12));

  const auto bad = dir / "partial.csv";
  test_util::write_file(bad,
                        "w_m,omega_rad_per_s,n_eff\n"
                        "1.0e-6,2.0e15,3.00\n1.0e-6,2.8e15,3.02\n"
                        "2.0e-6,2.0e15,3.40\n");
  REQUIRE_THROWS_AS(load_local_index_csv(bad.string()), IoError);
}

TEST_CASE("coupling-strength CSV loader reads the shared frequency axis") {
  const auto dir = test_util::fresh_dir("coupler_kappa_csv");
  const auto path = dir / "kappa.csv";
  test_util::write_file(path,
                        "omega_rad_per_s,kappa_rad_per_m\n"
                        "2.0e15,1.0e4\n2.4e15,3.6e4\n2.8e15,1.0e4\n");
  const CubicSpline k = load_kappa_csv(path.string());
  REQUIRE(k(2.4e15) == Catch::Approx(3.6e4).epsilon(1e-12));
  const auto bad = dir / "bad.csv";
  test_util::write_file(bad,
                        "omega_rad_per_s,kappa_rad_per_m\n"
                        "2.4e15,1.0e4\n2.0e15,3.6e4\n");
  REQUIRE_THROWS(load_kappa_csv(bad.string()));
}
