// Command-line front end: loads one JSON configuration document, applies flag
// overrides (flags win), dispatches to the workbench commands, and maps error
// types onto documented exit codes.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biphoton/workbench.hpp"

namespace {

using biphoton::ConfigError;
using biphoton::DomainError;
using biphoton::IoError;
using biphoton::NumericError;
using biphoton::workbench::DeviceConfig;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void print_artifacts(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::printf("%s\n", p.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biphoton — joint-spectral-amplitude and coincidence workbench for "
               "hybrid nonlinear-waveguide devices"};
  app.set_version_flag("--version", biphoton::workbench::tool_version());
  app.require_subcommand(1);

  // global flags (apply to every subcommand)
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t grid_points = 0;
  double smooth_nm = -1.0;
  app.add_option("--config", config_path, "JSON configuration document");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  auto* seed_opt =
      app.add_option("--seed", seed, "seed override for sampled statistics");
  auto* grid_opt =
      app.add_option("--grid-points", grid_points, "spectral grid size override");
  auto* smooth_opt = app.add_option(
      "--smooth-nm", smooth_nm,
      "moving-average window for measured spectra [nm]; 0 disables smoothing");

  // pipeline
  auto* pipe = app.add_subcommand(
      "pipeline", "run the device chain and write states, interferograms and reports");
  std::string pipe_preset;
  std::vector<std::string> pipe_stages;
  bool pipe_anyonic = false;
  double pipe_taper_length = 0.0, pipe_fw_nm = 0.0, pipe_fw_rad = 0.0, pipe_fc = 0.0;
  pipe->add_option("--preset", pipe_preset, "straight, taper1, taper2 or taper3");
  pipe->add_option("--stages", pipe_stages,
                   "comma-separated prefix of source,couple,filter,hom,metrology")
      ->delimiter(',');
  pipe->add_flag("--anyonic-comparison", pipe_anyonic,
                 "add the fractional exchange-phase reference to the report");
  pipe->add_option("--taper-length", pipe_taper_length, "taper length [m]");
  pipe->add_option("--filter-width-nm", pipe_fw_nm, "rectangular filter width [nm]");
  pipe->add_option("--filter-width-rad", pipe_fw_rad,
                   "rectangular filter width [rad/s]");
  pipe->add_option("--filter-center", pipe_fc,
                   "filter centre [rad/s]; 0 means the degeneracy frequency");

  // sweep-taper
  auto* sweep = app.add_subcommand(
      "sweep-taper", "visibility, crossed transmission and asymmetry vs taper length");
  std::string sweep_preset;
  std::vector<double> sweep_lengths;
  sweep->add_option("--preset", sweep_preset, "taper1, taper2 or taper3");
  sweep->add_option("--lengths", sweep_lengths, "comma-separated lengths [m]")
      ->delimiter(',');

  // counts-sweep
  auto* counts = app.add_subcommand("counts-sweep",
                                    "sampled counting statistics vs pump power");
  double power_lo = 0.5, power_hi = 10.0;
  std::size_t power_points = 9;
  counts->add_option("--power-lo", power_lo, "lowest pump power [mW]")
      ->capture_default_str();
  counts->add_option("--power-hi", power_hi, "highest pump power [mW]")
      ->capture_default_str();
  counts->add_option("--points", power_points, "number of log-spaced powers")
      ->capture_default_str();

  // scaling
  auto* scaling = app.add_subcommand(
      "scaling", "Fisher-information ratio vs visibility for one preset");
  std::string scaling_preset;
  std::vector<double> scaling_targets;
  scaling->add_option("--preset", scaling_preset, "straight, taper1, taper2 or taper3");
  scaling->add_option("--targets", scaling_targets,
                      "comma-separated target visibilities in (0, 1]")
      ->delimiter(',');

  // fig
  auto* fig = app.add_subcommand("fig", "reproduce one bundled figure dataset");
  std::string fig_id;
  fig->add_option("id", fig_id, "one of 1c, 3, 4a, 4c, 4d, 4e, 4f")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    DeviceConfig cfg = config_path.empty() ? DeviceConfig{}
                                           : biphoton::workbench::load_config(config_path);
    if (seed_opt->count() > 0) {
      cfg.seed = seed;
      cfg.counts.rng_seed = seed;
    }
    if (grid_opt->count() > 0) cfg.grid_points = grid_points;
    if (smooth_opt->count() > 0) cfg.smooth_nm = smooth_nm;

    if (pipe->parsed()) {
      if (!pipe_preset.empty()) cfg.preset = pipe_preset;
      if (pipe_taper_length > 0.0) cfg.taper_length_m = pipe_taper_length;
      if (pipe_fw_nm > 0.0 || pipe_fw_rad > 0.0) {
        cfg.filter.enabled = true;
        cfg.filter.width_nm = pipe_fw_nm;
        cfg.filter.width_rad_per_s = pipe_fw_rad;
        if (pipe_fc > 0.0) cfg.filter.center_rad_per_s = pipe_fc;
      }
      if (pipe_anyonic) cfg.anyonic_comparison = true;
      // an empty stage list runs the whole chain
      print_artifacts(
          biphoton::workbench::run_pipeline(cfg, pipe_stages, out_dir).artifacts);
    } else if (sweep->parsed()) {
      if (!sweep_preset.empty()) cfg.preset = sweep_preset;
      if (sweep_lengths.empty())
        sweep_lengths = {300e-6, 400e-6, 500e-6, 600e-6, 800e-6, 1000e-6, 1200e-6, 1600e-6};
      print_artifacts(
          biphoton::workbench::cmd_sweep_taper(cfg, out_dir, sweep_lengths));
    } else if (counts->parsed()) {
      print_artifacts(biphoton::workbench::cmd_counts_sweep(cfg, out_dir, power_lo,
                                                            power_hi, power_points));
    } else if (scaling->parsed()) {
      if (!scaling_preset.empty()) cfg.preset = scaling_preset;
      print_artifacts(
          biphoton::workbench::cmd_scaling(cfg, out_dir, scaling_targets));
    } else if (fig->parsed()) {
      print_artifacts(biphoton::workbench::run_figure(cfg, fig_id, out_dir));
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
