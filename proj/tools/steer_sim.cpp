// SPDX-License-Identifier: Apache-2.0
// steer_sim: command-line driver for the beam-steering self-interference
// simulator. Data goes to files under --out; diagnostics go to stderr.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "steer_cli.hpp"

namespace {

const char* kUnitsNote =
    "Units: all angles in the configuration are degrees (azimuth theta, elevation phi); "
    "all SNRs, INRs and powers are dB. Keys are section.key, e.g. steer.inr_target_db.";

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("steer_sim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("STEER_SIM_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept "off" when spelled out.
    if (level != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("ignoring unknown STEER_SIM_LOG level '{}'", env);
    }
  }
}

void add_common(CLI::App* cmd, steer::cli::CommonOptions& opts, std::optional<std::uint64_t>& seed,
                std::optional<unsigned>& threads) {
  cmd->add_option("--config", opts.config_path, "Configuration file (INI); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", seed, "Override scenario.seed");
  cmd->add_option("--threads", threads, "Worker threads (0 = one per hardware thread)");
  cmd->add_option("--set", opts.overrides, "Override a configuration key: KEY=VALUE (repeatable)")
      ->allow_extra_args(false)
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Beam-steering self-interference simulator for full-duplex mmWave arrays"};
  app.footer(kUnitsNote);
  app.require_subcommand(1);

  steer::cli::CommonOptions opts;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> lookup_path;
  std::optional<std::string> grid_path;

  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo scenario; writes results.csv, summary.csv and CDFs");
  add_common(simulate, opts, seed, threads);
  simulate->add_option("--lookup", lookup_path, "Use a precomputed lookup table instead of solving per drop")
      ->check(CLI::ExistingFile);

  auto* sweep_target = app.add_subcommand("sweep-target", "Mean kappa per strategy versus INR target (dB)");
  add_common(sweep_target, opts, seed, threads);
  auto* sweep_nbhd = app.add_subcommand("sweep-neighborhood", "Mean kappa per strategy versus neighborhood size");
  add_common(sweep_nbhd, opts, seed, threads);
  auto* sweep_snr = app.add_subcommand("sweep-snr", "Mean kappa matrices over (snrbar_tx, snrbar_rx) in dB");
  add_common(sweep_snr, opts, seed, threads);

  auto* grid = app.add_subcommand("grid", "Export the INR of every reachable beam pair to inr_grid.csv");
  add_common(grid, opts, seed, threads);

  auto* precompute = app.add_subcommand("precompute", "Solve every codebook pair and write lookup.csv");
  add_common(precompute, opts, seed, threads);
  precompute->add_option("--grid", grid_path, "Measure from an INR grid file instead of the synthetic oracle")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  opts.seed = seed;
  opts.threads = threads;

  try {
    if (simulate->parsed()) {
      std::optional<std::filesystem::path> lookup;
      if (lookup_path) lookup = *lookup_path;
      steer::cli::cmd_simulate(opts, lookup);
    } else if (sweep_target->parsed()) {
      steer::cli::cmd_sweep(opts, steer::cli::SweepKind::Target);
    } else if (sweep_nbhd->parsed()) {
      steer::cli::cmd_sweep(opts, steer::cli::SweepKind::Neighborhood);
    } else if (sweep_snr->parsed()) {
      steer::cli::cmd_sweep(opts, steer::cli::SweepKind::Snr);
    } else if (grid->parsed()) {
      steer::cli::cmd_grid(opts);
    } else if (precompute->parsed()) {
      std::optional<std::filesystem::path> g;
      if (grid_path) g = *grid_path;
      steer::cli::cmd_precompute(opts, g);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
