// SPDX-License-Identifier: Apache-2.0
#pragma once

// Subcommand implementations for steer_sim. Each command loads and validates
// the configuration before doing any work and writes data files only under
// the output directory.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "steer/all.hpp"

namespace steer::cli {

struct CommonOptions {
  std::filesystem::path config_path;  // empty = built-in defaults
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
};

enum class SweepKind { Target, Neighborhood, Snr };

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline RunConfig load_config(const CommonOptions& opts) {
  RunConfig cfg;
  if (opts.config_path.empty()) {
    std::istringstream empty;
    cfg = parse_run_config(empty, opts.overrides);
  } else {
    cfg = load_run_config(opts.config_path, opts.overrides);
  }
  if (opts.seed) cfg.scenario.seed = *opts.seed;
  if (opts.threads) cfg.threads = *opts.threads;
  return cfg;
}

inline std::ofstream open_output(const std::filesystem::path& dir, std::string_view name) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  spdlog::debug("writing {}", path.string());
  return out;
}

inline std::string spec_string(const NeighborhoodSpec& s) {
  using csv::format_number;
  return format_number(s.delta_theta_deg) + ":" + format_number(s.delta_phi_deg) + ":" +
         format_number(s.res_theta_deg) + ":" + format_number(s.res_phi_deg);
}

inline Metadata run_metadata(const RunConfig& cfg, const Testbed& tb) {
  const Scenario& s = cfg.scenario;
  return {{"mode", std::string(to_string(s.mode))},
          {"n_drops", std::to_string(s.n_drops)},
          {"seed", std::to_string(s.seed)},
          {"oracle_model", cfg.oracle_model},
          {"si_ref_inr_db", csv::format_number(tb.si_ref_inr_db)},
          {"inr_target_db", csv::format_number(s.steer_config.inr_target_db)},
          {"neighborhood", spec_string(s.steer_config.tx_spec)},
          {"snrbar_tx_db", csv::format_number(s.budget.snrbar_tx_db)},
          {"snrbar_rx_db", csv::format_number(s.budget.snrbar_rx_db)},
          {"inr_tx_db", csv::format_number(s.budget.inr_tx_db)}};
}

inline std::string strategy_slug(Strategy s) {
  std::string out(to_string(s));
  std::transform(out.begin(), out.end(), out.begin(), [](char c) { return c == '-' ? '_' : static_cast<char>(std::tolower(c)); });
  return out;
}

inline void log_oracle(const InrOracle& oracle) {
  const OracleStats st = oracle.stats();
  spdlog::info("oracle queries: {} ({} from cache)", st.queries_total, st.queries_served_from_cache);
}

inline void write_summary(const Summary& s, const Metadata& meta, std::ostream& out) {
  using csv::format_number;
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
  out << "metric,value\n";
  out << "drops," << s.drops << '\n';
  for (Strategy k : kAllStrategies) {
    out << "mean_kappa_" << strategy_slug(k) << ',' << format_number(s.mean_kappa[static_cast<std::size_t>(k)])
        << '\n';
  }
  for (Strategy k : kAllStrategies) {
    out << "mean_r_sum_" << strategy_slug(k) << ',' << format_number(s.mean_r_sum[static_cast<std::size_t>(k)])
        << '\n';
  }
  out << "mean_fraction_measured," << format_number(s.mean_fraction_measured) << '\n';
  out << "fraction_target_met," << format_number(s.fraction_target_met) << '\n';
  out << "median_inr_nominal_db," << format_number(s.median_inr_nominal_db) << '\n';
  out << "median_inr_steer_db," << format_number(s.median_inr_steer_db) << '\n';
}

/// SNR minus SINR on the receive link, in dB.
inline double sinr_gap_db(const StrategyResult& r) {
  return linear_to_db(r.snr_rx) - linear_to_db(sinr(r.snr_rx, db_to_linear(r.inr_rx_db)));
}

inline void write_distribution_files(const std::vector<DropResult>& results, const SteerConfig& steer_cfg,
                                     const Metadata& meta, const std::filesystem::path& dir) {
  std::vector<double> nom, st, gap_conv, gap_steer, fraction;
  const double pairs = static_cast<double>(steer_cfg.pair_count());
  for (const auto& r : results) {
    nom.push_back(r.outcome.inr_nom_db);
    st.push_back(r.outcome.steer.inr_achieved_db);
    gap_conv.push_back(sinr_gap_db(r.of(Strategy::FdConv)));
    gap_steer.push_back(sinr_gap_db(r.of(Strategy::FdSteer)));
    fraction.push_back(static_cast<double>(r.outcome.steer.measurements_used) / pairs);
  }
  auto out = open_output(dir, "inr_cdf_nominal.csv");
  write_cdf(empirical_cdf(std::move(nom)), "inr_rx_db", meta, out);
  out = open_output(dir, "inr_cdf_steer.csv");
  write_cdf(empirical_cdf(std::move(st)), "inr_rx_db", meta, out);
  out = open_output(dir, "sinr_gap_cdf_fd_conv.csv");
  write_cdf(empirical_cdf(std::move(gap_conv)), "sinr_gap_db", meta, out);
  out = open_output(dir, "sinr_gap_cdf_fd_steer.csv");
  write_cdf(empirical_cdf(std::move(gap_steer)), "sinr_gap_db", meta, out);
  out = open_output(dir, "measurement_fraction_cdf.csv");
  write_cdf(empirical_cdf(std::move(fraction)), "fraction_measured", meta, out);
}

/// Runs the scenario and writes results.csv, summary.csv and the CDF files.
/// With a lookup path, STEER selections come from the precomputed table.
inline std::vector<DropResult> cmd_simulate(const CommonOptions& opts,
                                            const std::optional<std::filesystem::path>& lookup_path = {}) {
  const RunConfig cfg = load_config(opts);
  Testbed tb = make_testbed(cfg);
  std::optional<LookupTable> lookup;
  if (lookup_path) {
    lookup = read_lookup(*lookup_path, tb.codebook_tx, tb.codebook_rx);
    spdlog::info("loaded lookup table {} ({} entries)", lookup_path->string(), lookup->size());
  }
  spdlog::info("simulating {} drops ({}), seed {}", cfg.scenario.n_drops, to_string(cfg.scenario.mode),
               cfg.scenario.seed);
  const auto results = run_scenario(cfg.scenario, *tb.oracle, tb.codebook_tx, tb.codebook_rx, cfg.threads,
                                    lookup ? &*lookup : nullptr);
  log_oracle(*tb.oracle);

  Metadata meta = run_metadata(cfg, tb);
  auto out = open_output(opts.out_dir, "results.csv");
  write_results(results, cfg.scenario.mode, out);
  out = open_output(opts.out_dir, "summary.csv");
  write_summary(summarize(results, cfg.scenario.steer_config), meta, out);
  write_distribution_files(results, cfg.scenario.steer_config, meta, opts.out_dir);
  return results;
}

inline void write_snr_grid(const SnrGrid& grid, const Metadata& meta, const std::filesystem::path& dir) {
  for (Strategy s : kAllStrategies) {
    Metadata m = meta;
    m.emplace_back("strategy", std::string(to_string(s)));
    auto out = open_output(dir, "kappa_" + strategy_slug(s) + ".csv");
    write_matrix(grid.snr_tx_db, grid.snr_rx_db, grid.kappa[static_cast<std::size_t>(s)], m, out);
  }
  // Long-format view of where FD-STEER does no better than half-duplexing.
  auto out = open_output(dir, "halfduplex_region.csv");
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
  out << "snr_tx_db,snr_rx_db,kappa_fd_conv,kappa_fd_steer,fd_conv_halfduplex,fd_steer_halfduplex\n";
  const auto& conv = grid.kappa[static_cast<std::size_t>(Strategy::FdConv)];
  const auto& st = grid.kappa[static_cast<std::size_t>(Strategy::FdSteer)];
  for (std::size_t a = 0; a < grid.snr_tx_db.size(); ++a) {
    for (std::size_t b = 0; b < grid.snr_rx_db.size(); ++b) {
      out << csv::format_number(grid.snr_tx_db[a]) << ',' << csv::format_number(grid.snr_rx_db[b]) << ','
          << csv::format_number(conv[a][b]) << ',' << csv::format_number(st[a][b]) << ','
          << (conv[a][b] <= 0.5 ? 1 : 0) << ',' << (st[a][b] <= 0.5 ? 1 : 0) << '\n';
    }
  }
}

inline void cmd_sweep(const CommonOptions& opts, SweepKind kind) {
  const RunConfig cfg = load_config(opts);
  Testbed tb = make_testbed(cfg);
  const Metadata meta = run_metadata(cfg, tb);
  switch (kind) {
    case SweepKind::Target: {
      spdlog::info("target sweep over {} values", cfg.sweep_targets_db.size());
      const auto rows = sweep_target(cfg.scenario, *tb.oracle, tb.codebook_tx, tb.codebook_rx,
                                     cfg.sweep_targets_db, cfg.threads);
      auto out = open_output(opts.out_dir, "sweep_target.csv");
      write_sweep(rows, meta, out);
      break;
    }
    case SweepKind::Neighborhood: {
      spdlog::info("neighborhood sweep over {} specs", cfg.sweep_neighborhoods.size());
      const auto rows = sweep_neighborhood(cfg.scenario, *tb.oracle, tb.codebook_tx, tb.codebook_rx,
                                           cfg.sweep_neighborhoods, cfg.threads);
      auto out = open_output(opts.out_dir, "sweep_neighborhood.csv");
      write_sweep(rows, meta, out);
      break;
    }
    case SweepKind::Snr: {
      spdlog::info("SNR sweep over {}x{} cells", cfg.sweep_snr_tx_db.size(), cfg.sweep_snr_rx_db.size());
      const auto grid = snr_grid_sweep(cfg.scenario, *tb.oracle, tb.codebook_tx, tb.codebook_rx,
                                       cfg.sweep_snr_tx_db, cfg.sweep_snr_rx_db, cfg.threads);
      write_snr_grid(grid, meta, opts.out_dir);
      break;
    }
  }
  log_oracle(*tb.oracle);
}

/// Distinct directions of every neighborhood around the codebook beams,
/// sorted in grid-file key order.
inline std::vector<SteeringDirection> neighborhood_directions(const Codebook& cb, const NeighborhoodSpec& spec) {
  std::map<DirectionKey, SteeringDirection, decltype([](const DirectionKey& a, const DirectionKey& b) {
             return std::tie(a.az, a.el) < std::tie(b.az, b.el);
           })>
      unique;
  const auto offsets = neighborhood_offsets(spec);
  for (const auto& d : cb.directions) {
    for (const auto& o : offsets) {
      const SteeringDirection v{d.azimuth_deg + o.azimuth_deg, d.elevation_deg + o.elevation_deg};
      require_valid(v);
      unique.try_emplace(DirectionKey::of(v), v);
    }
  }
  std::vector<SteeringDirection> out;
  out.reserve(unique.size());
  for (const auto& [k, v] : unique) out.push_back(v);
  return out;
}

/// Writes the INR of every beam pair STEER can visit from any codebook pair:
/// the product of all transmit and all receive neighborhood directions. Rows
/// are streamed, so the file can be far larger than what fits in an InrGrid.
inline std::filesystem::path cmd_grid(const CommonOptions& opts) {
  const RunConfig cfg = load_config(opts);
  Testbed tb = make_testbed(cfg);
  const SteerConfig& sc = cfg.scenario.steer_config;
  const auto tx_dirs = neighborhood_directions(tb.codebook_tx, sc.tx_spec);
  const auto rx_dirs = neighborhood_directions(tb.codebook_rx, sc.rx_spec);
  spdlog::info("grid: {} x {} beam pairs", tx_dirs.size(), rx_dirs.size());

  auto out = open_output(opts.out_dir, "inr_grid.csv");
  for (const auto& [k, v] : run_metadata(cfg, tb)) out << "# " << k << '=' << v << '\n';
  const auto on_lattice = [](const std::vector<SteeringDirection>& dirs, double res_az, double res_el) {
    return std::all_of(dirs.begin(), dirs.end(), [&](const SteeringDirection& d) {
      return detail::on_lattice(d.azimuth_deg, res_az) && detail::on_lattice(d.elevation_deg, res_el);
    });
  };
  const double res_az = sc.tx_spec.res_theta_deg;
  const double res_el = sc.tx_spec.res_phi_deg;
  if (res_az == sc.rx_spec.res_theta_deg && res_el == sc.rx_spec.res_phi_deg &&
      on_lattice(tx_dirs, res_az, res_el) && on_lattice(rx_dirs, res_az, res_el)) {
    out << "# res_theta_deg=" << csv::format_number(res_az) << '\n';
    out << "# res_phi_deg=" << csv::format_number(res_el) << '\n';
  }
  out << kGridHeader << '\n';

  // Blocks of transmit directions are measured in parallel, then written in order.
  const std::size_t block = std::max<std::size_t>(1, 4 * resolve_threads(cfg.threads));
  std::vector<std::vector<double>> values(block, std::vector<double>(rx_dirs.size()));
  for (std::size_t start = 0; start < tx_dirs.size(); start += block) {
    const std::size_t n = std::min(block, tx_dirs.size() - start);
    parallel_for(n, cfg.threads, [&](std::size_t b) {
      for (std::size_t r = 0; r < rx_dirs.size(); ++r) {
        values[b][r] = tb.oracle->query_inr_db(tx_dirs[start + b], rx_dirs[r]);
      }
    });
    for (std::size_t b = 0; b < n; ++b) {
      const auto& t = tx_dirs[start + b];
      const std::string prefix =
          csv::format_number(t.azimuth_deg) + ',' + csv::format_number(t.elevation_deg) + ',';
      for (std::size_t r = 0; r < rx_dirs.size(); ++r) {
        out << prefix << csv::format_number(rx_dirs[r].azimuth_deg) << ','
            << csv::format_number(rx_dirs[r].elevation_deg) << ',' << csv::format_number(values[b][r]) << '\n';
      }
    }
  }
  if (!out) throw Error("failed writing INR grid");
  log_oracle(*tb.oracle);
  return opts.out_dir / "inr_grid.csv";
}

/// Solves STEER for every codebook pair and writes lookup.csv. The oracle is
/// the configured one, or a grid file when `grid_path` is given.
inline std::filesystem::path cmd_precompute(const CommonOptions& opts,
                                            const std::optional<std::filesystem::path>& grid_path = {}) {
  CommonOptions o = opts;
  if (grid_path) {
    o.overrides.push_back("oracle.model=file");
    o.overrides.push_back("oracle.grid_path=" + grid_path->string());
  }
  const RunConfig cfg = load_config(o);
  Testbed tb = make_testbed(cfg);
  spdlog::info("precomputing {} x {} beam pairs", tb.codebook_tx.size(), tb.codebook_rx.size());
  const LookupTable table =
      precompute_lookup(*tb.oracle, tb.codebook_tx, tb.codebook_rx, cfg.scenario.steer_config, cfg.threads);
  std::filesystem::create_directories(opts.out_dir);
  const auto path = opts.out_dir / "lookup.csv";
  write_lookup(table, path);
  log_oracle(*tb.oracle);
  return path;
}

}  // namespace steer::cli
