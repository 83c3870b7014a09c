// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte Carlo evaluation: random user drops, conventional alignment on each
// link, STEER around the aligned beams, and the four multiplexing strategies.
//
// Drop u draws its user directions from a private generator seeded by
// (seed, u), so results do not depend on worker count and every sweep value
// sees the same drops.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steer/alignment.hpp"
#include "steer/csv.hpp"
#include "steer/parallel.hpp"
#include "steer/steer.hpp"

namespace steer {

enum class DuplexMode { DlDl, UlUl };

inline std::string_view to_string(DuplexMode m) { return m == DuplexMode::DlDl ? "DL-DL" : "UL-UL"; }

inline DuplexMode duplex_mode_from_string(std::string_view s) {
  if (s == "DL-DL") return DuplexMode::DlDl;
  if (s == "UL-UL") return DuplexMode::UlUl;
  throw ConfigError("unknown duplex mode '" + std::string(s) + "' (expected DL-DL or UL-UL)");
}

struct Scenario {
  AngleRange drop_region_az{-60.0, 60.0};
  AngleRange drop_region_el{-28.0, 28.0};
  LinkBudget budget;
  SteerConfig steer_config{NeighborhoodSpec{2.0, 2.0, 1.0, 1.0}, -7.0};
  std::size_t n_drops = 10000;
  std::uint64_t seed = 1;
  DuplexMode mode = DuplexMode::DlDl;
};

/// A drop region is covered if it lies within half a beam spacing of the
/// outermost codebook directions.
inline void validate_scenario(const Scenario& s, const Codebook& cb_tx, const Codebook& cb_rx) {
  if (s.n_drops == 0) throw ConfigError("n_drops must be >= 1");
  if (!(s.drop_region_az.hi >= s.drop_region_az.lo) || !(s.drop_region_el.hi >= s.drop_region_el.lo)) {
    throw ConfigError("drop region has hi < lo");
  }
  s.steer_config.validate();
  for (const Codebook* cb : {&cb_tx, &cb_rx}) {
    if (cb->empty()) throw ConfigError("empty codebook");
    const double half = cb->spacing_deg / 2.0;
    if (s.drop_region_az.lo < cb->azimuth_range_deg.lo - half - 1e-9 ||
        s.drop_region_az.hi > cb->azimuth_range_deg.hi + half + 1e-9 ||
        s.drop_region_el.lo < cb->elevation_range_deg.lo - half - 1e-9 ||
        s.drop_region_el.hi > cb->elevation_range_deg.hi + half + 1e-9) {
      throw ConfigError("drop region extends beyond codebook coverage");
    }
  }
}

/// Per-drop quantities that do not depend on the link budget.
struct DropOutcome {
  std::size_t drop = 0;
  SteeringDirection user_tx;  // transmit-link user
  SteeringDirection user_rx;  // receive-link user
  std::size_t beam_tx = 0;
  std::size_t beam_rx = 0;
  SteeringDirection nominal_tx;
  SteeringDirection nominal_rx;
  double gain_tx_nom = 0.0;  // |h^H f|^2 / Na
  double gain_rx_nom = 0.0;
  double inr_nom_db = 0.0;
  SteerSolution steer;
  double gain_tx_sel = 0.0;
  double gain_rx_sel = 0.0;
};

struct StrategyResult {
  Strategy strategy = Strategy::Tdd;
  double snr_tx = 0.0;
  double snr_rx = 0.0;
  double inr_rx_db = kNegInf;
  LinkRates rates;
};

struct DropResult {
  DropOutcome outcome;
  double snr_tx_nom = 0.0;
  double snr_rx_nom = 0.0;
  double snr_tx_sel = 0.0;
  double snr_rx_sel = 0.0;
  std::array<StrategyResult, 4> strategies;

  const StrategyResult& of(Strategy s) const { return strategies[static_cast<std::size_t>(s)]; }
};

/// Drop setup: user directions and conventional alignment.
struct DropSetup {
  std::size_t drop = 0;
  SteeringDirection user_tx;
  SteeringDirection user_rx;
  std::size_t beam_tx = 0;
  std::size_t beam_rx = 0;
  double gain_tx_nom = 0.0;
  double gain_rx_nom = 0.0;
};

inline std::mt19937_64 drop_generator(std::uint64_t seed, std::size_t drop) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(drop), static_cast<std::uint32_t>(std::uint64_t(drop) >> 32)};
  return std::mt19937_64(seq);
}

inline std::vector<DropSetup> prepare_drops(const Scenario& scenario, const Codebook& cb_tx,
                                            const Codebook& cb_rx, unsigned threads = 1) {
  validate_scenario(scenario, cb_tx, cb_rx);
  std::vector<DropSetup> setups(scenario.n_drops);
  parallel_for(scenario.n_drops, threads, [&](std::size_t u) {
    auto rng = drop_generator(scenario.seed, u);
    std::uniform_real_distribution<double> az(scenario.drop_region_az.lo, scenario.drop_region_az.hi);
    std::uniform_real_distribution<double> el(scenario.drop_region_el.lo, scenario.drop_region_el.hi);
    const double tx_az = az(rng);
    const double tx_el = el(rng);
    const double rx_az = az(rng);
    const double rx_el = el(rng);
    DropSetup s;
    s.drop = u;
    s.user_tx = {tx_az, tx_el};
    s.user_rx = {rx_az, rx_el};
    const AlignmentResult at = align(cb_tx, los_channel(cb_tx.geometry, s.user_tx), 0.0);
    const AlignmentResult ar = align(cb_rx, los_channel(cb_rx.geometry, s.user_rx), 0.0);
    s.beam_tx = at.beam_index;
    s.beam_rx = ar.beam_index;
    s.gain_tx_nom = at.snr_nom;  // snrbar 0 dB, so this is the normalized gain
    s.gain_rx_nom = ar.snr_nom;
    setups[u] = std::move(s);
  });
  return setups;
}

/// Runs STEER for prepared drops. With `lookup`, selections come from the
/// table instead of fresh solves.
template <InrSource Oracle>
std::vector<DropOutcome> evaluate_drops(const std::vector<DropSetup>& setups, Oracle& oracle,
                                        const Codebook& cb_tx, const Codebook& cb_rx,
                                        const SteerConfig& config, const LookupTable* lookup = nullptr,
                                        unsigned threads = 1) {
  config.validate();
  if (lookup && (lookup->n_tx() != cb_tx.size() || lookup->n_rx() != cb_rx.size())) {
    throw ConfigError("lookup table does not match the codebooks");
  }
  std::vector<DropOutcome> out(setups.size());
  parallel_for(setups.size(), threads, [&](std::size_t u) {
    const DropSetup& s = setups[u];
    DropOutcome o;
    o.drop = s.drop;
    o.user_tx = s.user_tx;
    o.user_rx = s.user_rx;
    o.beam_tx = s.beam_tx;
    o.beam_rx = s.beam_rx;
    o.nominal_tx = cb_tx.directions[s.beam_tx];
    o.nominal_rx = cb_rx.directions[s.beam_rx];
    o.gain_tx_nom = s.gain_tx_nom;
    o.gain_rx_nom = s.gain_rx_nom;
    o.inr_nom_db = oracle.query_inr_db(o.nominal_tx, o.nominal_rx);
    o.steer = lookup ? lookup->at(s.beam_tx, s.beam_rx)
                     : solve_steer_incremental(oracle, o.nominal_tx, o.nominal_rx, config);
    o.gain_tx_sel =
        normalized_gain(los_channel(cb_tx.geometry, s.user_tx), conjugate_beam(cb_tx.geometry, o.steer.d_tx_star));
    o.gain_rx_sel =
        normalized_gain(los_channel(cb_rx.geometry, s.user_rx), conjugate_beam(cb_rx.geometry, o.steer.d_rx_star));
    out[u] = o;
  });
  return out;
}

/// Applies a link budget to a drop outcome.
inline DropResult apply_budget(const DropOutcome& o, const LinkBudget& budget) {
  DropResult r;
  r.outcome = o;
  const double snrbar_tx = db_to_linear(budget.snrbar_tx_db);
  const double snrbar_rx = db_to_linear(budget.snrbar_rx_db);
  r.snr_tx_nom = snrbar_tx * o.gain_tx_nom;
  r.snr_rx_nom = snrbar_rx * o.gain_rx_nom;
  r.snr_tx_sel = snrbar_tx * o.gain_tx_sel;
  r.snr_rx_sel = snrbar_rx * o.gain_rx_sel;
  const double inr_nom = db_to_linear(o.inr_nom_db);
  const double inr_steer = db_to_linear(o.steer.inr_achieved_db);
  for (Strategy s : kAllStrategies) {
    StrategyResult& sr = r.strategies[static_cast<std::size_t>(s)];
    sr.strategy = s;
    switch (s) {
      case Strategy::Tdd:
      case Strategy::TddPc:
        sr.snr_tx = r.snr_tx_nom;
        sr.snr_rx = r.snr_rx_nom;
        sr.inr_rx_db = kNegInf;
        sr.rates = strategy_rates(budget, r.snr_tx_nom, r.snr_rx_nom, r.snr_tx_nom, r.snr_rx_nom, 0.0, s);
        break;
      case Strategy::FdConv:
        sr.snr_tx = r.snr_tx_nom;
        sr.snr_rx = r.snr_rx_nom;
        sr.inr_rx_db = o.inr_nom_db;
        sr.rates = strategy_rates(budget, r.snr_tx_nom, r.snr_rx_nom, r.snr_tx_nom, r.snr_rx_nom, inr_nom, s);
        break;
      case Strategy::FdSteer:
        sr.snr_tx = r.snr_tx_sel;
        sr.snr_rx = r.snr_rx_sel;
        sr.inr_rx_db = o.steer.inr_achieved_db;
        sr.rates = strategy_rates(budget, r.snr_tx_nom, r.snr_rx_nom, r.snr_tx_sel, r.snr_rx_sel, inr_steer, s);
        break;
    }
  }
  return r;
}

template <InrSource Oracle>
std::vector<DropResult> run_scenario(const Scenario& scenario, Oracle& oracle, const Codebook& cb_tx,
                                     const Codebook& cb_rx, unsigned threads = 1,
                                     const LookupTable* lookup = nullptr) {
  const auto setups = prepare_drops(scenario, cb_tx, cb_rx, threads);
  const auto outcomes = evaluate_drops(setups, oracle, cb_tx, cb_rx, scenario.steer_config, lookup, threads);
  std::vector<DropResult> results;
  results.reserve(outcomes.size());
  for (const auto& o : outcomes) results.push_back(apply_budget(o, scenario.budget));
  return results;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Empirical CDF: sorted distinct values paired with the fraction of samples
/// at or below them.
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k + 1 < values.size() && values[k + 1] == values[k]) continue;
    out.emplace_back(values[k], static_cast<double>(k + 1) / n);
  }
  return out;
}

struct Summary {
  std::size_t drops = 0;
  std::array<double, 4> mean_kappa{};
  std::array<double, 4> mean_r_sum{};
  double mean_fraction_measured = 0.0;
  double median_inr_nominal_db = 0.0;
  double median_inr_steer_db = 0.0;
  double fraction_target_met = 0.0;
};

inline Summary summarize(const std::vector<DropResult>& results, const SteerConfig& config) {
  Summary s;
  s.drops = results.size();
  if (results.empty()) return s;
  const double pairs = static_cast<double>(config.pair_count());
  std::vector<double> nom, st;
  for (const auto& r : results) {
    for (Strategy k : kAllStrategies) {
      s.mean_kappa[static_cast<std::size_t>(k)] += r.of(k).rates.kappa_sum;
      s.mean_r_sum[static_cast<std::size_t>(k)] += r.of(k).rates.r_sum;
    }
    s.mean_fraction_measured += static_cast<double>(r.outcome.steer.measurements_used) / pairs;
    s.fraction_target_met += r.outcome.steer.target_met ? 1.0 : 0.0;
    nom.push_back(r.outcome.inr_nom_db);
    st.push_back(r.outcome.steer.inr_achieved_db);
  }
  const double n = static_cast<double>(results.size());
  for (auto& v : s.mean_kappa) v /= n;
  for (auto& v : s.mean_r_sum) v /= n;
  s.mean_fraction_measured /= n;
  s.fraction_target_met /= n;
  s.median_inr_nominal_db = median(std::move(nom));
  s.median_inr_steer_db = median(std::move(st));
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double target_db = 0.0;
  NeighborhoodSpec spec;
  Summary summary;
};

/// Mean kappa per strategy as a function of the INR target. Drops are shared
/// across targets and the oracle's cache carries measurements over.
template <InrSource Oracle>
std::vector<SweepRow> sweep_target(const Scenario& scenario, Oracle& oracle, const Codebook& cb_tx,
                                   const Codebook& cb_rx, const std::vector<double>& targets_db,
                                   unsigned threads = 1) {
  const auto setups = prepare_drops(scenario, cb_tx, cb_rx, threads);
  std::vector<SweepRow> rows;
  for (double t : targets_db) {
    SteerConfig cfg = scenario.steer_config;
    cfg.inr_target_db = t;
    const auto outcomes = evaluate_drops(setups, oracle, cb_tx, cb_rx, cfg, nullptr, threads);
    std::vector<DropResult> results;
    results.reserve(outcomes.size());
    for (const auto& o : outcomes) results.push_back(apply_budget(o, scenario.budget));
    rows.push_back({t, cfg.tx_spec, summarize(results, cfg)});
  }
  return rows;
}

/// Same as sweep_target but over neighborhood specs (shared by both links).
template <InrSource Oracle>
std::vector<SweepRow> sweep_neighborhood(const Scenario& scenario, Oracle& oracle, const Codebook& cb_tx,
                                         const Codebook& cb_rx, const std::vector<NeighborhoodSpec>& specs,
                                         unsigned threads = 1) {
  const auto setups = prepare_drops(scenario, cb_tx, cb_rx, threads);
  std::vector<SweepRow> rows;
  for (const auto& spec : specs) {
    const SteerConfig cfg(spec, scenario.steer_config.inr_target_db);
    const auto outcomes = evaluate_drops(setups, oracle, cb_tx, cb_rx, cfg, nullptr, threads);
    std::vector<DropResult> results;
    results.reserve(outcomes.size());
    for (const auto& o : outcomes) results.push_back(apply_budget(o, scenario.budget));
    rows.push_back({cfg.inr_target_db, spec, summarize(results, cfg)});
  }
  return rows;
}

/// Mean kappa per strategy over a (snrbar_tx, snrbar_rx) grid. Beam selection
/// does not depend on SNR, so STEER runs once per drop.
struct SnrGrid {
  std::vector<double> snr_tx_db;
  std::vector<double> snr_rx_db;
  // kappa[strategy][tx index][rx index]
  std::array<std::vector<std::vector<double>>, 4> kappa;
};

template <InrSource Oracle>
SnrGrid snr_grid_sweep(const Scenario& scenario, Oracle& oracle, const Codebook& cb_tx, const Codebook& cb_rx,
                       const std::vector<double>& snr_tx_db, const std::vector<double>& snr_rx_db,
                       unsigned threads = 1) {
  const auto setups = prepare_drops(scenario, cb_tx, cb_rx, threads);
  const auto outcomes = evaluate_drops(setups, oracle, cb_tx, cb_rx, scenario.steer_config, nullptr, threads);
  SnrGrid grid{snr_tx_db, snr_rx_db, {}};
  for (auto& m : grid.kappa) m.assign(snr_tx_db.size(), std::vector<double>(snr_rx_db.size(), 0.0));
  for (std::size_t a = 0; a < snr_tx_db.size(); ++a) {
    for (std::size_t b = 0; b < snr_rx_db.size(); ++b) {
      LinkBudget budget = scenario.budget;
      budget.snrbar_tx_db = snr_tx_db[a];
      budget.snrbar_rx_db = snr_rx_db[b];
      for (const auto& o : outcomes) {
        const DropResult r = apply_budget(o, budget);
        for (Strategy s : kAllStrategies) {
          grid.kappa[static_cast<std::size_t>(s)][a][b] += r.of(s).rates.kappa_sum;
        }
      }
      for (auto& m : grid.kappa) m[a][b] /= static_cast<double>(outcomes.size());
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Output files

inline constexpr std::string_view kResultsHeader =
    "drop,mode,strategy,theta_u_tx,phi_u_tx,theta_u_rx,phi_u_rx,snr_tx_db,snr_rx_db,inr_rx_db,r_tx,r_rx,r_sum,"
    "kappa_sum,measurements";

inline void write_results(const std::vector<DropResult>& results, DuplexMode mode, std::ostream& out) {
  using csv::format_number;
  out << kResultsHeader << '\n';
  for (const auto& r : results) {
    const auto& o = r.outcome;
    for (Strategy s : kAllStrategies) {
      const StrategyResult& sr = r.of(s);
      out << o.drop << ',' << to_string(mode) << ',' << to_string(s) << ',' << format_number(o.user_tx.azimuth_deg)
          << ',' << format_number(o.user_tx.elevation_deg) << ',' << format_number(o.user_rx.azimuth_deg) << ','
          << format_number(o.user_rx.elevation_deg) << ',' << format_number(linear_to_db(sr.snr_tx)) << ','
          << format_number(linear_to_db(sr.snr_rx)) << ',' << format_number(sr.inr_rx_db) << ','
          << format_number(sr.rates.r_tx) << ',' << format_number(sr.rates.r_rx) << ','
          << format_number(sr.rates.r_sum) << ',' << format_number(sr.rates.kappa_sum) << ','
          << (s == Strategy::FdSteer ? o.steer.measurements_used : 0) << '\n';
    }
  }
}

inline void write_cdf(const std::vector<std::pair<double, double>>& cdf, std::string_view value_column,
                      const std::vector<std::pair<std::string, std::string>>& metadata, std::ostream& out) {
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  out << value_column << ",fraction\n";
  for (const auto& [v, f] : cdf) out << csv::format_number(v) << ',' << csv::format_number(f) << '\n';
}

inline void write_sweep(const std::vector<SweepRow>& rows, const std::vector<std::pair<std::string, std::string>>& metadata,
                        std::ostream& out) {
  using csv::format_number;
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  out << "inr_target_db,delta_theta_deg,delta_phi_deg,res_theta_deg,res_phi_deg,kappa_tdd,kappa_tdd_pc,"
         "kappa_fd_conv,kappa_fd_steer,mean_fraction_measured,median_inr_nominal_db,median_inr_steer_db\n";
  for (const auto& r : rows) {
    out << format_number(r.target_db) << ',' << format_number(r.spec.delta_theta_deg) << ','
        << format_number(r.spec.delta_phi_deg) << ',' << format_number(r.spec.res_theta_deg) << ','
        << format_number(r.spec.res_phi_deg);
    for (double k : r.summary.mean_kappa) out << ',' << format_number(k);
    out << ',' << format_number(r.summary.mean_fraction_measured) << ','
        << format_number(r.summary.median_inr_nominal_db) << ',' << format_number(r.summary.median_inr_steer_db)
        << '\n';
  }
}

/// Matrix CSV: rows are snrbar_tx values, columns snrbar_rx values.
inline void write_matrix(const std::vector<double>& row_values, const std::vector<double>& col_values,
                         const std::vector<std::vector<double>>& m,
                         const std::vector<std::pair<std::string, std::string>>& metadata, std::ostream& out) {
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  out << "snr_tx_db";
  for (double c : col_values) out << ',' << csv::format_number(c);
  out << '\n';
  for (std::size_t a = 0; a < row_values.size(); ++a) {
    out << csv::format_number(row_values[a]);
    for (double v : m[a]) out << ',' << csv::format_number(v);
    out << '\n';
  }
}

}  // namespace steer
