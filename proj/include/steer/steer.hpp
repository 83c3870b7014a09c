// SPDX-License-Identifier: Apache-2.0
#pragma once

// Joint transmit/receive beam selection around the beams chosen by
// conventional alignment.
//
// Given nominal transmit and receive directions, every candidate pair in the
// product of the two spatial neighborhoods is ranked by its deviation
//   key = dev_theta^2 + dev_phi^2,
//   dev_theta = max(|theta_tx - theta_tx_nom|, |theta_rx - theta_rx_nom|),
//   dev_phi   = max(|phi_tx - phi_tx_nom|,     |phi_rx - phi_rx_nom|),
// with ties broken lexicographically by (tx.az, tx.el, rx.az, rx.el). The
// selected pair is the first one in that order whose INR is at most
// max(target, minimum INR over the neighborhood).
//
// solve_steer_incremental walks the order measuring as it goes and stops at
// the first pair meeting the target; solve_steer_exhaustive measures
// everything first. Both return the same pair.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "steer/csv.hpp"
#include "steer/parallel.hpp"
#include "steer/si_oracle.hpp"

namespace steer {

struct NeighborhoodSpec {
  double delta_theta_deg = 2.0;
  double delta_phi_deg = 2.0;
  double res_theta_deg = 1.0;
  double res_phi_deg = 1.0;

  void validate() const {
    if (!(delta_theta_deg >= 0.0) || !(delta_phi_deg >= 0.0)) {
      throw ConfigError("neighborhood extent must be >= 0");
    }
    if (!(res_theta_deg > 0.0) || !(res_phi_deg > 0.0)) {
      throw ConfigError("neighborhood resolution must be > 0");
    }
    if ((delta_theta_deg > 0.0 && res_theta_deg > delta_theta_deg) ||
        (delta_phi_deg > 0.0 && res_phi_deg > delta_phi_deg)) {
      throw ConfigError("neighborhood resolution must not exceed its extent");
    }
  }

  int k_theta() const { return static_cast<int>(std::floor(delta_theta_deg / res_theta_deg + 1e-9)); }
  int k_phi() const { return static_cast<int>(std::floor(delta_phi_deg / res_phi_deg + 1e-9)); }

  std::size_t size() const {
    return static_cast<std::size_t>(2 * k_theta() + 1) * static_cast<std::size_t>(2 * k_phi() + 1);
  }
};

struct SteerConfig {
  NeighborhoodSpec tx_spec;
  NeighborhoodSpec rx_spec;
  double inr_target_db = -7.0;  // may be -inf

  SteerConfig() = default;
  SteerConfig(const NeighborhoodSpec& shared, double target_db)
      : tx_spec(shared), rx_spec(shared), inr_target_db(target_db) {}
  SteerConfig(const NeighborhoodSpec& tx, const NeighborhoodSpec& rx, double target_db)
      : tx_spec(tx), rx_spec(rx), inr_target_db(target_db) {}

  void validate() const {
    tx_spec.validate();
    rx_spec.validate();
    if (std::isnan(inr_target_db) || inr_target_db == std::numeric_limits<double>::infinity()) {
      throw ConfigError("INR target must be finite or -inf");
    }
  }

  std::size_t pair_count() const { return tx_spec.size() * rx_spec.size(); }
};

struct SteerSolution {
  SteeringDirection d_tx_star;
  SteeringDirection d_rx_star;
  double inr_achieved_db = 0.0;
  double deviation_theta_deg = 0.0;
  double deviation_phi_deg = 0.0;
  std::size_t measurements_used = 0;
  bool target_met = false;
};

struct AngleOffset {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

namespace detail {

struct StepOffset {
  int m = 0;  // azimuth steps
  int n = 0;  // elevation steps
};

inline std::vector<StepOffset> step_offsets(const NeighborhoodSpec& spec) {
  spec.validate();
  const int kt = spec.k_theta();
  const int kp = spec.k_phi();
  std::vector<StepOffset> out;
  out.reserve(spec.size());
  for (int m = -kt; m <= kt; ++m) {
    for (int n = -kp; n <= kp; ++n) out.push_back({m, n});
  }
  return out;
}

}  // namespace detail

/// {m*res_theta} x {n*res_phi} for |m| <= K_theta, |n| <= K_phi, ordered by
/// azimuth offset then elevation offset.
inline std::vector<AngleOffset> neighborhood_offsets(const NeighborhoodSpec& spec) {
  std::vector<AngleOffset> out;
  for (const auto& s : detail::step_offsets(spec)) {
    out.push_back({s.m * spec.res_theta_deg, s.n * spec.res_phi_deg});
  }
  return out;
}

struct CandidatePair {
  SteeringDirection tx;
  SteeringDirection rx;
  double deviation_theta_deg = 0.0;
  double deviation_phi_deg = 0.0;
  double key = 0.0;
};

/// All pairs of the transmit and receive neighborhoods, sorted by deviation
/// key. The nominal pair is always first.
inline std::vector<CandidatePair> sort_pairs_by_deviation(const SteeringDirection& nominal_tx,
                                                          const SteeringDirection& nominal_rx,
                                                          const SteerConfig& config) {
  const auto tx_steps = detail::step_offsets(config.tx_spec);
  const auto rx_steps = detail::step_offsets(config.rx_spec);
  const NeighborhoodSpec& ts = config.tx_spec;
  const NeighborhoodSpec& rs = config.rx_spec;

  std::vector<CandidatePair> pairs;
  pairs.reserve(tx_steps.size() * rx_steps.size());
  for (const auto& t : tx_steps) {
    const SteeringDirection tx{nominal_tx.azimuth_deg + t.m * ts.res_theta_deg,
                               nominal_tx.elevation_deg + t.n * ts.res_phi_deg};
    for (const auto& r : rx_steps) {
      CandidatePair c;
      c.tx = tx;
      c.rx = {nominal_rx.azimuth_deg + r.m * rs.res_theta_deg,
              nominal_rx.elevation_deg + r.n * rs.res_phi_deg};
      c.deviation_theta_deg = std::max(std::abs(t.m) * ts.res_theta_deg, std::abs(r.m) * rs.res_theta_deg);
      c.deviation_phi_deg = std::max(std::abs(t.n) * ts.res_phi_deg, std::abs(r.n) * rs.res_phi_deg);
      c.key = c.deviation_theta_deg * c.deviation_theta_deg + c.deviation_phi_deg * c.deviation_phi_deg;
      pairs.push_back(c);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.tx != b.tx) return a.tx < b.tx;
    return a.rx < b.rx;
  });
  return pairs;
}

inline std::vector<CandidatePair> sort_pairs_by_deviation(const SteeringDirection& nominal_tx,
                                                          const SteeringDirection& nominal_rx,
                                                          const NeighborhoodSpec& spec) {
  return sort_pairs_by_deviation(nominal_tx, nominal_rx, SteerConfig(spec, kNegInf));
}

namespace detail {

inline SteerSolution make_solution(const CandidatePair& c, double inr_db, std::size_t measurements,
                                   double target_db) {
  SteerSolution s;
  s.d_tx_star = c.tx;
  s.d_rx_star = c.rx;
  s.inr_achieved_db = inr_db;
  s.deviation_theta_deg = c.deviation_theta_deg;
  s.deviation_phi_deg = c.deviation_phi_deg;
  s.measurements_used = measurements;
  s.target_met = inr_db <= target_db;
  return s;
}

}  // namespace detail

/// Reference solver: measures the whole neighborhood, then picks the first
/// pair in deviation order with INR <= max(target, INR_min).
template <InrSource Oracle>
SteerSolution solve_steer_exhaustive(Oracle& oracle, const SteeringDirection& nominal_tx,
                                     const SteeringDirection& nominal_rx, const SteerConfig& config) {
  config.validate();
  const auto pairs = sort_pairs_by_deviation(nominal_tx, nominal_rx, config);
  std::vector<double> inr(pairs.size());
  double inr_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    inr[k] = oracle.query_inr_db(pairs[k].tx, pairs[k].rx);
    inr_min = std::min(inr_min, inr[k]);
  }
  const double threshold = std::max(config.inr_target_db, inr_min);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (inr[k] <= threshold) {
      return detail::make_solution(pairs[k], inr[k], pairs.size(), config.inr_target_db);
    }
  }
  throw DomainError("no finite INR in the neighborhood");
}

/// Measurement-minimal solver: measures pairs in deviation order, keeping the
/// running minimum (strict improvement only), and stops at the first pair whose
/// INR meets the target. If none does, the whole neighborhood is measured and
/// the running minimum is returned.
template <InrSource Oracle>
SteerSolution solve_steer_incremental(Oracle& oracle, const SteeringDirection& nominal_tx,
                                      const SteeringDirection& nominal_rx, const SteerConfig& config) {
  config.validate();
  const auto pairs = sort_pairs_by_deviation(nominal_tx, nominal_rx, config);
  double inr_min = std::numeric_limits<double>::infinity();
  std::size_t best = pairs.size();
  std::size_t measured = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double inr = oracle.query_inr_db(pairs[k].tx, pairs[k].rx);
    ++measured;
    if (inr < inr_min) {
      inr_min = inr;
      best = k;
      if (inr <= config.inr_target_db) break;
    }
  }
  if (best == pairs.size()) throw DomainError("no finite INR in the neighborhood");
  return detail::make_solution(pairs[best], inr_min, measured, config.inr_target_db);
}

/// Precomputed solutions indexed by the nominal beam indices (i, j).
class LookupTable {
 public:
  LookupTable() = default;
  LookupTable(std::size_t n_tx, std::size_t n_rx) : n_tx_(n_tx), n_rx_(n_rx), entries_(n_tx * n_rx) {}

  std::size_t n_tx() const { return n_tx_; }
  std::size_t n_rx() const { return n_rx_; }
  std::size_t size() const { return entries_.size(); }

  const SteerSolution& at(std::size_t i, std::size_t j) const {
    if (i >= n_tx_ || j >= n_rx_) throw DomainError("lookup index out of range");
    return entries_[i * n_rx_ + j];
  }
  SteerSolution& at(std::size_t i, std::size_t j) {
    if (i >= n_tx_ || j >= n_rx_) throw DomainError("lookup index out of range");
    return entries_[i * n_rx_ + j];
  }

 private:
  std::size_t n_tx_ = 0;
  std::size_t n_rx_ = 0;
  std::vector<SteerSolution> entries_;
};

namespace detail {

template <class Fn>
decltype(auto) annotate_errors(std::size_t i, std::size_t j, Fn&& fn) {
  const std::string where = "beam pair (" + std::to_string(i) + ", " + std::to_string(j) + "): ";
  try {
    return fn();
  } catch (const MeasurementUnavailable& e) {
    throw MeasurementUnavailable(where + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

}  // namespace detail

/// Solves every (i, j) codebook pair. Distinct pairs may be solved
/// concurrently; the table does not depend on the thread count.
template <InrSource Oracle>
LookupTable precompute_lookup(Oracle& oracle, const Codebook& codebook_tx, const Codebook& codebook_rx,
                              const SteerConfig& config, unsigned threads = 1) {
  config.validate();
  LookupTable table(codebook_tx.size(), codebook_rx.size());
  const std::size_t n_rx = codebook_rx.size();
  parallel_for(table.size(), threads, [&](std::size_t idx) {
    const std::size_t i = idx / n_rx;
    const std::size_t j = idx % n_rx;
    table.at(i, j) = detail::annotate_errors(i, j, [&] {
      return solve_steer_incremental(oracle, codebook_tx.directions[i], codebook_rx.directions[j], config);
    });
  });
  return table;
}

inline constexpr std::string_view kLookupHeader =
    "i,j,theta_tx_star,phi_tx_star,theta_rx_star,phi_rx_star,inr_db,measurements,target_met";

inline void write_lookup(const LookupTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "# n_tx=" << table.n_tx() << '\n' << "# n_rx=" << table.n_rx() << '\n';
  out << kLookupHeader << '\n';
  for (std::size_t i = 0; i < table.n_tx(); ++i) {
    for (std::size_t j = 0; j < table.n_rx(); ++j) {
      const SteerSolution& s = table.at(i, j);
      out << i << ',' << j << ',' << csv::format_number(s.d_tx_star.azimuth_deg) << ','
          << csv::format_number(s.d_tx_star.elevation_deg) << ',' << csv::format_number(s.d_rx_star.azimuth_deg)
          << ',' << csv::format_number(s.d_rx_star.elevation_deg) << ',' << csv::format_number(s.inr_achieved_db)
          << ',' << s.measurements_used << ',' << (s.target_met ? 1 : 0) << '\n';
    }
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

/// Reads a lookup table for the given codebooks. Deviations are recomputed
/// from the codebook (nominal) directions; every (i, j) must appear once.
inline LookupTable read_lookup(std::istream& in, const Codebook& codebook_tx, const Codebook& codebook_rx) {
  LookupTable table(codebook_tx.size(), codebook_rx.size());
  std::vector<bool> seen(table.size(), false);
  csv::Line line;
  bool have_header = false;
  while (csv::next_line(in, line)) {
    const std::string_view text = line.text;
    if (text.empty() || text.front() == '#') continue;
    if (!have_header) {
      if (text != kLookupHeader) throw ParseError("expected lookup-table header", line.number);
      have_header = true;
      continue;
    }
    const auto f = csv::split(text);
    if (f.size() != 9) throw ParseError("expected 9 fields, found " + std::to_string(f.size()), line.number);
    const auto i = csv::parse_int(f[0], line.number);
    const auto j = csv::parse_int(f[1], line.number);
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= table.n_tx() ||
        static_cast<std::size_t>(j) >= table.n_rx()) {
      throw ParseError("beam index out of range for the codebooks", line.number);
    }
    const auto idx = static_cast<std::size_t>(i) * table.n_rx() + static_cast<std::size_t>(j);
    if (seen[idx]) throw ParseError("duplicate (i, j) entry", line.number);
    seen[idx] = true;
    SteerSolution s;
    s.d_tx_star = {csv::parse_double(f[2], line.number), csv::parse_double(f[3], line.number)};
    s.d_rx_star = {csv::parse_double(f[4], line.number), csv::parse_double(f[5], line.number)};
    s.inr_achieved_db = csv::parse_double(f[6], line.number);
    const auto measurements = csv::parse_int(f[7], line.number);
    if (measurements < 0) throw ParseError("negative measurement count", line.number);
    s.measurements_used = static_cast<std::size_t>(measurements);
    const auto met = csv::parse_int(f[8], line.number);
    if (met != 0 && met != 1) throw ParseError("target_met must be 0 or 1", line.number);
    s.target_met = met == 1;
    const auto& nt = codebook_tx.directions[static_cast<std::size_t>(i)];
    const auto& nr = codebook_rx.directions[static_cast<std::size_t>(j)];
    s.deviation_theta_deg = std::max(std::abs(s.d_tx_star.azimuth_deg - nt.azimuth_deg),
                                     std::abs(s.d_rx_star.azimuth_deg - nr.azimuth_deg));
    s.deviation_phi_deg = std::max(std::abs(s.d_tx_star.elevation_deg - nt.elevation_deg),
                                   std::abs(s.d_rx_star.elevation_deg - nr.elevation_deg));
    table.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
  }
  if (!have_header) throw ParseError("missing lookup-table header", line.number + 1);
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw ParseError("missing entry for (" + std::to_string(k / table.n_rx()) + ", " +
                           std::to_string(k % table.n_rx()) + ")",
                       line.number);
    }
  }
  return table;
}

inline LookupTable read_lookup(const std::filesystem::path& path, const Codebook& codebook_tx,
                               const Codebook& codebook_rx) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_lookup(in, codebook_tx, codebook_rx);
}

}  // namespace steer
