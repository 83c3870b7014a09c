// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "test_support.hpp"

namespace steer {
namespace {

using testing::TableOracle;

TEST(Neighborhood, CardinalityMatchesStepCounts) {
  struct Case {
    double delta, res;
    int k;
  };
  for (const Case c : {Case{0, 1, 0}, {1, 1, 1}, {2, 1, 2}, {2, 1.5, 1}, {3, 1, 3}, {0.5, 0.25, 2}, {1, 0.3, 3}}) {
    const NeighborhoodSpec s{c.delta, c.delta, c.res, c.res};
    const std::size_t per_link = static_cast<std::size_t>((2 * c.k + 1) * (2 * c.k + 1));
    EXPECT_EQ(neighborhood_offsets(s).size(), per_link) << c.delta << "/" << c.res;
    EXPECT_EQ(sort_pairs_by_deviation({0, 0}, {0, 0}, s).size(), per_link * per_link);
    EXPECT_EQ(SteerConfig(s, 0).pair_count(), per_link * per_link);
  }
  const NeighborhoodSpec mixed{2, 1, 1, 1};
  EXPECT_EQ(neighborhood_offsets(mixed).size(), 15u);
}

TEST(Neighborhood, OffsetsAreTheStepLattice) {
  const auto offs = neighborhood_offsets(NeighborhoodSpec{2, 1.5, 1, 1.5});
  ASSERT_EQ(offs.size(), 15u);
  EXPECT_EQ(offs.front().azimuth_deg, -2.0);
  EXPECT_EQ(offs.front().elevation_deg, -1.5);
  EXPECT_EQ(offs[7].azimuth_deg, 0.0);
  EXPECT_EQ(offs[7].elevation_deg, 0.0);
  for (const auto& o : offs) {
    EXPECT_LE(std::abs(o.azimuth_deg), 2.0);
    EXPECT_LE(std::abs(o.elevation_deg), 1.5);
  }
}

TEST(Neighborhood, InvalidSpecsAreRejected) {
  EXPECT_THROW(neighborhood_offsets(NeighborhoodSpec{-1, 1, 1, 1}), ConfigError);
  EXPECT_THROW(neighborhood_offsets(NeighborhoodSpec{1, 1, 0, 1}), ConfigError);
  EXPECT_THROW(neighborhood_offsets(NeighborhoodSpec{1, 1, 2, 1}), ConfigError);
  EXPECT_THROW(SteerConfig(NeighborhoodSpec{}, std::nan("")).validate(), ConfigError);
  EXPECT_THROW(SteerConfig(NeighborhoodSpec{}, 1.0 / 0.0).validate(), ConfigError);
  EXPECT_NO_THROW(SteerConfig(NeighborhoodSpec{}, kNegInf).validate());
}

TEST(Ordering, SortedByKeyWithNominalFirst) {
  const SteerConfig cfg(NeighborhoodSpec{2, 2, 1, 1}, 0);
  const auto pairs = sort_pairs_by_deviation({8, 0}, {-16, 8}, cfg);
  EXPECT_EQ(pairs.front().tx, (SteeringDirection{8, 0}));
  EXPECT_EQ(pairs.front().rx, (SteeringDirection{-16, 8}));
  EXPECT_EQ(pairs.front().key, 0.0);
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const auto& a = pairs[k - 1];
    const auto& b = pairs[k];
    ASSERT_LE(a.key, b.key);
    if (a.key == b.key) {
      ASSERT_TRUE(std::tie(a.tx, a.rx) < std::tie(b.tx, b.rx));
    }
    // Key is the squared max-across-links deviation.
    const double dt = std::max(std::abs(b.tx.azimuth_deg - 8), std::abs(b.rx.azimuth_deg + 16));
    const double dp = std::max(std::abs(b.tx.elevation_deg), std::abs(b.rx.elevation_deg - 8));
    ASSERT_EQ(b.key, dt * dt + dp * dp);
  }
}

SteerConfig random_config(std::mt19937_64& rng) {
  static const double deltas[] = {0, 1, 2};
  static const double targets[] = {kNegInf, -7, 0, 10};
  std::uniform_int_distribution<int> pick(0, 2), pick_t(0, 3), coin(0, 1);
  NeighborhoodSpec tx{deltas[pick(rng)], deltas[pick(rng)], 1, 1};
  NeighborhoodSpec rx = tx;
  if (coin(rng)) rx = NeighborhoodSpec{deltas[pick(rng)], deltas[pick(rng)], coin(rng) ? 1.0 : 0.5, 1};
  if (rx.delta_theta_deg > 0 && rx.res_theta_deg > rx.delta_theta_deg) rx.res_theta_deg = rx.delta_theta_deg;
  return SteerConfig(tx, rx, targets[pick_t(rng)]);
}

TEST(Solvers, IncrementalEqualsExhaustiveAndDefinition) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(-50, 50);
  for (int trial = 0; trial < 1000; ++trial) {
    // A third of the oracles use coarse integer levels so ties are frequent.
    TableOracle oracle(rng(), trial % 3 == 0 ? 12 : 0);
    const SteerConfig cfg = random_config(rng);
    const SteeringDirection nt{std::round(ang(rng)), std::round(ang(rng))};
    const SteeringDirection nr{std::round(ang(rng)), std::round(ang(rng))};
    const SteerSolution inc = solve_steer_incremental(oracle, nt, nr, cfg);
    const SteerSolution exh = solve_steer_exhaustive(oracle, nt, nr, cfg);
    ASSERT_EQ(inc.d_tx_star, exh.d_tx_star) << trial;
    ASSERT_EQ(inc.d_rx_star, exh.d_rx_star) << trial;
    ASSERT_EQ(inc.inr_achieved_db, exh.inr_achieved_db) << trial;
    ASSERT_EQ(inc.target_met, exh.target_met) << trial;
    const auto [bt, br, binr] = testing::brute_force_steer(oracle, nt, nr, cfg);
    ASSERT_EQ(inc.d_tx_star, bt) << trial;
    ASSERT_EQ(inc.d_rx_star, br) << trial;
    ASSERT_EQ(inc.inr_achieved_db, binr) << trial;
    ASSERT_LE(inc.measurements_used, exh.measurements_used);
    ASSERT_EQ(exh.measurements_used, cfg.pair_count());
  }
}

TEST(Solvers, SavingsEqualityExactlyWhenTargetMetLastOrNever) {
  std::mt19937_64 rng(7);
  int strict = 0, equal = 0;
  for (int trial = 0; trial < 400; ++trial) {
    TableOracle oracle(rng());
    const SteerConfig cfg(NeighborhoodSpec{1, 1, 1, 1}, trial % 2 ? 5.0 : -19.5);
    const SteerSolution inc = solve_steer_incremental(oracle, {0, 0}, {0, 0}, cfg);
    const auto pairs = sort_pairs_by_deviation({0, 0}, {0, 0}, cfg);
    // Index of the first pair meeting the target, by direct scan.
    std::size_t first = pairs.size();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (oracle.query_inr_db(pairs[k].tx, pairs[k].rx) <= cfg.inr_target_db) {
        first = k;
        break;
      }
    }
    const bool full = first + 1 >= pairs.size();
    EXPECT_EQ(inc.measurements_used == pairs.size(), full) << trial;
    if (!full) {
      EXPECT_EQ(inc.measurements_used, first + 1);
    }
    (full ? equal : strict)++;
  }
  EXPECT_GT(strict, 0);
  EXPECT_GT(equal, 0);
}

TEST(Solvers, NominalMeetingTargetCostsOneMeasurement) {
  struct Fixed {
    double query_inr_db(const SteeringDirection& t, const SteeringDirection& r) {
      return (t == SteeringDirection{0, 0} && r == SteeringDirection{0, 0}) ? -20.0 : -30.0;
    }
  } oracle;
  const SteerSolution s = solve_steer_incremental(oracle, {0, 0}, {0, 0}, SteerConfig(NeighborhoodSpec{}, -10));
  EXPECT_EQ(s.measurements_used, 1u);
  EXPECT_TRUE(s.target_met);
  EXPECT_EQ(s.deviation_theta_deg, 0.0);
  // With an unreachable target the global minimum is found instead.
  const SteerSolution m = solve_steer_incremental(oracle, {0, 0}, {0, 0}, SteerConfig(NeighborhoodSpec{}, -40));
  EXPECT_EQ(m.inr_achieved_db, -30.0);
  EXPECT_FALSE(m.target_met);
  EXPECT_EQ(m.measurements_used, 625u);
  EXPECT_EQ(m.deviation_theta_deg * m.deviation_theta_deg + m.deviation_phi_deg * m.deviation_phi_deg, 1.0);
}

TEST(Solvers, EqualInrKeepsTheEarlierPair) {
  struct Flat {
    double query_inr_db(const SteeringDirection&, const SteeringDirection&) { return 3.0; }
  } oracle;
  const SteerSolution s = solve_steer_incremental(oracle, {4, 4}, {-4, 0}, SteerConfig(NeighborhoodSpec{}, 0));
  EXPECT_EQ(s.d_tx_star, (SteeringDirection{4, 4}));
  EXPECT_EQ(s.d_rx_star, (SteeringDirection{-4, 0}));
  EXPECT_EQ(s.measurements_used, 625u);
}

TEST(Solvers, TargetComparisonIsInclusive) {
  struct Step {
    double query_inr_db(const SteeringDirection& t, const SteeringDirection&) { return t.azimuth_deg == 0 ? 5 : -7; }
  } oracle;
  const SteerSolution s = solve_steer_incremental(oracle, {0, 0}, {0, 0}, SteerConfig(NeighborhoodSpec{1, 1, 1, 1}, -7));
  EXPECT_TRUE(s.target_met);
  EXPECT_EQ(s.inr_achieved_db, -7.0);
}

TEST(Solvers, InvariantsOnSyntheticOracle) {
  const testing::SmallBed bed;
  SyntheticOracle oracle = bed.oracle();
  calibrate_reference(oracle, bed.cb_tx, bed.cb_rx, 20.0);
  const SteerConfig cfg(NeighborhoodSpec{2, 2, 1, 1}, -7);
  for (const auto& nt : bed.cb_tx.directions) {
    for (const auto& nr : bed.cb_rx.directions) {
      const SteerSolution s = solve_steer_incremental(oracle, nt, nr, cfg);
      EXPECT_LE(s.inr_achieved_db, oracle.query_inr_db(nt, nr));
      EXPECT_LE(std::abs(s.d_tx_star.azimuth_deg - nt.azimuth_deg), 2.0);
      EXPECT_LE(std::abs(s.d_rx_star.elevation_deg - nr.elevation_deg), 2.0);
      EXPECT_LE(s.deviation_theta_deg, 2.0);
      EXPECT_LE(s.deviation_phi_deg, 2.0);
      EXPECT_GE(s.measurements_used, 1u);
      EXPECT_LE(s.measurements_used, 625u);
      EXPECT_EQ(s.target_met, s.inr_achieved_db <= -7.0);
    }
  }
}

TEST(Solvers, MonotoneInNeighborhoodAndTarget) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    TableOracle oracle(rng());
    const double target = trial % 2 ? -5.0 : kNegInf;
    double prev = 1e300;
    for (double d : {0.0, 1.0, 2.0, 3.0}) {
      const auto s = solve_steer_incremental(oracle, {0, 0}, {10, 10}, SteerConfig(NeighborhoodSpec{d, d, 1, 1}, target));
      if (!std::isfinite(target)) {
        EXPECT_LE(s.inr_achieved_db, prev);
      }
      // With a finite target the achieved value may rise, but never above it
      // once it was met.
      if (prev <= target) {
        EXPECT_LE(s.inr_achieved_db, target);
      }
      prev = s.inr_achieved_db;
    }
    std::size_t prev_m = 1u << 30;
    for (double t : {-30.0, -10.0, 0.0, 10.0, 40.0}) {
      const auto s = solve_steer_incremental(oracle, {0, 0}, {10, 10}, SteerConfig(NeighborhoodSpec{2, 2, 1, 1}, t));
      EXPECT_LE(s.measurements_used, prev_m);
      prev_m = s.measurements_used;
    }
  }
}

TEST(Solvers, ZeroSizeNeighborhoodFixesALink) {
  TableOracle oracle(5);
  const SteerConfig cfg(NeighborhoodSpec{0, 0, 1, 1}, NeighborhoodSpec{2, 2, 1, 1}, kNegInf);
  const auto s = solve_steer_incremental(oracle, {8, 8}, {0, 0}, cfg);
  EXPECT_EQ(s.d_tx_star, (SteeringDirection{8, 8}));
  EXPECT_EQ(s.measurements_used, 25u);
}

TEST(Lookup, PrecomputeIsThreadIndependentAndRoundTrips) {
  const testing::SmallBed bed;
  SyntheticOracle a = bed.oracle("rayleigh", 2);
  SyntheticOracle b = bed.oracle("rayleigh", 2);
  const SteerConfig cfg(NeighborhoodSpec{2, 2, 1, 1}, 0.0);
  const LookupTable t1 = precompute_lookup(a, bed.cb_tx, bed.cb_rx, cfg, 1);
  const LookupTable t4 = precompute_lookup(b, bed.cb_tx, bed.cb_rx, cfg, 4);
  const auto path = std::filesystem::temp_directory_path() / "steer_lookup_test.csv";
  write_lookup(t1, path);
  const LookupTable back = read_lookup(path, bed.cb_tx, bed.cb_rx);
  for (std::size_t i = 0; i < bed.cb_tx.size(); ++i) {
    for (std::size_t j = 0; j < bed.cb_rx.size(); ++j) {
      const auto& x = t1.at(i, j);
      EXPECT_EQ(x.d_tx_star, t4.at(i, j).d_tx_star);
      EXPECT_EQ(x.inr_achieved_db, t4.at(i, j).inr_achieved_db);
      const auto& y = back.at(i, j);
      EXPECT_EQ(x.d_tx_star, y.d_tx_star);
      EXPECT_EQ(x.d_rx_star, y.d_rx_star);
      EXPECT_NEAR(x.inr_achieved_db, y.inr_achieved_db, 1e-9);
      EXPECT_EQ(x.measurements_used, y.measurements_used);
      EXPECT_EQ(x.target_met, y.target_met);
      EXPECT_NEAR(x.deviation_theta_deg, y.deviation_theta_deg, 1e-9);
      EXPECT_NEAR(x.deviation_phi_deg, y.deviation_phi_deg, 1e-9);
    }
  }
  EXPECT_THROW(t1.at(9, 0), DomainError);
}

TEST(Lookup, MalformedTablesAreRejected) {
  const testing::SmallBed bed;
  const std::string h = std::string(kLookupHeader) + "\n";
  auto parse = [&](const std::string& s) {
    std::istringstream in(s);
    return read_lookup(in, bed.cb_tx, bed.cb_rx);
  };
  EXPECT_THROW(parse("x\n"), ParseError);
  EXPECT_THROW(parse(h + "0,0,0,0,0,0,1,1\n"), ParseError);
  EXPECT_THROW(parse(h + "9,0,0,0,0,0,1,1,1\n"), ParseError);
  EXPECT_THROW(parse(h + "0,0,0,0,0,0,1,1,2\n"), ParseError);
  EXPECT_THROW(parse(h + "0,0,0,0,0,0,1,1,1\n"), ParseError);  // incomplete
}

TEST(Lookup, MeasurementErrorsNameTheBeamPair) {
  InrGrid empty;
  GridOracle oracle(empty);
  const testing::SmallBed bed;
  try {
    precompute_lookup(oracle, bed.cb_tx, bed.cb_rx, SteerConfig(NeighborhoodSpec{}, 0));
    FAIL();
  } catch (const MeasurementUnavailable& e) {
    EXPECT_NE(std::string(e.what()).find("beam pair (0, 0)"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace steer
