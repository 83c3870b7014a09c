// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"

namespace steer {
namespace {

using testing::inner_power;
using testing::plane_wave_response;

TEST(ArrayResponse, MatchesPlaneWaveGeometry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-80.0, 80.0);
  for (int trial = 0; trial < 50; ++trial) {
    const SteeringDirection d{ang(rng), ang(rng)};
    const UpaGeometry g{4, 6, 0.5, {}, 0.0};
    const CVector a = array_response(g, d);
    const auto ref = plane_wave_response(4, 6, 0.5, d.azimuth_deg, d.elevation_deg);
    ASSERT_EQ(static_cast<std::size_t>(a.size()), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_NEAR(std::abs(a(static_cast<Eigen::Index>(i)) - ref[i]), 0.0, 1e-9) << i;
    }
  }
}

TEST(ArrayResponse, UnitModulusAndBroadsideAllOnes) {
  const UpaGeometry g{16, 16, 0.5, {}, 0.0};
  const CVector a = array_response(g, {0.0, 0.0});
  ASSERT_EQ(a.size(), 256);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    EXPECT_DOUBLE_EQ(a(i).real(), 1.0);
    EXPECT_DOUBLE_EQ(a(i).imag(), 0.0);
  }
  const CVector b = array_response(g, {37.0, -12.0});
  for (Eigen::Index i = 0; i < b.size(); ++i) EXPECT_NEAR(std::abs(b(i)), 1.0, 1e-12);
}

TEST(ArrayResponse, RejectsDirectionsOutsideHemisphere) {
  const UpaGeometry g{2, 2, 0.5, {}, 0.0};
  EXPECT_THROW(array_response(g, {91.0, 0.0}), DomainError);
  EXPECT_THROW(array_response(g, {0.0, -90.5}), DomainError);
  EXPECT_THROW(array_response(g, {std::nan(""), 0.0}), DomainError);
  EXPECT_NO_THROW(array_response(g, {90.0, -90.0}));
}

TEST(ArrayResponse, RejectsEmptyGeometry) {
  EXPECT_THROW(array_response(UpaGeometry{0, 4, 0.5, {}, 0.0}, {0.0, 0.0}), ConfigError);
  EXPECT_THROW(array_response(UpaGeometry{4, 4, 0.0, {}, 0.0}, {0.0, 0.0}), ConfigError);
}

TEST(ConjugateBeam, GainTowardOwnDirectionIsArraySize) {
  const UpaGeometry g{8, 4, 0.5, {}, 0.0};
  for (const SteeringDirection d : {SteeringDirection{0, 0}, {20, -10}, {-45, 30}}) {
    const BeamWeights w = conjugate_beam(g, d);
    EXPECT_NEAR(w.weights.squaredNorm(), 1.0, 1e-12);
    EXPECT_NEAR(beam_gain(g, d, w), 32.0, 1e-9);
  }
}

TEST(ConjugateBeam, GainMatchesExplicitSum) {
  const UpaGeometry g{4, 4, 0.5, {}, 0.0};
  const SteeringDirection beam{10.0, 5.0}, look{-3.0, 7.0};
  const BeamWeights w = conjugate_beam(g, beam);
  auto f = plane_wave_response(4, 4, 0.5, beam.azimuth_deg, beam.elevation_deg);
  for (auto& x : f) x /= 4.0;
  const auto a = plane_wave_response(4, 4, 0.5, look.azimuth_deg, look.elevation_deg);
  EXPECT_NEAR(beam_gain(g, look, w), inner_power(a, f), 1e-10);
}

TEST(Codebook, PresetHas105BeamsInElevationMajorOrder) {
  const ArrayPreset p = array_preset("paper-28ghz");
  const Codebook cb = build_codebook(p.geometry, p.azimuth_range_deg, p.elevation_range_deg, p.spacing_deg);
  ASSERT_EQ(cb.size(), 105u);
  EXPECT_EQ(cb.directions.front(), (SteeringDirection{-56.0, -24.0}));
  EXPECT_EQ(cb.directions[1], (SteeringDirection{-48.0, -24.0}));
  EXPECT_EQ(cb.directions[15], (SteeringDirection{-56.0, -16.0}));
  EXPECT_EQ(cb.directions.back(), (SteeringDirection{56.0, 24.0}));
  EXPECT_EQ(cb.index_of({0.0, 0.0}), std::optional<std::size_t>(3 * 15 + 7));
  EXPECT_FALSE(cb.index_of({1.0, 0.0}).has_value());
  EXPECT_EQ(p.geometry.num_elements(), 256u);
}

TEST(Codebook, RejectsMisalignedRanges) {
  const UpaGeometry g{2, 2, 0.5, {}, 0.0};
  EXPECT_THROW(build_codebook(g, {-10, 10}, {0, 0}, 3.0), ConfigError);
  EXPECT_THROW(build_codebook(g, {10, -10}, {0, 0}, 5.0), ConfigError);
  EXPECT_THROW(build_codebook(g, {-10, 10}, {0, 0}, 0.0), ConfigError);
  EXPECT_EQ(build_codebook(g, {0, 0}, {0, 0}, 1.0).size(), 1u);
  EXPECT_THROW(array_preset("unknown"), ConfigError);
}

/// Half-power angle of a uniform linear array by bisection on the array
/// factor |sin(N x / 2) / (N sin(x / 2))|^2, x = 2 pi d sin(az).
double ula_half_power_deg(int n, double d) {
  auto af = [&](double az_deg) {
    const double x = 2 * std::numbers::pi * d * std::sin(az_deg * std::numbers::pi / 180.0);
    if (std::abs(x) < 1e-15) return 1.0;
    const double v = std::sin(n * x / 2) / (n * std::sin(x / 2));
    return v * v;
  };
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (af(mid) > 0.5 ? lo : hi) = mid;
  }
  return 2.0 * lo;
}

TEST(Codebook, BroadsideBeamwidthFromGainSweep) {
  const ArrayPreset p = array_preset("paper-28ghz");
  const BeamWeights w = conjugate_beam(p.geometry, {0.0, 0.0});
  const double peak = beam_gain(p.geometry, {0.0, 0.0}, w);
  double lo = 0.0, hi = 0.0;
  for (int k = -300; k <= 300; ++k) {
    const double az = 0.1 * k;
    if (beam_gain(p.geometry, {az, 0.0}, w) >= peak / 2.0) {
      lo = std::min(lo, az);
      hi = std::max(hi, az);
    }
  }
  const double width = hi - lo;
  EXPECT_GE(width, 6.0);
  EXPECT_LE(width, 8.0);
  // The sweep is quantized to 0.1 degree steps.
  EXPECT_NEAR(width, ula_half_power_deg(16, 0.5), 0.2);
}

TEST(Geometry, ElementPositionsAreCenteredAndSpaced) {
  UpaGeometry g{2, 3, 0.5, {1.0, 2.0, 3.0}, 90.0};
  const double lambda = 0.01;
  // Normal along +y, horizontal axis along -x.
  const Vec3 p00 = g.element_position(0, 0, lambda);
  const Vec3 p12 = g.element_position(1, 2, lambda);
  EXPECT_NEAR(p00.x, 1.0 + 0.005, 1e-12);
  EXPECT_NEAR(p00.y, 2.0, 1e-12);
  EXPECT_NEAR(p00.z, 3.0 - 0.0025, 1e-12);
  EXPECT_NEAR(p12.x, 1.0 - 0.005, 1e-12);
  EXPECT_NEAR(p12.z, 3.0 + 0.0025, 1e-12);
}

TEST(Geometry, QuantizationIdentifiesLatticeValues) {
  EXPECT_EQ(quantize_deg(0.1 + 0.2), quantize_deg(0.3));
  EXPECT_EQ(quantize_deg(-56.0 + 7 * 8.0), 0);
  EXPECT_NE(quantize_deg(1.0), quantize_deg(1.00001));
}

}  // namespace
}  // namespace steer
