// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference computations shared by the test suites. Nothing here
// calls into the library's numerical routines: responses come from explicit
// plane-wave geometry and products from plain loops.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <tuple>
#include <vector>

#include "steer/all.hpp"

namespace steer::testing {

using cd = std::complex<double>;

/// Plane-wave response from geometry: the unit vector toward (az, el) in the
/// panel frame (normal, horizontal, vertical) dotted with each element's
/// local position, in wavelengths.
inline std::vector<cd> plane_wave_response(int rows, int cols, double spacing_wl, double az_deg, double el_deg) {
  const double az = az_deg * std::numbers::pi / 180.0;
  const double el = el_deg * std::numbers::pi / 180.0;
  const double u_h = std::cos(el) * std::sin(az);
  const double u_v = std::sin(el);
  std::vector<cd> a;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double path = c * spacing_wl * u_h + r * spacing_wl * u_v;
      a.emplace_back(std::cos(2 * std::numbers::pi * path), std::sin(2 * std::numbers::pi * path));
    }
  }
  return a;
}

/// |sum conj(x) y|^2
inline double inner_power(const std::vector<cd>& x, const std::vector<cd>& y) {
  cd s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return std::norm(s);
}

/// |w^H H f|^2 with explicit loops; H stored row-major, rows = receive.
inline double bilinear_power(const std::vector<cd>& w, const std::vector<std::vector<cd>>& h,
                             const std::vector<cd>& f) {
  cd s = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    cd row = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) row += h[m][n] * f[n];
    s += std::conj(w[m]) * row;
  }
  return std::norm(s);
}

inline std::vector<std::vector<cd>> to_rows(const CMatrix& m) {
  std::vector<std::vector<cd>> out(static_cast<std::size_t>(m.rows()), std::vector<cd>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

/// Oracle with pseudo-random INR per beam pair. With `levels` > 0 values are
/// snapped to that many integer dB levels so exact ties are common.
class TableOracle {
 public:
  explicit TableOracle(std::uint64_t seed, int levels = 0, double lo_db = -20.0, double hi_db = 30.0)
      : seed_(seed), levels_(levels), lo_(lo_db), hi_(hi_db) {}

  double query_inr_db(const SteeringDirection& tx, const SteeringDirection& rx) {
    ++queries;
    const PairKey k = PairKey::of(tx, rx);
    std::uint64_t h = seed_;
    for (std::int64_t v : {std::int64_t{k.tx_az}, std::int64_t{k.tx_el}, std::int64_t{k.rx_az}, std::int64_t{k.rx_el}}) {
      h = detail::mix64(h ^ static_cast<std::uint64_t>(v));
    }
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (levels_ > 0) return lo_ + std::floor(u * levels_);
    return lo_ + u * (hi_ - lo_);
  }

  std::size_t queries = 0;

 private:
  std::uint64_t seed_;
  int levels_;
  double lo_, hi_;
};

/// STEER by definition: among all pairs of the two neighborhoods whose INR
/// is at most max(target, smallest INR), the one with the smallest squared
/// max-deviation, ties broken by (tx az, tx el, rx az, rx el). Scans the
/// product of offsets directly; no sorting.
template <class Oracle>
std::tuple<SteeringDirection, SteeringDirection, double> brute_force_steer(
    Oracle& oracle, const SteeringDirection& ntx, const SteeringDirection& nrx, const SteerConfig& cfg) {
  struct Cand {
    SteeringDirection tx, rx;
    double key;
    double inr;
  };
  std::vector<Cand> all;
  const auto& s = cfg.tx_spec;
  const auto& q = cfg.rx_spec;
  const int kt = static_cast<int>(std::floor(s.delta_theta_deg / s.res_theta_deg + 1e-9));
  const int kp = static_cast<int>(std::floor(s.delta_phi_deg / s.res_phi_deg + 1e-9));
  const int qt = static_cast<int>(std::floor(q.delta_theta_deg / q.res_theta_deg + 1e-9));
  const int qp = static_cast<int>(std::floor(q.delta_phi_deg / q.res_phi_deg + 1e-9));
  double inr_min = std::numeric_limits<double>::infinity();
  for (int a = -kt; a <= kt; ++a)
    for (int b = -kp; b <= kp; ++b)
      for (int c = -qt; c <= qt; ++c)
        for (int d = -qp; d <= qp; ++d) {
          Cand x;
          x.tx = {ntx.azimuth_deg + a * s.res_theta_deg, ntx.elevation_deg + b * s.res_phi_deg};
          x.rx = {nrx.azimuth_deg + c * q.res_theta_deg, nrx.elevation_deg + d * q.res_phi_deg};
          const double dt = std::max(std::abs(a * s.res_theta_deg), std::abs(c * q.res_theta_deg));
          const double dp = std::max(std::abs(b * s.res_phi_deg), std::abs(d * q.res_phi_deg));
          x.key = dt * dt + dp * dp;
          x.inr = oracle.query_inr_db(x.tx, x.rx);
          inr_min = std::min(inr_min, x.inr);
          all.push_back(x);
        }
  const double threshold = std::max(cfg.inr_target_db, inr_min);
  const Cand* best = nullptr;
  auto rank = [](const Cand& c) {
    return std::make_tuple(c.key, c.tx.azimuth_deg, c.tx.elevation_deg, c.rx.azimuth_deg, c.rx.elevation_deg);
  };
  for (const auto& c : all) {
    if (c.inr > threshold) continue;
    if (!best || rank(c) < rank(*best)) best = &c;
  }
  return {best->tx, best->rx, best->inr};
}

inline std::vector<DirectionPair> neighborhood_pairs(const SteeringDirection& ntx, const SteeringDirection& nrx,
                                                     const NeighborhoodSpec& spec) {
  std::vector<DirectionPair> out;
  const auto offs = neighborhood_offsets(spec);
  for (const auto& a : offs) {
    for (const auto& b : offs) {
      out.push_back({{ntx.azimuth_deg + a.azimuth_deg, ntx.elevation_deg + a.elevation_deg},
                     {nrx.azimuth_deg + b.azimuth_deg, nrx.elevation_deg + b.elevation_deg}});
    }
  }
  return out;
}

/// Small but realistic test bed: 8x8 panels, 3x3 codebook, 28 GHz.
struct SmallBed {
  PanelPair panels;
  Codebook cb_tx, cb_rx;
  double wavelength = wavelength_m(28e9);

  SmallBed() {
    panels = default_platform(UpaGeometry{8, 8, 0.5, {}, 0.0});
    cb_tx = build_codebook(panels.tx, {-16.0, 16.0}, {-16.0, 16.0}, 16.0);
    cb_rx = build_codebook(panels.rx, {-16.0, 16.0}, {-16.0, 16.0}, 16.0);
  }

  SyntheticOracle oracle(std::string_view model = "spherical-wave", std::uint64_t seed = 3,
                         SyntheticOracleOptions opts = {}) const {
    return SyntheticOracle(panels.tx, panels.rx, synthesize_si_channel(panels.tx, panels.rx, wavelength, model, seed),
                           opts);
  }
};

}  // namespace steer::testing
