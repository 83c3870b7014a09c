// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>

#include "steer/array.hpp"

namespace steer {

/// Line-of-sight channel toward a single-antenna user; ||vector||^2 = Na.
struct LosChannel {
  SteeringDirection user_direction;
  CVector vector;
};

/// MIMO self-interference channel, rows = receive elements, columns = transmit
/// elements, ||matrix||_F^2 = Na_rx * Na_tx.
struct SiChannel {
  CMatrix matrix;
  std::string model_tag;
};

inline LosChannel los_channel(const UpaGeometry& geometry, const SteeringDirection& user) {
  return LosChannel{user, array_response(geometry, user)};
}

/// Two panels on adjacent faces of a triangular platform: normals 120 degrees
/// apart in azimuth, centers `separation_m` apart.
struct PanelPair {
  UpaGeometry tx;
  UpaGeometry rx;
};

inline PanelPair default_platform(const UpaGeometry& base, double separation_m = 0.3,
                                  double normal_separation_deg = 120.0) {
  if (!(separation_m > 0.0)) throw GeometryError("panel separation must be positive");
  const double half = normal_separation_deg / 2.0;
  // Centers sit on a circle around the platform axis, along each normal.
  const double radius = separation_m / (2.0 * std::sin(deg_to_rad(half)));
  PanelPair p{base, base};
  p.tx.panel_normal_azimuth_deg = half;
  p.rx.panel_normal_azimuth_deg = -half;
  p.tx.panel_center_m = {radius * std::cos(deg_to_rad(half)), radius * std::sin(deg_to_rad(half)), 0.0};
  p.rx.panel_center_m = {radius * std::cos(deg_to_rad(-half)), radius * std::sin(deg_to_rad(-half)), 0.0};
  return p;
}

namespace detail {

inline void renormalize(CMatrix& h) {
  const double target = static_cast<double>(h.rows()) * static_cast<double>(h.cols());
  const double fro2 = h.squaredNorm();
  if (!(fro2 > 0.0)) throw GeometryError("self-interference channel is identically zero");
  h *= std::sqrt(target / fro2);
}

}  // namespace detail

/// Unnormalized spherical-wave coupling: (d0/d_mn) exp(-j 2 pi d_mn / lambda)
/// with d0 the smallest element-to-element distance.
inline CMatrix spherical_wave_coupling(const UpaGeometry& tx, const UpaGeometry& rx,
                                       double wavelength_m) {
  const auto n_tx = static_cast<Eigen::Index>(tx.num_elements());
  const auto n_rx = static_cast<Eigen::Index>(rx.num_elements());
  Eigen::MatrixXd dist(n_rx, n_tx);
  double d0 = std::numeric_limits<double>::infinity();
  for (int rr = 0; rr < rx.rows; ++rr) {
    for (int rc = 0; rc < rx.cols; ++rc) {
      const Vec3 prx = rx.element_position(rr, rc, wavelength_m);
      const Eigen::Index m = rr * rx.cols + rc;
      for (int tr = 0; tr < tx.rows; ++tr) {
        for (int tc = 0; tc < tx.cols; ++tc) {
          const Eigen::Index n = tr * tx.cols + tc;
          const double d = (prx - tx.element_position(tr, tc, wavelength_m)).norm();
          if (!(d > 0.0)) throw GeometryError("transmit and receive elements overlap");
          dist(m, n) = d;
          d0 = std::min(d0, d);
        }
      }
    }
  }
  CMatrix h(n_rx, n_tx);
  for (Eigen::Index m = 0; m < n_rx; ++m) {
    for (Eigen::Index n = 0; n < n_tx; ++n) {
      const double d = dist(m, n);
      h(m, n) = std::polar(d0 / d, -2.0 * kPi * d / wavelength_m);
    }
  }
  return h;
}

/// Synthetic stand-in for a measured self-interference channel.
/// model: "spherical-wave" (free-space element-to-element coupling) or
/// "rayleigh" (i.i.d. CN(0,1)). Deterministic given the seed.
inline SiChannel synthesize_si_channel(const UpaGeometry& tx, const UpaGeometry& rx,
                                       double wavelength_m, std::string_view model,
                                       std::uint64_t seed) {
  tx.validate();
  rx.validate();
  SiChannel si;
  si.model_tag = std::string(model);
  if (model == "spherical-wave") {
    si.matrix = spherical_wave_coupling(tx, rx, wavelength_m);
  } else if (model == "rayleigh") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    si.matrix.resize(static_cast<Eigen::Index>(rx.num_elements()),
                     static_cast<Eigen::Index>(tx.num_elements()));
    for (Eigen::Index n = 0; n < si.matrix.cols(); ++n) {
      for (Eigen::Index m = 0; m < si.matrix.rows(); ++m) {
        const double re = normal(rng);
        const double im = normal(rng);
        si.matrix(m, n) = cplx(re, im);
      }
    }
  } else {
    throw ConfigError("unknown self-interference model '" + std::string(model) + "'");
  }
  detail::renormalize(si.matrix);
  return si;
}

}  // namespace steer
