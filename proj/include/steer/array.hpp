// SPDX-License-Identifier: Apache-2.0
#pragma once

// Uniform planar array geometry, array response vectors, conjugate
// beamforming weights and direction-grid codebooks.
//
// Panel-local frame: the panel normal points along +x, columns run along the
// horizontal in-plane axis and rows along the vertical axis. Azimuth rotates
// about the vertical axis and elevation about the horizontal axis, so the
// unit propagation vector of (az, el) is
//   (cos el cos az, cos el sin az, sin el)
// and element (r, c) sees phase 2*pi*d*(r sin el + c cos el sin az), d being
// the element spacing in wavelengths.

#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "steer/errors.hpp"
#include "steer/units.hpp"

namespace steer {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Beam coordinate in degrees, panel-local. Valid over the front hemisphere.
struct SteeringDirection {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;

  friend bool operator==(const SteeringDirection&, const SteeringDirection&) = default;
  friend auto operator<=>(const SteeringDirection&, const SteeringDirection&) = default;

  bool valid() const noexcept {
    return std::isfinite(azimuth_deg) && std::isfinite(elevation_deg) &&
           azimuth_deg >= -90.0 && azimuth_deg <= 90.0 && elevation_deg >= -90.0 &&
           elevation_deg <= 90.0;
  }
};

inline void require_valid(const SteeringDirection& d) {
  if (!d.valid()) {
    throw DomainError("steering direction (" + std::to_string(d.azimuth_deg) + ", " +
                      std::to_string(d.elevation_deg) + ") outside the front hemisphere");
  }
}

/// Directions quantized to 1e-6 degree so lattice-generated values compare
/// reliably as hash keys.
inline std::int64_t quantize_deg(double deg) { return std::llround(deg * 1e6); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct UpaGeometry {
  int rows = 16;
  int cols = 16;
  double element_spacing_wavelengths = 0.5;
  Vec3 panel_center_m{};
  double panel_normal_azimuth_deg = 0.0;

  std::size_t num_elements() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  void validate() const {
    if (rows <= 0 || cols <= 0) throw ConfigError("array must have at least one element");
    if (!(element_spacing_wavelengths > 0.0)) {
      throw ConfigError("element spacing must be positive");
    }
  }

  /// Global position of element (r, c) in meters. Elements are centered on
  /// panel_center_m; the panel normal lies in the horizontal plane.
  Vec3 element_position(int r, int c, double wavelength_m) const {
    const double psi = deg_to_rad(panel_normal_azimuth_deg);
    const Vec3 horizontal{-std::sin(psi), std::cos(psi), 0.0};
    const Vec3 vertical{0.0, 0.0, 1.0};
    const double step = element_spacing_wavelengths * wavelength_m;
    const double dc = (c - (cols - 1) / 2.0) * step;
    const double dr = (r - (rows - 1) / 2.0) * step;
    return panel_center_m + dc * horizontal + dr * vertical;
  }
};

/// Unit-norm analog beamforming weights for one panel.
struct BeamWeights {
  CVector weights;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
};

/// Array response a(d); entry r*cols + c has unit modulus.
inline CVector array_response(const UpaGeometry& geometry, const SteeringDirection& direction) {
  geometry.validate();
  require_valid(direction);
  const double az = deg_to_rad(direction.azimuth_deg);
  const double el = deg_to_rad(direction.elevation_deg);
  const double k = 2.0 * kPi * geometry.element_spacing_wavelengths;
  const double row_phase = k * std::sin(el);
  const double col_phase = k * std::cos(el) * std::sin(az);

  CVector a(static_cast<Eigen::Index>(geometry.num_elements()));
  for (int r = 0; r < geometry.rows; ++r) {
    for (int c = 0; c < geometry.cols; ++c) {
      a(r * geometry.cols + c) = std::polar(1.0, r * row_phase + c * col_phase);
    }
  }
  return a;
}

/// Matched-filter (equal gain) beam toward `direction`: a(d) / sqrt(Na).
inline BeamWeights conjugate_beam(const UpaGeometry& geometry,
                                  const SteeringDirection& direction) {
  CVector a = array_response(geometry, direction);
  a /= std::sqrt(static_cast<double>(a.size()));
  return BeamWeights{std::move(a)};
}

/// |a(d)^H x|^2, the beamforming gain of weights x toward d.
inline double beam_gain(const UpaGeometry& geometry, const SteeringDirection& direction,
                        const BeamWeights& beam) {
  const CVector a = array_response(geometry, direction);
  if (a.size() != beam.weights.size()) throw DomainError("beam size does not match array");
  return std::norm(a.dot(beam.weights));
}

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct Codebook {
  UpaGeometry geometry;
  std::vector<SteeringDirection> directions;
  std::vector<BeamWeights> beams;
  AngleRange azimuth_range_deg;
  AngleRange elevation_range_deg;
  double spacing_deg = 0.0;

  std::size_t size() const { return directions.size(); }
  bool empty() const { return directions.empty(); }

  std::optional<std::size_t> index_of(const SteeringDirection& d) const {
    for (std::size_t i = 0; i < directions.size(); ++i) {
      if (quantize_deg(directions[i].azimuth_deg) == quantize_deg(d.azimuth_deg) &&
          quantize_deg(directions[i].elevation_deg) == quantize_deg(d.elevation_deg)) {
        return i;
      }
    }
    return std::nullopt;
  }
};

namespace detail {

inline int grid_steps(AngleRange range, double spacing, const char* axis) {
  if (!(range.hi >= range.lo)) {
    throw ConfigError(std::string(axis) + " range has hi < lo");
  }
  const double steps = (range.hi - range.lo) / spacing;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9) {
    throw ConfigError(std::string(axis) + " range is not a multiple of the codebook spacing");
  }
  return static_cast<int>(rounded);
}

}  // namespace detail

/// Full direction grid lo..hi (inclusive) on both axes, elevation-major then
/// azimuth ascending. Grid values are lo + k*spacing with integer k.
inline Codebook build_codebook(const UpaGeometry& geometry, AngleRange az_range,
                               AngleRange el_range, double spacing_deg) {
  geometry.validate();
  if (!(spacing_deg > 0.0)) throw ConfigError("codebook spacing must be positive");
  const int n_az = detail::grid_steps(az_range, spacing_deg, "azimuth") + 1;
  const int n_el = detail::grid_steps(el_range, spacing_deg, "elevation") + 1;

  Codebook cb;
  cb.geometry = geometry;
  cb.azimuth_range_deg = az_range;
  cb.elevation_range_deg = el_range;
  cb.spacing_deg = spacing_deg;
  cb.directions.reserve(static_cast<std::size_t>(n_az) * n_el);
  cb.beams.reserve(static_cast<std::size_t>(n_az) * n_el);
  for (int e = 0; e < n_el; ++e) {
    for (int a = 0; a < n_az; ++a) {
      SteeringDirection d{az_range.lo + a * spacing_deg, el_range.lo + e * spacing_deg};
      cb.beams.push_back(conjugate_beam(geometry, d));
      cb.directions.push_back(d);
    }
  }
  return cb;
}

/// Named configuration preset for arrays and codebooks.
struct ArrayPreset {
  std::string name;
  UpaGeometry geometry;
  double carrier_hz = 28e9;
  AngleRange azimuth_range_deg;
  AngleRange elevation_range_deg;
  double spacing_deg = 8.0;
};

/// "paper-28ghz": 16x16 half-wavelength UPAs at 28 GHz with 105 beams
/// spanning azimuth [-56, 56] and elevation [-24, 24] at 8 degree spacing.
/// The 60 dBm EIRP / -68 dBm noise floor of the original platform are folded
/// into the link budget's dB parameters.
inline ArrayPreset array_preset(std::string_view name) {
  if (name == "paper-28ghz") {
    ArrayPreset p;
    p.name = std::string(name);
    p.geometry = UpaGeometry{16, 16, 0.5, {}, 0.0};
    p.carrier_hz = 28e9;
    p.azimuth_range_deg = {-56.0, 56.0};
    p.elevation_range_deg = {-24.0, 24.0};
    p.spacing_deg = 8.0;
    return p;
  }
  throw ConfigError("unknown array preset '" + std::string(name) + "'");
}

}  // namespace steer
