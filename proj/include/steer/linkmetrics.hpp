// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scalar link-quality math shared by the transmit and receive links.
//
// SNRs are expressed relative to the maximum (directly steered) SNR, so
// snr = snrbar * |h^H f|^2 / Na. Self-interference uses a full-coupling
// reference: inr = inr_ref * |w^H H f|^2 / Na^2, where inr_ref absorbs
// transmit power, SI path gain and receiver noise.

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "steer/channels.hpp"

namespace steer {

struct LinkBudget {
  double snrbar_tx_db = 10.0;
  double snrbar_rx_db = 10.0;
  double inr_tx_db = 0.0;  // cross-link interference on the transmit link; may be -inf
  double si_ref_inr_db = 0.0;
};

enum class Strategy { Tdd, TddPc, FdConv, FdSteer };

inline constexpr std::array<Strategy, 4> kAllStrategies{Strategy::Tdd, Strategy::TddPc,
                                                       Strategy::FdConv, Strategy::FdSteer};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Tdd:
      return "TDD";
    case Strategy::TddPc:
      return "TDD-PC";
    case Strategy::FdConv:
      return "FD-CONV";
    case Strategy::FdSteer:
      return "FD-STEER";
  }
  return "?";
}

inline Strategy strategy_from_string(std::string_view tag) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == tag) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(tag) + "'");
}

struct LinkRates {
  double r_tx = 0.0;
  double r_rx = 0.0;
  double r_sum = 0.0;
  double kappa_sum = 0.0;
};

/// Normalized beamforming gain |h^H f|^2 / Na in [0, 1].
inline double normalized_gain(const LosChannel& channel, const BeamWeights& beam) {
  if (channel.vector.size() != beam.weights.size()) {
    throw DomainError("channel and beam dimensions differ");
  }
  return std::norm(channel.vector.dot(beam.weights)) / static_cast<double>(channel.vector.size());
}

inline double snr_with_beam(double snrbar_db, const LosChannel& channel, const BeamWeights& beam) {
  return db_to_linear(snrbar_db) * normalized_gain(channel, beam);
}

/// Normalized coupling |w^H H f|^2 / (Na_rx Na_tx).
inline double normalized_coupling(const SiChannel& si, const BeamWeights& tx_beam,
                                  const BeamWeights& rx_beam) {
  if (si.matrix.cols() != tx_beam.weights.size() || si.matrix.rows() != rx_beam.weights.size()) {
    throw DomainError("self-interference channel and beam dimensions differ");
  }
  const cplx coupled = rx_beam.weights.dot(si.matrix * tx_beam.weights);
  return std::norm(coupled) /
         (static_cast<double>(si.matrix.rows()) * static_cast<double>(si.matrix.cols()));
}

inline double inr_from_si(double si_ref_inr_db, const SiChannel& si, const BeamWeights& tx_beam,
                          const BeamWeights& rx_beam) {
  return db_to_linear(si_ref_inr_db) * normalized_coupling(si, tx_beam, rx_beam);
}

inline double sinr(double snr, double inr) {
  if (snr < 0.0 || inr < 0.0 || std::isnan(snr) || std::isnan(inr)) {
    throw DomainError("SNR and INR must be non-negative");
  }
  return snr / (1.0 + inr);
}

inline double spectral_efficiency(double sinr_linear) {
  if (sinr_linear < 0.0 || std::isnan(sinr_linear)) throw DomainError("SINR must be non-negative");
  return std::log2(1.0 + sinr_linear);
}

/// Per-link rates for one multiplexing strategy, with kappa normalized by the
/// codebook (nominal) sum capacity.
inline LinkRates strategy_rates(const LinkBudget& budget, double snr_tx_nom, double snr_rx_nom,
                                double snr_tx_sel, double snr_rx_sel, double inr_rx_sel,
                                Strategy strategy) {
  const double capacity = spectral_efficiency(snr_tx_nom) + spectral_efficiency(snr_rx_nom);
  if (!(capacity > 0.0)) throw DomainError("codebook capacity is zero; kappa undefined");

  LinkRates out;
  switch (strategy) {
    case Strategy::Tdd:
      out.r_tx = 0.5 * spectral_efficiency(snr_tx_nom);
      out.r_rx = 0.5 * spectral_efficiency(snr_rx_nom);
      break;
    case Strategy::TddPc:
      out.r_tx = 0.5 * spectral_efficiency(2.0 * snr_tx_nom);
      out.r_rx = 0.5 * spectral_efficiency(2.0 * snr_rx_nom);
      break;
    case Strategy::FdConv:
    case Strategy::FdSteer: {
      const double inr_tx = db_to_linear(budget.inr_tx_db);
      out.r_tx = spectral_efficiency(sinr(snr_tx_sel, inr_tx));
      out.r_rx = spectral_efficiency(sinr(snr_rx_sel, inr_rx_sel));
      break;
    }
  }
  out.r_sum = out.r_tx + out.r_rx;
  out.kappa_sum = out.r_sum / capacity;
  return out;
}

}  // namespace steer
