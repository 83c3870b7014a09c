// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "steer/linkmetrics.hpp"

namespace steer {

struct AlignmentResult {
  std::size_t beam_index = 0;
  SteeringDirection direction;
  double snr_nom = 0.0;
};

/// Conventional beam alignment: exhaustive search for the codebook beam with
/// the largest gain toward the user. Gains within 1e-12 relative of each
/// other count as a tie, and ties go to the lowest index.
inline AlignmentResult align(const Codebook& codebook, const LosChannel& channel,
                             double snrbar_db) {
  constexpr double kTieTolerance = 1e-12;
  if (codebook.empty()) throw ConfigError("cannot align with an empty codebook");
  std::size_t best = 0;
  double best_gain = -1.0;
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const double g = normalized_gain(channel, codebook.beams[i]);
    if (g > best_gain + kTieTolerance * best_gain) {
      best_gain = g;
      best = i;
    }
  }
  return AlignmentResult{best, codebook.directions[best], db_to_linear(snrbar_db) * best_gain};
}

}  // namespace steer
