// SPDX-License-Identifier: Apache-2.0
#pragma once

// Self-interference measurement abstraction. An oracle answers "what receive
// link INR (dB) does the beam pair (d_tx, d_rx) incur". Two backends:
//   SyntheticOracle - computes |w^H H f|^2 from a synthetic SI channel,
//   GridOracle      - looks values up in an INR grid file.

#include <algorithm>
#include <array>
#include <atomic>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "steer/csv.hpp"
#include "steer/linkmetrics.hpp"

namespace steer {

struct DirectionPair {
  SteeringDirection tx;
  SteeringDirection rx;

  friend bool operator==(const DirectionPair&, const DirectionPair&) = default;
};

/// Quantized (1e-6 degree) key of a beam pair. Hemisphere angles fit in
/// 32 bits at that resolution.
struct PairKey {
  std::int32_t tx_az = 0;
  std::int32_t tx_el = 0;
  std::int32_t rx_az = 0;
  std::int32_t rx_el = 0;

  static PairKey of(const SteeringDirection& tx, const SteeringDirection& rx) {
    return {q(tx.azimuth_deg), q(tx.elevation_deg), q(rx.azimuth_deg), q(rx.elevation_deg)};
  }

 private:
  static std::int32_t q(double deg) {
    if (!(std::abs(deg) <= 180.0)) throw DomainError("direction angle out of range");
    return static_cast<std::int32_t>(quantize_deg(deg));
  }

 public:

  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct DirectionKey {
  std::int64_t az = 0;
  std::int64_t el = 0;

  static DirectionKey of(const SteeringDirection& d) {
    return {quantize_deg(d.azimuth_deg), quantize_deg(d.elevation_deg)};
  }
  friend bool operator==(const DirectionKey&, const DirectionKey&) = default;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    const auto u = [](std::int32_t v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)); };
    std::uint64_t h = mix64((u(k.tx_az) << 32) | u(k.tx_el));
    h = mix64(h ^ ((u(k.rx_az) << 32) | u(k.rx_el)));
    return static_cast<std::size_t>(h);
  }
};

struct DirectionKeyHash {
  std::size_t operator()(const DirectionKey& k) const noexcept {
    return static_cast<std::size_t>(mix64(mix64(static_cast<std::uint64_t>(k.az)) ^
                                          static_cast<std::uint64_t>(k.el)));
  }
};

/// Hash map split into independently locked shards. Insertion is atomic per
/// key: the first value stored for a key wins.
template <class Key, class Value, class Hash>
class ShardedCache {
 public:
  std::optional<Value> find(const Key& key) const {
    const Shard& s = shard(key);
    std::shared_lock lock(s.mutex);
    auto it = s.map.find(key);
    if (it == s.map.end()) return std::nullopt;
    return it->second;
  }

  Value insert(const Key& key, Value value) {
    Shard& s = shard(key);
    std::unique_lock lock(s.mutex);
    auto [it, inserted] = s.map.try_emplace(key, std::move(value));
    return it->second;
  }

  void clear() {
    for (Shard& s : shards_) {
      std::unique_lock lock(s.mutex);
      s.map.clear();
    }
  }

 private:
  static constexpr std::size_t kShards = 64;
  struct Shard {
    mutable std::shared_mutex mutex;
    std::unordered_map<Key, Value, Hash> map;
  };

  Shard& shard(const Key& key) { return shards_[Hash{}(key) % kShards]; }
  const Shard& shard(const Key& key) const { return shards_[Hash{}(key) % kShards]; }

  std::array<Shard, kShards> shards_;
};

}  // namespace detail

struct OracleStats {
  std::uint64_t queries_total = 0;
  std::uint64_t queries_served_from_cache = 0;
};

/// Anything the STEER solvers can measure INR (dB) from.
template <class O>
concept InrSource = requires(O& oracle, const SteeringDirection& d) {
  { oracle.query_inr_db(d, d) } -> std::convertible_to<double>;
};

class InrOracle {
 public:
  virtual ~InrOracle() = default;

  /// Receive-link INR in dB for the beam pair.
  virtual double query_inr_db(const SteeringDirection& tx, const SteeringDirection& rx) = 0;

  double query_inr(const SteeringDirection& tx, const SteeringDirection& rx) {
    return db_to_linear(query_inr_db(tx, rx));
  }

  virtual OracleStats stats() const = 0;

  /// |w^H H f|^2 / Na^2 in dB, without the reference level, noise or clipping.
  virtual double normalized_coupling_db(const SteeringDirection&, const SteeringDirection&) {
    throw UnsupportedOperation("oracle has no underlying channel");
  }

  virtual double reference_db() const {
    throw UnsupportedOperation("oracle has no adjustable reference level");
  }

  virtual void set_reference_db(double) {
    throw UnsupportedOperation("oracle has no adjustable reference level");
  }
};

struct SyntheticOracleOptions {
  double si_ref_inr_db = 0.0;
  // Additive Gaussian perturbation (dB) applied per beam pair, deterministic
  // in (noise_seed, pair).
  double noise_sigma_db = 0.0;
  std::uint64_t noise_seed = 0;
  // Receiver saturation ceiling; values above are clipped.
  std::optional<double> clip_ceiling_db;
};

class SyntheticOracle final : public InrOracle {
 public:
  SyntheticOracle(UpaGeometry tx, UpaGeometry rx, SiChannel si, SyntheticOracleOptions options = {})
      : tx_(std::move(tx)), rx_(std::move(rx)), si_(std::move(si)), options_(options) {
    if (si_.matrix.cols() != static_cast<Eigen::Index>(tx_.num_elements()) ||
        si_.matrix.rows() != static_cast<Eigen::Index>(rx_.num_elements())) {
      throw DomainError("self-interference channel does not match the panel sizes");
    }
    if (!(options_.noise_sigma_db >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  }

  double query_inr_db(const SteeringDirection& tx, const SteeringDirection& rx) override {
    total_.fetch_add(1, std::memory_order_relaxed);
    const PairKey key = PairKey::of(tx, rx);
    double measured = 0.0;
    if (auto hit = pairs_.find(key)) {
      cache_hits_.fetch_add(1, std::memory_order_relaxed);
      measured = *hit;
    } else {
      measured = normalized_coupling_db(tx, rx);
      if (options_.noise_sigma_db > 0.0) measured += perturbation(key);
      measured = pairs_.insert(key, measured);
    }
    double inr = measured + reference_db_.load(std::memory_order_relaxed);
    if (options_.clip_ceiling_db) inr = std::min(inr, *options_.clip_ceiling_db);
    return inr;
  }

  OracleStats stats() const override {
    return {total_.load(std::memory_order_relaxed), cache_hits_.load(std::memory_order_relaxed)};
  }

  double normalized_coupling_db(const SteeringDirection& tx, const SteeringDirection& rx) override {
    const auto coupled_tx = tx_response(tx);
    const auto rx_beam = rx_weights(rx);
    const double c = std::norm(rx_beam->dot(*coupled_tx)) /
                     (static_cast<double>(si_.matrix.rows()) * static_cast<double>(si_.matrix.cols()));
    return linear_to_db(c);
  }

  double reference_db() const override { return reference_db_.load(std::memory_order_relaxed); }

  void set_reference_db(double db) override {
    if (!std::isfinite(db)) throw DomainError("reference INR must be finite");
    reference_db_.store(db, std::memory_order_relaxed);
  }

  const SiChannel& channel() const { return si_; }
  const UpaGeometry& tx_geometry() const { return tx_; }
  const UpaGeometry& rx_geometry() const { return rx_; }

 private:
  using VecPtr = std::shared_ptr<const CVector>;

  // H * f(d_tx), cached per transmit direction.
  VecPtr tx_response(const SteeringDirection& d) {
    const DirectionKey key = DirectionKey::of(d);
    if (auto hit = tx_cache_.find(key)) return *hit;
    const BeamWeights f = conjugate_beam(tx_, d);
    return tx_cache_.insert(key, std::make_shared<const CVector>(si_.matrix * f.weights));
  }

  VecPtr rx_weights(const SteeringDirection& d) {
    const DirectionKey key = DirectionKey::of(d);
    if (auto hit = rx_cache_.find(key)) return *hit;
    return rx_cache_.insert(key, std::make_shared<const CVector>(conjugate_beam(rx_, d).weights));
  }

  double perturbation(const PairKey& key) const {
    std::mt19937_64 rng(detail::mix64(options_.noise_seed ^ detail::PairKeyHash{}(key)));
    std::normal_distribution<double> normal(0.0, options_.noise_sigma_db);
    return normal(rng);
  }

  UpaGeometry tx_;
  UpaGeometry rx_;
  SiChannel si_;
  SyntheticOracleOptions options_;
  std::atomic<double> reference_db_{options_.si_ref_inr_db};
  std::atomic<std::uint64_t> total_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  detail::ShardedCache<PairKey, double, detail::PairKeyHash> pairs_;
  detail::ShardedCache<DirectionKey, VecPtr, detail::DirectionKeyHash> tx_cache_;
  detail::ShardedCache<DirectionKey, VecPtr, detail::DirectionKeyHash> rx_cache_;
};

// ---------------------------------------------------------------------------
// INR grids

struct GridEntry {
  DirectionPair pair;
  double inr_db = 0.0;
};

struct InrGrid {
  std::map<PairKey, GridEntry> entries;
  // (res_theta_deg, res_phi_deg); when set, every direction must be an
  // integer multiple of the resolution.
  std::optional<std::pair<double, double>> resolution_deg;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return entries.size(); }

  /// Inserts a new entry. Duplicate keys and non-finite values are rejected.
  void add(const DirectionPair& pair, double inr_db) {
    if (!std::isfinite(inr_db)) throw DomainError("grid INR values must be finite");
    auto [it, inserted] = entries.try_emplace(PairKey::of(pair.tx, pair.rx), GridEntry{pair, inr_db});
    if (!inserted) throw DomainError("duplicate beam pair in INR grid");
  }

  std::optional<double> find(const SteeringDirection& tx, const SteeringDirection& rx) const {
    auto it = entries.find(PairKey::of(tx, rx));
    if (it == entries.end()) return std::nullopt;
    return it->second.inr_db;
  }
};

inline constexpr std::string_view kGridHeader = "theta_tx_deg,phi_tx_deg,theta_rx_deg,phi_rx_deg,inr_db";

namespace detail {

inline bool on_lattice(double deg, double res) {
  const double k = deg / res;
  return std::abs(k - std::round(k)) <= 1e-6;
}

}  // namespace detail

inline void write_grid(const InrGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& [k, v] : grid.metadata) out << "# " << k << '=' << v << '\n';
  if (grid.resolution_deg) {
    out << "# res_theta_deg=" << csv::format_number(grid.resolution_deg->first) << '\n';
    out << "# res_phi_deg=" << csv::format_number(grid.resolution_deg->second) << '\n';
  }
  out << kGridHeader << '\n';
  for (const auto& [key, e] : grid.entries) {
    out << csv::format_number(e.pair.tx.azimuth_deg) << ',' << csv::format_number(e.pair.tx.elevation_deg)
        << ',' << csv::format_number(e.pair.rx.azimuth_deg) << ','
        << csv::format_number(e.pair.rx.elevation_deg) << ',' << csv::format_number(e.inr_db) << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline InrGrid read_grid(std::istream& in) {
  InrGrid grid;
  csv::Line line;
  bool have_header = false;
  std::optional<double> res_theta, res_phi;
  while (csv::next_line(in, line)) {
    const std::string_view text = line.text;
    if (text.empty()) continue;
    if (text.front() == '#') {
      std::string key, value;
      if (!csv::parse_metadata(text, key, value)) continue;
      if (key == "res_theta_deg") {
        res_theta = csv::parse_double(value, line.number);
      } else if (key == "res_phi_deg") {
        res_phi = csv::parse_double(value, line.number);
      } else {
        grid.metadata[key] = value;
      }
      continue;
    }
    if (!have_header) {
      if (text != kGridHeader) throw ParseError("expected INR grid header", line.number);
      have_header = true;
      continue;
    }
    const auto fields = csv::split(text);
    if (fields.size() != 5) {
      throw ParseError("expected 5 fields, found " + std::to_string(fields.size()), line.number);
    }
    DirectionPair pair{{csv::parse_double(fields[0], line.number), csv::parse_double(fields[1], line.number)},
                       {csv::parse_double(fields[2], line.number), csv::parse_double(fields[3], line.number)}};
    const double inr = csv::parse_double(fields[4], line.number);
    if (!pair.tx.valid() || !pair.rx.valid()) throw ParseError("direction outside hemisphere", line.number);
    if (!std::isfinite(inr)) throw ParseError("non-finite INR", line.number);
    if (grid.entries.contains(PairKey::of(pair.tx, pair.rx))) {
      throw ParseError("duplicate beam pair", line.number);
    }
    if (res_theta && res_phi) {
      if (!detail::on_lattice(pair.tx.azimuth_deg, *res_theta) ||
          !detail::on_lattice(pair.rx.azimuth_deg, *res_theta) ||
          !detail::on_lattice(pair.tx.elevation_deg, *res_phi) ||
          !detail::on_lattice(pair.rx.elevation_deg, *res_phi)) {
        throw ParseError("direction off the declared resolution lattice", line.number);
      }
    }
    grid.add(pair, inr);
  }
  if (!have_header) throw ParseError("missing INR grid header", line.number + 1);
  if (res_theta && res_phi) grid.resolution_deg = std::make_pair(*res_theta, *res_phi);
  return grid;
}

inline InrGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_grid(in);
}

/// File-backed oracle: every query must hit a grid entry.
class GridOracle final : public InrOracle {
 public:
  explicit GridOracle(InrGrid grid) : grid_(std::move(grid)) {}

  double query_inr_db(const SteeringDirection& tx, const SteeringDirection& rx) override {
    total_.fetch_add(1, std::memory_order_relaxed);
    if (auto v = grid_.find(tx, rx)) return *v;
    throw MeasurementUnavailable("no INR measurement for tx (" + std::to_string(tx.azimuth_deg) + ", " +
                                 std::to_string(tx.elevation_deg) + ") rx (" +
                                 std::to_string(rx.azimuth_deg) + ", " +
                                 std::to_string(rx.elevation_deg) + ")");
  }

  OracleStats stats() const override { return {total_.load(std::memory_order_relaxed), 0}; }

  const InrGrid& grid() const { return grid_; }

 private:
  InrGrid grid_;
  std::atomic<std::uint64_t> total_{0};
};

/// Queries `pairs` (duplicates collapse) and writes them as an INR grid.
inline InrGrid export_grid(InrOracle& oracle, std::span<const DirectionPair> pairs,
                           const std::filesystem::path& path,
                           std::optional<std::pair<double, double>> resolution_deg = std::nullopt,
                           std::map<std::string, std::string> metadata = {}) {
  InrGrid grid;
  grid.metadata = std::move(metadata);
  grid.resolution_deg = resolution_deg;
  for (const DirectionPair& p : pairs) {
    if (grid.entries.contains(PairKey::of(p.tx, p.rx))) continue;
    grid.add(p, oracle.query_inr_db(p.tx, p.rx));
  }
  write_grid(grid, path);
  return grid;
}

inline std::unique_ptr<GridOracle> import_grid(const std::filesystem::path& path) {
  return std::make_unique<GridOracle>(read_grid(path));
}

// ---------------------------------------------------------------------------
// Calibration

/// Median of a non-empty sample; the mean of the two middle values for even
/// sizes.
inline double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Sets the oracle's reference level so that the median INR over every
/// codebook beam pair equals `target_median_inr_db`. Returns the reference.
inline double calibrate_reference(InrOracle& oracle, const Codebook& codebook_tx,
                                  const Codebook& codebook_rx, double target_median_inr_db) {
  if (!std::isfinite(target_median_inr_db)) throw DomainError("calibration target must be finite");
  if (codebook_tx.empty() || codebook_rx.empty()) throw ConfigError("calibration needs non-empty codebooks");
  std::vector<double> coupling;
  coupling.reserve(codebook_tx.size() * codebook_rx.size());
  for (const auto& dt : codebook_tx.directions) {
    for (const auto& dr : codebook_rx.directions) {
      coupling.push_back(oracle.normalized_coupling_db(dt, dr));
    }
  }
  const double ref = target_median_inr_db - median(std::move(coupling));
  oracle.set_reference_db(ref);
  return ref;
}

}  // namespace steer
