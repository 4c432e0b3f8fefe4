#pragma once

// Quantum randomized features: for each sample and episode, encode the sample
// into local fields, anneal from |+>^q, and measure in the Z basis. Episode e
// occupies columns [e*q, (e+1)*q) of a feature row (episode-major layout).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aqks/core_sim.hpp"
#include "aqks/encoding.hpp"
#include "aqks/random.hpp"

namespace aqks {

enum class TransverseSign {
  kStandard,  // H = -a(t) sum X: |+>^q is the ground state at t = 0
  kLiteral,   // H = +a(t) sum X
};

struct TransformConfig {
  int num_qubits = 2;
  int num_episodes = 1;
  double total_time = 5.0;
  double step_duration = 1.0;
  TopologyKind topology = TopologyKind::kComplete;
  TransverseSign transverse_sign = TransverseSign::kStandard;
  int shots_per_episode = 1;

  Schedule schedule() const { return Schedule(total_time, step_duration); }
  Topology topo() const { return Topology{topology, num_qubits}; }
  double transverse_weight() const {
    return transverse_sign == TransverseSign::kStandard ? 1.0 : -1.0;
  }
  std::size_t feature_dim() const {
    return static_cast<std::size_t>(num_qubits) * static_cast<std::size_t>(num_episodes);
  }

  /// Throws ConfigError/DomainError on invalid settings.
  void validate() const;
};

struct QuantumFeatures {
  /// Length q*E. With one shot per episode every entry is 0 or 1; with s
  /// shots an entry counts how many shots measured 1.
  std::vector<std::uint8_t> bits;
  double scale = 1.0;  // 1/E, applied by the kernel, never baked into bits
  std::size_t sample_index = 0;
  int num_qubits = 0;
  int num_episodes = 0;
  int shots = 1;
};

/// Row-major n x (q*E) matrix of measurement counts.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int num_qubits = 0;
  int num_episodes = 0;
  int shots = 1;
  std::vector<std::uint8_t> values;

  std::span<const std::uint8_t> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
  QuantumFeatures sample(std::size_t i) const;
  /// Rows `indices`, in order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
};

/// Exact outcome distribution of every episode for sample x (E vectors of
/// length 2^q).
std::vector<std::vector<double>> exact_probability_features(
    const Eigen::Ref<const Eigen::VectorXd>& x, std::span<const EpisodeParams> episodes,
    const TransformConfig& cfg);

/// Measures every episode with draws from the single stream `rng`.
QuantumFeatures transform_sample(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 std::span<const EpisodeParams> episodes,
                                 const TransformConfig& cfg, CounterRng& rng);

/// Stream key for the measurement of (sample, episode) under `master_seed`.
std::uint64_t measurement_stream_key(std::uint64_t master_seed, std::size_t sample,
                                     std::size_t episode);

/// Transforms every row of X. Episode e of sample i draws from the stream
/// measurement_stream_key(master_seed, first_index + i, e), so the output
/// does not depend on `threads`.
FeatureMatrix transform_dataset(const RowMatrixXd& X, std::span<const EpisodeParams> episodes,
                                const TransformConfig& cfg, std::uint64_t master_seed,
                                int threads = 1, std::size_t first_index = 0);

/// Binary feature cache.
///
/// Layout (all integers little-endian):
///   bytes 0..3   magic "AQKS"
///   u32          format version (1)
///   u64          n (rows)
///   u32          q
///   u32          E
///   u64          master_seed
///   n rows of ceil(q*E / 8) bytes; feature k of a row is bit (k % 8) of
///   byte k / 8 (least significant bit first), unused trailing bits are 0.
/// Only single-shot (binary) matrices can be cached.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features,
                         std::uint64_t master_seed);

struct FeatureCache {
  FeatureMatrix features;
  std::uint64_t master_seed = 0;
};

FeatureCache read_feature_cache(const std::filesystem::path& path);

}  // namespace aqks
