#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aqks/core_sim.hpp"

namespace aqks {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One random draw of the affine encoding j = A x + b.
struct EpisodeParams {
  RowMatrixXd A;      // q x p
  Eigen::VectorXd b;  // q
  int episode_index = 0;

  int num_qubits() const noexcept { return static_cast<int>(A.rows()); }
  int num_features() const noexcept { return static_cast<int>(A.cols()); }
};

enum class BiasMode { kZero, kUniform };

struct DistributionConfig {
  double sigma_d = 1.0;
  BiasMode b_mode = BiasMode::kZero;
  double b_lo = 0.0;
  double b_hi = 0.0;

  static DistributionConfig zero_bias(double sigma_d);
  /// b entries uniform on [0, 2 pi).
  static DistributionConfig uniform_2pi(double sigma_d);

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class TopologyKind { kLinear, kSquare, kComplete };

TopologyKind parse_topology(std::string_view name);
std::string_view to_string(TopologyKind kind);

struct Topology {
  TopologyKind kind = TopologyKind::kComplete;
  int num_qubits = 2;
};

/// Sorted, deterministic edge list. Square is the 4-cycle
/// (0,1),(1,2),(2,3),(0,3) and rejects q != 4.
std::vector<QubitPair> topology_edges(const Topology& topo);

/// Draws E episodes from `rng`. A entries are N(0, sigma_d^2).
std::vector<EpisodeParams> sample_episodes(int num_episodes, int q, int p,
                                           const DistributionConfig& dist,
                                           std::mt19937_64& rng);

/// Convenience overload seeding a fresh std::mt19937_64.
std::vector<EpisodeParams> sample_episodes(int num_episodes, int q, int p,
                                           const DistributionConfig& dist,
                                           std::uint64_t seed);

/// j = A x + b, summed left to right in a fixed order so the result is
/// bit-identical wherever it is evaluated. Throws ShapeError on mismatch.
Eigen::VectorXd encode(const Eigen::Ref<const Eigen::VectorXd>& x, const EpisodeParams& ep);

/// h_lm = j_l * j_m on every edge of `topo`.
std::map<QubitPair, double> couplings_from_j(const Eigen::VectorXd& j, const Topology& topo);

/// Full per-sample Hamiltonian for one episode.
HamiltonianTerms episode_terms(const Eigen::VectorXd& j, const Topology& topo,
                               double transverse_weight);

}  // namespace aqks
