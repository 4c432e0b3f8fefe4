#include "aqks/encoding.hpp"

#include <cmath>
#include <numbers>

#include "aqks/errors.hpp"

namespace aqks {

DistributionConfig DistributionConfig::zero_bias(double sigma_d) {
  return DistributionConfig{sigma_d, BiasMode::kZero, 0.0, 0.0};
}

DistributionConfig DistributionConfig::uniform_2pi(double sigma_d) {
  return DistributionConfig{sigma_d, BiasMode::kUniform, 0.0, 2.0 * std::numbers::pi};
}

void DistributionConfig::validate() const {
  if (!(sigma_d > 0.0) || !std::isfinite(sigma_d))
    throw ConfigError("sigma_d must be a positive real, got " + std::to_string(sigma_d));
  if (b_mode == BiasMode::kUniform && !(b_lo < b_hi))
    throw ConfigError("uniform b bounds must satisfy lo < hi");
}

TopologyKind parse_topology(std::string_view name) {
  if (name == "linear") return TopologyKind::kLinear;
  if (name == "square") return TopologyKind::kSquare;
  if (name == "complete") return TopologyKind::kComplete;
  throw ConfigError("unknown topology '" + std::string(name) +
                    "' (expected linear, square or complete)");
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kLinear: return "linear";
    case TopologyKind::kSquare: return "square";
    case TopologyKind::kComplete: return "complete";
  }
  return "?";
}

std::vector<QubitPair> topology_edges(const Topology& topo) {
  check_qubit_count(topo.num_qubits);
  const int q = topo.num_qubits;
  std::vector<QubitPair> edges;
  switch (topo.kind) {
    case TopologyKind::kLinear:
      for (int l = 0; l + 1 < q; ++l) edges.emplace_back(l, l + 1);
      break;
    case TopologyKind::kSquare:
      if (q != 4)
        throw ConfigError("square topology requires exactly 4 qubits, got " + std::to_string(q));
      edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
      break;
    case TopologyKind::kComplete:
      for (int l = 0; l < q; ++l)
        for (int m = l + 1; m < q; ++m) edges.emplace_back(l, m);
      break;
  }
  return edges;
}

std::vector<EpisodeParams> sample_episodes(int num_episodes, int q, int p,
                                           const DistributionConfig& dist,
                                           std::mt19937_64& rng) {
  if (num_episodes < 1) throw ConfigError("episodes must be >= 1");
  check_qubit_count(q);
  if (p < 1) throw ConfigError("feature dimension must be >= 1");
  dist.validate();

  std::normal_distribution<double> normal(0.0, dist.sigma_d);
  std::uniform_real_distribution<double> uniform(dist.b_lo, dist.b_hi);
  std::vector<EpisodeParams> episodes;
  episodes.reserve(static_cast<std::size_t>(num_episodes));
  for (int e = 0; e < num_episodes; ++e) {
    EpisodeParams ep;
    ep.episode_index = e;
    ep.A.resize(q, p);
    // Row-major draw order, fixed so runs are reproducible.
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < p; ++c) ep.A(r, c) = normal(rng);
    ep.b = Eigen::VectorXd::Zero(q);
    if (dist.b_mode == BiasMode::kUniform)
      for (int r = 0; r < q; ++r) ep.b[r] = uniform(rng);
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

std::vector<EpisodeParams> sample_episodes(int num_episodes, int q, int p,
                                           const DistributionConfig& dist,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_episodes(num_episodes, q, p, dist, rng);
}

Eigen::VectorXd encode(const Eigen::Ref<const Eigen::VectorXd>& x, const EpisodeParams& ep) {
  if (x.size() != ep.A.cols())
    throw ShapeError("sample has " + std::to_string(x.size()) + " features, encoding expects " +
                     std::to_string(ep.A.cols()));
  if (ep.b.size() != ep.A.rows()) throw ShapeError("bias length does not match A rows");
  Eigen::VectorXd j(ep.A.rows());
  for (Eigen::Index r = 0; r < ep.A.rows(); ++r) {
    const double* row = ep.A.data() + r * ep.A.cols();
    double acc = 0.0;
    for (Eigen::Index c = 0; c < ep.A.cols(); ++c) acc += row[c] * x[c];
    j[r] = acc + ep.b[r];
  }
  return j;
}

std::map<QubitPair, double> couplings_from_j(const Eigen::VectorXd& j, const Topology& topo) {
  if (topo.num_qubits != j.size())
    throw ShapeError("topology has " + std::to_string(topo.num_qubits) + " qubits, j has " +
                     std::to_string(j.size()));
  std::map<QubitPair, double> out;
  for (const QubitPair& e : topology_edges(topo)) out.emplace(e, j[e.lo] * j[e.hi]);
  return out;
}

HamiltonianTerms episode_terms(const Eigen::VectorXd& j, const Topology& topo,
                               double transverse_weight) {
  HamiltonianTerms terms;
  terms.local_fields = j;
  terms.couplings = couplings_from_j(j, topo);
  terms.transverse_weight = transverse_weight;
  return terms;
}

}  // namespace aqks
