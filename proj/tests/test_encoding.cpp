#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "aqks/encoding.hpp"
#include "aqks/errors.hpp"

using namespace aqks;

namespace {

EpisodeParams make_episode(const RowMatrixXd& a, const Eigen::VectorXd& b) {
  EpisodeParams ep;
  ep.A = a;
  ep.b = b;
  return ep;
}

}  // namespace

TEST_SUITE("encoding") {

TEST_CASE("sample_episodes shape contract") {
  const auto eps = sample_episodes(3, 2, 2, DistributionConfig::uniform_2pi(1.0), 1);
  REQUIRE(eps.size() == 3);
  for (std::size_t e = 0; e < eps.size(); ++e) {
    CHECK(eps[e].A.rows() == 2);
    CHECK(eps[e].A.cols() == 2);
    CHECK(eps[e].b.size() == 2);
    CHECK(eps[e].episode_index == static_cast<int>(e));
    for (int u = 0; u < 2; ++u) {
      CHECK(eps[e].b[u] >= 0.0);
      CHECK(eps[e].b[u] < 2.0 * M_PI);
    }
  }
}

TEST_CASE("sample_episodes pooled standard deviation") {
  const auto eps = sample_episodes(10000, 2, 784, DistributionConfig::zero_bias(0.01), 123);
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& ep : eps) {
    sum += ep.A.sum();
    sq += ep.A.squaredNorm();
    n += static_cast<std::size_t>(ep.A.size());
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  CHECK(std::abs(sd - 0.01) <= 0.02 * 0.01);
  CHECK(std::abs(mean) < 1e-4);
}

TEST_CASE("zero b_mode gives zero bias vectors") {
  for (const auto& ep : sample_episodes(50, 3, 4, DistributionConfig::zero_bias(2.0), 9))
    CHECK(ep.b.isZero(0.0));
}

TEST_CASE("uniform b entries cover [0, 2 pi)") {
  double lo = 10.0;
  double hi = -1.0;
  for (const auto& ep : sample_episodes(2000, 2, 1, DistributionConfig::uniform_2pi(1.0), 4)) {
    lo = std::min(lo, ep.b.minCoeff());
    hi = std::max(hi, ep.b.maxCoeff());
  }
  CHECK(lo < 0.01);
  CHECK(hi > 2.0 * M_PI - 0.01);
  CHECK(hi < 2.0 * M_PI);
}

TEST_CASE("sample_episodes is reproducible per seed") {
  const auto a = sample_episodes(20, 2, 5, DistributionConfig::uniform_2pi(0.7), 77);
  const auto b = sample_episodes(20, 2, 5, DistributionConfig::uniform_2pi(0.7), 77);
  const auto c = sample_episodes(20, 2, 5, DistributionConfig::uniform_2pi(0.7), 78);
  bool differs = false;
  for (std::size_t e = 0; e < a.size(); ++e) {
    CHECK(a[e].A == b[e].A);
    CHECK(a[e].b == b[e].b);
    differs |= a[e].A != c[e].A;
  }
  CHECK(differs);
}

TEST_CASE("distribution validation names the field") {
  DistributionConfig d = DistributionConfig::zero_bias(0.0);
  CHECK_THROWS_AS(d.validate(), ConfigError);
  CHECK_THROWS_WITH_AS(sample_episodes(1, 1, 1, DistributionConfig::zero_bias(-1.0), 0),
                       doctest::Contains("sigma_d"), ConfigError);
  DistributionConfig u = DistributionConfig::uniform_2pi(1.0);
  u.b_hi = u.b_lo;
  CHECK_THROWS_AS(u.validate(), ConfigError);
  CHECK_THROWS(sample_episodes(0, 1, 1, DistributionConfig::zero_bias(1.0), 0));
}

TEST_CASE("encode examples") {
  const Eigen::Vector2d x(0.3, -4.0);
  CHECK(encode(x, make_episode(RowMatrixXd::Zero(2, 2), Eigen::Vector2d::Zero())).isZero(0.0));
  CHECK(encode(x, make_episode(RowMatrixXd::Identity(2, 2), Eigen::Vector2d::Zero())) == x);

  RowMatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  const Eigen::VectorXd j = encode(Eigen::Vector2d(1, 1), make_episode(a, Eigen::Vector2d(0.5, -0.5)));
  CHECK(j[0] == 3.5);
  CHECK(j[1] == 6.5);

  CHECK_THROWS_AS(encode(Eigen::Vector3d(1, 2, 3), make_episode(a, Eigen::Vector2d::Zero())),
                  ShapeError);
}

TEST_CASE("encode is affine") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto eps = sample_episodes(10, 3, 4, DistributionConfig::uniform_2pi(1.3), 12);
  for (const auto& ep : eps) {
    Eigen::Vector4d x;
    Eigen::Vector4d y;
    for (int k = 0; k < 4; ++k) {
      x[k] = n(rng);
      y[k] = n(rng);
    }
    const double alpha = n(rng);
    const double beta = n(rng);
    const Eigen::VectorXd lhs = encode(alpha * x + beta * y, ep);
    const Eigen::VectorXd rhs =
        alpha * encode(x, ep) + beta * encode(y, ep) - (alpha + beta - 1.0) * ep.b;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("couplings_from_j examples") {
  const auto zero = couplings_from_j(Eigen::Vector3d::Zero(), Topology{TopologyKind::kComplete, 3});
  CHECK(zero.size() == 3);
  for (const auto& [pair, v] : zero) CHECK(v == 0.0);

  const auto full = couplings_from_j(Eigen::Vector3d(1, 2, 3), Topology{TopologyKind::kComplete, 3});
  CHECK(full.size() == 3);
  CHECK(full.at({0, 1}) == 2.0);
  CHECK(full.at({0, 2}) == 3.0);
  CHECK(full.at({1, 2}) == 6.0);

  const auto chain = couplings_from_j(Eigen::Vector4d(1, 2, 3, 4), Topology{TopologyKind::kLinear, 4});
  CHECK(chain.size() == 3);
  CHECK(chain.at({0, 1}) == 2.0);
  CHECK(chain.at({1, 2}) == 6.0);
  CHECK(chain.at({2, 3}) == 12.0);
  CHECK(chain.count({0, 3}) == 0);
  CHECK(chain.count({0, 2}) == 0);

  CHECK_THROWS_AS(couplings_from_j(Eigen::Vector2d(1, 2), Topology{TopologyKind::kComplete, 3}),
                  ShapeError);
}

TEST_CASE("topology_edges examples") {
  using E = std::vector<QubitPair>;
  CHECK(topology_edges({TopologyKind::kLinear, 4}) == E{{0, 1}, {1, 2}, {2, 3}});
  CHECK(topology_edges({TopologyKind::kSquare, 4}) == E{{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  CHECK(topology_edges({TopologyKind::kComplete, 4}) ==
        E{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK_THROWS_AS(topology_edges({TopologyKind::kSquare, 3}), ConfigError);
  CHECK_THROWS_AS(topology_edges({TopologyKind::kSquare, 5}), ConfigError);
}

TEST_CASE("edge-count law and symmetry") {
  for (int q = 1; q <= 8; ++q) {
    CHECK(topology_edges({TopologyKind::kLinear, q}).size() == static_cast<std::size_t>(q - 1));
    CHECK(topology_edges({TopologyKind::kComplete, q}).size() ==
          static_cast<std::size_t>(q * (q - 1) / 2));
    for (TopologyKind kind : {TopologyKind::kLinear, TopologyKind::kComplete}) {
      std::set<std::pair<int, int>> seen;
      for (const QubitPair& e : topology_edges({kind, q})) {
        CHECK(e.lo < e.hi);
        CHECK(seen.count({e.hi, e.lo}) == 0);
        seen.insert({e.lo, e.hi});
      }
    }
  }
  CHECK(topology_edges({TopologyKind::kSquare, 4}).size() == 4);
}

TEST_CASE("topology names round-trip") {
  for (TopologyKind k : {TopologyKind::kLinear, TopologyKind::kSquare, TopologyKind::kComplete})
    CHECK(parse_topology(to_string(k)) == k);
  CHECK_THROWS_AS(parse_topology("ring"), ConfigError);
}

TEST_CASE("episode_terms assembles fields, couplings and weight") {
  const HamiltonianTerms t = episode_terms(Eigen::Vector3d(1, -2, 0.5),
                                           Topology{TopologyKind::kLinear, 3}, -1.0);
  CHECK(t.local_fields == Eigen::Vector3d(1, -2, 0.5));
  CHECK(t.couplings.size() == 2);
  CHECK(t.couplings.at({0, 1}) == -2.0);
  CHECK(t.couplings.at({1, 2}) == -1.0);
  CHECK(t.transverse_weight == -1.0);
}

}  // TEST_SUITE
