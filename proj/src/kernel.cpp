#include "aqks/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <string>
#include <thread>

#include "aqks/errors.hpp"

namespace aqks {

namespace {

// Fills the upper triangle (including the diagonal) with `entry(m, n)` and
// mirrors it. Rows are dealt round-robin to workers; each entry is computed
// by exactly one worker, so the result does not depend on `threads`.
template <typename Entry>
Eigen::MatrixXd symmetric_fill(std::size_t n, int threads, Entry&& entry) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto rows = [&](std::size_t start, std::size_t stride) {
    for (std::size_t m = start; m < n; m += stride)
      for (std::size_t k = m; k < n; ++k) {
        const double v = entry(m, k);
        g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = v;
        g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = v;
      }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                                                      1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    rows(0, 1);
    return g;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(rows, w, workers);
  for (auto& t : pool) t.join();
  return g;
}

}  // namespace

SMatrix build_s_matrix(int q) {
  check_qubit_count(q);
  const int dim = 1 << q;
  SMatrix s;
  s.num_qubits = q;
  s.entries.resize(dim, dim);
  for (int z = 0; z < dim; ++z)
    for (int w = 0; w < dim; ++w)
      s.entries(z, w) = std::popcount(static_cast<unsigned>(z & w));
  return s;
}

double kernel_estimate(const QuantumFeatures& u_m, const QuantumFeatures& u_n) {
  if (u_m.num_qubits != u_n.num_qubits || u_m.num_episodes != u_n.num_episodes)
    throw ShapeError("kernel_estimate: feature vectors have different q or E");
  if (u_m.bits.size() != u_n.bits.size() ||
      u_m.bits.size() != static_cast<std::size_t>(u_m.num_qubits) *
                             static_cast<std::size_t>(u_m.num_episodes))
    throw ShapeError("kernel_estimate: feature length is not q*E");
  if (u_m.num_episodes < 1) throw ShapeError("kernel_estimate: E must be >= 1");
  std::uint64_t dot = 0;
  for (std::size_t k = 0; k < u_m.bits.size(); ++k)
    dot += static_cast<std::uint64_t>(u_m.bits[k]) * u_n.bits[k];
  const double shots2 = static_cast<double>(u_m.shots) * static_cast<double>(u_n.shots);
  return static_cast<double>(dot) / shots2 / static_cast<double>(u_m.num_episodes);
}

double kernel_exact(const ProbabilityFeatures& p_m, const ProbabilityFeatures& p_n,
                    const SMatrix& s) {
  if (p_m.size() != p_n.size() || p_m.empty())
    throw ShapeError("kernel_exact: episode counts differ or are zero");
  const auto dim = static_cast<std::size_t>(s.entries.rows());
  double total = 0.0;
  for (std::size_t e = 0; e < p_m.size(); ++e) {
    if (p_m[e].size() != dim || p_n[e].size() != dim)
      throw ShapeError("kernel_exact: distribution length does not match S");
    // Sum over unordered outcome pairs so that swapping m and n is exact.
    const std::vector<double>& a = p_m[e];
    const std::vector<double>& b = p_n[e];
    double term = 0.0;
    for (std::size_t z = 1; z < dim; ++z) {
      const auto zi = static_cast<Eigen::Index>(z);
      term += s.entries(zi, zi) * (a[z] * b[z]);
      for (std::size_t w = z + 1; w < dim; ++w)
        term += s.entries(zi, static_cast<Eigen::Index>(w)) * (a[z] * b[w] + a[w] * b[z]);
    }
    total += term;
  }
  return total / static_cast<double>(p_m.size());
}

Eigen::MatrixXd gram_matrix(std::span<const QuantumFeatures> features, int threads) {
  // Shape errors surface here rather than inside worker threads.
  for (const QuantumFeatures& f : features) (void)kernel_estimate(features.front(), f);
  return symmetric_fill(features.size(), threads, [&](std::size_t m, std::size_t n) {
    return kernel_estimate(features[m], features[n]);
  });
}

Eigen::MatrixXd gram_matrix(std::span<const ProbabilityFeatures> probs, const SMatrix& s,
                            int threads) {
  for (const ProbabilityFeatures& p : probs) (void)kernel_exact(probs.front(), p, s);
  return symmetric_fill(probs.size(), threads, [&](std::size_t m, std::size_t n) {
    return kernel_exact(probs[m], probs[n], s);
  });
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) os << ',';
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw Error("failed writing " + path.string());
}

}  // namespace aqks
