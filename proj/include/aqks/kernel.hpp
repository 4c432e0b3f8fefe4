#pragma once

// Quantum kernel implied by the feature map.
//
//   estimate: K(m, n) = (1/E) <u_m, u_n>                     (sampled bits)
//   exact:    K(m, n) = (1/E) sum_e p_m^e^T S p_n^e           (probabilities)
//
// S is indexed by measurement outcome: S[z][z'] = popcount(z & z'), the
// number of qubits measured 1 in both outcomes. With it the exact form is
// the expectation of the estimate over measurement randomness.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aqks/features.hpp"

namespace aqks {

struct SMatrix {
  int num_qubits = 0;
  Eigen::MatrixXi entries;  // 2^q x 2^q
};

SMatrix build_s_matrix(int q);

/// Episode-wise outcome distributions of one sample (E vectors of 2^q).
using ProbabilityFeatures = std::vector<std::vector<double>>;

/// (1/E) <bits_m, bits_n>. Throws ShapeError unless q and E agree.
double kernel_estimate(const QuantumFeatures& u_m, const QuantumFeatures& u_n);

/// (1/E) sum_e p_m^e . S p_n^e.
double kernel_exact(const ProbabilityFeatures& p_m, const ProbabilityFeatures& p_n,
                    const SMatrix& s);

/// Symmetric n x n Gram matrix from sampled features.
Eigen::MatrixXd gram_matrix(std::span<const QuantumFeatures> features, int threads = 1);

/// Symmetric n x n Gram matrix from exact distributions.
Eigen::MatrixXd gram_matrix(std::span<const ProbabilityFeatures> probs, const SMatrix& s,
                            int threads = 1);

/// Full matrix, row-major, 17 significant digits, comma separated.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace aqks
