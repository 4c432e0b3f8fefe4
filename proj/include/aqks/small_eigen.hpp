#pragma once

// Fixed-size symmetric eigensolver and Trotter kernel for the few-qubit case.
// The feature transform runs tens of millions of 4x4 evolutions, so this path
// works on stack arrays with no allocation. Cyclic Jacobi is accurate to
// machine precision at these sizes.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace aqks::detail {

/// Eigendecomposition of the symmetric N x N matrix `a` (row-major, destroyed).
/// On return `vecs` holds eigenvectors as columns (row-major storage) and
/// `vals` the matching eigenvalues (unsorted).
template <std::size_t N>
void jacobi_eigen(std::array<double, N * N>& a, std::array<double, N * N>& vecs,
                  std::array<double, N>& vals) {
  vecs.fill(0.0);
  for (std::size_t i = 0; i < N; ++i) vecs[i * N + i] = 1.0;

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    double diag_scale = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      diag_scale += a[p * N + p] * a[p * N + p];
      for (std::size_t q = p + 1; q < N; ++q) off += a[p * N + q] * a[p * N + q];
    }
    if (off <= 1e-34 * (diag_scale + off) || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        const double apq = a[p * N + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * N + q] - a[p * N + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // A <- J^T A J with J the (p, q) rotation.
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a[k * N + p];
          const double akq = a[k * N + q];
          a[k * N + p] = c * akp - s * akq;
          a[k * N + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a[p * N + k];
          const double aqk = a[q * N + k];
          a[p * N + k] = c * apk - s * aqk;
          a[q * N + k] = s * apk + c * aqk;
        }
        a[p * N + q] = 0.0;
        a[q * N + p] = 0.0;

        for (std::size_t k = 0; k < N; ++k) {
          const double vkp = vecs[k * N + p];
          const double vkq = vecs[k * N + q];
          vecs[k * N + p] = c * vkp - s * vkq;
          vecs[k * N + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (std::size_t i = 0; i < N; ++i) vals[i] = a[i * N + i];
}

/// Trotterized transverse-field evolution of the uniform superposition on
/// N = 2^q basis states. `diag` holds the Z/ZZ energies; each step applies
/// exp(-i H tau) with H = diag + offdiag_k * sum_v X_v, where
/// offdiag_k = -weight * a(k * tau). Writes |amp_z|^2 into `probs`.
template <std::size_t N>
void evolve_uniform_probs(const std::array<double, N>& diag, int q, double weight,
                          double total_time, double tau, int steps,
                          std::array<double, N>& probs) {
  using C = std::complex<double>;
  std::array<C, N> psi;
  psi.fill(C(1.0 / std::sqrt(static_cast<double>(N)), 0.0));
  std::array<double, N * N> h;
  std::array<double, N * N> vecs;
  std::array<double, N> vals;
  std::array<C, N> rotated;

  for (int step = 0; step < steps; ++step) {
    const double a = 1.0 - (step * tau) / total_time;
    const double offdiag = -a * weight;
    if (offdiag == 0.0) {
      for (std::size_t z = 0; z < N; ++z) psi[z] *= std::polar(1.0, -diag[z] * tau);
      continue;
    }
    h.fill(0.0);
    for (std::size_t z = 0; z < N; ++z) {
      h[z * N + z] = diag[z];
      for (int v = 0; v < q; ++v) h[z * N + (z ^ (std::size_t{1} << v))] = offdiag;
    }
    jacobi_eigen<N>(h, vecs, vals);
    for (std::size_t k = 0; k < N; ++k) {
      C acc(0.0, 0.0);
      for (std::size_t z = 0; z < N; ++z) acc += vecs[z * N + k] * psi[z];
      rotated[k] = acc * std::polar(1.0, -vals[k] * tau);
    }
    for (std::size_t z = 0; z < N; ++z) {
      C acc(0.0, 0.0);
      for (std::size_t k = 0; k < N; ++k) acc += vecs[z * N + k] * rotated[k];
      psi[z] = acc;
    }
  }
  double total = 0.0;
  for (std::size_t z = 0; z < N; ++z) {
    probs[z] = std::norm(psi[z]);
    total += probs[z];
  }
  for (std::size_t z = 0; z < N; ++z) probs[z] /= total;
}

}  // namespace aqks::detail
