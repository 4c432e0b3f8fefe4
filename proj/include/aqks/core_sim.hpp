#pragma once

// Dense state-vector simulation of the transverse-field Ising model
//
//   H(t) = -a(t) * w * sum_v X_v + sum_<l,m> h_lm Z_l Z_m + sum_u j_u Z_u
//
// Basis convention: qubit 0 is the least significant bit of the basis index,
// and Z|0> = +|0>, so bit value 0 contributes +1 and bit value 1 contributes -1.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aqks/random.hpp"

namespace aqks {

using Complex = std::complex<double>;

/// Largest qubit count accepted by the dense simulator.
inline constexpr int kMaxQubits = 12;

/// Throws SizeError unless 1 <= q <= kMaxQubits.
void check_qubit_count(int q);

class StateVector {
 public:
  /// Validates length (2^q) and normalization (within 1e-10).
  StateVector(int num_qubits, Eigen::VectorXcd amplitudes);

  int num_qubits() const noexcept { return num_qubits_; }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(amplitudes_.size());
  }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }

  double norm() const { return amplitudes_.norm(); }

 private:
  int num_qubits_;
  Eigen::VectorXcd amplitudes_;
};

/// Unordered qubit pair stored as (lo, hi) with lo < hi.
struct QubitPair {
  int lo;
  int hi;

  QubitPair(int a, int b);
  auto operator<=>(const QubitPair&) const = default;
};

struct HamiltonianTerms {
  Eigen::VectorXd local_fields;              // j_u
  std::map<QubitPair, double> couplings;     // h_lm
  double transverse_weight = 1.0;            // w

  int num_qubits() const noexcept { return static_cast<int>(local_fields.size()); }
};

/// Throws SizeError/DomainError if terms reference invalid qubits.
void validate(const HamiltonianTerms& terms);

/// Time grid of the Trotterized evolution: k = T / tau steps.
class Schedule {
 public:
  /// Throws DomainError unless T > 0, tau > 0, and T / tau is a positive
  /// integer (relative tolerance 1e-9).
  Schedule(double total_time, double step_duration);

  double total_time() const noexcept { return total_time_; }
  double step_duration() const noexcept { return step_duration_; }
  int num_steps() const noexcept { return num_steps_; }

  /// Left endpoint of step `step` (0-based).
  double step_start(int step) const noexcept { return step * step_duration_; }

 private:
  double total_time_;
  double step_duration_;
  int num_steps_;
};

/// Uniform superposition |+>^q, the ground state of -sum X_v.
StateVector initial_state(int q);

/// Linear transverse-field schedule a(t) = 1 - t/T on [0, T].
double schedule_a(double t, double total_time);

/// Diagonal of the problem part (Z and ZZ terms) in the computational basis.
Eigen::VectorXd diagonal_energies(const HamiltonianTerms& terms);

/// Dense H at transverse amplitude a_value. The matrix is real symmetric;
/// the complex return type matches the general Hermitian contract.
Eigen::MatrixXcd build_hamiltonian(const HamiltonianTerms& terms, double a_value);

/// exp(-i H tau) through the Hermitian eigendecomposition of H.
/// Throws NumericalError if H deviates from Hermitian by more than 1e-12.
Eigen::MatrixXcd step_unitary(const Eigen::MatrixXcd& hamiltonian, double tau);

/// Applies the k left-endpoint Trotter factors exp(-i H(a*tau) tau),
/// a = 0..k-1, to `initial`. The result is not renormalized; a norm change
/// above 1e-9 throws NumericalError.
StateVector evolve(const HamiltonianTerms& terms, const Schedule& schedule,
                   const StateVector& initial);

/// p_z = |amp_z|^2.
std::vector<double> outcome_probabilities(const StateVector& state);

/// Samples a basis index from a probability vector by inverse CDF.
std::size_t sample_index(std::span<const double> probabilities, CounterRng& rng);

/// One projective Z-basis measurement. Returns q bits, bit u = qubit u.
std::vector<std::uint8_t> measure(const StateVector& state, CounterRng& rng);

/// Total-variation distance 0.5 * sum |p - r|.
double total_variation(const std::vector<double>& p, const std::vector<double>& r);

}  // namespace aqks
