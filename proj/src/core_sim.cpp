#include "aqks/core_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aqks/errors.hpp"

namespace aqks {

namespace {

constexpr double kNormTolerance = 1e-10;
constexpr double kHermitianTolerance = 1e-12;

// Fills the real symmetric Hamiltonian into `h` (already sized dim x dim).
template <typename Matrix>
void fill_real_hamiltonian(const Eigen::VectorXd& diag, int q, double offdiag,
                           Matrix& h) {
  const Eigen::Index dim = diag.size();
  h.setZero();
  for (Eigen::Index z = 0; z < dim; ++z) {
    h(z, z) = diag[z];
    for (int v = 0; v < q; ++v) h(z, z ^ (Eigen::Index{1} << v)) = offdiag;
  }
}

// Trotter loop on a real symmetric H with compile-time dimension when
// possible. psi <- V exp(-i L tau) V^T psi per step.
template <int Dim>
Eigen::VectorXcd evolve_real(const Eigen::VectorXd& diag, int q, double weight,
                             const Schedule& schedule,
                             const Eigen::VectorXcd& initial) {
  using RealMatrix = Eigen::Matrix<double, Dim, Dim>;
  using CVector = Eigen::Matrix<Complex, Dim, 1>;
  const Eigen::Index dim = diag.size();

  RealMatrix h(dim, dim);
  CVector psi = initial;
  CVector rotated(dim);
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(dim);
  const double tau = schedule.step_duration();

  for (int step = 0; step < schedule.num_steps(); ++step) {
    const double a = schedule_a(schedule.step_start(step), schedule.total_time());
    const double offdiag = -a * weight;
    if (offdiag == 0.0) {
      // Diagonal Hamiltonian: phases only.
      for (Eigen::Index z = 0; z < dim; ++z)
        psi[z] *= std::polar(1.0, -diag[z] * tau);
      continue;
    }
    fill_real_hamiltonian(diag, q, offdiag, h);
    solver.compute(h, Eigen::ComputeEigenvectors);
    const auto& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    rotated.noalias() = vecs.transpose() * psi;
    for (Eigen::Index k = 0; k < dim; ++k)
      rotated[k] *= std::polar(1.0, -vals[k] * tau);
    psi.noalias() = vecs * rotated;
  }
  return psi;
}

}  // namespace

void check_qubit_count(int q) {
  if (q < 1 || q > kMaxQubits)
    throw SizeError("qubit count " + std::to_string(q) + " outside supported range [1, " +
                    std::to_string(kMaxQubits) + "]");
}

StateVector::StateVector(int num_qubits, Eigen::VectorXcd amplitudes)
    : num_qubits_(num_qubits), amplitudes_(std::move(amplitudes)) {
  check_qubit_count(num_qubits_);
  if (amplitudes_.size() != (Eigen::Index{1} << num_qubits_))
    throw SizeError("state vector length " + std::to_string(amplitudes_.size()) +
                    " is not 2^" + std::to_string(num_qubits_));
  const double n2 = amplitudes_.squaredNorm();
  if (!(std::abs(n2 - 1.0) <= kNormTolerance))
    throw NumericalError("state vector is not normalized (|psi|^2 = " +
                         std::to_string(n2) + ")");
}

QubitPair::QubitPair(int a, int b) : lo(std::min(a, b)), hi(std::max(a, b)) {
  if (a == b) throw DomainError("coupling pair references qubit " + std::to_string(a) + " twice");
}

void validate(const HamiltonianTerms& terms) {
  const int q = terms.num_qubits();
  check_qubit_count(q);
  for (const auto& [pair, value] : terms.couplings) {
    if (pair.lo < 0 || pair.hi >= q || pair.lo >= pair.hi)
      throw DomainError("coupling (" + std::to_string(pair.lo) + "," +
                        std::to_string(pair.hi) + ") outside qubit range [0, " +
                        std::to_string(q) + ")");
    if (!std::isfinite(value)) throw DomainError("non-finite coupling value");
  }
  if (!terms.local_fields.allFinite()) throw DomainError("non-finite local field");
  if (!std::isfinite(terms.transverse_weight)) throw DomainError("non-finite transverse weight");
}

Schedule::Schedule(double total_time, double step_duration)
    : total_time_(total_time), step_duration_(step_duration), num_steps_(0) {
  if (!(total_time > 0.0) || !std::isfinite(total_time))
    throw DomainError("annealing time T must be positive");
  if (!(step_duration > 0.0) || !std::isfinite(step_duration))
    throw DomainError("Trotter step tau must be positive");
  const double ratio = total_time / step_duration;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw DomainError("T / tau = " + std::to_string(ratio) + " is not a positive integer");
  if (rounded > 1e9) throw DomainError("too many Trotter steps");
  num_steps_ = static_cast<int>(rounded);
}

StateVector initial_state(int q) {
  check_qubit_count(q);
  const Eigen::Index dim = Eigen::Index{1} << q;
  const double amp = std::pow(2.0, -0.5 * q);
  return StateVector(q, Eigen::VectorXcd::Constant(dim, Complex(amp, 0.0)));
}

double schedule_a(double t, double total_time) {
  if (!(total_time > 0.0)) throw DomainError("total time must be positive");
  if (!(t >= 0.0 && t <= total_time))
    throw DomainError("time " + std::to_string(t) + " outside [0, " +
                      std::to_string(total_time) + "]");
  return 1.0 - t / total_time;
}

Eigen::VectorXd diagonal_energies(const HamiltonianTerms& terms) {
  validate(terms);
  const int q = terms.num_qubits();
  const Eigen::Index dim = Eigen::Index{1} << q;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index z = 0; z < dim; ++z) {
    double e = 0.0;
    for (int u = 0; u < q; ++u) {
      const double s = ((z >> u) & 1) ? -1.0 : 1.0;
      e += terms.local_fields[u] * s;
    }
    for (const auto& [pair, h] : terms.couplings) {
      const bool differ = (((z >> pair.lo) ^ (z >> pair.hi)) & 1) != 0;
      e += differ ? -h : h;
    }
    diag[z] = e;
  }
  return diag;
}

Eigen::MatrixXcd build_hamiltonian(const HamiltonianTerms& terms, double a_value) {
  const Eigen::VectorXd diag = diagonal_energies(terms);
  Eigen::MatrixXd h(diag.size(), diag.size());
  fill_real_hamiltonian(diag, terms.num_qubits(), -a_value * terms.transverse_weight, h);
  return h.cast<Complex>();
}

Eigen::MatrixXcd step_unitary(const Eigen::MatrixXcd& hamiltonian, double tau) {
  if (hamiltonian.rows() != hamiltonian.cols())
    throw ShapeError("Hamiltonian must be square");
  const double asym = (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
  if (!(asym <= kHermitianTolerance))
    throw NumericalError("Hamiltonian is not Hermitian (max |H - H^dagger| = " +
                         std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hamiltonian);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();
  Eigen::VectorXcd phases(vals.size());
  for (Eigen::Index k = 0; k < vals.size(); ++k) phases[k] = std::polar(1.0, -vals[k] * tau);
  const Eigen::MatrixXcd& v = solver.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

StateVector evolve(const HamiltonianTerms& terms, const Schedule& schedule,
                   const StateVector& initial) {
  const Eigen::VectorXd diag = diagonal_energies(terms);
  const int q = terms.num_qubits();
  if (initial.num_qubits() != q)
    throw ShapeError("initial state has " + std::to_string(initial.num_qubits()) +
                     " qubits, Hamiltonian has " + std::to_string(q));
  const double w = terms.transverse_weight;
  Eigen::VectorXcd psi;
  switch (q) {
    case 1: psi = evolve_real<2>(diag, q, w, schedule, initial.amplitudes()); break;
    case 2: psi = evolve_real<4>(diag, q, w, schedule, initial.amplitudes()); break;
    case 3: psi = evolve_real<8>(diag, q, w, schedule, initial.amplitudes()); break;
    case 4: psi = evolve_real<16>(diag, q, w, schedule, initial.amplitudes()); break;
    default:
      psi = evolve_real<Eigen::Dynamic>(diag, q, w, schedule, initial.amplitudes());
  }
  const double drift = std::abs(psi.norm() - initial.amplitudes().norm());
  if (drift > 1e-9)
    throw NumericalError("evolution changed the state norm by " + std::to_string(drift));
  return StateVector(q, std::move(psi));
}

std::vector<double> outcome_probabilities(const StateVector& state) {
  const auto& amps = state.amplitudes();
  std::vector<double> p(static_cast<std::size_t>(amps.size()));
  for (Eigen::Index z = 0; z < amps.size(); ++z) p[z] = std::norm(amps[z]);
  return p;
}

std::size_t sample_index(std::span<const double> probabilities, CounterRng& rng) {
  if (probabilities.empty()) throw SizeError("empty probability vector");
  double total = 0.0;
  for (double p : probabilities) total += p;
  const double r = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t z = 0; z < probabilities.size(); ++z) {
    acc += probabilities[z];
    if (r < acc) return z;
  }
  // r fell into the rounding slack above the last partial sum; return the
  // last outcome with nonzero probability.
  for (std::size_t z = probabilities.size(); z-- > 0;)
    if (probabilities[z] > 0.0) return z;
  return probabilities.size() - 1;
}

std::vector<std::uint8_t> measure(const StateVector& state, CounterRng& rng) {
  const std::size_t z = sample_index(outcome_probabilities(state), rng);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(state.num_qubits()));
  for (std::size_t u = 0; u < bits.size(); ++u) bits[u] = static_cast<std::uint8_t>((z >> u) & 1U);
  return bits;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& r) {
  if (p.size() != r.size()) throw ShapeError("distribution lengths differ");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - r[i]);
  return 0.5 * tv;
}

}  // namespace aqks
