#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "aqks/core_sim.hpp"
#include "aqks/errors.hpp"
#include "aqks/small_eigen.hpp"
#include "oracle_values.hpp"
#include "test_util.hpp"

using namespace aqks;
using testutil::C;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

HamiltonianTerms single_field(double j) {
  HamiltonianTerms t;
  t.local_fields = Eigen::VectorXd::Constant(1, j);
  return t;
}

}  // namespace

TEST_SUITE("core_sim") {

TEST_CASE("initial_state is the uniform superposition") {
  const auto s1 = initial_state(1);
  CHECK(s1.dimension() == 2);
  for (int z = 0; z < 2; ++z) CHECK(std::abs(s1.amplitudes()[z] - C(1.0 / std::sqrt(2.0), 0.0)) <= 2.3e-16);
  const auto s2 = initial_state(2);
  for (int z = 0; z < 4; ++z) CHECK(s2.amplitudes()[z] == C(0.5, 0.0));
  const auto s3 = initial_state(3);
  for (int z = 0; z < 8; ++z)
    CHECK(std::abs(s3.amplitudes()[z] - C(1.0 / (2.0 * std::sqrt(2.0)), 0.0)) <= 2.3e-16);
  CHECK_THROWS_AS(initial_state(0), SizeError);
  CHECK_THROWS_AS(initial_state(kMaxQubits + 1), SizeError);
  CHECK_NOTHROW(initial_state(kMaxQubits));
}

TEST_CASE("StateVector enforces its invariants") {
  CHECK_THROWS_AS(StateVector(2, Eigen::VectorXcd::Ones(3) / std::sqrt(3.0)), SizeError);
  CHECK_THROWS_AS(StateVector(1, Eigen::VectorXcd::Ones(2)), NumericalError);
  Eigen::VectorXcd v(2);
  v << 0.6, C(0.0, 0.8);
  CHECK_NOTHROW(StateVector(1, v));
}

TEST_CASE("schedule_a is linear on [0, T]") {
  CHECK(schedule_a(0.0, 5.0) == 1.0);
  CHECK(schedule_a(5.0, 5.0) == 0.0);
  CHECK(schedule_a(2.5, 5.0) == 0.5);
  CHECK_THROWS_AS(schedule_a(-0.1, 5.0), DomainError);
  CHECK_THROWS_AS(schedule_a(5.1, 5.0), DomainError);
}

TEST_CASE("Schedule requires an integer number of steps") {
  Schedule s(5.0, 1.0);
  CHECK(s.num_steps() == 5);
  CHECK(s.step_start(3) == 3.0);
  CHECK(Schedule(5.0, 1e-3).num_steps() == 5000);
  CHECK(Schedule(1.0, 0.1).num_steps() == 10);
  CHECK_THROWS_AS(Schedule(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(Schedule(5.0, 0.0), DomainError);
  CHECK_THROWS_AS(Schedule(5.0, 0.3), DomainError);
  CHECK_THROWS_AS(Schedule(1.0, 2.0), DomainError);
}

TEST_CASE("QubitPair and term validation") {
  QubitPair p(3, 1);
  CHECK(p.lo == 1);
  CHECK(p.hi == 3);
  CHECK(QubitPair(1, 3) == QubitPair(3, 1));
  CHECK_THROWS_AS(QubitPair(2, 2), DomainError);
  HamiltonianTerms t;
  t.local_fields = Eigen::VectorXd::Zero(2);
  t.couplings[{0, 2}] = 1.0;
  CHECK_THROWS(validate(t));
}

TEST_CASE("build_hamiltonian examples") {
  const auto zero = build_hamiltonian(single_field(0.0), 0.0);
  CHECK(max_abs(zero) == 0.0);

  const auto z = build_hamiltonian(single_field(1.0), 0.0);
  CHECK(z(0, 0) == C(1.0, 0.0));
  CHECK(z(1, 1) == C(-1.0, 0.0));
  CHECK(z(0, 1) == C(0.0, 0.0));

  HamiltonianTerms t;
  t.local_fields = Eigen::Vector2d(0.3, -0.5);
  t.couplings[{0, 1}] = -0.15;
  const auto h = build_hamiltonian(t, 1.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      CHECK(h(r, c).real() == doctest::Approx(oracle::kHamiltonianQ2[r * 4 + c]).epsilon(1e-15));
      CHECK(h(r, c).imag() == 0.0);
    }
}

TEST_CASE("build_hamiltonian matches Kronecker assembly for random terms") {
  std::mt19937_64 rng(5);
  for (int q = 1; q <= 5; ++q) {
    HamiltonianTerms t = testutil::random_terms(q, rng);
    t.transverse_weight = q % 2 ? 1.0 : -1.0;
    for (double a : {0.0, 0.4, 1.0})
      CHECK(max_abs(build_hamiltonian(t, a) - testutil::kron_hamiltonian(t, a)) < 1e-13);
  }
}

TEST_CASE("diagonal_energies follow the Z|0> = +|0> convention") {
  HamiltonianTerms t;
  t.local_fields = Eigen::Vector2d(0.3, -0.5);
  t.couplings[{0, 1}] = -0.15;
  const Eigen::VectorXd d = diagonal_energies(t);
  // z = 0b10: qubit 0 is 0 (+1), qubit 1 is 1 (-1).
  CHECK(d[2] == doctest::Approx(0.3 + 0.5 + 0.15));
  CHECK(d[0] == doctest::Approx(0.3 - 0.5 - 0.15));
}

TEST_CASE("step_unitary examples") {
  const Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(4, 4);
  CHECK(max_abs(step_unitary(zero, 0.7) - Eigen::MatrixXcd::Identity(4, 4)) < 1e-15);

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  CHECK(max_abs(step_unitary(d, std::numbers::pi) + Eigen::MatrixXcd::Identity(2, 2)) < 1e-15);

  Eigen::MatrixXcd h(4, 4);
  for (int k = 0; k < 16; ++k) h(k / 4, k % 4) = C(oracle::kHermRe[k], oracle::kHermIm[k]);
  const Eigen::MatrixXcd u = step_unitary(h, 0.3);
  for (int k = 0; k < 16; ++k) {
    CHECK(std::abs(u(k / 4, k % 4) - C(oracle::kExpRe[k], oracle::kExpIm[k])) < 1e-9);
  }
}

TEST_CASE("step_unitary matches a Taylor reference and is unitary") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int dim : {2, 4, 8, 16}) {
    Eigen::MatrixXcd m(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = C(n(rng), n(rng));
    const Eigen::MatrixXcd h = (m + m.adjoint()) / 2.0;
    for (double tau : {0.05, 0.3, 1.0}) {
      const Eigen::MatrixXcd u = step_unitary(h, tau);
      CHECK(max_abs(u - testutil::taylor_expm(C(0.0, -tau) * h)) < 1e-9);
      CHECK(max_abs(u.adjoint() * u - Eigen::MatrixXcd::Identity(dim, dim)) <= 1e-10);
    }
  }
}

TEST_CASE("step_unitary rejects non-Hermitian input") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(step_unitary(m, 1.0), NumericalError);
  m(1, 0) = 1.0 + 1e-9;
  CHECK_THROWS_AS(step_unitary(m, 1.0), NumericalError);
}

TEST_CASE("evolve with zero terms keeps the initial distribution") {
  for (int q = 1; q <= 3; ++q) {
    HamiltonianTerms t;
    t.local_fields = Eigen::VectorXd::Zero(q);
    const auto p = outcome_probabilities(evolve(t, Schedule(5.0, 1.0), initial_state(q)));
    for (double v : p) CHECK(v == doctest::Approx(1.0 / (1 << q)).epsilon(1e-14));
  }
}

TEST_CASE("evolve with one step equals a single step_unitary") {
  std::mt19937_64 rng(3);
  const HamiltonianTerms t = testutil::random_terms(2, rng);
  const StateVector init = initial_state(2);
  const auto out = evolve(t, Schedule(2.0, 2.0), init);
  const Eigen::VectorXcd direct = step_unitary(build_hamiltonian(t, 1.0), 2.0) * init.amplitudes();
  CHECK((out.amplitudes() - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("evolve matches the independent Trotter oracles") {
  const auto p1 = outcome_probabilities(evolve(single_field(1.0), Schedule(5.0, 1.0), initial_state(1)));
  for (int z = 0; z < 2; ++z) CHECK(p1[z] == doctest::Approx(oracle::kTrotterQ1[z]).epsilon(1e-10));

  HamiltonianTerms t;
  t.local_fields = Eigen::Vector2d(0.7, -1.3);
  t.couplings[{0, 1}] = 0.7 * -1.3;
  const auto p2 = outcome_probabilities(evolve(t, Schedule(5.0, 1.0), initial_state(2)));
  for (int z = 0; z < 4; ++z) CHECK(p2[z] == doctest::Approx(oracle::kTrotterQ2[z]).epsilon(1e-10));
}

TEST_CASE("fine-step evolution matches the fine-step oracle") {
  // tau = 1e-3 is the same left-endpoint integrator the oracle runs.
  const auto fine = outcome_probabilities(
      evolve(single_field(1.0), Schedule(5.0, 1e-3), initial_state(1)));
  for (int z = 0; z < 2; ++z) CHECK(std::abs(fine[z] - oracle::kFineQ1[z]) < 1e-9);

  // The coarse tau = 1 distribution differs from the fine one by a genuine
  // Trotter error; its size must agree with the independent computation.
  const auto coarse = outcome_probabilities(
      evolve(single_field(1.0), Schedule(5.0, 1.0), initial_state(1)));
  CHECK(total_variation(coarse, fine) == doctest::Approx(oracle::kTvQ1).epsilon(1e-6));
}

TEST_CASE("evolve agrees with the Kronecker/Taylor reference on random instances") {
  std::mt19937_64 rng(99);
  for (int q = 1; q <= 4; ++q)
    for (int rep = 0; rep < 3; ++rep) {
      HamiltonianTerms t = testutil::random_terms(q, rng);
      const auto p = outcome_probabilities(evolve(t, Schedule(5.0, 1.0), initial_state(q)));
      const Eigen::VectorXd ref = testutil::reference_probabilities(t, 5.0, 1.0);
      for (int z = 0; z < (1 << q); ++z) CHECK(std::abs(p[z] - ref[z]) < 1e-10);
    }
}

TEST_CASE("norm conservation over random evolutions") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> qd(1, 5);
  for (int rep = 0; rep < 100; ++rep) {
    const int q = qd(rng);
    HamiltonianTerms t = testutil::random_terms(q, rng, 3.0);
    const auto out = evolve(t, Schedule(5.0, 0.5), initial_state(q));
    CHECK(std::abs(out.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("Trotter error shrinks monotonically as tau halves") {
  std::mt19937_64 rng(8);
  for (int q = 1; q <= 2; ++q) {
    HamiltonianTerms t = testutil::random_terms(q, rng, 1.0);
    const auto fine = outcome_probabilities(evolve(t, Schedule(5.0, 1e-3), initial_state(q)));
    double previous = 1.0;
    for (double tau : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}) {
      const auto p = outcome_probabilities(evolve(t, Schedule(5.0, tau), initial_state(q)));
      const double tv = total_variation(p, fine);
      CHECK(tv < previous);
      previous = tv;
    }
    CHECK(previous < 5e-3);
  }
}

TEST_CASE("commuting case: zero transverse weight leaves probabilities unchanged") {
  std::mt19937_64 rng(4);
  for (int q = 1; q <= 4; ++q) {
    HamiltonianTerms t = testutil::random_terms(q, rng, 2.0);
    t.transverse_weight = 0.0;
    const auto p = outcome_probabilities(evolve(t, Schedule(5.0, 1.0), initial_state(q)));
    const auto p0 = outcome_probabilities(initial_state(q));
    for (int z = 0; z < (1 << q); ++z) CHECK(p[z] == doctest::Approx(p0[z]).epsilon(1e-15));
  }
}

TEST_CASE("outcome_probabilities examples") {
  const auto p = outcome_probabilities(initial_state(1));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));

  Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(4);
  basis[0] = 1.0;
  CHECK(outcome_probabilities(StateVector(2, basis)) == std::vector<double>{1.0, 0.0, 0.0, 0.0});

  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXcd v(8);
  for (int k = 0; k < 8; ++k) v[k] = C(n(rng), n(rng));
  v.normalize();
  const auto p8 = outcome_probabilities(StateVector(3, v));
  double total = 0.0;
  for (int k = 0; k < 8; ++k) {
    CHECK(p8[k] == doctest::Approx(v[k].real() * v[k].real() + v[k].imag() * v[k].imag()).epsilon(1e-15));
    total += p8[k];
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("measure examples") {
  CounterRng rng(7);
  Eigen::VectorXcd one(2);
  one << 0.0, 1.0;
  Eigen::VectorXcd zero4 = Eigen::VectorXcd::Zero(4);
  zero4[0] = 1.0;
  for (int k = 0; k < 100; ++k) {
    CHECK(measure(StateVector(1, one), rng) == std::vector<std::uint8_t>{1});
    CHECK(measure(StateVector(2, zero4), rng) == std::vector<std::uint8_t>{0, 0});
  }
  Eigen::VectorXcd z2 = Eigen::VectorXcd::Zero(4);
  z2[2] = 1.0;  // qubit 1 set
  CHECK(measure(StateVector(2, z2), rng) == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("measurement frequencies match probabilities within 4 sigma") {
  const std::size_t n = 10000;
  CounterRng rng(derive_key({42, 1}));
  std::array<std::size_t, 4> counts{};
  const StateVector uniform = initial_state(2);
  for (std::size_t k = 0; k < n; ++k) {
    const auto bits = measure(uniform, rng);
    ++counts[bits[0] + 2 * bits[1]];
  }
  for (std::size_t c : counts) CHECK(testutil::binomial_ok(c, n, 0.25));

  std::mt19937_64 g(2);
  HamiltonianTerms t = testutil::random_terms(2, g);
  const StateVector final_state = evolve(t, Schedule(5.0, 1.0), initial_state(2));
  const auto p = outcome_probabilities(final_state);
  counts.fill(0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto bits = measure(final_state, rng);
    ++counts[bits[0] + 2 * bits[1]];
  }
  for (int z = 0; z < 4; ++z) CHECK(testutil::binomial_ok(counts[z], n, p[z]));
}

TEST_CASE("measure is deterministic given the stream") {
  const StateVector s = initial_state(3);
  CounterRng a(11);
  CounterRng b(11);
  for (int k = 0; k < 50; ++k) CHECK(measure(s, a) == measure(s, b));
}

TEST_CASE("sample_index edge cases") {
  CounterRng rng(1);
  const std::vector<double> p{0.0, 0.0, 1.0, 0.0};
  for (int k = 0; k < 20; ++k) CHECK(sample_index(p, rng) == 2);
  CHECK_THROWS_AS(sample_index(std::vector<double>{}, rng), SizeError);
}

TEST_CASE("total_variation") {
  CHECK(total_variation({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(total_variation({1.0, 0.0}, {0.0, 1.0}) == 1.0);
  CHECK(total_variation({0.2, 0.8}, {0.5, 0.5}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(total_variation({1.0}, {0.5, 0.5}), ShapeError);
}

TEST_CASE("fixed-size Jacobi path agrees with evolve") {
  std::mt19937_64 rng(31);
  auto check = [&]<std::size_t N>(std::integral_constant<std::size_t, N>, int q) {
    for (int rep = 0; rep < 20; ++rep) {
      HamiltonianTerms t = testutil::random_terms(q, rng, 2.5);
      t.transverse_weight = rep % 2 ? 1.0 : -1.0;
      const Eigen::VectorXd d = diagonal_energies(t);
      std::array<double, N> diag;
      for (std::size_t z = 0; z < N; ++z) diag[z] = d[static_cast<Eigen::Index>(z)];
      std::array<double, N> probs;
      detail::evolve_uniform_probs<N>(diag, q, t.transverse_weight, 5.0, 1.0, 5, probs);
      const auto ref = outcome_probabilities(evolve(t, Schedule(5.0, 1.0), initial_state(q)));
      for (std::size_t z = 0; z < N; ++z) CHECK(std::abs(probs[z] - ref[z]) < 1e-12);
    }
  };
  check(std::integral_constant<std::size_t, 2>{}, 1);
  check(std::integral_constant<std::size_t, 4>{}, 2);
  check(std::integral_constant<std::size_t, 8>{}, 3);
  check(std::integral_constant<std::size_t, 16>{}, 4);
}

TEST_CASE("Jacobi eigensolver reconstructs the matrix") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 3.0);
  std::array<double, 16> a;
  for (int r = 0; r < 4; ++r)
    for (int c = r; c < 4; ++c) a[r * 4 + c] = a[c * 4 + r] = n(rng);
  const std::array<double, 16> original = a;
  std::array<double, 16> vecs;
  std::array<double, 4> vals;
  detail::jacobi_eigen<4>(a, vecs, vals);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += vecs[r * 4 + k] * vals[k] * vecs[c * 4 + k];
      CHECK(std::abs(acc - original[r * 4 + c]) < 1e-12);
    }
}

}  // TEST_SUITE
