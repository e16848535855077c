#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "qrck/decompose.hpp"
#include "test_util.hpp"

using namespace qrck;
using qrck::testing::max_abs_diff;
using qrck::testing::random_hermitian;
using qrck::testing::random_mixed_state;
using qrck::testing::random_pure_state;

namespace {

const ComplexMatrix kX{{0.0, 1.0}, {1.0, 0.0}};
const ComplexMatrix kZ{{1.0, 0.0}, {0.0, -1.0}};

PauliDecomposition single_qubit(std::vector<double> c, std::size_t channel = 0) {
  return PauliDecomposition{1, std::move(c), channel};
}

std::vector<QuantumState> random_states(std::size_t n, unsigned qubits, Rng& rng) {
  std::vector<QuantumState> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(i % 2 ? random_mixed_state(qubits, rng) : random_pure_state(qubits, rng));
  return out;
}

RealMatrix random_targets(std::size_t rows, std::size_t cols, Rng& rng) {
  RealMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST(PauliDecompose, Identity) {
  const auto d = pauli_decompose(ComplexMatrix::identity(2));
  EXPECT_EQ(d.coefficients, (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(PauliDecompose, XPlusTwoZ) {
  const auto d = pauli_decompose(kX + kZ * Complex(2.0));
  EXPECT_NEAR(d.coefficients[0], 0.0, 1e-15);
  EXPECT_NEAR(d.coefficients[1], 1.0, 1e-15);
  EXPECT_NEAR(d.coefficients[2], 0.0, 1e-15);
  EXPECT_NEAR(d.coefficients[3], 2.0, 1e-15);
}

TEST(PauliDecompose, ReconstructsRandomHermitian) {
  Rng rng(1);
  for (unsigned n : {1u, 2u, 3u, 4u}) {
    const ComplexMatrix m = random_hermitian(std::size_t{1} << n, rng);
    const auto d = pauli_decompose(m);
    ASSERT_EQ(d.coefficients.size(), pauli_count(n));
    EXPECT_LE(frobenius_norm(d.reconstruct() - m), 1e-10);
  }
}

TEST(PauliDecompose, ThreadCountDoesNotChangeCoefficients) {
  Rng rng(2);
  const ComplexMatrix m = random_hermitian(16, rng);
  EXPECT_EQ(pauli_decompose(m, 0, 1).coefficients, pauli_decompose(m, 0, 3).coefficients);
}

TEST(PauliDecompose, RejectsNonHermitian) {
  const ComplexMatrix a{{1.0, 2.0}, {0.0, 1.0}};
  EXPECT_THROW(pauli_decompose(a), NotHermitian);
}

TEST(Diagonalize, PauliZ) {
  const auto s = diagonalize(kZ);
  EXPECT_NEAR(s.eigenvalues[0], 1.0, 1e-15);
  EXPECT_NEAR(s.eigenvalues[1], -1.0, 1e-15);
  EXPECT_NEAR(s.z_coefficients[0], 0.0, 1e-15);
  EXPECT_NEAR(s.z_coefficients[1], 1.0, 1e-15);
}

TEST(Diagonalize, IdentityHasOnlyConstantTerm) {
  const auto s = diagonalize(ComplexMatrix::identity(8));
  EXPECT_NEAR(s.z_coefficients[0], 1.0, 1e-14);
  for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(s.z_coefficients[k], 0.0, 1e-14);
}

TEST(Diagonalize, ReconstructsAndEigenvaluesDescend) {
  Rng rng(3);
  const ComplexMatrix m = random_hermitian(8, rng);
  const auto s = diagonalize(m);
  EXPECT_TRUE(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
  const ComplexMatrix rec = s.v * to_complex(RealMatrix::diagonal(s.eigenvalues)) * adjoint(s.v);
  EXPECT_LE(frobenius_norm(rec - m), 1e-8);
  EXPECT_LT(max_abs_diff(s.v * adjoint(s.v), ComplexMatrix::identity(8)), 1e-10);
}

TEST(Diagonalize, ZStringsRebuildTheSpectrum) {
  Rng rng(4);
  const auto s = diagonalize(random_hermitian(8, rng));
  ComplexMatrix lambda(8, 8);
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    add_pauli(lambda, PauliString::z_string(3, mask), Complex(s.z_coefficients[mask]));
  EXPECT_LT(max_abs_diff(lambda, to_complex(RealMatrix::diagonal(s.eigenvalues))), 1e-12);
}

TEST(Diagonalize, SpectralExpectationMatchesTrace) {
  Rng rng(5);
  const ComplexMatrix m = random_hermitian(8, rng);
  const auto s = diagonalize(m);
  for (int t = 0; t < 10; ++t) {
    const QuantumState rho = t % 2 ? random_mixed_state(3, rng) : random_pure_state(3, rng);
    EXPECT_NEAR(spectral_expectation(s, rho), expectation(rho, m), 1e-10);
  }
}

TEST(Diagonalize, PauliAndSpectralPathsAgree) {
  Rng rng(6);
  const ComplexMatrix m = random_hermitian(4, rng);
  const auto d = pauli_decompose(m);
  const auto s = diagonalize(m);
  for (int t = 0; t < 10; ++t) {
    const QuantumState rho = random_mixed_state(2, rng);
    double pauli_path = 0.0;
    for (std::uint64_t k = 0; k < 16; ++k) pauli_path += d.coefficients[k] * expectation(rho, PauliString(2, k));
    double z_path = 0.0;
    for (std::uint64_t mask = 0; mask < 4; ++mask) {
      const ComplexMatrix zs = s.v * pauli_matrix(PauliString::z_string(2, mask)) * adjoint(s.v);
      z_path += s.z_coefficients[mask] * expectation(rho, zs);
    }
    EXPECT_NEAR(pauli_path, expectation(rho, m), 1e-8);
    EXPECT_NEAR(z_path, expectation(rho, m), 1e-8);
  }
}

TEST(WalshCoefficients, RoundTripUpToTenQubits) {
  Rng rng(7);
  for (unsigned n = 0; n <= 10; ++n) {
    std::vector<double> lambda(std::size_t{1} << n);
    for (auto& v : lambda) v = rng.normal();
    const auto beta = spectrum_to_z_coefficients(lambda);
    const auto back = z_coefficients_to_spectrum(beta);
    for (std::size_t b = 0; b < lambda.size(); ++b) EXPECT_NEAR(back[b], lambda[b], 1e-12);
  }
}

TEST(RankOperators, SingleChannelOrder) {
  const std::vector<PauliDecomposition> d{single_qubit({0.0, 3.0, 0.0, 1.0})};
  const auto r = rank_operators(d);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.selection[0].code, 1u);
  EXPECT_EQ(r.selection[1].code, 3u);
  EXPECT_DOUBLE_EQ(r.selection[0].score, 3.0);
  EXPECT_DOUBLE_EQ(r.selection[1].score, 1.0);
}

TEST(RankOperators, JointScoreIsEuclideanNorm) {
  const std::vector<PauliDecomposition> d{single_qubit({0.0, 1.0, 0.0, 0.0}, 0), single_qubit({0.0, 0.0, 0.0, 1.0}, 1),
                                          single_qubit({0.0, 1.0, 0.0, 0.0}, 2)};
  const std::vector<PauliDecomposition> two{single_qubit({0.0, 0.0, 1.0, 0.0}, 0), single_qubit({0.0, 0.0, 1.0, 0.0}, 1)};
  EXPECT_NEAR(rank_operators(two).selection[0].score, std::sqrt(2.0), 1e-15);
  const auto r = rank_operators(d);
  EXPECT_EQ(r.selection[0].code, 1u);
  EXPECT_NEAR(r.selection[0].score, std::sqrt(2.0), 1e-15);
}

TEST(RankOperators, IdentityFirstAndTiesByCode) {
  const std::vector<PauliDecomposition> d{single_qubit({0.1, 2.0, 2.0, 0.5})};
  const auto r = rank_operators(d);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r.selection[0].code, 0u);
  EXPECT_EQ(r.selection[1].code, 1u);
  EXPECT_EQ(r.selection[2].code, 2u);
  EXPECT_EQ(r.selection[3].code, 3u);
}

TEST(RankOperators, ScoresNonIncreasingAfterIdentity) {
  Rng rng(8);
  std::vector<PauliDecomposition> d;
  for (std::size_t c = 0; c < 3; ++c) d.push_back(pauli_decompose(random_hermitian(8, rng), c));
  for (auto scope : {RankScope::Joint, RankScope::PerChannel}) {
    RankOptions options;
    options.scope = scope;
    const auto r = rank_operators(d, options);
    std::size_t first = 0;
    while (first < r.size() && r.selection[first].code == 0) ++first;
    EXPECT_EQ(first, scope == RankScope::Joint ? 1u : 3u);
    for (std::size_t i = first + 1; i < r.size(); ++i) EXPECT_GE(r.selection[i - 1].score, r.selection[i].score);
  }
}

TEST(RankOperators, ChannelPermutationKeepsSelection) {
  Rng rng(9);
  std::vector<PauliDecomposition> d;
  for (std::size_t c = 0; c < 3; ++c) d.push_back(pauli_decompose(random_hermitian(4, rng), c));
  const std::vector<PauliDecomposition> permuted{d[2], d[0], d[1]};
  const auto a = rank_operators(d);
  const auto b = rank_operators(permuted);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.selection[i].code, b.selection[i].code);
    EXPECT_NEAR(a.selection[i].score, b.selection[i].score, 1e-14);
  }
}

TEST(RankOperators, PerChannelSweepCoversEveryPair) {
  Rng rng(10);
  std::vector<PauliDecomposition> d;
  for (std::size_t c = 0; c < 3; ++c) d.push_back(pauli_decompose(random_hermitian(8, rng), c));
  RankOptions options;
  options.scope = RankScope::PerChannel;
  EXPECT_EQ(rank_operators(d, options).size(), 64u * 3u);
}

TEST(RankOperators, ZeroScoresDroppedUnlessKept) {
  const std::vector<PauliDecomposition> d{single_qubit({0.0, 3.0, 0.0, 1.0})};
  RankOptions keep;
  keep.keep_zero_scores = true;
  EXPECT_EQ(rank_operators(d).size(), 2u);
  EXPECT_EQ(rank_operators(d, keep).size(), 4u);
}

TEST(RankOperators, MaxWeightFilter) {
  Rng rng(11);
  const std::vector<PauliDecomposition> d{pauli_decompose(random_hermitian(8, rng))};
  RankOptions options;
  options.max_weight = 1;
  const auto r = rank_operators(d, options);
  EXPECT_EQ(r.size(), 10u);
  for (const auto& e : r.selection) EXPECT_LE(PauliString(3, e.code).weight(), 1u);
}

TEST(RankOperators, SpectralModes) {
  const std::vector<SpectralDecomposition> s{diagonalize(kZ * Complex(2.0) + ComplexMatrix::identity(2) * Complex(0.5))};
  const auto z = rank_operators(s, RankMode::ZString);
  ASSERT_EQ(z.size(), 2u);
  EXPECT_EQ(z.selection[0].code, 0u);  // identity first
  EXPECT_DOUBLE_EQ(z.selection[1].score, 2.0);
  const auto e = rank_operators(s, RankMode::Eigenvalue);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_DOUBLE_EQ(e.selection[0].score, 2.5);
  EXPECT_DOUBLE_EQ(e.selection[1].score, 1.5);
  EXPECT_EQ(e.rotations.size(), 1u);
}

TEST(Truncate, KeepAllIsExact) {
  Rng rng(12);
  const ComplexMatrix m = random_hermitian(4, rng);
  const auto t = truncate(pauli_decompose(m), 16);
  EXPECT_NEAR(t.bound, 0.0, 1e-15);
  EXPECT_LE(frobenius_norm(t.m_trunc - m), 1e-12);
}

TEST(Truncate, KeepNoneBoundsByFullNorm) {
  Rng rng(13);
  const ComplexMatrix m = random_hermitian(4, rng);
  const auto t = truncate(pauli_decompose(m), 0);
  EXPECT_NEAR(t.bound, frobenius_norm(m), 1e-12);
  EXPECT_EQ(frobenius_norm(t.m_trunc), 0.0);
}

TEST(Truncate, BoundHoldsAndIsMonotone) {
  Rng rng(14);
  const ComplexMatrix m = random_hermitian(8, rng);
  const auto d = pauli_decompose(m);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t keep = 0; keep <= 64; ++keep) {
    const auto t = truncate(d, keep);
    EXPECT_LE(t.bound, previous + 1e-15);
    EXPECT_NEAR(t.bound, frobenius_norm(m - t.m_trunc), 1e-10);
    EXPECT_NEAR(t.tail_squared * 8.0, t.bound * t.bound, 1e-10);
    previous = t.bound;
    for (int s = 0; s < 5; ++s) {
      const QuantumState rho = random_pure_state(3, rng);
      EXPECT_LE(std::abs(expectation(rho, m - t.m_trunc)), t.bound + 1e-12);
    }
  }
}

TEST(Truncate, KeepBeyondBasisThrows) {
  EXPECT_THROW(truncate(single_qubit({1.0, 0.0, 0.0, 0.0}), 5), RangeViolation);
}

TEST(RefitSubset, CompletePauliMatchesDual) {
  Rng rng(15);
  const auto train = random_states(30, 2, rng);
  const RealMatrix y = random_targets(30, 2, rng);
  const double ridge = 1e-3;
  const DualSolution dual = dual_solve(gram(train), y, ridge);
  const auto m = optimal_observable(train, dual);
  std::vector<PauliDecomposition> d;
  for (std::size_t c = 0; c < m.size(); ++c) d.push_back(pauli_decompose(m[c], c));
  RankOptions keep;
  keep.keep_zero_scores = true;
  const auto subset = rank_operators(d, keep);
  ASSERT_EQ(subset.size(), 16u);
  const PrimalSolution refit = refit_subset(subset, train, y, ridge);
  for (int t = 0; t < 10; ++t) {
    const QuantumState x = random_mixed_state(2, rng);
    const auto a = predict(dual, train, x);
    const auto b = predict(refit, x);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(a[c], b[c], 1e-8);
  }
}

TEST(RefitSubset, IdentityOnlyGivesShrunkMean) {
  Rng rng(16);
  const auto train = random_states(12, 2, rng);
  const RealMatrix y = random_targets(12, 1, rng);
  OperatorSubset subset;
  subset.n_qubits = 2;
  subset.selection.push_back({0, 0, 1.0});
  const double ridge = 0.3;
  const PrimalSolution refit = refit_subset(subset, train, y, ridge);
  // One constant feature s = 2^{-N/2}: prediction s^2 sum(y) / (P s^2 + ridge).
  double sum = 0.0;
  for (std::size_t i = 0; i < 12; ++i) sum += y(i, 0);
  const double s2 = 0.25;
  const double expected = s2 * sum / (12 * s2 + ridge);
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(predict(refit, random_pure_state(2, rng))[0], expected, 1e-12);
}

TEST(RefitSubset, AllZStringsReproduceOptimalObservable) {
  Rng rng(17);
  const auto train = random_states(25, 3, rng);
  const RealMatrix y = random_targets(25, 2, rng);
  const double ridge = 1e-4;
  const auto m = optimal_observable(train, dual_solve(gram(train), y, ridge));
  std::vector<SpectralDecomposition> s;
  for (std::size_t c = 0; c < m.size(); ++c) s.push_back(diagonalize(m[c], c));
  RankOptions options;
  options.scope = RankScope::PerChannel;
  options.keep_zero_scores = true;
  const auto subset = rank_operators(s, RankMode::ZString, options);
  ASSERT_EQ(subset.size(), 16u);
  const PrimalSolution refit = refit_subset(subset, train, y, ridge);
  for (int t = 0; t < 10; ++t) {
    const QuantumState x = random_mixed_state(3, rng);
    const auto p = predict(refit, x);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(p[c], expectation(x, m[c]), 1e-8);
  }
}

TEST(RefitSubset, EmptySubsetRejected) {
  Rng rng(18);
  const auto train = random_states(3, 1, rng);
  OperatorSubset subset;
  subset.n_qubits = 1;
  EXPECT_THROW(refit_subset(subset, train, RealMatrix(3, 1), 1e-3), ValidationError);
}

TEST(ExportDecomposition, WritesNonZeroRows) {
  const std::vector<PauliDecomposition> d{single_qubit({0.0, 3.0, 0.0, 1.0})};
  const auto r = rank_operators(d);
  std::ostringstream os;
  export_decomposition(os, d, r);
  EXPECT_EQ(os.str(), "channel,operator_code,operator_label,coefficient,rank_score\n0,1,X,3,3\n0,3,Z,1,1\n");
}
