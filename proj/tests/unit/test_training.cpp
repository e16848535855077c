#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qrck/training.hpp"
#include "test_util.hpp"

using namespace qrck;
using qrck::testing::max_abs_diff;
using qrck::testing::random_hermitian;
using qrck::testing::random_mixed_state;
using qrck::testing::random_pure_state;

namespace {

RealMatrix random_real(std::size_t rows, std::size_t cols, Rng& rng) {
  RealMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

std::vector<QuantumState> random_states(std::size_t n, unsigned qubits, Rng& rng, bool mixed = false) {
  std::vector<QuantumState> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(mixed && i % 2 ? random_mixed_state(qubits, rng) : random_pure_state(qubits, rng));
  return out;
}

QuantumState encoded(double x) {
  const EncodingSpec spec = EncodingSpec::make(EncodingScheme::RotationalY, 1);
  const double z[1] = {x};
  return encode(z, spec);
}

std::vector<ComplexMatrix> all_paulis(unsigned n) {
  std::vector<ComplexMatrix> ops;
  for (std::uint64_t c = 0; c < pauli_count(n); ++c) ops.push_back(pauli_matrix(PauliString(n, c)));
  return ops;
}

}  // namespace

TEST(Gram, IdenticalPureStates) {
  Rng rng(1);
  const QuantumState s = random_pure_state(2, rng);
  const std::vector<QuantumState> states{s, s};
  const RealMatrix k = gram(states);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(k.data()[i], 1.0, 1e-12);
}

TEST(Gram, OrthogonalPureStates) {
  const std::vector<QuantumState> states{QuantumState::pure({1.0, 0.0}), QuantumState::pure({0.0, 1.0})};
  const RealMatrix k = gram(states);
  EXPECT_DOUBLE_EQ(k(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(k(1, 0), 0.0);
}

TEST(Gram, RotationalQuarterTurnOverlap) {
  const std::vector<QuantumState> states{encoded(0.25), encoded(0.0)};
  EXPECT_NEAR(gram(states)(0, 1), 0.5, 1e-14);
}

TEST(Gram, MixedPairsUseHilbertSchmidtProduct) {
  Rng rng(2);
  const auto states = random_states(8, 2, rng, true);
  const RealMatrix k = gram(states);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      EXPECT_NEAR(k(i, j), hs_inner(states[i].to_density(), states[j].to_density()), 1e-12);
      EXPECT_EQ(k(i, j), k(j, i));
    }
}

TEST(Gram, DiagonalIsPurityAndSpectrumIsNonNegative) {
  Rng rng(3);
  const auto states = random_states(20, 2, rng, true);
  const RealMatrix k = gram(states);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(k(i, i), states[i].purity(), 1e-12);
    EXPECT_GT(k(i, i), 0.0);
    EXPECT_LE(k(i, i), 1.0 + 1e-12);
  }
  const auto e = symmetric_eig(k);
  EXPECT_GE(e.eigenvalues.front(), -1e-8 * e.eigenvalues.back());
}

TEST(Gram, ThreadCountDoesNotChangeEntries) {
  Rng rng(4);
  const auto states = random_states(15, 3, rng, true);
  EXPECT_EQ(gram(states, 1), gram(states, 4));
}

TEST(Gram, DimensionMismatchThrows) {
  Rng rng(5);
  const std::vector<QuantumState> states{random_pure_state(1, rng), random_pure_state(2, rng)};
  EXPECT_THROW(gram(states), DimensionMismatch);
}

TEST(DualSolve, ScalarSystem) {
  const DualSolution s = dual_solve(RealMatrix{{1.0}}, RealMatrix{{2.0}}, 1.0);
  EXPECT_DOUBLE_EQ(s.alpha(0, 0), 1.0);
  EXPECT_EQ(s.ridge, 1.0);
}

TEST(DualSolve, IdentityGramShrinksTargets) {
  Rng rng(6);
  const RealMatrix y = random_real(5, 2, rng);
  const DualSolution s = dual_solve(RealMatrix::identity(5), y, 1e-9);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(s.alpha.data()[i], y.data()[i] / (1.0 + 1e-9), 1e-14);
}

TEST(DualSolve, RandomResidual) {
  Rng rng(7);
  const auto states = random_states(30, 3, rng, true);
  const RealMatrix k = gram(states);
  const RealMatrix y = random_real(30, 3, rng);
  const double ridge = 1e-4;
  const DualSolution s = dual_solve(k, y, ridge);
  RealMatrix shifted = k;
  for (std::size_t i = 0; i < 30; ++i) shifted(i, i) += ridge;
  EXPECT_LE(frobenius_norm(shifted * s.alpha - y) / frobenius_norm(y), 1e-8);
}

TEST(DualSolve, RejectsNonPositiveRidge) {
  EXPECT_THROW(dual_solve(RealMatrix{{1.0}}, RealMatrix{{1.0}}, 0.0), ValidationError);
}

TEST(DualSolve, DegenerateGramWithTinyRidgeThrows) {
  const RealMatrix k{{1.0, 1.0}, {1.0, 1.0}};
  EXPECT_THROW(dual_solve(k, RealMatrix{{1.0}, {0.0}}, 1e-300), NotPositiveDefinite);
}

TEST(DualSolve, MulticlassEqualsIndependentChannels) {
  Rng rng(8);
  const auto states = random_states(12, 2, rng);
  const RealMatrix k = gram(states);
  const RealMatrix y = random_real(12, 4, rng);
  const DualSolution joint = dual_solve(k, y, 1e-3);
  for (std::size_t c = 0; c < 4; ++c) {
    RealMatrix yc(12, 1);
    for (std::size_t i = 0; i < 12; ++i) yc(i, 0) = y(i, c);
    const DualSolution single = dual_solve(k, yc, 1e-3);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(joint.alpha(i, c), single.alpha(i, 0));
  }
}

TEST(OptimalObservable, SingleStateUnitWeight) {
  Rng rng(9);
  const std::vector<QuantumState> states{random_pure_state(2, rng)};
  const auto m = optimal_observable(states, DualSolution{RealMatrix{{1.0}}, 1.0});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_LT(max_abs_diff(m[0], states[0].to_density()), 1e-15);
}

TEST(OptimalObservable, ZeroWeightsGiveZeroMatrix) {
  Rng rng(10);
  const auto states = random_states(4, 2, rng);
  const auto m = optimal_observable(states, DualSolution{RealMatrix(4, 2), 1.0});
  ASSERT_EQ(m.size(), 2u);
  for (const auto& mc : m) EXPECT_EQ(frobenius_norm(mc), 0.0);
}

TEST(OptimalObservable, PredictionsMatchKernelSum) {
  Rng rng(11);
  const auto train = random_states(25, 3, rng, true);
  const DualSolution s = dual_solve(gram(train), random_real(25, 2, rng), 1e-3);
  const auto m = optimal_observable(train, s);
  for (const auto& mc : m) EXPECT_LE(hermiticity_defect(mc), 1e-10);
  for (int t = 0; t < 20; ++t) {
    const QuantumState x = t % 2 ? random_mixed_state(3, rng) : random_pure_state(3, rng);
    const auto via_m = predict(m, x);
    const auto via_k = predict(s, train, x);
    for (std::size_t c = 0; c < 2; ++c) {
      double direct = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) direct += s.alpha(i, c) * state_overlap(train[i], x);
      EXPECT_NEAR(via_m[c], direct, 1e-10);
      EXPECT_NEAR(via_k[c], direct, 1e-10);
    }
  }
}

TEST(OptimalObservable, OperatorSpaceSolverMatchesDual) {
  Rng rng(12);
  const auto states = random_states(40, 2, rng, true);
  const RealMatrix y = random_real(40, 3, rng);
  const auto dual = fit_optimal_observable(states, y, 1e-4, KernelSolver::Dual);
  const auto op = fit_optimal_observable(states, y, 1e-4, KernelSolver::OperatorSpace);
  ASSERT_EQ(dual.size(), op.size());
  for (std::size_t c = 0; c < dual.size(); ++c) EXPECT_LE(frobenius_norm(dual[c] - op[c]), 1e-8);
}

TEST(OptimalObservable, RepresenterPerturbationKeepsTrainingPredictions) {
  Rng rng(13);
  // Two pure states in the span of |00>,|01> leave |11><11| orthogonal to both.
  std::vector<QuantumState> states;
  for (int i = 0; i < 2; ++i) {
    const double a = rng.uniform(0.0, 1.0);
    states.push_back(QuantumState::pure({std::cos(a), std::sin(a), 0.0, 0.0}));
  }
  const DualSolution s = dual_solve(gram(states), RealMatrix{{0.3}, {-1.2}}, 1e-6);
  const ComplexMatrix m = optimal_observable(states, s)[0];
  ComplexMatrix perturbed = m;
  perturbed(3, 3) += 5.0;
  perturbed(2, 3) += Complex(0.5, 0.25);
  perturbed(3, 2) += Complex(0.5, -0.25);
  for (const auto& st : states) {
    EXPECT_NEAR(hs_inner(perturbed, st.to_density()) - hs_inner(m, st.to_density()), 0.0, 1e-10);
  }
}

TEST(HermitianCoordinates, RoundTripAndInnerProduct) {
  Rng rng(14);
  const ComplexMatrix a = random_hermitian(4, rng);
  const ComplexMatrix b = random_hermitian(4, rng);
  const auto va = hermitian_coordinates(a);
  const auto vb = hermitian_coordinates(b);
  EXPECT_EQ(va.size(), 16u);
  EXPECT_NEAR(dot(va, vb), hs_inner(a, b), 1e-12);
  EXPECT_LT(max_abs_diff(from_hermitian_coordinates(va, 4), a), 1e-14);
}

TEST(FeatureMatrix, IdentityOperatorGivesOnes) {
  Rng rng(15);
  const auto states = random_states(6, 2, rng, true);
  const std::vector<ComplexMatrix> ops{ComplexMatrix::identity(4)};
  const RealMatrix phi = feature_matrix(states, ops);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(phi(i, 0), 1.0, 1e-12);
}

TEST(FeatureMatrix, YPaulisVanishOnRealProductEncodings) {
  const EncodingSpec spec = EncodingSpec::make(EncodingScheme::RotationalY, 2);
  Rng rng(16);
  std::vector<QuantumState> states;
  for (int i = 0; i < 10; ++i) {
    const double z[2] = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    states.push_back(encode(z, spec));
  }
  const RealMatrix phi = feature_matrix(states, MeasurementSet::complete_pauli(2));
  for (std::uint64_t c = 0; c < 16; ++c) {
    if (PauliString(2, c).y_mask() == 0) continue;
    for (std::size_t i = 0; i < states.size(); ++i) EXPECT_NEAR(phi(i, c), 0.0, 1e-14);
  }
}

TEST(FeatureMatrix, CompletePauliRowNormsMatchPurity) {
  Rng rng(17);
  const auto states = random_states(10, 3, rng, true);
  MeasurementSet raw = MeasurementSet::complete_pauli(3);
  raw.scale = 1.0;
  const RealMatrix phi = feature_matrix(states, raw);
  for (std::size_t i = 0; i < states.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < phi.cols(); ++k) sum += phi(i, k) * phi(i, k);
    EXPECT_NEAR(sum, 8.0 * states[i].purity(), 1e-10);
  }
}

TEST(FeatureMatrix, DefaultScaleIsOrthonormal) {
  EXPECT_DOUBLE_EQ(MeasurementSet::complete_pauli(2).scale, 0.5);
  EXPECT_DOUBLE_EQ(orthonormal_pauli_scale(3), 1.0 / std::sqrt(8.0));
}

TEST(FeatureMatrix, PauliSetMatchesExplicitOperators) {
  Rng rng(18);
  const auto states = random_states(5, 2, rng, true);
  MeasurementSet set = MeasurementSet::complete_pauli(2);
  set.scale = 1.0;
  const auto ops = all_paulis(2);
  EXPECT_LT(max_abs_diff(feature_matrix(states, set), feature_matrix(states, ops)), 1e-12);
}

TEST(FeatureMatrix, ZStringGroupMeasuresRotatedState) {
  Rng rng(19);
  const auto states = random_states(4, 2, rng, true);
  const ComplexMatrix v = hermitian_expm(random_hermitian(4, rng), 1.0);
  MeasurementSet set;
  set.n_qubits = 2;
  set.groups.push_back({MeasurementGroup::Kind::ZString, v, {0, 1, 2, 3}});
  const RealMatrix phi = feature_matrix(states, set);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const ComplexMatrix rotated = adjoint(v) * states[i].to_density() * v;
    for (std::uint64_t s = 0; s < 4; ++s)
      EXPECT_NEAR(phi(i, s), hs_inner(pauli_matrix(PauliString::z_string(2, s)), rotated), 1e-12);
  }
}

TEST(Monomials, CountAndOrder) {
  EXPECT_EQ(monomial_count(3, 2), 9u);
  EXPECT_EQ(monomial_count(16, 1), 16u);
  const std::vector<double> v{2.0, 3.0};
  EXPECT_EQ(monomial_expand(v, 2), (std::vector<double>{2.0, 3.0, 4.0, 6.0, 9.0}));
  EXPECT_EQ(monomial_expand(v, 1), v);
  EXPECT_EQ(monomial_expand(std::vector<double>{1.0, 2.0, 3.0}, 2).size(), 9u);
  EXPECT_EQ(monomial_expand(v, 3), (std::vector<double>{2.0, 3.0, 4.0, 6.0, 9.0, 8.0, 12.0, 18.0, 27.0}));
}

TEST(Monomials, RowExpansionMatchesVectorExpansion) {
  Rng rng(20);
  const RealMatrix phi = random_real(4, 3, rng);
  const RealMatrix rows = monomial_expand_rows(phi, 3);
  ASSERT_EQ(rows.cols(), monomial_count(3, 3));
  for (std::size_t i = 0; i < 4; ++i) {
    const std::vector<double> row{phi(i, 0), phi(i, 1), phi(i, 2)};
    const auto e = monomial_expand(row, 3);
    for (std::size_t k = 0; k < e.size(); ++k) EXPECT_EQ(rows(i, k), e[k]);
  }
}

TEST(PrimalWeights, IdentityFeaturesReproduceTargets) {
  const RealMatrix y{{1.0}, {-2.0}, {0.5}};
  const RealMatrix w = primal_weights(RealMatrix::identity(3), y, 1e-12);
  EXPECT_LT(max_abs_diff(w, y), 1e-10);
}

TEST(PrimalWeights, DuplicateColumnsShareWeight) {
  const RealMatrix phi{{1.0, 1.0}, {2.0, 2.0}, {-1.0, -1.0}};
  const RealMatrix y{{1.0}, {2.5}, {-0.5}};
  const RealMatrix w = primal_weights(phi, y, 0.1);
  EXPECT_TRUE(std::isfinite(w(0, 0)));
  EXPECT_NEAR(w(0, 0), w(1, 0), 1e-14);
  // (Phi^T Phi + lambda) w = Phi^T y with Phi^T Phi = 6 [[1,1],[1,1]].
  EXPECT_NEAR(w(0, 0), 6.5 / 12.1, 1e-12);
}

TEST(PrimalWeights, TallAndWideFormsAgree) {
  Rng rng(21);
  for (auto [p, m] : {std::pair<std::size_t, std::size_t>{30, 8}, {8, 30}}) {
    const RealMatrix phi = random_real(p, m, rng);
    const RealMatrix y = random_real(p, 2, rng);
    const RealMatrix w = primal_weights(phi, y, 0.05);
    // Explicit normal equations on the m side.
    RealMatrix normal = phi.transpose() * phi;
    for (std::size_t i = 0; i < m; ++i) normal(i, i) += 0.05;
    const RealMatrix expected = spd_solve(normal, phi.transpose() * y);
    EXPECT_LT(max_abs_diff(w, expected), 1e-9);
  }
}

TEST(PrimalWeights, TrainingLossIncreasesWithRidge) {
  Rng rng(22);
  const RealMatrix phi = random_real(25, 6, rng);
  const RealMatrix y = random_real(25, 1, rng);
  double previous = -1.0;
  for (double ridge : {1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
    const double loss = training_loss(phi, primal_weights(phi, y, ridge), y);
    EXPECT_GE(loss, previous - 1e-12);
    previous = loss;
  }
}

TEST(PrimalSolve, CompleteBasisMatchesDualPredictor) {
  Rng rng(23);
  for (unsigned n : {1u, 2u, 3u}) {
    const auto train = random_states(40, n, rng, true);
    const RealMatrix y = random_real(40, 2, rng);
    const double ridge = 1e-3;
    const DualSolution dual = dual_solve(gram(train), y, ridge);
    const PrimalSolution primal = primal_solve(train, MeasurementSet::complete_pauli(n), y, ridge);
    for (int t = 0; t < 10; ++t) {
      const QuantumState x = random_mixed_state(n, rng);
      const auto a = predict(dual, train, x);
      const auto b = predict(primal, x);
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(a[c], b[c], 1e-8);
    }
  }
}

TEST(PrimalSolve, WeightMatrixHasMonomialRows) {
  Rng rng(24);
  const auto train = random_states(20, 2, rng);
  const MeasurementSet set = MeasurementSet::paulis(2, {0, 3, 12});
  const PrimalSolution s = primal_solve(train, set, random_real(20, 2, rng), 1e-4, 2);
  const RealMatrix w = s.weight_matrix();
  EXPECT_EQ(w.rows(), monomial_count(3, 2));
  EXPECT_EQ(w.cols(), 2u);
}

TEST(PrimalSolve, ChannelFeatureSubsetsAreIndependentFits) {
  Rng rng(25);
  const auto train = random_states(20, 2, rng, true);
  const RealMatrix y = random_real(20, 2, rng);
  const MeasurementSet set = MeasurementSet::paulis(2, {0, 1, 3, 12});
  const PrimalSolution s = primal_solve(train, set, y, 1e-4, 1, {{0, 2}, {1, 3}});
  const RealMatrix phi = feature_matrix(train, set);
  RealMatrix phi0(20, 2), y0(20, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    phi0(i, 0) = phi(i, 0);
    phi0(i, 1) = phi(i, 2);
    y0(i, 0) = y(i, 0);
  }
  const RealMatrix w0 = primal_weights(phi0, y0, 1e-4);
  ASSERT_EQ(s.channels[0].features, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(s.channels[0].weights[0], w0(0, 0), 1e-12);
  EXPECT_NEAR(s.channels[0].weights[1], w0(1, 0), 1e-12);
}

TEST(DualToPrimal, CompletePauliBasisReconstructsOptimalObservable) {
  Rng rng(26);
  const auto train = random_states(15, 2, rng, true);
  const DualSolution s = dual_solve(gram(train), random_real(15, 1, rng), 1e-3);
  const ComplexMatrix m = optimal_observable(train, s)[0];
  const auto ops = all_paulis(2);
  for (bool orthonormal : {true, false}) {
    const RealMatrix w = dual_to_primal_weights(s, train, ops, orthonormal);
    ComplexMatrix rec(4, 4);
    for (std::size_t k = 0; k < ops.size(); ++k) rec += ops[k] * Complex(w(k, 0));
    EXPECT_LE(frobenius_norm(rec - m), 1e-8);
  }
}

TEST(DualToPrimal, SelfProjectionHasUnitWeight) {
  Rng rng(27);
  const auto train = random_states(6, 2, rng);
  const DualSolution s = dual_solve(gram(train), random_real(6, 1, rng), 1e-3);
  const std::vector<ComplexMatrix> ops{optimal_observable(train, s)[0]};
  EXPECT_NEAR(dual_to_primal_weights(s, train, ops, true)(0, 0), 1.0, 1e-10);
}

TEST(DualToPrimal, RedundantOperatorsSplitWeight) {
  const std::vector<QuantumState> train{QuantumState::pure({1.0, 0.0})};
  const DualSolution s{RealMatrix{{1.0}}, 1.0};
  const ComplexMatrix z = pauli_matrix(PauliString::from_label("Z"));
  const std::vector<ComplexMatrix> ops{z, z};
  const RealMatrix w = dual_to_primal_weights(s, train, ops, false);
  // M* = |0><0| has Z-coefficient 1/2, shared equally.
  EXPECT_NEAR(w(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(w(1, 0), 0.25, 1e-12);
}

TEST(DualToPrimal, NonOrthogonalSetRejectedWithFlag) {
  const std::vector<QuantumState> train{QuantumState::pure({1.0, 0.0})};
  const DualSolution s{RealMatrix{{1.0}}, 1.0};
  const ComplexMatrix z = pauli_matrix(PauliString::from_label("Z"));
  const std::vector<ComplexMatrix> ops{z, z};
  EXPECT_THROW(dual_to_primal_weights(s, train, ops, true), NotOrthogonal);
}

TEST(Predict, InterpolatesTrainingPoint) {
  Rng rng(28);
  const auto train = random_states(5, 3, rng);
  const RealMatrix y = random_real(5, 1, rng);
  const DualSolution s = dual_solve(gram(train), y, 1e-12);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(predict(s, train, train[i])[0], y(i, 0), 1e-6);
}

TEST(Predict, ZeroModelGivesZero) {
  Rng rng(29);
  const auto train = random_states(3, 2, rng);
  const DualSolution s{RealMatrix(3, 2), 1.0};
  EXPECT_EQ(predict(s, train, random_pure_state(2, rng)), (std::vector<double>{0.0, 0.0}));
}

TEST(Predict, DimensionMismatchThrows) {
  Rng rng(30);
  const auto train = random_states(3, 2, rng);
  const DualSolution s{RealMatrix(3, 1), 1.0};
  EXPECT_THROW(predict(s, train, random_pure_state(3, rng)), DimensionMismatch);
}

TEST(Classify, ArgmaxWithLowestIndexTies) {
  EXPECT_EQ(classify(std::vector<double>{0.1, 0.9}), 1u);
  EXPECT_EQ(classify(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(classify(std::vector<double>{-1.0, 2.0, 2.0}), 1u);
}

TEST(Classify, InterpolatedOneHotRecoversLabel) {
  Rng rng(31);
  const auto train = random_states(6, 3, rng);
  RealMatrix y(6, 3);
  for (std::size_t i = 0; i < 6; ++i) y(i, i % 3) = 1.0;
  const DualSolution s = dual_solve(gram(train), y, 1e-10);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(classify(predict(s, train, train[i])), i % 3);
}
