#pragma once

// Turning optimal observables into measurable operator sets: Pauli
// expansions with ranking and truncation, and diagonalization into a basis
// rotation followed by Z-string measurements.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qrck/numerics.hpp"
#include "qrck/training.hpp"

namespace qrck {

struct PauliDecomposition {
  unsigned n_qubits = 0;
  std::vector<double> coefficients;  // c_k indexed by Pauli code, length 4^N
  std::size_t channel = 0;

  ComplexMatrix reconstruct() const;
};

/// c_k = 2^{-N} tr(M P_k) for all 4^N strings.
PauliDecomposition pauli_decompose(const ComplexMatrix& m_star, std::size_t channel = 0, unsigned threads = 0);

struct SpectralDecomposition {
  unsigned n_qubits = 0;
  ComplexMatrix v;                     // eigenvectors as columns
  std::vector<double> eigenvalues;     // lambda_b, descending, on basis state b
  std::vector<double> z_coefficients;  // beta_s with sum_s beta_s Z_s = Lambda
  std::size_t channel = 0;
};

/// M = V Lambda V^dagger with eigenvalues sorted in descending order onto the
/// computational basis, and beta = 2^{-N} WHT(lambda).
SpectralDecomposition diagonalize(const ComplexMatrix& m_star, std::size_t channel = 0);

/// beta = 2^{-N} WHT(lambda) and its inverse lambda = WHT(beta).
std::vector<double> spectrum_to_z_coefficients(std::span<const double> eigenvalues);
std::vector<double> z_coefficients_to_spectrum(std::span<const double> beta);

/// tr(M rho) evaluated as sum_b lambda_b <b|V^dagger rho V|b>.
double spectral_expectation(const SpectralDecomposition& s, const QuantumState& rho);

enum class RankMode { Pauli, ZString, Eigenvalue };
/// Joint ranks each operator once with its coefficient norm across
/// channels. PerChannel ranks (channel, operator) pairs individually.
enum class RankScope { Joint, PerChannel };

struct RankOptions {
  RankScope scope = RankScope::Joint;
  std::optional<unsigned> max_weight;  // Pauli mode only
  bool keep_zero_scores = false;
};

struct RankedOperator {
  std::size_t channel = 0;  // meaningful for PerChannel scope
  std::uint64_t code = 0;   // Pauli code, Z-string mask or basis index
  double score = 0.0;
};

struct OperatorSubset {
  RankMode mode = RankMode::Pauli;
  RankScope scope = RankScope::Joint;
  unsigned n_qubits = 0;
  std::vector<RankedOperator> selection;  // scores non-increasing after the identity
  std::vector<ComplexMatrix> rotations;   // per channel, ZString and Eigenvalue modes

  std::size_t size() const { return selection.size(); }
  /// The first `k` entries.
  OperatorSubset prefix(std::size_t k) const;
};

/// Ranks Pauli strings by |c_k| (Euclidean norm across channels for the
/// joint scope). The identity comes first when its score is nonzero, ties go
/// to the lower code, and zero scores are dropped unless requested.
OperatorSubset rank_operators(std::span<const PauliDecomposition> decomps, const RankOptions& options = {});
/// Ranks Z-strings by |beta_s|, or basis projectors by |lambda_b| in
/// Eigenvalue mode.
OperatorSubset rank_operators(std::span<const SpectralDecomposition> decomps, RankMode mode = RankMode::ZString,
                              const RankOptions& options = {});

struct Truncation {
  ComplexMatrix m_trunc;
  double bound = 0.0;          // ||M - M_trunc||_HS = sqrt(2^N sum_{k not kept} c_k^2)
  double tail_squared = 0.0;   // sum_{k not kept} c_k^2
  std::vector<std::uint64_t> kept;
};

/// Keeps the `keep` highest-ranked strings of a single decomposition.
Truncation truncate(const PauliDecomposition& decomp, std::size_t keep);

/// Measurement set and per-channel feature lists realizing a subset.
struct SubsetMeasurement {
  MeasurementSet set;
  std::vector<std::vector<std::size_t>> channel_features;  // empty means shared
};
SubsetMeasurement subset_measurement(const OperatorSubset& subset, std::size_t n_channels);

/// Re-fits a primal readout restricted to the operators of `subset`. Joint
/// Pauli subsets share features across channels; every other subset gives
/// each channel only its own operators.
PrimalSolution refit_subset(const OperatorSubset& subset, std::span<const QuantumState> states,
                            const RealMatrix& targets, double ridge, unsigned p_max = 1, unsigned threads = 0);

/// Text table with columns channel, operator_code, operator_label,
/// coefficient, rank_score.
void export_decomposition(std::ostream& os, std::span<const PauliDecomposition> decomps,
                          const OperatorSubset& ranking);

}  // namespace qrck
