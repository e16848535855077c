#pragma once

// Readout training: the dual (kernel) ridge solve that yields the optimal
// measurement operator, constrained primal ridge regression over an explicit
// measurement set, and the monomial readout expansion.

#include <cstdint>
#include <span>
#include <vector>

#include "qrck/numerics.hpp"
#include "qrck/quantum.hpp"

namespace qrck {

inline constexpr double kDefaultRidgeTimeSeries = 1e-8;
inline constexpr double kDefaultRidgeClassification = 1e-6;

/// Real coordinates of a Hermitian operator in an orthonormal Hilbert-Schmidt
/// basis: the diagonal, then sqrt(2) Re and sqrt(2) Im of each upper entry.
/// The dot product of two coordinate vectors equals tr(a b).
std::vector<double> hermitian_coordinates(const ComplexMatrix& a);
ComplexMatrix from_hermitian_coordinates(std::span<const double> v, std::size_t dimension);

/// K_ij = tr(rho_i rho_j), symmetric by construction.
RealMatrix gram(std::span<const QuantumState> states, unsigned threads = 0);
/// Cross kernel K_ij = tr(a_i b_j).
RealMatrix gram(std::span<const QuantumState> a, std::span<const QuantumState> b, unsigned threads = 0);
/// tr(a b) for two states in either representation.
double state_overlap(const QuantumState& a, const QuantumState& b);

struct DualSolution {
  RealMatrix alpha;  // P x C
  double ridge = 0.0;
};

/// alpha = (K + ridge 1)^{-1} Y, one column per output channel.
DualSolution dual_solve(const RealMatrix& k, const RealMatrix& y, double ridge);

/// M*_c = sum_j alpha_jc rho_j.
using OptimalObservableSet = std::vector<ComplexMatrix>;
OptimalObservableSet optimal_observable(std::span<const QuantumState> states, const DualSolution& solution);

/// The same M*_c computed in operator space through the identity
/// Phi^T (Phi Phi^T + ridge 1)^{-1} = (Phi^T Phi + ridge 1)^{-1} Phi^T, with
/// Phi the Hermitian coordinates of the states. Cheaper than the dual solve
/// when P exceeds 4^N.
OptimalObservableSet optimal_observable_operator_space(std::span<const QuantumState> states, const RealMatrix& y,
                                                       double ridge, unsigned threads = 0);

enum class KernelSolver { Auto, Dual, OperatorSpace };
/// M* by the dual solve, or by the operator-space identity; Auto picks the
/// operator-space route when P > 4^N.
OptimalObservableSet fit_optimal_observable(std::span<const QuantumState> states, const RealMatrix& y, double ridge,
                                            KernelSolver solver = KernelSolver::Auto, unsigned threads = 0);

/// A list of measurement groups. Each group is a set of Pauli strings
/// measured directly, a set of Z-strings, or a set of basis projectors
/// |b><b|, the latter two measured after rotating the state with the group's
/// `rotation` (rho -> V^dagger rho V). Pauli and Z-string features are
/// multiplied by `scale`; the default 2^{-N/2} makes each feature the
/// coefficient of rho along an orthonormal operator.
struct MeasurementGroup {
  enum class Kind { Pauli, ZString, Projector };
  Kind kind = Kind::Pauli;
  ComplexMatrix rotation;  // ZString and Projector groups; empty means identity
  std::vector<std::uint64_t> codes;
};

struct MeasurementSet {
  unsigned n_qubits = 0;
  std::vector<MeasurementGroup> groups;
  double scale = 1.0;

  static MeasurementSet paulis(unsigned n_qubits, std::vector<std::uint64_t> codes);
  static MeasurementSet complete_pauli(unsigned n_qubits);
  std::size_t size() const;
  void validate() const;
};

double orthonormal_pauli_scale(unsigned n_qubits);

/// Probabilities <b|V^dagger rho V|b> of the computational basis states after
/// the rotation; an empty `v` means no rotation.
std::vector<double> basis_probabilities(const QuantumState& rho, const ComplexMatrix& v);

std::vector<double> measure(const MeasurementSet& set, const QuantumState& rho);
RealMatrix feature_matrix(std::span<const QuantumState> states, const MeasurementSet& set, unsigned threads = 0);
/// Phi_ik = tr(M_k rho_i) for arbitrary Hermitian operators.
RealMatrix feature_matrix(std::span<const QuantumState> states, std::span<const ComplexMatrix> operators,
                          unsigned threads = 0);

/// All distinct monomials of total degree 1..p_max in the entries of v, in
/// graded lexicographic order: degree 1 first, and within each degree the
/// non-decreasing index tuples in lexicographic order.
std::vector<double> monomial_expand(std::span<const double> v, unsigned p_max);
std::size_t monomial_count(std::size_t m, unsigned p_max);
RealMatrix monomial_expand_rows(const RealMatrix& phi, unsigned p_max);

/// Readout of one output channel: the indices of the measured features it
/// uses and the weights of their monomial expansion.
struct ChannelReadout {
  std::vector<std::size_t> features;
  std::vector<double> weights;
};

struct PrimalSolution {
  MeasurementSet operator_set;
  unsigned monomial_order = 1;
  double ridge = 0.0;
  std::vector<ChannelReadout> channels;

  /// Weights as an m_ro x C matrix. Requires all channels to share features.
  RealMatrix weight_matrix() const;
};

/// Ridge weights W = (Phi^T Phi + ridge 1)^{-1} Phi^T Y. Uses the equivalent
/// dual form Phi^T (Phi Phi^T + ridge 1)^{-1} Y when P < m.
RealMatrix primal_weights(const RealMatrix& phi, const RealMatrix& y, double ridge);

/// Fits a constrained primal readout over `set` with monomial expansion.
/// `channel_features[c]` restricts output c to a subset of the measured
/// features; when empty every channel uses all of them.
PrimalSolution primal_solve(std::span<const QuantumState> states, const MeasurementSet& set, const RealMatrix& y,
                            double ridge, unsigned p_max = 1,
                            const std::vector<std::vector<std::size_t>>& channel_features = {},
                            unsigned threads = 0);
/// Same, from precomputed measured features (P x set.size()).
PrimalSolution primal_solve(const RealMatrix& features, const MeasurementSet& set, const RealMatrix& y, double ridge,
                            unsigned p_max = 1, const std::vector<std::vector<std::size_t>>& channel_features = {});
std::vector<double> predict_from_features(const PrimalSolution& model, std::span<const double> features);

/// Weights w_k of the operators M_k that best represent each M*_c. With the
/// orthonormal flag the operators must be pairwise Hilbert-Schmidt orthogonal
/// and w_k = sum_j alpha_j tr(M_k rho_j) / tr(M_k^2); otherwise the
/// pseudo-inverse of G_kl = tr(M_k M_l) is applied.
RealMatrix dual_to_primal_weights(const DualSolution& solution, std::span<const QuantumState> states,
                                  std::span<const ComplexMatrix> operators, bool orthonormal);

std::vector<double> predict(const PrimalSolution& model, const QuantumState& x);
std::vector<double> predict(const DualSolution& model, std::span<const QuantumState> training_states,
                            const QuantumState& x);
std::vector<double> predict(const OptimalObservableSet& observables, const QuantumState& x);

/// Index of the largest score; ties go to the lowest index.
std::size_t classify(std::span<const double> scores);

/// Sum of squared residuals of W on (Phi, Y).
double training_loss(const RealMatrix& phi, const RealMatrix& w, const RealMatrix& y);

}  // namespace qrck
