#pragma once

// Quantum states, product encodings, Pauli strings and the reservoir dynamics.
//
// Qubit ordering convention, used everywhere in the library: qubit 0 is the
// most significant bit of a computational-basis index and the most
// significant base-4 digit of a Pauli code. Registers are laid out as
// input (qubits 0 .. N_I-1) followed by memory (qubits N_I .. N-1), so a
// joint state is kron(input, memory).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qrck/numerics.hpp"

namespace qrck {

/// A pure state vector or a density matrix on `n_qubits` qubits.
class QuantumState {
 public:
  QuantumState() = default;
  static QuantumState pure(std::vector<Complex> amplitudes);
  static QuantumState mixed(ComplexMatrix density);
  static QuantumState maximally_mixed(unsigned n_qubits);

  unsigned n_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return std::size_t{1} << n_qubits_; }
  bool is_pure() const { return std::holds_alternative<std::vector<Complex>>(rep_); }

  /// Amplitudes of a pure state. Throws for mixed states.
  const std::vector<Complex>& amplitudes() const;
  /// Density matrix of a mixed state. Throws for pure states.
  const ComplexMatrix& density_matrix() const;
  /// Density matrix for either representation (pure states are expanded).
  ComplexMatrix to_density() const;

  double trace() const;
  double purity() const;

  /// Checks the normalization, Hermiticity, trace and positivity
  /// invariants. Returns an empty string when they hold, else a reason.
  std::string check_invariants() const;

 private:
  unsigned n_qubits_ = 0;
  std::variant<std::vector<Complex>, ComplexMatrix> rep_;
};

/// Tensor product of Pauli letters, stored as a base-4 code with qubit 0 in
/// the most significant digit. Letters: 0 = I, 1 = X, 2 = Y, 3 = Z.
class PauliString {
 public:
  PauliString() = default;
  PauliString(unsigned n_qubits, std::uint64_t code);
  static PauliString from_label(std::string_view label);
  /// Z-string over the bitmask `s` (bit N-1-q set means Z on qubit q).
  static PauliString z_string(unsigned n_qubits, std::uint64_t s);

  unsigned n_qubits() const { return n_qubits_; }
  std::uint64_t code() const { return code_; }
  unsigned letter(unsigned qubit) const;
  unsigned weight() const;
  bool is_identity() const { return code_ == 0; }
  std::string label() const;

  /// Basis-index mask of the qubits flipped by X or Y letters.
  std::uint64_t flip_mask() const;
  /// Basis-index mask of the qubits carrying Y or Z letters.
  std::uint64_t phase_mask() const;
  /// Basis-index mask of the qubits carrying Y letters.
  std::uint64_t y_mask() const;

  auto operator<=>(const PauliString&) const = default;

 private:
  unsigned n_qubits_ = 0;
  std::uint64_t code_ = 0;
};

std::uint64_t pauli_count(unsigned n_qubits);

enum class EncodingScheme { RotationalY, RotationalPairedYZ, AmplitudeSqrt, AmplitudeSymmetric };

std::string to_string(EncodingScheme scheme);
EncodingScheme parse_encoding(std::string_view name);

struct EncodingSpec {
  EncodingScheme scheme = EncodingScheme::RotationalY;
  unsigned input_dim = 1;
  unsigned qubits_used = 1;

  /// Spec with `qubits_used` derived from the scheme and input dimension.
  static EncodingSpec make(EncodingScheme scheme, unsigned input_dim);
  void validate() const;
  double range_min() const;
  double range_max() const;
};

enum class TfimVariant { XFieldZZCoupling, ZFieldXXCoupling };

std::string to_string(TfimVariant v);
TfimVariant parse_tfim_variant(std::string_view name);

struct ReservoirSpec {
  unsigned n_input = 1;
  unsigned n_ancilla = 0;
  EncodingSpec encoding;
  double tfim_h = 1.0;
  double tfim_j = 1.0;
  double evolution_time = 1.0;
  TfimVariant variant = TfimVariant::XFieldZZCoupling;
  std::size_t washout = 100;

  unsigned n_qubits() const { return n_input + n_ancilla; }
  void validate() const;
};

inline constexpr unsigned kMaxReservoirQubits = 12;

/// Single-qubit-product encoding S(z)|0...0> of the input vector.
QuantumState encode(std::span<const double> z, const EncodingSpec& spec);

ComplexMatrix pauli_matrix(const PauliString& p);
/// tr(P m) in O(2^N) without materializing P.
Complex pauli_trace(const PauliString& p, const ComplexMatrix& m);
/// m += coef * P in O(2^N).
void add_pauli(ComplexMatrix& m, const PauliString& p, Complex coef);
ComplexMatrix build_tfim(const ReservoirSpec& spec);
ComplexMatrix reservoir_unitary(const ReservoirSpec& spec);

/// Stateless feature map: the encoded state, optionally evolved by `u`.
QuantumState qelm_state(std::span<const double> x, const ReservoirSpec& spec,
                        const ComplexMatrix* u = nullptr);

QuantumState partial_trace_input(const QuantumState& rho, const ReservoirSpec& layout);

struct QrcStepResult {
  QuantumState full;
  QuantumState memory;
};

/// One reservoir update: rho = U (eta_I(z) (x) eta_M) U^dagger, followed by
/// the partial trace over the input register.
QrcStepResult qrc_step(const QuantumState& eta_m, std::span<const double> z,
                       const ComplexMatrix& u, const ReservoirSpec& spec);

/// Drives the reservoir over the rows of `series`, starting from the
/// maximally mixed memory, and returns the states for t in [washout, T).
/// Stateless reservoirs (no ancillas) return per-sample pure states. An
/// empty `u` means no reservoir unitary.
std::vector<QuantumState> run_reservoir(const RealMatrix& series, const ReservoirSpec& spec,
                                        const ComplexMatrix& u);

/// Streaming form of run_reservoir for closed-loop use.
class ReservoirDriver {
 public:
  ReservoirDriver(const ReservoirSpec& spec, ComplexMatrix u);
  /// Feeds one sample and returns the full post-evolution state.
  const QuantumState& step(std::span<const double> z);
  const QuantumState& memory() const { return memory_; }
  const QuantumState& last() const { return last_; }
  void reset();

 private:
  ReservoirSpec spec_;
  ComplexMatrix u_;
  QuantumState memory_;
  QuantumState last_;
};

/// tr(M rho) for a Hermitian observable.
double expectation(const QuantumState& rho, const ComplexMatrix& m);
/// tr(P rho) for a Pauli string, without materializing P.
double expectation(const QuantumState& rho, const PauliString& p);

/// Trace distance (1/2)||a - b||_1 between two states.
double trace_distance(const QuantumState& a, const QuantumState& b);

}  // namespace qrck
