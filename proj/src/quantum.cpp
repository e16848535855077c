#include "qrck/quantum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qrck {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t qubit_bit(unsigned n_qubits, unsigned qubit) {
  return std::uint64_t{1} << (n_qubits - 1 - qubit);
}

// i^k for k mod 4.
Complex i_power(unsigned k) {
  switch (k % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// Phase picked up by basis state |c> under P, so that P|c> = phase |c ^ flip>.
Complex pauli_phase(std::uint64_t c, std::uint64_t phase_mask, const Complex& y_factor) {
  return (std::popcount(c & phase_mask) & 1U) ? -y_factor : y_factor;
}

}  // namespace

// ---------------------------------------------------------------- QuantumState

QuantumState QuantumState::pure(std::vector<Complex> amplitudes) {
  const std::size_t d = amplitudes.size();
  if (d == 0 || (d & (d - 1)) != 0) {
    throw DimensionMismatch("state vector length must be a power of two");
  }
  QuantumState s;
  s.n_qubits_ = static_cast<unsigned>(std::countr_zero(d));
  s.rep_ = std::move(amplitudes);
  return s;
}

QuantumState QuantumState::mixed(ComplexMatrix density) {
  const std::size_t d = density.rows();
  if (!density.square() || d == 0 || (d & (d - 1)) != 0) {
    throw DimensionMismatch("density matrix must be square with power-of-two size");
  }
  QuantumState s;
  s.n_qubits_ = static_cast<unsigned>(std::countr_zero(d));
  s.rep_ = std::move(density);
  return s;
}

QuantumState QuantumState::maximally_mixed(unsigned n_qubits) {
  const std::size_t d = std::size_t{1} << n_qubits;
  ComplexMatrix m = ComplexMatrix::identity(d);
  m *= Complex(1.0 / static_cast<double>(d));
  return mixed(std::move(m));
}

const std::vector<Complex>& QuantumState::amplitudes() const {
  if (!is_pure()) throw Error("amplitudes() requested from a mixed state");
  return std::get<std::vector<Complex>>(rep_);
}

const ComplexMatrix& QuantumState::density_matrix() const {
  if (is_pure()) throw Error("density_matrix() requested from a pure state");
  return std::get<ComplexMatrix>(rep_);
}

ComplexMatrix QuantumState::to_density() const {
  if (is_pure()) return outer(amplitudes(), amplitudes());
  return density_matrix();
}

double QuantumState::trace() const {
  if (is_pure()) {
    double s = 0.0;
    for (const auto& a : amplitudes()) s += std::norm(a);
    return s;
  }
  return qrck::trace(density_matrix()).real();
}

double QuantumState::purity() const {
  if (is_pure()) {
    const double n = trace();
    return n * n;
  }
  const ComplexMatrix& rho = density_matrix();
  double s = 0.0;
  for (const auto& v : rho.values()) s += std::norm(v);
  return s;
}

std::string QuantumState::check_invariants() const {
  std::ostringstream why;
  if (is_pure()) {
    const double norm = std::sqrt(trace());
    if (std::abs(norm - 1.0) > 1e-12) why << "state vector norm " << norm;
    return why.str();
  }
  const ComplexMatrix& rho = density_matrix();
  if (!is_hermitian(rho, tol::kHermitianInput)) {
    why << "density matrix not Hermitian";
    return why.str();
  }
  const double tr = trace();
  if (std::abs(tr - 1.0) > 1e-10) why << "trace " << tr << "; ";
  const auto eig = hermitian_eig(rho);
  if (eig.eigenvalues.front() < -1e-10) why << "negative eigenvalue " << eig.eigenvalues.front() << "; ";
  const double p = purity();
  const double floor = 1.0 / static_cast<double>(dimension());
  if (p < floor - 1e-10 || p > 1.0 + 1e-10) why << "purity " << p;
  return why.str();
}

// ----------------------------------------------------------------- PauliString

std::uint64_t pauli_count(unsigned n_qubits) { return std::uint64_t{1} << (2 * n_qubits); }

PauliString::PauliString(unsigned n_qubits, std::uint64_t code) : n_qubits_(n_qubits), code_(code) {
  if (n_qubits > 31) throw RangeViolation("Pauli strings support at most 31 qubits");
  if (code >= pauli_count(n_qubits)) throw RangeViolation("Pauli code out of range");
}

PauliString PauliString::from_label(std::string_view label) {
  std::uint64_t code = 0;
  for (char ch : label) {
    unsigned letter = 0;
    switch (ch) {
      case 'I': case '_': letter = 0; break;
      case 'X': letter = 1; break;
      case 'Y': letter = 2; break;
      case 'Z': letter = 3; break;
      default: throw RangeViolation(std::string("invalid Pauli letter '") + ch + "'");
    }
    code = code * 4 + letter;
  }
  return PauliString(static_cast<unsigned>(label.size()), code);
}

PauliString PauliString::z_string(unsigned n_qubits, std::uint64_t s) {
  std::uint64_t code = 0;
  for (unsigned q = 0; q < n_qubits; ++q) {
    code = code * 4 + ((s & qubit_bit(n_qubits, q)) ? 3U : 0U);
  }
  return PauliString(n_qubits, code);
}

unsigned PauliString::letter(unsigned qubit) const {
  return static_cast<unsigned>((code_ >> (2 * (n_qubits_ - 1 - qubit))) & 3U);
}

unsigned PauliString::weight() const {
  unsigned w = 0;
  for (unsigned q = 0; q < n_qubits_; ++q) w += letter(q) != 0;
  return w;
}

std::string PauliString::label() const {
  static constexpr char kLetters[] = {'I', 'X', 'Y', 'Z'};
  std::string s(n_qubits_, 'I');
  for (unsigned q = 0; q < n_qubits_; ++q) s[q] = kLetters[letter(q)];
  return s;
}

std::uint64_t PauliString::flip_mask() const {
  std::uint64_t m = 0;
  for (unsigned q = 0; q < n_qubits_; ++q) {
    const unsigned l = letter(q);
    if (l == 1 || l == 2) m |= qubit_bit(n_qubits_, q);
  }
  return m;
}

std::uint64_t PauliString::phase_mask() const {
  std::uint64_t m = 0;
  for (unsigned q = 0; q < n_qubits_; ++q) {
    const unsigned l = letter(q);
    if (l == 2 || l == 3) m |= qubit_bit(n_qubits_, q);
  }
  return m;
}

std::uint64_t PauliString::y_mask() const {
  std::uint64_t m = 0;
  for (unsigned q = 0; q < n_qubits_; ++q)
    if (letter(q) == 2) m |= qubit_bit(n_qubits_, q);
  return m;
}

ComplexMatrix pauli_matrix(const PauliString& p) {
  const std::size_t d = std::size_t{1} << p.n_qubits();
  const std::uint64_t flip = p.flip_mask();
  const std::uint64_t phase = p.phase_mask();
  const Complex y_factor = i_power(static_cast<unsigned>(std::popcount(p.y_mask())));
  ComplexMatrix m(d, d);
  for (std::uint64_t c = 0; c < d; ++c) m(c ^ flip, c) = pauli_phase(c, phase, y_factor);
  return m;
}

Complex pauli_trace(const PauliString& p, const ComplexMatrix& m) {
  const std::size_t d = std::size_t{1} << p.n_qubits();
  if (m.rows() != d || !m.square()) throw DimensionMismatch("pauli_trace: operator dimension mismatch");
  const std::uint64_t flip = p.flip_mask();
  const std::uint64_t phase = p.phase_mask();
  const Complex y_factor = i_power(static_cast<unsigned>(std::popcount(p.y_mask())));
  Complex s{};
  for (std::uint64_t c = 0; c < d; ++c) s += pauli_phase(c, phase, y_factor) * m(c, c ^ flip);
  return s;
}

void add_pauli(ComplexMatrix& m, const PauliString& p, Complex coef) {
  const std::size_t d = std::size_t{1} << p.n_qubits();
  if (m.rows() != d || !m.square()) throw DimensionMismatch("add_pauli: operator dimension mismatch");
  const std::uint64_t flip = p.flip_mask();
  const std::uint64_t phase = p.phase_mask();
  const Complex y_factor = i_power(static_cast<unsigned>(std::popcount(p.y_mask())));
  for (std::uint64_t c = 0; c < d; ++c) m(c ^ flip, c) += coef * pauli_phase(c, phase, y_factor);
}

// -------------------------------------------------------------------- Encoding

std::string to_string(EncodingScheme scheme) {
  switch (scheme) {
    case EncodingScheme::RotationalY: return "rotational_y";
    case EncodingScheme::RotationalPairedYZ: return "paired_yz";
    case EncodingScheme::AmplitudeSqrt: return "amplitude_sqrt";
    case EncodingScheme::AmplitudeSymmetric: return "amplitude_symmetric";
  }
  return "unknown";
}

EncodingScheme parse_encoding(std::string_view name) {
  if (name == "rotational_y") return EncodingScheme::RotationalY;
  if (name == "paired_yz") return EncodingScheme::RotationalPairedYZ;
  if (name == "amplitude_sqrt") return EncodingScheme::AmplitudeSqrt;
  if (name == "amplitude_symmetric") return EncodingScheme::AmplitudeSymmetric;
  throw ValidationError("encoding", "unknown scheme '" + std::string(name) + "'");
}

EncodingSpec EncodingSpec::make(EncodingScheme scheme, unsigned input_dim) {
  EncodingSpec s{scheme, input_dim,
                 scheme == EncodingScheme::RotationalPairedYZ ? input_dim / 2 : input_dim};
  s.validate();
  return s;
}

void EncodingSpec::validate() const {
  if (input_dim == 0) throw ValidationError("encoding.input_dim", "must be positive");
  if (scheme == EncodingScheme::RotationalPairedYZ) {
    if (input_dim % 2 != 0) throw ValidationError("encoding.input_dim", "paired encoding needs an even dimension");
    if (qubits_used * 2 != input_dim) throw ValidationError("encoding.qubits_used", "paired encoding uses input_dim/2 qubits");
  } else if (qubits_used != input_dim) {
    throw ValidationError("encoding.qubits_used", "must equal input_dim");
  }
}

double EncodingSpec::range_min() const {
  return scheme == EncodingScheme::AmplitudeSymmetric ? -1.0 : 0.0;
}

double EncodingSpec::range_max() const { return 1.0; }

QuantumState encode(std::span<const double> z, const EncodingSpec& spec) {
  spec.validate();
  if (z.size() != spec.input_dim) {
    throw DimensionMismatch("encode: expected " + std::to_string(spec.input_dim) +
                            " inputs, got " + std::to_string(z.size()));
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] >= spec.range_min() && z[i] <= spec.range_max())) {
      throw RangeViolation("encode: input " + std::to_string(z[i]) + " outside [" +
                               std::to_string(spec.range_min()) + ", " +
                               std::to_string(spec.range_max()) + "] for " + to_string(spec.scheme),
                           i);
    }
  }
  std::vector<Complex> psi{Complex(1.0)};
  for (unsigned q = 0; q < spec.qubits_used; ++q) {
    Complex a0, a1;
    switch (spec.scheme) {
      case EncodingScheme::RotationalY:
        a0 = std::cos(kPi * z[q]);
        a1 = std::sin(kPi * z[q]);
        break;
      case EncodingScheme::RotationalPairedYZ: {
        // R_Z(2 pi z') R_Y(2 pi z) |0>
        const double theta = z[2 * q];
        const double phi = z[2 * q + 1];
        a0 = std::polar(std::cos(kPi * theta), -kPi * phi);
        a1 = std::polar(std::sin(kPi * theta), kPi * phi);
        break;
      }
      case EncodingScheme::AmplitudeSqrt:
        a0 = std::sqrt(z[q]);
        a1 = std::sqrt(1.0 - z[q]);
        break;
      case EncodingScheme::AmplitudeSymmetric:
        a0 = z[q];
        a1 = std::sqrt(1.0 - z[q] * z[q]);
        break;
    }
    const Complex qubit[2] = {a0, a1};
    psi = kron(psi, qubit);
  }
  return QuantumState::pure(std::move(psi));
}

// ------------------------------------------------------------------- Reservoir

std::string to_string(TfimVariant v) {
  return v == TfimVariant::XFieldZZCoupling ? "x_field_zz" : "z_field_xx";
}

TfimVariant parse_tfim_variant(std::string_view name) {
  if (name == "x_field_zz") return TfimVariant::XFieldZZCoupling;
  if (name == "z_field_xx") return TfimVariant::ZFieldXXCoupling;
  throw ValidationError("reservoir.variant", "unknown variant '" + std::string(name) + "'");
}

void ReservoirSpec::validate() const {
  encoding.validate();
  if (encoding.qubits_used != n_input) {
    throw ValidationError("reservoir.n_input", "must match the qubits used by the encoding");
  }
  if (n_qubits() == 0) throw ValidationError("reservoir.n_input", "need at least one qubit");
  if (n_qubits() > kMaxReservoirQubits) {
    throw ValidationError("reservoir.n_ancilla", "total qubit count exceeds " +
                                                     std::to_string(kMaxReservoirQubits));
  }
  if (!std::isfinite(tfim_h) || !std::isfinite(tfim_j) || !std::isfinite(evolution_time)) {
    throw ValidationError("reservoir", "TFIM parameters must be finite");
  }
}

ComplexMatrix build_tfim(const ReservoirSpec& spec) {
  const unsigned n = spec.n_qubits();
  if (n == 0) throw ValidationError("reservoir", "need at least one qubit");
  const std::size_t d = std::size_t{1} << n;
  const bool swapped = spec.variant == TfimVariant::ZFieldXXCoupling;
  const unsigned field = swapped ? 3 : 1;
  const unsigned coupling = swapped ? 1 : 3;

  ComplexMatrix h(d, d);
  auto add = [&](const PauliString& p, double coef) { add_pauli(h, p, coef); };
  auto code_of = [&](unsigned q, unsigned letter) {
    return std::uint64_t{letter} << (2 * (n - 1 - q));
  };
  for (unsigned q = 0; q < n; ++q) add(PauliString(n, code_of(q, field)), -spec.tfim_h);
  for (unsigned q = 0; q + 1 < n; ++q) {
    add(PauliString(n, code_of(q, coupling) | code_of(q + 1, coupling)), -spec.tfim_j);
  }
  return h;
}

ComplexMatrix reservoir_unitary(const ReservoirSpec& spec) {
  return hermitian_expm(build_tfim(spec), spec.evolution_time);
}

QuantumState qelm_state(std::span<const double> x, const ReservoirSpec& spec, const ComplexMatrix* u) {
  if (spec.n_ancilla != 0) throw AncillaPresent("qelm_state requires a reservoir without ancillas");
  QuantumState psi = encode(x, spec.encoding);
  if (u == nullptr || u->empty()) return psi;
  if (u->rows() != psi.dimension()) throw DimensionMismatch("qelm_state: unitary dimension mismatch");
  return QuantumState::pure(*u * std::span<const Complex>(psi.amplitudes()));
}

QuantumState partial_trace_input(const QuantumState& rho, const ReservoirSpec& layout) {
  if (rho.n_qubits() != layout.n_qubits()) {
    throw DimensionMismatch("partial_trace_input: state has " + std::to_string(rho.n_qubits()) +
                            " qubits, layout expects " + std::to_string(layout.n_qubits()));
  }
  const std::size_t di = std::size_t{1} << layout.n_input;
  const std::size_t da = std::size_t{1} << layout.n_ancilla;
  ComplexMatrix out(da, da);
  if (rho.is_pure()) {
    const auto& psi = rho.amplitudes();
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t a = 0; a < da; ++a)
        for (std::size_t b = 0; b < da; ++b) out(a, b) += psi[i * da + a] * std::conj(psi[i * da + b]);
  } else {
    const ComplexMatrix& m = rho.density_matrix();
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t a = 0; a < da; ++a)
        for (std::size_t b = 0; b < da; ++b) out(a, b) += m(i * da + a, i * da + b);
  }
  return QuantumState::mixed(std::move(out));
}

QrcStepResult qrc_step(const QuantumState& eta_m, std::span<const double> z, const ComplexMatrix& u,
                       const ReservoirSpec& spec) {
  if (eta_m.n_qubits() != spec.n_ancilla) throw DimensionMismatch("qrc_step: memory register size mismatch");
  const QuantumState input = encode(z, spec.encoding);
  ComplexMatrix joint = kron(input.to_density(), eta_m.to_density());
  if (!u.empty()) {
    if (u.rows() != joint.rows()) throw DimensionMismatch("qrc_step: unitary dimension mismatch");
    joint = u * joint * adjoint(u);
  }
  QuantumState full = QuantumState::mixed(std::move(joint));
  QuantumState memory = partial_trace_input(full, spec);
  return {std::move(full), std::move(memory)};
}

namespace {

void check_series_range(const RealMatrix& series, const EncodingSpec& enc) {
  if (series.cols() != enc.input_dim) {
    throw DimensionMismatch("series has " + std::to_string(series.cols()) + " columns, encoding expects " +
                            std::to_string(enc.input_dim));
  }
  for (std::size_t t = 0; t < series.rows(); ++t)
    for (double v : series.row(t))
      if (!(v >= enc.range_min() && v <= enc.range_max())) {
        throw RangeViolation("sample " + std::to_string(t) + " value " + std::to_string(v) +
                                 " outside the encoding range",
                             t);
      }
}

}  // namespace

ReservoirDriver::ReservoirDriver(const ReservoirSpec& spec, ComplexMatrix u) : spec_(spec), u_(std::move(u)) {
  spec_.validate();
  reset();
}

void ReservoirDriver::reset() {
  memory_ = spec_.n_ancilla ? QuantumState::maximally_mixed(spec_.n_ancilla) : QuantumState();
  last_ = QuantumState();
}

const QuantumState& ReservoirDriver::step(std::span<const double> z) {
  if (spec_.n_ancilla == 0) {
    last_ = qelm_state(z, spec_, &u_);
    return last_;
  }
  QrcStepResult r = qrc_step(memory_, z, u_, spec_);
  last_ = std::move(r.full);
  memory_ = std::move(r.memory);
  return last_;
}

std::vector<QuantumState> run_reservoir(const RealMatrix& series, const ReservoirSpec& spec, const ComplexMatrix& u) {
  spec.validate();
  check_series_range(series, spec.encoding);
  std::vector<QuantumState> out;
  if (series.rows() > spec.washout) out.reserve(series.rows() - spec.washout);
  ReservoirDriver driver(spec, u);
  for (std::size_t t = 0; t < series.rows(); ++t) {
    const QuantumState& s = driver.step(series.row(t));
    if (t >= spec.washout) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------- Expectations

double expectation(const QuantumState& rho, const ComplexMatrix& m) {
  if (m.rows() != rho.dimension() || !m.square()) throw DimensionMismatch("expectation: operator dimension mismatch");
  Complex v{};
  double scale = 1.0;
  if (rho.is_pure()) {
    const auto& psi = rho.amplitudes();
    const std::vector<Complex> mpsi = m * std::span<const Complex>(psi);
    v = inner(psi, mpsi);
    scale = std::max(1.0, frobenius_norm(m));
  } else {
    v = hs_inner(m, rho.density_matrix());
    return v.real();
  }
  if (std::abs(v.imag()) > tol::kNonReal * scale) {
    throw NonRealResult("expectation: imaginary part " + std::to_string(v.imag()));
  }
  return v.real();
}

double expectation(const QuantumState& rho, const PauliString& p) {
  if (p.n_qubits() != rho.n_qubits()) throw DimensionMismatch("expectation: Pauli string size mismatch");
  const std::size_t d = rho.dimension();
  const std::uint64_t flip = p.flip_mask();
  const std::uint64_t phase = p.phase_mask();
  const Complex yf = i_power(static_cast<unsigned>(std::popcount(p.y_mask())));
  Complex v{};
  if (rho.is_pure()) {
    const auto& psi = rho.amplitudes();
    for (std::uint64_t c = 0; c < d; ++c) v += std::conj(psi[c ^ flip]) * pauli_phase(c, phase, yf) * psi[c];
  } else {
    const ComplexMatrix& m = rho.density_matrix();
    for (std::uint64_t c = 0; c < d; ++c) v += pauli_phase(c, phase, yf) * m(c, c ^ flip);
  }
  return v.real();
}

double trace_distance(const QuantumState& a, const QuantumState& b) {
  if (a.n_qubits() != b.n_qubits()) throw DimensionMismatch("trace_distance: qubit count mismatch");
  const auto eig = hermitian_eig(hermitian_part(a.to_density() - b.to_density()));
  double s = 0.0;
  for (double l : eig.eigenvalues) s += std::abs(l);
  return 0.5 * s;
}

}  // namespace qrck
