#pragma once

#include <cmath>
#include <vector>

#include "qrck/numerics.hpp"
#include "qrck/quantum.hpp"
#include "qrck/random.hpp"

namespace qrck::testing {

inline ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = {rng.normal(), rng.normal()};
  return m;
}

inline ComplexMatrix random_hermitian(std::size_t d, Rng& rng) {
  const ComplexMatrix a = random_matrix(d, d, rng);
  return hermitian_part(a);
}

inline std::vector<Complex> random_vector(std::size_t d, Rng& rng) {
  std::vector<Complex> v(d);
  double norm = 0.0;
  for (auto& x : v) {
    x = {rng.normal(), rng.normal()};
    norm += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(norm);
  return v;
}

inline QuantumState random_pure_state(unsigned n_qubits, Rng& rng) {
  return QuantumState::pure(random_vector(std::size_t{1} << n_qubits, rng));
}

/// Normalized A A^dagger for a random A: a full-rank mixed state.
inline QuantumState random_mixed_state(unsigned n_qubits, Rng& rng) {
  const std::size_t d = std::size_t{1} << n_qubits;
  const ComplexMatrix a = random_matrix(d, d, rng);
  ComplexMatrix rho = a * adjoint(a);
  rho *= Complex(1.0 / trace(rho).real());
  return QuantumState::mixed(hermitian_part(rho));
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace qrck::testing
