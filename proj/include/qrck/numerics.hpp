#pragma once

// Dense linear algebra for operators on at most a few thousand dimensions.
//
// Storage is row-major. All routines are pure functions of their arguments.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "qrck/errors.hpp"

namespace qrck {

using Complex = std::complex<double>;

namespace tol {
// Single configuration point for the numerical tolerances used across the
// library. Hermiticity checks are scaled by max(1, max|A_ij|).
inline constexpr double kHermitian = 1e-12;
inline constexpr double kHermitianInput = 1e-10;
inline constexpr double kNonReal = 1e-10;
inline constexpr double kOrthogonal = 1e-10;
inline constexpr double kPseudoInverseCutoff = 1e-10;
inline constexpr double kJacobiOffDiagonal = 1e-15;
inline constexpr int kJacobiMaxSweeps = 100;
}  // namespace tol

template <typename T>
class DenseMatrix {
 public:
  using value_type = T;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionMismatch("matrix entry count does not match shape");
    }
  }
  DenseMatrix(std::initializer_list<std::initializer_list<T>> rows);

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }
  static DenseMatrix diagonal(std::span<const T> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<T> column(std::size_t c) const {
    std::vector<T> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }
  void set_column(std::size_t c, std::span<const T> v) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  const std::vector<T>& values() const { return data_; }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  DenseMatrix& operator+=(const DenseMatrix& o);
  DenseMatrix& operator-=(const DenseMatrix& o);
  DenseMatrix& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  bool operator==(const DenseMatrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = DenseMatrix<double>;
using ComplexMatrix = DenseMatrix<Complex>;

template <typename T>
DenseMatrix<T> operator+(DenseMatrix<T> a, const DenseMatrix<T>& b) {
  return a += b;
}
template <typename T>
DenseMatrix<T> operator-(DenseMatrix<T> a, const DenseMatrix<T>& b) {
  return a -= b;
}
template <typename T>
DenseMatrix<T> operator*(DenseMatrix<T> a, T s) {
  return a *= s;
}
template <typename T>
DenseMatrix<T> operator*(T s, DenseMatrix<T> a) {
  return a *= s;
}

/// Matrix product.
template <typename T>
DenseMatrix<T> operator*(const DenseMatrix<T>& a, const DenseMatrix<T>& b);

/// Matrix-vector product.
template <typename T>
std::vector<T> operator*(const DenseMatrix<T>& a, std::span<const T> x);

ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix to_complex(const RealMatrix& a);

Complex trace(const ComplexMatrix& a);
double frobenius_norm(const ComplexMatrix& a);
double frobenius_norm(const RealMatrix& a);
/// Largest entrywise |A - A^dagger|.
double hermiticity_defect(const ComplexMatrix& a);
/// Hermitian within `tolerance * max(1, max|A_ij|)`.
bool is_hermitian(const ComplexMatrix& a, double tolerance = tol::kHermitian);
ComplexMatrix hermitian_part(const ComplexMatrix& a);

ComplexMatrix outer(std::span<const Complex> a, std::span<const Complex> b);
Complex inner(std::span<const Complex> a, std::span<const Complex> b);

/// Kronecker product. With qubit 0 as the most significant index, kron(a, b)
/// places `a` on the leading qubits.
template <typename T>
DenseMatrix<T> kron(const DenseMatrix<T>& a, const DenseMatrix<T>& b);
std::vector<Complex> kron(std::span<const Complex> a,
                          std::span<const Complex> b);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // columns, unitary
};

/// Cyclic Jacobi eigensolver for Hermitian matrices. The input is checked
/// against tol::kHermitianInput and symmetrized before iterating.
EigenDecomposition hermitian_eig(const ComplexMatrix& h);
EigenDecomposition symmetric_eig(const RealMatrix& s);

/// exp(-i t h).
ComplexMatrix hermitian_expm(const ComplexMatrix& h, double t);

/// Solves a X = b for symmetric positive-definite a by unpivoted Cholesky.
RealMatrix spd_solve(const RealMatrix& a, const RealMatrix& b);

/// Reusable Cholesky factor for repeated solves against the same matrix.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const RealMatrix& a);
  RealMatrix solve(const RealMatrix& b) const;
  std::size_t dimension() const { return lower_.rows(); }

 private:
  RealMatrix lower_;
};

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its spectrum;
/// eigenvalues below cutoff * max|eigenvalue| are treated as zero.
RealMatrix symmetric_pinv(const RealMatrix& s,
                          double cutoff = tol::kPseudoInverseCutoff);

/// Hilbert-Schmidt inner product tr(a b) of Hermitian operators.
double hs_inner(const ComplexMatrix& a, const ComplexMatrix& b);

/// In-place unnormalized Walsh-Hadamard transform,
/// v_s <- sum_b (-1)^{popcount(b & s)} v_b. The length must be a power of two.
void walsh_hadamard(std::span<double> v);

/// Plain dot product with a fixed summation order.
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace qrck
