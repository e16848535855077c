#include "qrck/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qrck {

namespace {

inline double conj_of(double v) { return v; }
inline Complex conj_of(Complex v) { return std::conj(v); }
inline double real_of(double v) { return v; }
inline double real_of(Complex v) { return v.real(); }

template <typename T>
void require_same_shape(const DenseMatrix<T>& a, const DenseMatrix<T>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(what);
  }
}

// Cyclic Jacobi sweeps on a Hermitian (or real symmetric) matrix held in `a`.
// On return `a` is diagonal to working precision and `v` holds the rotations.
template <typename T>
void jacobi_diagonalize(DenseMatrix<T>& a, DenseMatrix<T>& v) {
  const std::size_t n = a.rows();
  double total = 0.0;
  for (const T& x : a.values()) total += std::norm(x);
  if (total == 0.0) return;

  for (int sweep = 0; sweep < tol::kJacobiMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off <= tol::kJacobiOffDiagonal * tol::kJacobiOffDiagonal * total) {
      return;
    }

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const double app = real_of(a(p, p));
        const double aqq = real_of(a(q, q));
        // Skip once the element is below the resolution of both diagonals.
        const double g = 100.0 * mag;
        if (sweep > 3 && std::abs(app) + g == std::abs(app) &&
            std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = T{};
          a(q, p) = T{};
          continue;
        }
        const T phase = apq / mag;
        const double theta = (aqq - app) / (2.0 * mag);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // G = D R with D = diag(1, conj(phase)) on (p, q).
        const T gpp = T(c);
        const T gpq = T(s);
        const T gqp = -s * conj_of(phase);
        const T gqq = c * conj_of(phase);

        for (std::size_t k = 0; k < n; ++k) {
          const T akp = a(k, p);
          const T akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const T apk = a(p, k);
          const T aqk = a(q, k);
          a(p, k) = conj_of(gpp) * apk + conj_of(gqp) * aqk;
          a(q, k) = conj_of(gpq) * apk + conj_of(gqq) * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const T vkp = v(k, p);
          const T vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
        a(p, q) = T{};
        a(q, p) = T{};
        a(p, p) = T(real_of(a(p, p)));
        a(q, q) = T(real_of(a(q, q)));
      }
    }
  }
}

template <typename T>
void sort_ascending(std::vector<double>& values, DenseMatrix<T>& vectors) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return values[i] < values[j];
  });
  std::vector<double> sorted(n);
  DenseMatrix<T> v(vectors.rows(), n);
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = values[order[k]];
    for (std::size_t r = 0; r < vectors.rows(); ++r) v(r, k) = vectors(r, order[k]);
  }
  values = std::move(sorted);
  vectors = std::move(v);
}

}  // namespace

template <typename T>
DenseMatrix<T>::DenseMatrix(std::initializer_list<std::initializer_list<T>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

template <typename T>
DenseMatrix<T>& DenseMatrix<T>::operator+=(const DenseMatrix& o) {
  require_same_shape(*this, o, "matrix sum shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

template <typename T>
DenseMatrix<T>& DenseMatrix<T>::operator-=(const DenseMatrix& o) {
  require_same_shape(*this, o, "matrix difference shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

template <typename T>
DenseMatrix<T> operator*(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product shape mismatch");
  DenseMatrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{}) continue;
      const T* bk = b.row(k).data();
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

template <typename T>
std::vector<T> operator*(const DenseMatrix<T>& a, std::span<const T> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector shape mismatch");
  std::vector<T> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T s{};
    const auto r = a.row(i);
    for (std::size_t k = 0; k < x.size(); ++k) s += r[k] * x[k];
    y[i] = s;
  }
  return y;
}

template <typename T>
DenseMatrix<T> kron(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  DenseMatrix<T> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const T aij = a(i, j);
      if (aij == T{}) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

template class DenseMatrix<double>;
template class DenseMatrix<Complex>;
template RealMatrix operator*(const RealMatrix&, const RealMatrix&);
template ComplexMatrix operator*(const ComplexMatrix&, const ComplexMatrix&);
template std::vector<double> operator*(const RealMatrix&, std::span<const double>);
template std::vector<Complex> operator*(const ComplexMatrix&, std::span<const Complex>);
template RealMatrix kron(const RealMatrix&, const RealMatrix&);
template ComplexMatrix kron(const ComplexMatrix&, const ComplexMatrix&);

std::vector<Complex> kron(std::span<const Complex> a, std::span<const Complex> b) {
  std::vector<Complex> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = a[i] * b[j];
  return out;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = std::conj(a(r, c));
  return t;
}

ComplexMatrix to_complex(const RealMatrix& a) {
  ComplexMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i];
  return out;
}

Complex trace(const ComplexMatrix& a) {
  if (!a.square()) throw DimensionMismatch("trace of a non-square matrix");
  Complex s{};
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& v : a.values()) s += std::norm(v);
  return std::sqrt(s);
}

double frobenius_norm(const RealMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double hermiticity_defect(const ComplexMatrix& a) {
  if (!a.square()) return INFINITY;
  double worst = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = r; c < a.cols(); ++c)
      worst = std::max(worst, std::abs(a(r, c) - std::conj(a(c, r))));
  return worst;
}

bool is_hermitian(const ComplexMatrix& a, double tolerance) {
  if (!a.square()) return false;
  double scale = 1.0;
  for (const auto& v : a.values()) scale = std::max(scale, std::abs(v));
  return hermiticity_defect(a) <= tolerance * scale;
}

ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  ComplexMatrix h(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      h(r, c) = 0.5 * (a(r, c) + std::conj(a(c, r)));
  return h;
}

ComplexMatrix outer(std::span<const Complex> a, std::span<const Complex> b) {
  ComplexMatrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
  return m;
}

Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw DimensionMismatch("inner product length mismatch");
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

EigenDecomposition hermitian_eig(const ComplexMatrix& h) {
  if (!h.square()) throw DimensionMismatch("eigendecomposition needs a square matrix");
  if (!is_hermitian(h, tol::kHermitianInput)) {
    throw NotHermitian("hermitian_eig: input is not Hermitian (defect " +
                       std::to_string(hermiticity_defect(h)) + ")");
  }
  ComplexMatrix a = hermitian_part(h);
  ComplexMatrix v = ComplexMatrix::identity(a.rows());
  jacobi_diagonalize(a, v);
  EigenDecomposition out;
  out.eigenvalues.resize(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out.eigenvalues[i] = a(i, i).real();
  sort_ascending(out.eigenvalues, v);
  out.eigenvectors = std::move(v);
  return out;
}

EigenDecomposition symmetric_eig(const RealMatrix& s) {
  if (!s.square()) throw DimensionMismatch("eigendecomposition needs a square matrix");
  RealMatrix a(s.rows(), s.cols());
  double scale = 1.0;
  for (double x : s.values()) scale = std::max(scale, std::abs(x));
  for (std::size_t r = 0; r < s.rows(); ++r)
    for (std::size_t c = 0; c < s.cols(); ++c) {
      if (std::abs(s(r, c) - s(c, r)) > tol::kHermitianInput * scale) {
        throw NotHermitian("symmetric_eig: input is not symmetric");
      }
      a(r, c) = 0.5 * (s(r, c) + s(c, r));
    }
  RealMatrix v = RealMatrix::identity(a.rows());
  jacobi_diagonalize(a, v);
  EigenDecomposition out;
  out.eigenvalues.resize(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out.eigenvalues[i] = a(i, i);
  sort_ascending(out.eigenvalues, v);
  out.eigenvectors = to_complex(v);
  return out;
}

ComplexMatrix hermitian_expm(const ComplexMatrix& h, double t) {
  const EigenDecomposition eig = hermitian_eig(h);
  const ComplexMatrix& v = eig.eigenvectors;
  const std::size_t n = v.rows();
  ComplexMatrix scaled(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex phase = std::exp(Complex(0.0, -t * eig.eigenvalues[k]));
    for (std::size_t r = 0; r < n; ++r) scaled(r, k) = v(r, k) * phase;
  }
  return scaled * adjoint(v);
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += a[i] * b[i];
    acc[1] += a[i + 1] * b[i + 1];
    acc[2] += a[i + 2] * b[i + 2];
    acc[3] += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

CholeskyFactor::CholeskyFactor(const RealMatrix& a) : lower_(a.rows(), a.cols()) {
  if (!a.square()) throw DimensionMismatch("Cholesky needs a square matrix");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = lower_.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto lj = lower_.row(j);
      const double s = a(i, j) - dot(li.first(j), lj.first(j));
      if (i == j) {
        if (!(s > 0.0)) {
          throw NotPositiveDefinite("non-positive pivot " + std::to_string(s) +
                                    " at row " + std::to_string(i));
        }
        li[i] = std::sqrt(s);
      } else {
        li[j] = s / lj[j];
      }
    }
  }
}

RealMatrix CholeskyFactor::solve(const RealMatrix& b) const {
  const std::size_t n = lower_.rows();
  if (b.rows() != n) throw DimensionMismatch("right-hand side row count mismatch");
  RealMatrix x(n, b.cols());
  std::vector<double> y(n);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto li = lower_.row(i);
      y[i] = (b(i, c) - dot(li.first(i), std::span<const double>(y).first(i))) / li[i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * y[k];
      y[ii] = s / lower_(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) x(i, c) = y[i];
  }
  return x;
}

RealMatrix spd_solve(const RealMatrix& a, const RealMatrix& b) {
  return CholeskyFactor(a).solve(b);
}

RealMatrix symmetric_pinv(const RealMatrix& s, double cutoff) {
  const EigenDecomposition eig = symmetric_eig(s);
  const std::size_t n = s.rows();
  double largest = 0.0;
  for (double l : eig.eigenvalues) largest = std::max(largest, std::abs(l));
  RealMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = eig.eigenvalues[k];
    if (std::abs(l) <= cutoff * largest || l == 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) {
      const double vr = eig.eigenvectors(r, k).real() / l;
      for (std::size_t c = 0; c < n; ++c) out(r, c) += vr * eig.eigenvectors(c, k).real();
    }
  }
  return out;
}

double hs_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.square() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("hs_inner: operand dimensions differ");
  }
  const std::size_t n = a.rows();
  Complex s{};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, i);
  const double scale = std::max(1.0, frobenius_norm(a) * frobenius_norm(b));
  if (std::abs(s.imag()) > tol::kNonReal * scale) {
    throw NonRealResult("hs_inner: imaginary part " + std::to_string(s.imag()));
  }
  return s.real();
}

}  // namespace qrck

namespace qrck {

void walsh_hadamard(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0) throw DimensionMismatch("walsh_hadamard: length must be a power of two");
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

}  // namespace qrck
