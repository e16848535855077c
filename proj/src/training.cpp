#include "qrck/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "qrck/parallel.hpp"

namespace qrck {

namespace {

void require_same_qubits(std::span<const QuantumState> states) {
  for (const auto& s : states) {
    if (s.n_qubits() != states.front().n_qubits()) {
      throw DimensionMismatch("states have differing qubit counts");
    }
  }
}

// Dense Phi^T Phi with a fixed summation order.
RealMatrix column_gram(const RealMatrix& phi, unsigned threads) {
  const RealMatrix t = phi.transpose();
  const std::size_t m = t.rows();
  RealMatrix g(m, m);
  parallel_for(
      m,
      [&](std::size_t i) {
        for (std::size_t j = i; j < m; ++j) g(i, j) = dot(t.row(i), t.row(j));
      },
      threads);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

RealMatrix row_gram(const RealMatrix& phi, unsigned threads) {
  const std::size_t p = phi.rows();
  RealMatrix g(p, p);
  parallel_for(
      p,
      [&](std::size_t i) {
        for (std::size_t j = i; j < p; ++j) g(i, j) = dot(phi.row(i), phi.row(j));
      },
      threads);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

RealMatrix transpose_times(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("row counts differ");
  RealMatrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double v = a(r, i);
      if (v == 0.0) continue;
      for (std::size_t c = 0; c < b.cols(); ++c) out(i, c) += v * b(r, c);
    }
  return out;
}

void require_ridge(double ridge) {
  if (!(ridge > 0.0) || !std::isfinite(ridge)) throw ValidationError("ridge", "must be a positive finite number");
}

}  // namespace

std::vector<double> hermitian_coordinates(const ComplexMatrix& a) {
  const std::size_t d = a.rows();
  std::vector<double> v;
  v.reserve(d * d);
  for (std::size_t i = 0; i < d; ++i) v.push_back(a(i, i).real());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      v.push_back(std::numbers::sqrt2 * a(i, j).real());
      v.push_back(std::numbers::sqrt2 * a(i, j).imag());
    }
  return v;
}

ComplexMatrix from_hermitian_coordinates(std::span<const double> v, std::size_t d) {
  if (v.size() != d * d) throw DimensionMismatch("coordinate vector length must be dimension squared");
  ComplexMatrix a(d, d);
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) a(i, i) = v[k++];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const Complex z(v[k] / std::numbers::sqrt2, v[k + 1] / std::numbers::sqrt2);
      k += 2;
      a(i, j) = z;
      a(j, i) = std::conj(z);
    }
  return a;
}

double state_overlap(const QuantumState& a, const QuantumState& b) {
  if (a.n_qubits() != b.n_qubits()) throw DimensionMismatch("state_overlap: qubit count mismatch");
  if (a.is_pure() && b.is_pure()) return std::norm(inner(a.amplitudes(), b.amplitudes()));
  if (a.is_pure()) return expectation(a, b.density_matrix());
  if (b.is_pure()) return expectation(b, a.density_matrix());
  return hs_inner(a.density_matrix(), b.density_matrix());
}

RealMatrix gram(std::span<const QuantumState> states, unsigned threads) {
  const std::size_t p = states.size();
  RealMatrix k(p, p);
  if (p == 0) return k;
  require_same_qubits(states);
  const bool all_pure = std::all_of(states.begin(), states.end(), [](const auto& s) { return s.is_pure(); });
  if (all_pure) {
    parallel_for(
        p,
        [&](std::size_t i) {
          for (std::size_t j = i; j < p; ++j) k(i, j) = std::norm(inner(states[i].amplitudes(), states[j].amplitudes()));
        },
        threads);
  } else {
    std::vector<std::vector<double>> coords(p);
    parallel_for(p, [&](std::size_t i) { coords[i] = hermitian_coordinates(states[i].to_density()); }, threads);
    parallel_for(
        p,
        [&](std::size_t i) {
          for (std::size_t j = i; j < p; ++j) k(i, j) = dot(coords[i], coords[j]);
        },
        threads);
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) k(i, j) = k(j, i);
  return k;
}

RealMatrix gram(std::span<const QuantumState> a, std::span<const QuantumState> b, unsigned threads) {
  RealMatrix k(a.size(), b.size());
  parallel_for(
      a.size(),
      [&](std::size_t i) {
        for (std::size_t j = 0; j < b.size(); ++j) k(i, j) = state_overlap(a[i], b[j]);
      },
      threads);
  return k;
}

DualSolution dual_solve(const RealMatrix& k, const RealMatrix& y, double ridge) {
  require_ridge(ridge);
  if (!k.square()) throw DimensionMismatch("dual_solve: Gram matrix must be square");
  if (y.rows() != k.rows()) throw DimensionMismatch("dual_solve: target rows must match the Gram size");
  RealMatrix a = k;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += ridge;
  return {CholeskyFactor(a).solve(y), ridge};
}

OptimalObservableSet optimal_observable(std::span<const QuantumState> states, const DualSolution& solution) {
  if (states.size() != solution.alpha.rows()) {
    throw DimensionMismatch("optimal_observable: state count differs from alpha rows");
  }
  if (states.empty()) throw DimensionMismatch("optimal_observable: no training states");
  require_same_qubits(states);
  const std::size_t d = states.front().dimension();
  const std::size_t channels = solution.alpha.cols();
  OptimalObservableSet out(channels, ComplexMatrix(d, d));
  for (std::size_t j = 0; j < states.size(); ++j) {
    const QuantumState& s = states[j];
    for (std::size_t c = 0; c < channels; ++c) {
      const double a = solution.alpha(j, c);
      if (a == 0.0) continue;
      ComplexMatrix& m = out[c];
      if (s.is_pure()) {
        const auto& psi = s.amplitudes();
        for (std::size_t r = 0; r < d; ++r) {
          const Complex pr = a * psi[r];
          for (std::size_t q = 0; q < d; ++q) m(r, q) += pr * std::conj(psi[q]);
        }
      } else {
        const ComplexMatrix& rho = s.density_matrix();
        for (std::size_t r = 0; r < d; ++r)
          for (std::size_t q = 0; q < d; ++q) m(r, q) += a * rho(r, q);
      }
    }
  }
  return out;
}

OptimalObservableSet optimal_observable_operator_space(std::span<const QuantumState> states, const RealMatrix& y,
                                                       double ridge, unsigned threads) {
  require_ridge(ridge);
  if (states.size() != y.rows()) throw DimensionMismatch("optimal_observable: state count differs from target rows");
  if (states.empty()) throw DimensionMismatch("optimal_observable: no training states");
  require_same_qubits(states);
  const std::size_t d = states.front().dimension();
  RealMatrix phi(states.size(), d * d);
  parallel_for(
      states.size(),
      [&](std::size_t i) {
        const auto v = hermitian_coordinates(states[i].to_density());
        std::copy(v.begin(), v.end(), phi.row(i).begin());
      },
      threads);
  RealMatrix a = column_gram(phi, threads);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += ridge;
  const RealMatrix m = CholeskyFactor(a).solve(transpose_times(phi, y));
  OptimalObservableSet out;
  for (std::size_t c = 0; c < y.cols(); ++c) out.push_back(from_hermitian_coordinates(m.column(c), d));
  return out;
}

OptimalObservableSet fit_optimal_observable(std::span<const QuantumState> states, const RealMatrix& y, double ridge,
                                            KernelSolver solver, unsigned threads) {
  if (states.empty()) throw DimensionMismatch("fit_optimal_observable: no training states");
  const std::size_t d = states.front().dimension();
  if (solver == KernelSolver::Auto) solver = states.size() > d * d ? KernelSolver::OperatorSpace : KernelSolver::Dual;
  if (solver == KernelSolver::OperatorSpace) return optimal_observable_operator_space(states, y, ridge, threads);
  return optimal_observable(states, dual_solve(gram(states, threads), y, ridge));
}

// --------------------------------------------------------------- Measurements

double orthonormal_pauli_scale(unsigned n_qubits) { return std::pow(2.0, -0.5 * n_qubits); }

MeasurementSet MeasurementSet::paulis(unsigned n_qubits, std::vector<std::uint64_t> codes) {
  MeasurementSet set;
  set.n_qubits = n_qubits;
  set.scale = orthonormal_pauli_scale(n_qubits);
  set.groups.push_back({MeasurementGroup::Kind::Pauli, {}, std::move(codes)});
  set.validate();
  return set;
}

MeasurementSet MeasurementSet::complete_pauli(unsigned n_qubits) {
  std::vector<std::uint64_t> codes(pauli_count(n_qubits));
  for (std::uint64_t c = 0; c < codes.size(); ++c) codes[c] = c;
  return paulis(n_qubits, std::move(codes));
}

std::size_t MeasurementSet::size() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.codes.size();
  return n;
}

void MeasurementSet::validate() const {
  const std::size_t d = std::size_t{1} << n_qubits;
  for (const auto& g : groups) {
    const std::uint64_t limit = g.kind == MeasurementGroup::Kind::Pauli ? pauli_count(n_qubits) : d;
    for (auto c : g.codes)
      if (c >= limit) throw RangeViolation("measurement code " + std::to_string(c) + " out of range");
    if (g.kind != MeasurementGroup::Kind::Pauli && !g.rotation.empty()) {
      if (g.rotation.rows() != d || !g.rotation.square()) {
        throw DimensionMismatch("measurement rotation has the wrong dimension");
      }
    }
  }
}

std::vector<double> basis_probabilities(const QuantumState& rho, const ComplexMatrix& v) {
  const std::size_t d = rho.dimension();
  std::vector<double> p(d);
  if (v.empty()) {
    if (rho.is_pure()) {
      for (std::size_t b = 0; b < d; ++b) p[b] = std::norm(rho.amplitudes()[b]);
    } else {
      for (std::size_t b = 0; b < d; ++b) p[b] = rho.density_matrix()(b, b).real();
    }
    return p;
  }
  const ComplexMatrix vh = adjoint(v);
  if (rho.is_pure()) {
    const auto rotated = vh * std::span<const Complex>(rho.amplitudes());
    for (std::size_t b = 0; b < d; ++b) p[b] = std::norm(rotated[b]);
    return p;
  }
  // diag(V^dagger rho V)_b = sum_{ij} conj(V_ib) rho_ij V_jb
  const ComplexMatrix rv = rho.density_matrix() * v;
  for (std::size_t b = 0; b < d; ++b) {
    Complex s{};
    for (std::size_t i = 0; i < d; ++i) s += vh(b, i) * rv(i, b);
    p[b] = s.real();
  }
  return p;
}

std::vector<double> measure(const MeasurementSet& set, const QuantumState& rho) {
  if (rho.n_qubits() != set.n_qubits) throw DimensionMismatch("measure: state and measurement set sizes differ");
  std::vector<double> out;
  out.reserve(set.size());
  for (const auto& g : set.groups) {
    if (g.kind == MeasurementGroup::Kind::Pauli) {
      for (auto c : g.codes) out.push_back(set.scale * expectation(rho, PauliString(set.n_qubits, c)));
    } else if (g.kind == MeasurementGroup::Kind::ZString) {
      std::vector<double> p = basis_probabilities(rho, g.rotation);
      walsh_hadamard(p);
      for (auto s : g.codes) out.push_back(set.scale * p[s]);
    } else {
      const std::vector<double> p = basis_probabilities(rho, g.rotation);
      for (auto b : g.codes) out.push_back(p[b]);
    }
  }
  return out;
}

RealMatrix feature_matrix(std::span<const QuantumState> states, const MeasurementSet& set, unsigned threads) {
  set.validate();
  RealMatrix phi(states.size(), set.size());
  parallel_for(
      states.size(),
      [&](std::size_t i) {
        const auto row = measure(set, states[i]);
        std::copy(row.begin(), row.end(), phi.row(i).begin());
      },
      threads);
  return phi;
}

RealMatrix feature_matrix(std::span<const QuantumState> states, std::span<const ComplexMatrix> operators,
                          unsigned threads) {
  RealMatrix phi(states.size(), operators.size());
  parallel_for(
      states.size(),
      [&](std::size_t i) {
        for (std::size_t k = 0; k < operators.size(); ++k) phi(i, k) = expectation(states[i], operators[k]);
      },
      threads);
  return phi;
}

// ------------------------------------------------------------------ Monomials

std::size_t monomial_count(std::size_t m, unsigned p_max) {
  // C(m + p, p) - 1, accumulated exactly.
  std::size_t c = 1;
  for (unsigned k = 1; k <= p_max; ++k) c = c * (m + k) / k;
  return c - 1;
}

std::vector<double> monomial_expand(std::span<const double> v, unsigned p_max) {
  if (p_max == 0) throw ValidationError("p_max", "must be at least 1");
  const std::size_t m = v.size();
  std::vector<double> out(v.begin(), v.end());
  if (m == 0) return out;
  out.reserve(monomial_count(m, p_max));
  for (unsigned degree = 2; degree <= p_max; ++degree) {
    std::vector<std::size_t> idx(degree, 0);
    while (true) {
      double prod = 1.0;
      for (auto i : idx) prod *= v[i];
      out.push_back(prod);
      std::size_t k = degree;
      while (k > 0 && idx[k - 1] == m - 1) --k;
      if (k == 0) break;
      const std::size_t next = idx[k - 1] + 1;
      for (std::size_t j = k - 1; j < degree; ++j) idx[j] = next;
    }
  }
  return out;
}

RealMatrix monomial_expand_rows(const RealMatrix& phi, unsigned p_max) {
  if (p_max == 1) return phi;
  RealMatrix out(phi.rows(), monomial_count(phi.cols(), p_max));
  for (std::size_t r = 0; r < phi.rows(); ++r) {
    const auto row = monomial_expand(phi.row(r), p_max);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

// --------------------------------------------------------------------- Primal

RealMatrix primal_weights(const RealMatrix& phi, const RealMatrix& y, double ridge) {
  require_ridge(ridge);
  if (phi.rows() != y.rows()) throw DimensionMismatch("primal: feature and target rows differ");
  const unsigned threads = default_threads();
  if (phi.rows() >= phi.cols()) {
    RealMatrix a = column_gram(phi, threads);
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += ridge;
    return CholeskyFactor(a).solve(transpose_times(phi, y));
  }
  RealMatrix a = row_gram(phi, threads);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += ridge;
  return transpose_times(phi, CholeskyFactor(a).solve(y));
}

RealMatrix PrimalSolution::weight_matrix() const {
  if (channels.empty()) return {};
  RealMatrix w(channels.front().weights.size(), channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].features != channels.front().features) {
      throw DimensionMismatch("weight_matrix: channels use different features");
    }
    w.set_column(c, channels[c].weights);
  }
  return w;
}

namespace {

RealMatrix select_columns(const RealMatrix& phi, std::span<const std::size_t> cols) {
  RealMatrix out(phi.rows(), cols.size());
  for (std::size_t r = 0; r < phi.rows(); ++r)
    for (std::size_t k = 0; k < cols.size(); ++k) out(r, k) = phi(r, cols[k]);
  return out;
}

}  // namespace

PrimalSolution primal_solve(const RealMatrix& features, const MeasurementSet& set, const RealMatrix& y, double ridge,
                            unsigned p_max, const std::vector<std::vector<std::size_t>>& channel_features) {
  if (features.cols() != set.size()) throw DimensionMismatch("primal_solve: feature count differs from set size");
  const std::size_t channels = y.cols();
  std::vector<std::vector<std::size_t>> use = channel_features;
  if (use.empty()) {
    std::vector<std::size_t> all(features.cols());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    use.assign(channels, all);
  }
  if (use.size() != channels) throw DimensionMismatch("primal_solve: one feature list per channel required");
  for (const auto& list : use) {
    if (list.empty()) throw ValidationError("primal_solve", "a channel has no features");
    for (auto k : list)
      if (k >= features.cols()) throw RangeViolation("primal_solve: feature index out of range");
  }

  PrimalSolution sol{set, p_max, ridge, std::vector<ChannelReadout>(channels)};
  // Channels sharing a feature list are solved together.
  std::vector<bool> done(channels, false);
  for (std::size_t c = 0; c < channels; ++c) {
    if (done[c]) continue;
    std::vector<std::size_t> group;
    for (std::size_t d = c; d < channels; ++d)
      if (!done[d] && use[d] == use[c]) group.push_back(d);
    RealMatrix yg(y.rows(), group.size());
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t g = 0; g < group.size(); ++g) yg(r, g) = y(r, group[g]);
    const RealMatrix phi = monomial_expand_rows(select_columns(features, use[c]), p_max);
    const RealMatrix w = primal_weights(phi, yg, ridge);
    for (std::size_t g = 0; g < group.size(); ++g) {
      sol.channels[group[g]] = {use[c], w.column(g)};
      done[group[g]] = true;
    }
  }
  return sol;
}

PrimalSolution primal_solve(std::span<const QuantumState> states, const MeasurementSet& set, const RealMatrix& y,
                            double ridge, unsigned p_max,
                            const std::vector<std::vector<std::size_t>>& channel_features, unsigned threads) {
  if (states.size() != y.rows()) throw DimensionMismatch("primal_solve: state count differs from target rows");
  return primal_solve(feature_matrix(states, set, threads), set, y, ridge, p_max, channel_features);
}

RealMatrix dual_to_primal_weights(const DualSolution& solution, std::span<const QuantumState> states,
                                  std::span<const ComplexMatrix> operators, bool orthonormal) {
  if (states.size() != solution.alpha.rows()) throw DimensionMismatch("dual_to_primal_weights: state count");
  const std::size_t m = operators.size();
  const RealMatrix phi = feature_matrix(states, operators);
  const RealMatrix b = transpose_times(phi, solution.alpha);  // m x C
  RealMatrix g(m, m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = k; l < m; ++l) g(k, l) = g(l, k) = hs_inner(operators[k], operators[l]);
  if (orthonormal) {
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = k + 1; l < m; ++l)
        if (std::abs(g(k, l)) > tol::kOrthogonal) {
          throw NotOrthogonal("operators " + std::to_string(k) + " and " + std::to_string(l) +
                              " overlap: tr(M_k M_l) = " + std::to_string(g(k, l)));
        }
    RealMatrix w = b;
    for (std::size_t k = 0; k < m; ++k) {
      if (g(k, k) <= 0.0) throw NotOrthogonal("operator " + std::to_string(k) + " has zero norm");
      for (std::size_t c = 0; c < w.cols(); ++c) w(k, c) /= g(k, k);
    }
    return w;
  }
  return symmetric_pinv(g) * b;
}

// ----------------------------------------------------------------- Prediction

std::vector<double> predict_from_features(const PrimalSolution& model, std::span<const double> features) {
  std::vector<double> out(model.channels.size(), 0.0);
  std::vector<double> sub;
  for (std::size_t c = 0; c < out.size(); ++c) {
    const ChannelReadout& ch = model.channels[c];
    sub.resize(ch.features.size());
    for (std::size_t k = 0; k < sub.size(); ++k) {
      if (ch.features[k] >= features.size()) throw DimensionMismatch("predict: feature vector too short");
      sub[k] = features[ch.features[k]];
    }
    const auto r = monomial_expand(sub, model.monomial_order);
    if (r.size() != ch.weights.size()) throw DimensionMismatch("predict: readout length differs from weights");
    out[c] = dot(r, ch.weights);
  }
  return out;
}

std::vector<double> predict(const PrimalSolution& model, const QuantumState& x) {
  return predict_from_features(model, measure(model.operator_set, x));
}

std::vector<double> predict(const DualSolution& model, std::span<const QuantumState> training_states,
                            const QuantumState& x) {
  if (training_states.size() != model.alpha.rows()) throw DimensionMismatch("predict: training state count");
  std::vector<double> out(model.alpha.cols(), 0.0);
  for (std::size_t j = 0; j < training_states.size(); ++j) {
    const double kx = state_overlap(training_states[j], x);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += model.alpha(j, c) * kx;
  }
  return out;
}

std::vector<double> predict(const OptimalObservableSet& observables, const QuantumState& x) {
  std::vector<double> out;
  out.reserve(observables.size());
  for (const auto& m : observables) out.push_back(expectation(x, m));
  return out;
}

std::size_t classify(std::span<const double> scores) {
  if (scores.empty()) throw DimensionMismatch("classify: empty score vector");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double training_loss(const RealMatrix& phi, const RealMatrix& w, const RealMatrix& y) {
  const RealMatrix fit = phi * w;
  double s = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const double r = fit.values()[i] - y.values()[i];
    s += r * r;
  }
  return s;
}

}  // namespace qrck
