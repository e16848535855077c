#include "qrck/decompose.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <iomanip>
#include <string>

#include "qrck/parallel.hpp"

namespace qrck {

namespace {

void require_hermitian(const ComplexMatrix& m, const char* who) {
  if (!m.square() || m.rows() == 0 || (m.rows() & (m.rows() - 1)) != 0) {
    throw DimensionMismatch(std::string(who) + ": operator must be square with power-of-two size");
  }
  if (!is_hermitian(m, tol::kHermitianInput)) {
    throw NotHermitian(std::string(who) + ": operator is not Hermitian (defect " +
                       std::to_string(hermiticity_defect(m)) + ")");
  }
}

unsigned qubits_of(std::size_t d) { return static_cast<unsigned>(std::countr_zero(d)); }

// Identity first, then descending score, then lower code, then lower channel.
void sort_ranked(std::vector<RankedOperator>& v, bool identity_first) {
  std::stable_sort(v.begin(), v.end(), [identity_first](const RankedOperator& a, const RankedOperator& b) {
    if (identity_first && (a.code == 0) != (b.code == 0)) return a.code == 0;
    if (a.score != b.score) return a.score > b.score;
    if (a.code != b.code) return a.code < b.code;
    return a.channel < b.channel;
  });
}

template <typename Coefficients>
OperatorSubset rank_generic(std::size_t n_channels, std::size_t n_ops, Coefficients coef, bool identity_first,
                            const RankOptions& options, const std::function<bool(std::uint64_t)>& admit) {
  OperatorSubset out;
  out.scope = options.scope;
  for (std::uint64_t k = 0; k < n_ops; ++k) {
    if (!admit(k)) continue;
    if (options.scope == RankScope::Joint) {
      double s = 0.0;
      for (std::size_t c = 0; c < n_channels; ++c) s += coef(c, k) * coef(c, k);
      s = std::sqrt(s);
      if (s > 0.0 || options.keep_zero_scores) out.selection.push_back({0, k, s});
    } else {
      for (std::size_t c = 0; c < n_channels; ++c) {
        const double s = std::abs(coef(c, k));
        if (s > 0.0 || options.keep_zero_scores) out.selection.push_back({c, k, s});
      }
    }
  }
  sort_ranked(out.selection, identity_first);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------- Pauli

ComplexMatrix PauliDecomposition::reconstruct() const {
  const std::size_t d = std::size_t{1} << n_qubits;
  ComplexMatrix m(d, d);
  for (std::uint64_t k = 0; k < coefficients.size(); ++k)
    if (coefficients[k] != 0.0) add_pauli(m, PauliString(n_qubits, k), coefficients[k]);
  return m;
}

PauliDecomposition pauli_decompose(const ComplexMatrix& m_star, std::size_t channel, unsigned threads) {
  require_hermitian(m_star, "pauli_decompose");
  const unsigned n = qubits_of(m_star.rows());
  const double norm = 1.0 / static_cast<double>(m_star.rows());
  const double scale = std::max(1.0, frobenius_norm(m_star));
  PauliDecomposition out{n, std::vector<double>(pauli_count(n)), channel};
  std::vector<double> residue(out.coefficients.size());
  parallel_for(
      out.coefficients.size(),
      [&](std::size_t k) {
        const Complex c = norm * pauli_trace(PauliString(n, k), m_star);
        out.coefficients[k] = c.real();
        residue[k] = std::abs(c.imag());
      },
      threads);
  for (std::size_t k = 0; k < residue.size(); ++k) {
    if (residue[k] > tol::kNonReal * scale) {
      throw NonRealResult("pauli_decompose: coefficient of " + PauliString(n, k).label() +
                          " has imaginary part " + std::to_string(residue[k]));
    }
  }
  return out;
}

// ------------------------------------------------------------------- Spectral

std::vector<double> spectrum_to_z_coefficients(std::span<const double> eigenvalues) {
  std::vector<double> beta(eigenvalues.begin(), eigenvalues.end());
  walsh_hadamard(beta);
  const double norm = 1.0 / static_cast<double>(beta.size());
  for (auto& b : beta) b *= norm;
  return beta;
}

std::vector<double> z_coefficients_to_spectrum(std::span<const double> beta) {
  std::vector<double> lambda(beta.begin(), beta.end());
  walsh_hadamard(lambda);
  return lambda;
}

SpectralDecomposition diagonalize(const ComplexMatrix& m_star, std::size_t channel) {
  require_hermitian(m_star, "diagonalize");
  const std::size_t d = m_star.rows();
  const EigenDecomposition eig = hermitian_eig(m_star);
  SpectralDecomposition out;
  out.n_qubits = qubits_of(d);
  out.channel = channel;
  out.eigenvalues.assign(eig.eigenvalues.rbegin(), eig.eigenvalues.rend());
  out.v = ComplexMatrix(d, d);
  for (std::size_t b = 0; b < d; ++b)
    for (std::size_t r = 0; r < d; ++r) out.v(r, b) = eig.eigenvectors(r, d - 1 - b);
  out.z_coefficients = spectrum_to_z_coefficients(out.eigenvalues);

  ComplexMatrix lambda(d, d);
  for (std::size_t b = 0; b < d; ++b) lambda(b, b) = out.eigenvalues[b];
  const double defect = frobenius_norm(out.v * lambda * adjoint(out.v) - m_star);
  if (defect > 1e-8 * std::max(1.0, frobenius_norm(m_star))) {
    throw Error("diagonalize: reconstruction defect " + std::to_string(defect));
  }
  return out;
}

double spectral_expectation(const SpectralDecomposition& s, const QuantumState& rho) {
  const std::vector<double> p = basis_probabilities(rho, s.v);
  return dot(p, s.eigenvalues);
}

// -------------------------------------------------------------------- Ranking

OperatorSubset OperatorSubset::prefix(std::size_t k) const {
  OperatorSubset out = *this;
  out.selection.resize(std::min(k, selection.size()));
  return out;
}

OperatorSubset rank_operators(std::span<const PauliDecomposition> decomps, const RankOptions& options) {
  if (decomps.empty()) throw DimensionMismatch("rank_operators: no decompositions");
  const unsigned n = decomps.front().n_qubits;
  for (const auto& d : decomps) {
    if (d.n_qubits != n || d.coefficients.size() != pauli_count(n)) {
      throw DimensionMismatch("rank_operators: decompositions differ in qubit count");
    }
  }
  auto coef = [&](std::size_t c, std::uint64_t k) { return decomps[c].coefficients[k]; };
  auto admit = [&](std::uint64_t k) {
    return !options.max_weight || PauliString(n, k).weight() <= *options.max_weight;
  };
  OperatorSubset out = rank_generic(decomps.size(), pauli_count(n), coef, true, options, admit);
  out.mode = RankMode::Pauli;
  out.n_qubits = n;
  return out;
}

OperatorSubset rank_operators(std::span<const SpectralDecomposition> decomps, RankMode mode,
                              const RankOptions& options) {
  if (decomps.empty()) throw DimensionMismatch("rank_operators: no decompositions");
  if (mode == RankMode::Pauli) throw ValidationError("rank_operators", "spectral ranking needs ZString or Eigenvalue mode");
  const unsigned n = decomps.front().n_qubits;
  for (const auto& d : decomps)
    if (d.n_qubits != n) throw DimensionMismatch("rank_operators: decompositions differ in qubit count");
  const bool by_beta = mode == RankMode::ZString;
  auto coef = [&](std::size_t c, std::uint64_t k) {
    return by_beta ? decomps[c].z_coefficients[k] : decomps[c].eigenvalues[k];
  };
  auto admit = [](std::uint64_t) { return true; };
  OperatorSubset out = rank_generic(decomps.size(), std::size_t{1} << n, coef, by_beta, options, admit);
  out.mode = mode;
  out.n_qubits = n;
  for (const auto& d : decomps) out.rotations.push_back(d.v);
  return out;
}

// ----------------------------------------------------------------- Truncation

Truncation truncate(const PauliDecomposition& decomp, std::size_t keep) {
  const std::size_t total = decomp.coefficients.size();
  if (keep > total) {
    throw RangeViolation("truncate: keep " + std::to_string(keep) + " exceeds " + std::to_string(total));
  }
  RankOptions all;
  all.keep_zero_scores = true;
  const OperatorSubset order = rank_operators(std::span<const PauliDecomposition>(&decomp, 1), all);
  Truncation out;
  const std::size_t d = std::size_t{1} << decomp.n_qubits;
  out.m_trunc = ComplexMatrix(d, d);
  for (std::size_t i = 0; i < order.selection.size(); ++i) {
    const std::uint64_t k = order.selection[i].code;
    const double c = decomp.coefficients[k];
    if (i < keep) {
      out.kept.push_back(k);
      if (c != 0.0) add_pauli(out.m_trunc, PauliString(decomp.n_qubits, k), c);
    } else {
      out.tail_squared += c * c;
    }
  }
  out.bound = std::sqrt(static_cast<double>(d) * out.tail_squared);
  return out;
}

// ---------------------------------------------------------------------- Refit

SubsetMeasurement subset_measurement(const OperatorSubset& subset, std::size_t n_channels) {
  if (subset.selection.empty()) throw ValidationError("subset", "operator subset is empty");
  const unsigned n = subset.n_qubits;
  SubsetMeasurement out;
  out.set.n_qubits = n;
  out.set.scale = orthonormal_pauli_scale(n);

  if (subset.mode == RankMode::Pauli) {
    std::vector<std::uint64_t> codes;
    auto index_of = [&](std::uint64_t code) {
      const auto it = std::find(codes.begin(), codes.end(), code);
      if (it != codes.end()) return static_cast<std::size_t>(it - codes.begin());
      codes.push_back(code);
      return codes.size() - 1;
    };
    if (subset.scope == RankScope::Joint) {
      for (const auto& e : subset.selection) index_of(e.code);
    } else {
      out.channel_features.resize(n_channels);
      for (const auto& e : subset.selection) {
        if (e.channel >= n_channels) throw DimensionMismatch("subset references a missing channel");
        out.channel_features[e.channel].push_back(index_of(e.code));
      }
      // A channel without any selected operator falls back to the constant.
      for (auto& f : out.channel_features)
        if (f.empty()) f.push_back(index_of(0));
    }
    out.set.groups.push_back({MeasurementGroup::Kind::Pauli, {}, std::move(codes)});
    out.set.validate();
    return out;
  }

  if (subset.rotations.size() != n_channels) {
    throw DimensionMismatch("subset has " + std::to_string(subset.rotations.size()) + " rotations for " +
                            std::to_string(n_channels) + " channels");
  }
  const auto kind = subset.mode == RankMode::ZString ? MeasurementGroup::Kind::ZString
                                                     : MeasurementGroup::Kind::Projector;
  std::vector<std::vector<std::uint64_t>> per_channel(n_channels);
  for (const auto& e : subset.selection) {
    if (subset.scope == RankScope::Joint) {
      for (auto& list : per_channel) list.push_back(e.code);
    } else {
      if (e.channel >= n_channels) throw DimensionMismatch("subset references a missing channel");
      per_channel[e.channel].push_back(e.code);
    }
  }
  out.channel_features.resize(n_channels);
  std::size_t next = 0;
  for (std::size_t c = 0; c < n_channels; ++c) {
    if (per_channel[c].empty()) {
      if (kind == MeasurementGroup::Kind::Projector) {
        throw ValidationError("subset", "channel " + std::to_string(c) + " has no selected projector");
      }
      per_channel[c].push_back(0);
    }
    for (std::size_t i = 0; i < per_channel[c].size(); ++i) out.channel_features[c].push_back(next++);
    out.set.groups.push_back({kind, subset.rotations[c], std::move(per_channel[c])});
  }
  out.set.validate();
  return out;
}

PrimalSolution refit_subset(const OperatorSubset& subset, std::span<const QuantumState> states,
                            const RealMatrix& targets, double ridge, unsigned p_max, unsigned threads) {
  const SubsetMeasurement m = subset_measurement(subset, targets.cols());
  return primal_solve(states, m.set, targets, ridge, p_max, m.channel_features, threads);
}

// --------------------------------------------------------------------- Export

void export_decomposition(std::ostream& os, std::span<const PauliDecomposition> decomps,
                          const OperatorSubset& ranking) {
  os << "channel,operator_code,operator_label,coefficient,rank_score\n";
  os << std::setprecision(17);
  for (std::size_t c = 0; c < decomps.size(); ++c) {
    const auto& d = decomps[c];
    for (std::uint64_t k = 0; k < d.coefficients.size(); ++k) {
      if (d.coefficients[k] == 0.0) continue;
      double score = 0.0;
      for (const auto& e : ranking.selection) {
        if (e.code == k && (ranking.scope == RankScope::Joint || e.channel == c)) {
          score = e.score;
          break;
        }
      }
      os << c << ',' << k << ',' << PauliString(d.n_qubits, k).label() << ',' << d.coefficients[k] << ','
         << score << '\n';
    }
  }
}

}  // namespace qrck
