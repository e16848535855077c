#include "qrck/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "qrck/errors.hpp"
#include "qrck/parallel.hpp"
#include "qrck/random.hpp"

namespace qrck {

namespace {

// The generators rescale over the whole series, so a few samples beyond the
// test window keep the scaling independent of where the window ends.
constexpr std::size_t kSpareSamples = 5;

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void log_to(const LogSink& log, const std::string& msg) {
  if (log) log(msg);
}

template <class E>
bool rethrow_as(const std::exception& e, const std::string& ctx) {
  if (dynamic_cast<const E*>(&e)) throw E(ctx + ": " + e.what());
  return false;
}

// Rethrows the active exception with `ctx` prefixed, keeping its class.
[[noreturn]] void rethrow_with_context(const std::string& ctx) {
  try {
    throw;
  } catch (const RangeViolation& e) {
    throw RangeViolation(ctx + ": " + e.what(), e.index());
  } catch (const ValidationError& e) {
    throw ValidationError(e.field(), ctx + ": " + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    rethrow_as<NotHermitian>(e, ctx) || rethrow_as<NotPositiveDefinite>(e, ctx) ||
        rethrow_as<DimensionMismatch>(e, ctx) || rethrow_as<NonRealResult>(e, ctx) ||
        rethrow_as<NotOrthogonal>(e, ctx) || rethrow_as<AncillaPresent>(e, ctx) || rethrow_as<BadMagic>(e, ctx) ||
        rethrow_as<TruncatedFile>(e, ctx) || rethrow_as<CountMismatch>(e, ctx) || rethrow_as<IoError>(e, ctx);
    throw Error(ctx + ": " + e.what());
  }
}

RealMatrix rows_of(const RealMatrix& m, std::size_t begin, std::size_t end) {
  RealMatrix out(end - begin, m.cols());
  for (std::size_t i = begin; i < end; ++i) std::copy(m.row(i).begin(), m.row(i).end(), out.row(i - begin).begin());
  return out;
}

double training_rmse(const OptimalObservableSet& obs, const std::vector<QuantumState>& states, const RealMatrix& y) {
  RealMatrix pred(y.rows(), y.cols());
  parallel_for(states.size(), [&](std::size_t i) {
    const auto p = predict(obs, states[i]);
    std::copy(p.begin(), p.end(), pred.row(i).begin());
  });
  return rms_error(y, pred);
}

double training_rmse(const PrimalSolution& model, const std::vector<QuantumState>& states, const RealMatrix& y) {
  RealMatrix pred(y.rows(), y.cols());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto p = predict(model, states[i]);
    std::copy(p.begin(), p.end(), pred.row(i).begin());
  }
  return rms_error(y, pred);
}

ResultRow make_row(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& mode, std::size_t size,
                   const std::string& metric, double value, bool censored = false) {
  return {cfg.run_id, to_string(cfg.task), seed, mode, size, metric, value, censored};
}

void forecast_rows(std::vector<ResultRow>& out, const ExperimentConfig& cfg, const ForecastData& data,
                   std::uint64_t seed, const std::string& mode, std::size_t size, const ForecastEvaluation& ev,
                   double train_rmse) {
  const bool c = ev.horizon.censored;
  out.push_back(make_row(cfg, seed, mode, size, "horizon_steps", static_cast<double>(ev.horizon.steps), c));
  out.push_back(make_row(cfg, seed, mode, size, "horizon_relative", ev.relative_horizon, c));
  if (data.lyapunov) out.push_back(make_row(cfg, seed, mode, size, "horizon_lyapunov", *ev.horizon.lyapunov_units, c));
  out.push_back(make_row(cfg, seed, mode, size, "train_rmse", train_rmse));
  out.push_back(make_row(cfg, seed, mode, size, "clip_events", static_cast<double>(ev.clip_events)));
}

std::vector<ResultRow> run_forecast_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool sweep,
                                         const LogSink& log) {
  std::vector<ResultRow> out;
  const ForecastData data = make_forecast_data(cfg, seed);
  const ForecastModel model = train_forecast(cfg, data, seed);
  const unsigned n = model.spec.n_qubits();

  const auto full = evaluate_forecast(cfg, data, model,
                                      [&](const QuantumState& r) { return predict(model.observables, r); });
  forecast_rows(out, cfg, data, seed, "full_mstar", 0, full, training_rmse(model.observables, model.states,
                                                                           model.targets));
  log_to(log, "seed " + std::to_string(seed) + ": full M* horizon " + std::to_string(full.horizon.steps) + " steps" +
                  (full.horizon.censored ? " (censored)" : ""));

  if (cfg.primal_reference) {
    const PrimalSolution primal = primal_solve(model.states, MeasurementSet::complete_pauli(n), model.targets,
                                               cfg.effective_refit_ridge(), cfg.p_max);
    const auto ev = evaluate_forecast(cfg, data, model, [&](const QuantumState& r) { return predict(primal, r); });
    forecast_rows(out, cfg, data, seed, "primal_complete", pauli_count(n), ev,
                  training_rmse(primal, model.states, model.targets));
  }
  if (!sweep) return out;

  for (SweepMode mode : cfg.modes) {
    const OperatorSubset subset = sweep_subset(cfg, mode, model.observables);
    const auto sizes = sweep_sizes(cfg, subset.size());
    std::vector<std::vector<ResultRow>> slots(sizes.size());
    parallel_for(sizes.size(), [&](std::size_t i) {
      const PrimalSolution fit = refit_subset(subset.prefix(sizes[i]), model.states, model.targets,
                                              cfg.effective_refit_ridge(), cfg.p_max);
      const auto ev = evaluate_forecast(cfg, data, model, [&](const QuantumState& r) { return predict(fit, r); });
      forecast_rows(slots[i], cfg, data, seed, to_string(mode), sizes[i], ev,
                    training_rmse(fit, model.states, model.targets));
    });
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    log_to(log, "seed " + std::to_string(seed) + ": swept " + std::to_string(sizes.size()) + " sizes of " +
                    to_string(mode));
  }
  return out;
}

std::vector<ResultRow> run_classify_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool sweep,
                                         const LogSink& log) {
  std::vector<ResultRow> out;
  const ClassificationData data = make_classification_data(cfg, seed);
  const ClassificationModel model = train_classifier(cfg, data);
  const unsigned n = model.spec.n_qubits();

  const double full = test_accuracy(model, [&](const QuantumState& r) { return predict(model.observables, r); });
  out.push_back(make_row(cfg, seed, "full_mstar", 0, "test_accuracy", full));
  log_to(log, "seed " + std::to_string(seed) + " (" + data.source + " data): full M* test accuracy " + fmt(full));

  if (cfg.primal_reference) {
    const PrimalSolution primal = primal_solve(model.train_states, MeasurementSet::complete_pauli(n),
                                               model.train_targets, cfg.effective_refit_ridge(), cfg.p_max);
    const double acc = test_accuracy(model, [&](const QuantumState& r) { return predict(primal, r); });
    out.push_back(make_row(cfg, seed, "primal_complete", pauli_count(n), "test_accuracy", acc));
  }
  if (!sweep) return out;

  for (SweepMode mode : cfg.modes) {
    const OperatorSubset subset = sweep_subset(cfg, mode, model.observables);
    const auto sizes = sweep_sizes(cfg, subset.size());
    std::vector<double> acc(sizes.size());
    parallel_for(sizes.size(), [&](std::size_t i) {
      const PrimalSolution fit = refit_subset(subset.prefix(sizes[i]), model.train_states, model.train_targets,
                                              cfg.effective_refit_ridge(), cfg.p_max);
      acc[i] = test_accuracy(model, [&](const QuantumState& r) { return predict(fit, r); });
    });
    for (std::size_t i = 0; i < sizes.size(); ++i)
      out.push_back(make_row(cfg, seed, to_string(mode), sizes[i], "test_accuracy", acc[i]));
    log_to(log, "seed " + std::to_string(seed) + ": swept " + std::to_string(sizes.size()) + " sizes of " +
                    to_string(mode));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// --------------------------------------------------------------- forecasting

ForecastData make_forecast_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t total = cfg.train_length + cfg.test_window + kSpareSamples;
  ForecastData out;
  out.dt = cfg.dt;
  out.train_length = cfg.train_length;
  switch (cfg.task) {
    case TaskKind::Lorenz: {
      LorenzParams p;
      p.x0 = cfg.x0;
      p.x0_jitter = cfg.x0_jitter;
      p.n_samples = total;
      p.dt_sample = cfg.dt;
      p.discard = cfg.discard;
      p.seed = seed;
      const TimeSeriesDataset ds = gen_lorenz(p);
      out.raw = ds.samples;
      out.scaling = ScaleTransform::fit_minmax(rows_of(ds.samples, 0, cfg.train_length), cfg.scale_lo, cfg.scale_hi);
      out.scaled = out.scaling.apply(out.raw);
      out.lyapunov = ds.lyapunov_exponent;
      break;
    }
    case TaskKind::MackeyGlass: {
      MackeyGlassParams p;
      p.n_samples = total;
      p.seed = seed;
      p.dt_sample = cfg.dt;
      p.history_noise = cfg.history_noise;
      p.discard = cfg.discard;
      p.out_lo = cfg.scale_lo;
      p.out_hi = cfg.scale_hi;
      const TimeSeriesDataset ds = gen_mackey_glass(p);
      out.raw = ds.samples;
      out.scaled = ds.samples;
      out.scaling = ScaleTransform::identity(1);
      out.lyapunov = ds.lyapunov_exponent;
      break;
    }
    case TaskKind::Harmonic: {
      HarmonicParams p;
      p.n_frequencies = cfg.n_frequencies;
      p.omega0 = cfg.omega0;
      p.n_samples = total;
      p.dt = cfg.dt;
      p.seed = seed;
      p.max_abs = cfg.max_abs;
      const TimeSeriesDataset ds = gen_harmonic(p);
      out.raw = ds.samples;
      out.scaled = ds.samples;
      out.scaling = ScaleTransform::identity(1);
      break;
    }
    case TaskKind::Classify:
      throw ValidationError("task", "classification has no time series");
  }
  return out;
}

ForecastModel train_forecast(const ExperimentConfig& cfg, const ForecastData& data, std::uint64_t seed) {
  ForecastModel m;
  m.spec = cfg.reservoir;
  m.u = reservoir_unitary(m.spec);
  const RealMatrix clean = rows_of(data.scaled, 0, data.train_length);
  m.warm_input = cfg.input_noise > 0.0
                     ? add_input_noise(clean, cfg.input_noise, 1000 + seed, m.spec.encoding.range_min(),
                                       m.spec.encoding.range_max())
                     : clean;
  m.states = run_reservoir(m.warm_input, m.spec, m.u);
  // The last state has no next sample inside the training window.
  m.states.pop_back();
  m.targets = RealMatrix(m.states.size(), data.scaled.cols());
  for (std::size_t i = 0; i < m.states.size(); ++i) {
    const auto src = data.scaled.row(m.spec.washout + i + 1);
    std::copy(src.begin(), src.end(), m.targets.row(i).begin());
  }
  m.observables = fit_optimal_observable(m.states, m.targets, cfg.ridge, cfg.solver);
  m.sigma = trajectory_sigma(rows_of(data.raw, 0, data.train_length));
  return m;
}

ForecastEvaluation evaluate_forecast(const ExperimentConfig& cfg, const ForecastData& data,
                                     const ForecastModel& model, const StatePredictor& predictor) {
  ForecastOptions opts;
  opts.clip = cfg.clip;
  const ForecastResult fc = closed_loop_forecast(predictor, model.spec, model.u, model.warm_input, cfg.test_window, opts);
  ForecastEvaluation ev;
  ev.predicted = data.scaling.invert(fc.predicted);
  const RealMatrix truth = rows_of(data.raw, data.train_length, data.train_length + cfg.test_window);
  ev.horizon = forecast_horizon(truth, ev.predicted, model.sigma, data.dt, data.lyapunov);
  ev.relative_horizon = static_cast<double>(ev.horizon.steps) / static_cast<double>(cfg.test_window);
  ev.clip_events = fc.clip_events;
  return ev;
}

// ------------------------------------------------------------ classification

ClassificationData make_classification_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  ClassificationData out;
  ClassificationDataset raw;
  if (!cfg.mnist_dir.empty()) {
    const std::filesystem::path dir(cfg.mnist_dir);
    ClassificationDataset all = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
    const std::size_t n = std::min(cfg.n_subset, all.labels.size());
    Rng rng(seed);
    std::vector<std::size_t> idx(all.labels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    raw.n_classes = all.n_classes;
    raw.features = RealMatrix(n, all.features.cols());
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = all.features.row(idx[i]);
      std::copy(src.begin(), src.end(), raw.features.row(i).begin());
      raw.labels.push_back(all.labels[idx[i]]);
    }
    out.source = "mnist";
  } else {
    raw = gen_gaussian_mixture(cfg.n_subset, cfg.synthetic_classes, cfg.synthetic_dims, cfg.synthetic_spread, seed);
    out.source = "synthetic";
  }
  const DataSplit split = train_test_split(raw.labels.size(), cfg.test_fraction, seed);

  // Principal components are fit on the training rows only.
  const std::size_t k = cfg.reservoir.encoding.input_dim;
  RealMatrix train(split.train.size(), raw.features.cols());
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const auto src = raw.features.row(split.train[i]);
    std::copy(src.begin(), src.end(), train.row(i).begin());
  }
  const PcaResult pca = pca_reduce(train, k);
  const double lo = cfg.reservoir.encoding.range_min(), hi = cfg.reservoir.encoding.range_max();
  RealMatrix features(raw.labels.size(), k);
  std::vector<double> centered(raw.features.cols());
  for (std::size_t i = 0; i < raw.labels.size(); ++i) {
    for (std::size_t j = 0; j < centered.size(); ++j) centered[j] = raw.features(i, j) - pca.mean[j];
    std::vector<double> score(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < centered.size(); ++j) score[c] += centered[j] * pca.basis(j, c);
    const auto unit = pca.scaling.apply(score);
    for (std::size_t c = 0; c < k; ++c) features(i, c) = lo + (hi - lo) * std::clamp(unit[c], 0.0, 1.0);
  }
  out.dataset.features = std::move(features);
  out.dataset.labels = std::move(raw.labels);
  out.dataset.n_classes = raw.n_classes;
  out.dataset.split = split;
  return out;
}

ClassificationModel train_classifier(const ExperimentConfig& cfg, const ClassificationData& data) {
  ClassificationModel m;
  m.spec = cfg.reservoir;
  const ComplexMatrix u = cfg.use_unitary ? reservoir_unitary(m.spec) : ComplexMatrix();
  const ComplexMatrix* up = cfg.use_unitary ? &u : nullptr;
  const auto& ds = data.dataset;
  auto encode_all = [&](const std::vector<std::size_t>& idx, std::vector<QuantumState>& states,
                        std::vector<std::size_t>& labels) {
    states.resize(idx.size());
    parallel_for(idx.size(), [&](std::size_t i) { states[i] = qelm_state(ds.features.row(idx[i]), m.spec, up); });
    for (auto j : idx) labels.push_back(ds.labels[j]);
  };
  encode_all(ds.split.train, m.train_states, m.train_labels);
  encode_all(ds.split.test, m.test_states, m.test_labels);
  m.train_targets = RealMatrix(m.train_states.size(), ds.n_classes);
  for (std::size_t i = 0; i < m.train_labels.size(); ++i) m.train_targets(i, m.train_labels[i]) = 1.0;
  m.observables = fit_optimal_observable(m.train_states, m.train_targets, cfg.ridge, cfg.solver);
  return m;
}

double test_accuracy(const ClassificationModel& model, const StatePredictor& predictor) {
  std::vector<std::size_t> pred(model.test_states.size());
  parallel_for(pred.size(), [&](std::size_t i) { pred[i] = classify(predictor(model.test_states[i])); });
  return accuracy(pred, model.test_labels);
}

// ------------------------------------------------------------------- sweeps

std::vector<std::uint64_t> constrained_z_order(unsigned n_qubits) {
  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n_qubits); ++m) masks.push_back(m);
  // Qubit 0 is the most significant bit of a mask.
  auto bits_msb_first = [&](std::uint64_t m) {
    std::vector<unsigned> q;
    for (unsigned i = 0; i < n_qubits; ++i)
      if (m >> (n_qubits - 1 - i) & 1U) q.push_back(i);
    return q;
  };
  std::stable_sort(masks.begin(), masks.end(), [&](std::uint64_t a, std::uint64_t b) {
    const auto qa = bits_msb_first(a), qb = bits_msb_first(b);
    if (qa.size() != qb.size()) return qa.size() < qb.size();
    return qa < qb;
  });
  std::vector<std::uint64_t> codes;
  for (auto m : masks) {
    std::uint64_t code = 0;
    for (unsigned q = 0; q < n_qubits; ++q) code = code * 4 + ((m >> (n_qubits - 1 - q) & 1U) ? 3 : 0);
    codes.push_back(code);
  }
  return codes;
}

OperatorSubset sweep_subset(const ExperimentConfig& cfg, SweepMode mode, const OptimalObservableSet& observables) {
  if (observables.empty()) throw DimensionMismatch("sweep_subset: no observables");
  const unsigned n = cfg.reservoir.n_qubits();
  RankOptions opts;
  opts.scope = cfg.per_channel_ranking ? RankScope::PerChannel : RankScope::Joint;
  if (cfg.max_weight > 0) opts.max_weight = cfg.max_weight;
  switch (mode) {
    case SweepMode::Pauli: {
      std::vector<PauliDecomposition> d;
      for (std::size_t c = 0; c < observables.size(); ++c) d.push_back(pauli_decompose(observables[c], c));
      return rank_operators(d, opts);
    }
    case SweepMode::ZString:
    case SweepMode::Eigenvalue: {
      std::vector<SpectralDecomposition> d;
      for (std::size_t c = 0; c < observables.size(); ++c) d.push_back(diagonalize(observables[c], c));
      opts.max_weight.reset();
      return rank_operators(d, mode == SweepMode::ZString ? RankMode::ZString : RankMode::Eigenvalue, opts);
    }
    case SweepMode::ConstrainedZ: {
      OperatorSubset s;
      s.mode = RankMode::Pauli;
      s.scope = RankScope::Joint;
      s.n_qubits = n;
      for (auto code : constrained_z_order(n)) {
        if (opts.max_weight && PauliString(n, code).weight() > *opts.max_weight) continue;
        s.selection.push_back({0, code, 0.0});
      }
      return s;
    }
  }
  throw ValidationError("training.modes", "unhandled mode");
}

std::vector<std::size_t> sweep_sizes(const ExperimentConfig& cfg, std::size_t available) {
  std::vector<std::size_t> out;
  if (cfg.sweep_all_sizes) {
    for (std::size_t k = 1; k <= available; ++k) out.push_back(k);
    return out;
  }
  for (auto k : cfg.subset_sizes) out.push_back(std::min(k, available));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), std::size_t{0}), out.end());
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  std::vector<ResultRow> all;
  for (const auto seed : cfg.seeds(options.seed_offset)) {
    std::vector<ResultRow> rows;
    try {
      rows = cfg.task == TaskKind::Classify ? run_classify_seed(cfg, seed, options.sweep, options.log)
                                            : run_forecast_seed(cfg, seed, options.sweep, options.log);
    } catch (const std::exception&) {
      rethrow_with_context("task " + to_string(cfg.task) + ", seed " + std::to_string(seed));
    }
    for (const auto& r : rows) {
      if (options.sink) options.sink(r);
      all.push_back(r);
    }
  }
  return all;
}

// ------------------------------------------------------------------ output

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::size_t, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    Key k{r.task, r.mode, r.subset_size, r.metric};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& k : order) {
    const auto& g = groups[k];
    SummaryRow s{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)};
    s.n = g.size();
    for (const auto* r : g) {
      s.mean += r->value;
      s.n_censored += r->censored ? 1 : 0;
    }
    s.mean /= static_cast<double>(s.n);
    for (const auto* r : g) s.std_dev += (r->value - s.mean) * (r->value - s.mean);
    s.std_dev = std::sqrt(s.std_dev / static_cast<double>(s.n));
    out.push_back(std::move(s));
  }
  return out;
}

void write_result_header(std::ostream& os) { os << kResultColumns << '\n'; }

void write_result_row(std::ostream& os, const ResultRow& r) {
  os << csv_field(r.run_id) << ',' << r.task << ',' << r.seed << ',' << r.mode << ',' << r.subset_size << ','
     << r.metric << ',' << fmt(r.value) << ',' << (r.censored ? "true" : "false") << '\n';
}

std::vector<ResultRow> read_results(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kResultColumns) throw ParseError("missing result table header", 1, 1);
  std::vector<ResultRow> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 8) throw ParseError("expected 8 fields", line_no, 1);
    ResultRow r;
    r.run_id = f[0];
    r.task = f[1];
    r.mode = f[3];
    r.metric = f[5];
    r.censored = f[7] == "true";
    auto num = [&](const std::string& s, auto& v, std::size_t col) {
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("invalid number '" + s + "'", line_no, col);
      }
    };
    num(f[2], r.seed, 3);
    num(f[4], r.subset_size, 5);
    num(f[6], r.value, 7);
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "task,mode,subset_size,metric,mean,std,n,n_censored\n";
  for (const auto& s : rows) {
    os << s.task << ',' << s.mode << ',' << s.subset_size << ',' << s.metric << ',' << fmt(s.mean) << ','
       << fmt(s.std_dev) << ',' << s.n << ',' << s.n_censored << '\n';
  }
}

ResultWriter::ResultWriter(const std::filesystem::path& output_dir, const std::string& run_id,
                           const std::string& task)
    : dir_(output_dir / run_id) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create " + output_dir.string() + ": " + ec.message());
  if (std::filesystem::exists(dir_)) {
    throw IoError("run directory " + dir_.string() + " already exists; choose another run id");
  }
  if (!std::filesystem::create_directory(dir_, ec) || ec) throw IoError("cannot create " + dir_.string());
  table(task);
}

std::ofstream& ResultWriter::table(const std::string& task) {
  auto& slot = tables_[task];
  if (!slot) {
    const auto path = dir_ / ("results_" + task + ".csv");
    slot = std::make_unique<std::ofstream>(path);
    if (!*slot) throw IoError("cannot open " + path.string());
    write_result_header(*slot);
    slot->flush();
  }
  return *slot;
}

void ResultWriter::write(const ResultRow& row) {
  auto& os = table(row.task);
  write_result_row(os, row);
  os.flush();
  if (!os) throw IoError("write failed in " + dir_.string());
  rows_.push_back(row);
}

std::vector<std::filesystem::path> ResultWriter::finish(const std::string& manifest) {
  std::vector<std::filesystem::path> paths;
  for (auto& [task, os] : tables_) {
    os->close();
    paths.push_back(dir_ / ("results_" + task + ".csv"));
    std::vector<ResultRow> mine;
    for (const auto& r : rows_)
      if (r.task == task) mine.push_back(r);
    const auto path = dir_ / ("summary_" + task + ".csv");
    std::ofstream s(path);
    write_summary(s, summarize(mine));
    if (!s) throw IoError("cannot write " + path.string());
    paths.push_back(path);
  }
  const auto path = dir_ / "manifest.txt";
  std::ofstream m(path);
  m << manifest;
  if (!m) throw IoError("cannot write " + path.string());
  paths.push_back(path);
  return paths;
}

std::vector<std::filesystem::path> emit_results(const std::vector<ResultRow>& rows,
                                                const std::filesystem::path& output_dir, const std::string& run_id,
                                                const std::string& task, const std::string& manifest) {
  ResultWriter w(output_dir, run_id, task);
  for (const auto& r : rows) w.write(r);
  return w.finish(manifest);
}

std::string make_manifest(const ExperimentConfig& cfg, std::uint64_t seed_offset, double wall_seconds,
                          const std::map<std::string, std::string>& extra) {
  std::ostringstream os;
  os << "# configuration\n" << config_to_text(cfg);
  os << "# run\n";
  os << "seed_offset = " << seed_offset << '\n';
  os << "seeds = ";
  const auto seeds = cfg.seeds(seed_offset);
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << '\n';
  os << "version = " << kVersion << '\n';
  os << "compiler = " << __VERSION__ << '\n';
  os << "threads = " << default_threads() << '\n';
  os << "wall_seconds = " << fmt(wall_seconds) << '\n';
  for (const auto& [k, v] : extra) os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace qrck
