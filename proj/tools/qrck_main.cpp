#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qrck/config.hpp"
#include "qrck/decompose.hpp"
#include "qrck/errors.hpp"
#include "qrck/experiment.hpp"
#include "qrck/parallel.hpp"
#include "qrck/readout_io.hpp"

namespace {

using namespace qrck;

enum ExitCode {
  kOk = 0,
  kGeneric = 1,
  kUsage = 2,
  kParse = 3,
  kValidation = 4,
  kIo = 5,
  kRange = 6,
  kDimension = 7,
  kNotHermitian = 8,
  kNotPositiveDefinite = 9,
  kNonReal = 10,
  kNotOrthogonal = 11,
  kAncilla = 12,
  kBadMagic = 13,
  kTruncated = 14,
  kCount = 15,
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kParse;
  if (dynamic_cast<const ValidationError*>(&e)) return kValidation;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const RangeViolation*>(&e)) return kRange;
  if (dynamic_cast<const DimensionMismatch*>(&e)) return kDimension;
  if (dynamic_cast<const NotHermitian*>(&e)) return kNotHermitian;
  if (dynamic_cast<const NotPositiveDefinite*>(&e)) return kNotPositiveDefinite;
  if (dynamic_cast<const NonRealResult*>(&e)) return kNonReal;
  if (dynamic_cast<const NotOrthogonal*>(&e)) return kNotOrthogonal;
  if (dynamic_cast<const AncillaPresent*>(&e)) return kAncilla;
  if (dynamic_cast<const BadMagic*>(&e)) return kBadMagic;
  if (dynamic_cast<const TruncatedFile*>(&e)) return kTruncated;
  if (dynamic_cast<const CountMismatch*>(&e)) return kCount;
  return kGeneric;
}

void log(const std::string& msg) { std::cerr << "[qrck] " << msg << std::endl; }

struct CommonFlags {
  std::string config;
  std::string output;
  std::string run_id;
  unsigned threads = 0;
  std::uint64_t seed_offset = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
  auto* opt = cmd->add_option("--config", f.config, "Configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--output", f.output, "Output directory (overrides output.dir)");
  cmd->add_option("--run-id", f.run_id, "Run identifier (overrides run_id)");
  cmd->add_option("--threads", f.threads, "Worker threads (default: QRCK_THREADS or all cores)");
  cmd->add_option("--seed-offset", f.seed_offset, "Added to every trial seed");
}

ExperimentConfig load(const CommonFlags& f) {
  if (f.threads > 0) set_default_threads(f.threads);
  ExperimentConfig cfg = load_config(f.config);
  if (!f.output.empty()) cfg.output_dir = f.output;
  if (!f.run_id.empty()) cfg.run_id = f.run_id;
  cfg.validate();
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) log("wrote " + p.string());
}

int run_pipeline(const CommonFlags& f, bool sweep, std::optional<bool> require_classify) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(f);
  if (require_classify && *require_classify != (cfg.task == TaskKind::Classify)) {
    throw ValidationError("task", *require_classify ? "classify needs task = classify"
                                                    : "forecast needs a time-series task");
  }
  ResultWriter writer(cfg.output_dir, cfg.run_id, to_string(cfg.task));
  RunOptions opts;
  opts.sweep = sweep;
  opts.seed_offset = f.seed_offset;
  opts.sink = [&](const ResultRow& r) { writer.write(r); };
  opts.log = log;
  log("running " + to_string(cfg.task) + " with " + std::to_string(cfg.n_trials) + " seeds");
  run_experiment(cfg, opts);
  std::map<std::string, std::string> extra;
  if (cfg.task == TaskKind::Classify) extra["dataset"] = cfg.mnist_dir.empty() ? "synthetic" : "mnist";
  print_paths(writer.finish(make_manifest(cfg, f.seed_offset, seconds_since(t0), extra)));
  return kOk;
}

std::filesystem::path fresh_run_dir(const ExperimentConfig& cfg) {
  const auto dir = cfg.output_dir / cfg.run_id;
  if (std::filesystem::exists(dir)) throw IoError("run directory " + dir.string() + " already exists");
  std::filesystem::create_directories(dir);
  return dir;
}

void write_manifest(const std::filesystem::path& dir, const std::string& text) {
  std::ofstream os(dir / "manifest.txt");
  os << text;
  if (!os) throw IoError("cannot write " + (dir / "manifest.txt").string());
}

int gen_data(const CommonFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(f);
  const auto dir = fresh_run_dir(cfg);
  for (const auto seed : cfg.seeds(f.seed_offset)) {
    const auto path = dir / ("data_" + std::to_string(seed) + ".csv");
    std::ofstream os(path);
    if (cfg.task == TaskKind::Classify) {
      const ClassificationData data = make_classification_data(cfg, seed);
      const auto& ds = data.dataset;
      std::vector<std::string> header;
      for (std::size_t c = 0; c < ds.features.cols(); ++c) header.push_back("x" + std::to_string(c));
      header.push_back("label");
      header.push_back("is_test");
      RealMatrix table(ds.labels.size(), ds.features.cols() + 2);
      for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        for (std::size_t c = 0; c < ds.features.cols(); ++c) table(i, c) = ds.features(i, c);
        table(i, ds.features.cols()) = static_cast<double>(ds.labels[i]);
      }
      for (auto i : ds.split.test) table(i, ds.features.cols() + 1) = 1.0;
      write_table_csv(os, header, table);
    } else {
      const ForecastData data = make_forecast_data(cfg, seed);
      const std::size_t d = data.raw.cols();
      std::vector<std::string> header{"t"};
      for (std::size_t c = 0; c < d; ++c) header.push_back("raw" + std::to_string(c));
      for (std::size_t c = 0; c < d; ++c) header.push_back("scaled" + std::to_string(c));
      RealMatrix table(data.raw.rows(), 1 + 2 * d);
      for (std::size_t i = 0; i < data.raw.rows(); ++i) {
        table(i, 0) = static_cast<double>(i) * data.dt;
        for (std::size_t c = 0; c < d; ++c) {
          table(i, 1 + c) = data.raw(i, c);
          table(i, 1 + d + c) = data.scaled(i, c);
        }
      }
      write_table_csv(os, header, table);
    }
    if (!os) throw IoError("cannot write " + path.string());
    log("wrote " + path.string());
  }
  write_manifest(dir, make_manifest(cfg, f.seed_offset, seconds_since(t0)));
  return kOk;
}

struct TrainedFirstSeed {
  std::uint64_t seed = 0;
  ReservoirSpec spec;
  OptimalObservableSet observables;
  std::optional<PrimalSolution> primal;
};

TrainedFirstSeed train_first_seed(const ExperimentConfig& cfg, std::uint64_t seed_offset) {
  TrainedFirstSeed out;
  out.seed = cfg.seeds(seed_offset).front();
  out.spec = cfg.reservoir;
  const unsigned n = cfg.reservoir.n_qubits();
  if (cfg.task == TaskKind::Classify) {
    const auto model = train_classifier(cfg, make_classification_data(cfg, out.seed));
    out.observables = model.observables;
    if (cfg.primal_reference) {
      out.primal = primal_solve(model.train_states, MeasurementSet::complete_pauli(n), model.train_targets,
                                cfg.effective_refit_ridge(), cfg.p_max);
    }
  } else {
    const auto data = make_forecast_data(cfg, out.seed);
    const auto model = train_forecast(cfg, data, out.seed);
    out.observables = model.observables;
    if (cfg.primal_reference) {
      out.primal = primal_solve(model.states, MeasurementSet::complete_pauli(n), model.targets,
                                cfg.effective_refit_ridge(), cfg.p_max);
    }
  }
  return out;
}

int train(const CommonFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(f);
  const auto dir = fresh_run_dir(cfg);
  const auto trained = train_first_seed(cfg, f.seed_offset);
  TrainedReadout r;
  r.reservoir = trained.spec;
  r.ridge = cfg.ridge;
  r.observables = trained.observables;
  r.primal = trained.primal;
  const auto path = dir / ("readout_" + std::to_string(trained.seed) + ".qrck");
  save_readout(path, r);
  log("wrote " + path.string());
  write_manifest(dir, make_manifest(cfg, f.seed_offset, seconds_since(t0)));
  return kOk;
}

int decompose(const CommonFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(f);
  const auto dir = fresh_run_dir(cfg);
  const auto trained = train_first_seed(cfg, f.seed_offset);
  std::vector<PauliDecomposition> pauli;
  for (std::size_t c = 0; c < trained.observables.size(); ++c) {
    pauli.push_back(pauli_decompose(trained.observables[c], c));
  }
  RankOptions opts;
  opts.scope = cfg.per_channel_ranking ? RankScope::PerChannel : RankScope::Joint;
  if (cfg.max_weight > 0) opts.max_weight = cfg.max_weight;
  const auto ranking = rank_operators(pauli, opts);
  const auto seed = std::to_string(trained.seed);
  {
    std::ofstream os(dir / ("pauli_" + seed + ".csv"));
    export_decomposition(os, pauli, ranking);
    if (!os) throw IoError("cannot write Pauli table");
  }
  {
    std::ofstream os(dir / ("spectrum_" + seed + ".csv"));
    os << "channel,index,eigenvalue,beta\n";
    os.precision(17);
    for (std::size_t c = 0; c < trained.observables.size(); ++c) {
      const auto s = diagonalize(trained.observables[c], c);
      for (std::size_t b = 0; b < s.eigenvalues.size(); ++b) {
        os << c << ',' << b << ',' << s.eigenvalues[b] << ',' << s.z_coefficients[b] << '\n';
      }
    }
    if (!os) throw IoError("cannot write spectrum table");
  }
  log("wrote decomposition tables to " + dir.string());
  write_manifest(dir, make_manifest(cfg, f.seed_offset, seconds_since(t0)));
  return kOk;
}

int report(const CommonFlags& f, const std::string& run_dir_flag) {
  std::filesystem::path run_dir = run_dir_flag;
  if (run_dir.empty()) {
    if (f.config.empty()) throw ValidationError("--config", "report needs --config or --run-dir");
    const ExperimentConfig cfg = load(f);
    run_dir = cfg.output_dir / cfg.run_id;
  }
  if (!std::filesystem::is_directory(run_dir)) throw IoError("no run directory " + run_dir.string());
  std::vector<std::filesystem::path> tables;
  for (const auto& e : std::filesystem::directory_iterator(run_dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("results_", 0) == 0 && e.path().extension() == ".csv") tables.push_back(e.path());
  }
  std::sort(tables.begin(), tables.end());
  if (tables.empty()) throw IoError("no result tables in " + run_dir.string());
  std::vector<ResultRow> rows;
  for (const auto& t : tables) {
    std::ifstream is(t);
    auto part = read_results(is);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_summary(std::cout, summarize(rows));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum reservoir computing with kernel-optimized readouts"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string run_dir;
  auto* gen = app.add_subcommand("gen-data", "Generate the configured datasets");
  auto* tr = app.add_subcommand("train", "Train the optimal observables and save the readout");
  auto* dec = app.add_subcommand("decompose", "Write Pauli and spectral decompositions of the optimal observables");
  auto* fc = app.add_subcommand("forecast", "Closed-loop forecasting with the reference readouts");
  auto* cl = app.add_subcommand("classify", "Classification with the reference readouts");
  auto* sw = app.add_subcommand("sweep", "Operator-subset sweeps for every configured mode");
  auto* rep = app.add_subcommand("report", "Summarize the result tables of a run");
  for (auto* c : {gen, tr, dec, fc, cl, sw}) add_common(c, flags);
  add_common(rep, flags, false);
  rep->add_option("--run-dir", run_dir, "Run directory to summarize");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return gen_data(flags);
    if (*tr) return train(flags);
    if (*dec) return decompose(flags);
    if (*fc) return run_pipeline(flags, false, false);
    if (*cl) return run_pipeline(flags, false, true);
    if (*sw) return run_pipeline(flags, true, std::nullopt);
    if (*rep) return report(flags, run_dir);
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return exit_code_for(e);
  }
  return kGeneric;
}
