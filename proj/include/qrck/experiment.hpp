#pragma once

// End-to-end pipelines behind the command-line driver: data preparation,
// kernel training, operator-subset sweeps and result tables.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qrck/config.hpp"
#include "qrck/decompose.hpp"
#include "qrck/tasks.hpp"
#include "qrck/training.hpp"

namespace qrck {

struct ResultRow {
  std::string run_id;
  std::string task;
  std::uint64_t seed = 0;
  std::string mode;
  std::size_t subset_size = 0;  // 0 for the full M* reference
  std::string metric;
  double value = 0.0;
  bool censored = false;
};

inline constexpr const char* kResultColumns = "run_id,task,seed,mode,subset_size,metric,value,censored";

using RowSink = std::function<void(const ResultRow&)>;
using LogSink = std::function<void(const std::string&)>;

struct RunOptions {
  bool sweep = true;
  std::uint64_t seed_offset = 0;
  RowSink sink;  // receives each row as soon as it is final
  LogSink log;
};

// --------------------------------------------------------------- forecasting

struct ForecastData {
  RealMatrix raw;     // trajectory in the units the horizon is measured in
  RealMatrix scaled;  // the same trajectory mapped into the encoding range
  ScaleTransform scaling;  // raw -> scaled
  std::optional<double> lyapunov;
  double dt = 1.0;
  std::size_t train_length = 0;
};

/// train_length + test_window samples of the configured series.
ForecastData make_forecast_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct ForecastModel {
  ReservoirSpec spec;
  ComplexMatrix u;
  RealMatrix warm_input;             // training inputs fed to the reservoir, noise included
  std::vector<QuantumState> states;  // one per target row
  RealMatrix targets;                // next clean scaled sample
  OptimalObservableSet observables;
  double sigma = 0.0;                // raw-unit trajectory scale of the training window
};

ForecastModel train_forecast(const ExperimentConfig& cfg, const ForecastData& data, std::uint64_t seed);

struct ForecastEvaluation {
  Horizon horizon;
  double relative_horizon = 0.0;
  std::size_t clip_events = 0;
  RealMatrix predicted;  // raw units
};

ForecastEvaluation evaluate_forecast(const ExperimentConfig& cfg, const ForecastData& data,
                                     const ForecastModel& model, const StatePredictor& predictor);

// ------------------------------------------------------------ classification

struct ClassificationData {
  ClassificationDataset dataset;  // features already reduced and scaled into the encoding range
  std::string source;             // "mnist" or "synthetic"
};

ClassificationData make_classification_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct ClassificationModel {
  ReservoirSpec spec;
  std::vector<QuantumState> train_states;
  std::vector<QuantumState> test_states;
  RealMatrix train_targets;  // one-hot
  std::vector<std::size_t> train_labels;
  std::vector<std::size_t> test_labels;
  OptimalObservableSet observables;
};

ClassificationModel train_classifier(const ExperimentConfig& cfg, const ClassificationData& data);

/// Test accuracy of a state predictor whose outputs are class scores.
double test_accuracy(const ClassificationModel& model, const StatePredictor& predictor);

// ------------------------------------------------------------------- sweeps

/// Ranked subset of a sweep mode for the given optimal observables.
OperatorSubset sweep_subset(const ExperimentConfig& cfg, SweepMode mode, const OptimalObservableSet& observables);

/// Identity, then single-qubit Z, then ZZ pairs, then higher Z-strings by
/// weight and code, as Pauli codes.
std::vector<std::uint64_t> constrained_z_order(unsigned n_qubits);

/// Sizes to evaluate for a subset of `available` operators.
std::vector<std::size_t> sweep_sizes(const ExperimentConfig& cfg, std::size_t available);

/// Runs every seed of the configured task. Rows are produced in a fixed
/// order regardless of the thread count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// ------------------------------------------------------------------ output

struct SummaryRow {
  std::string task;
  std::string mode;
  std::size_t subset_size = 0;
  std::string metric;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation across seeds
  std::size_t n = 0;
  std::size_t n_censored = 0;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_result_header(std::ostream& os);
void write_result_row(std::ostream& os, const ResultRow& row);
std::vector<ResultRow> read_results(std::istream& is);
void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows);

/// Incremental writer for one run directory `output_dir/run_id`. Creating it
/// fails when the directory already exists. The table of `task` exists even
/// when no row arrives.
class ResultWriter {
 public:
  ResultWriter(const std::filesystem::path& output_dir, const std::string& run_id, const std::string& task);
  void write(const ResultRow& row);
  /// Writes the per-task summaries and the manifest, returns every file path.
  std::vector<std::filesystem::path> finish(const std::string& manifest);
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::ofstream& table(const std::string& task);

  std::filesystem::path dir_;
  std::map<std::string, std::unique_ptr<std::ofstream>> tables_;
  std::vector<ResultRow> rows_;
};

/// Writes `rows` through a fresh ResultWriter.
std::vector<std::filesystem::path> emit_results(const std::vector<ResultRow>& rows,
                                                const std::filesystem::path& output_dir, const std::string& run_id,
                                                const std::string& task, const std::string& manifest);

/// Config echo, seeds, build version and timing.
std::string make_manifest(const ExperimentConfig& cfg, std::uint64_t seed_offset, double wall_seconds,
                          const std::map<std::string, std::string>& extra = {});

inline constexpr const char* kVersion = "1.0.0";

}  // namespace qrck
