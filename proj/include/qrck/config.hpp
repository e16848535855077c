#pragma once

// Experiment configuration: flat `key = value` text with dotted section
// prefixes, `#` comments and blank lines. Unknown and duplicate keys are
// rejected.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qrck/quantum.hpp"
#include "qrck/training.hpp"

namespace qrck {

enum class TaskKind { Lorenz, MackeyGlass, Harmonic, Classify };
std::string to_string(TaskKind t);
TaskKind parse_task(const std::string& s);

enum class SweepMode { Pauli, ZString, Eigenvalue, ConstrainedZ };
std::string to_string(SweepMode m);
SweepMode parse_sweep_mode(const std::string& s);

struct ExperimentConfig {
  TaskKind task = TaskKind::Lorenz;
  std::string run_id = "run";

  ReservoirSpec reservoir;
  bool use_unitary = true;

  double ridge = kDefaultRidgeTimeSeries;
  std::optional<double> refit_ridge;  // defaults to `ridge`
  unsigned p_max = 1;
  std::vector<std::size_t> subset_sizes;  // empty: no sweep
  bool sweep_all_sizes = false;
  std::vector<SweepMode> modes{SweepMode::Pauli, SweepMode::ZString};
  bool per_channel_ranking = false;
  unsigned max_weight = 0;  // 0: no filter
  double input_noise = 0.0;
  std::size_t train_length = 4000;
  KernelSolver solver = KernelSolver::Auto;
  bool primal_reference = true;

  // Data generation.
  double dt = 0.02;
  std::array<double, 3> x0{1.0, 1.0, 1.0};
  double x0_jitter = 5.0;
  std::size_t discard = 1000;
  double scale_lo = 0.05;
  double scale_hi = 0.95;
  double history_noise = 1e-3;
  unsigned n_frequencies = 9;
  double omega0 = 0.5;
  double max_abs = 0.95;
  std::string mnist_dir;
  std::size_t n_subset = 10000;
  double test_fraction = 0.2;
  std::size_t synthetic_classes = 10;
  std::size_t synthetic_dims = 20;
  double synthetic_spread = 1.0;

  // Evaluation.
  std::size_t n_trials = 10;
  std::uint64_t seed_base = 0;
  std::size_t test_window = 500;
  bool clip = true;

  std::filesystem::path output_dir = "results";

  double effective_refit_ridge() const { return refit_ridge.value_or(ridge); }
  /// Seeds of the trials, offset by `seed_offset`.
  std::vector<std::uint64_t> seeds(std::uint64_t seed_offset = 0) const;
  void validate() const;
};

/// Task-specific defaults, applied before the file's own keys.
ExperimentConfig default_config(TaskKind task);

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field as `key = value` lines in a fixed order; parse_config accepts
/// the output and reproduces the same configuration.
std::string config_to_text(const ExperimentConfig& cfg);

}  // namespace qrck
