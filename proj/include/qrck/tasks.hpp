#pragma once

// Benchmark data (Lorenz-63, Mackey-Glass, harmonic signals, IDX image
// files, a synthetic Gaussian mixture), scaling, closed-loop forecasting and
// the evaluation metrics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrck/numerics.hpp"
#include "qrck/quantum.hpp"

namespace qrck {

inline constexpr double kLorenzLyapunov = 0.89;
inline constexpr double kMackeyGlassLyapunov = 6e-3;

/// Per-dimension affine map y = scale * x + offset.
struct ScaleTransform {
  std::vector<double> scale;
  std::vector<double> offset;

  static ScaleTransform identity(std::size_t dims);
  /// Maps the column-wise [min, max] of `data` onto [lo, hi].
  static ScaleTransform fit_minmax(const RealMatrix& data, double lo, double hi);

  std::size_t dims() const { return scale.size(); }
  RealMatrix apply(const RealMatrix& x) const;
  RealMatrix invert(const RealMatrix& y) const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> invert(std::span<const double> y) const;
};

struct TimeSeriesDataset {
  RealMatrix samples;  // T x d
  double dt = 1.0;
  /// Map from the raw trajectory to `samples`.
  ScaleTransform scale_transform;
  std::optional<double> lyapunov_exponent;
};

// ---------------------------------------------------------------- Lorenz-63

struct LorenzParams {
  std::array<double, 3> x0{1.0, 1.0, 1.0};
  double x0_jitter = 0.0;  // seeded uniform offset in [-jitter, jitter] per component
  std::size_t n_samples = 5000;
  double dt_sample = 0.02;
  double max_substep = 1e-3;
  std::size_t discard = 1000;
  std::uint64_t seed = 0;
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

std::array<double, 3> lorenz_rhs(const std::array<double, 3>& x, const LorenzParams& p);
std::array<double, 3> lorenz_rk4_step(const std::array<double, 3>& x, double h, const LorenzParams& p);
TimeSeriesDataset gen_lorenz(const LorenzParams& p);
TimeSeriesDataset gen_lorenz(const std::array<double, 3>& x0, std::size_t n_samples, double dt_sample,
                             std::uint64_t seed);

// ------------------------------------------------------------- Mackey-Glass

struct MackeyGlassParams {
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  double beta = 0.2;
  double gamma = 0.1;
  double exponent = 10.0;
  double delay = 17.0;
  double dt_sample = 1.0;
  double substep = 0.1;
  double history = 0.9;
  double history_noise = 1e-3;  // seeded uniform perturbation amplitude
  std::size_t discard = 1000;
  bool scale_output = true;
  double out_lo = 0.0;
  double out_hi = 0.3;
};

TimeSeriesDataset gen_mackey_glass(const MackeyGlassParams& p);
TimeSeriesDataset gen_mackey_glass(std::size_t n_samples, std::uint64_t seed);

// ----------------------------------------------------------------- Harmonic

struct HarmonicParams {
  unsigned n_frequencies = 9;
  double omega0 = 0.5;
  std::size_t n_samples = 3000;
  double dt = 0.2;
  std::uint64_t seed = 0;
  double max_abs = 0.95;  // rescale target for max |z|; <= 0 disables rescaling
  std::vector<double> a;  // forced amplitudes; drawn from U[-1, 1] when empty
  std::vector<double> b;
};

double harmonic_signal(std::span<const double> a, std::span<const double> b, double omega0, double t);
TimeSeriesDataset gen_harmonic(const HarmonicParams& p);
TimeSeriesDataset gen_harmonic(unsigned n_frequencies, double omega0, std::size_t n_samples, double dt,
                               std::uint64_t seed);

/// Adds seeded Gaussian noise of standard deviation `std_dev` and clips the
/// result to [lo, hi].
RealMatrix add_input_noise(const RealMatrix& series, double std_dev, std::uint64_t seed, double lo, double hi);

// ------------------------------------------------------------ Classification

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) into a test set of round(test_fraction * n)
/// indices and a training set of the rest.
DataSplit train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

struct ClassificationDataset {
  RealMatrix features;  // P x d
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;
  DataSplit split;
};

/// Raw IDX files: images (magic 0x00000803) and labels (magic 0x00000801).
/// Pixels are scaled to [0, 1].
ClassificationDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
ClassificationDataset parse_idx(std::istream& images, std::istream& labels);

/// Seeded mixture of isotropic Gaussians: class means drawn from N(0, 1) per
/// dimension, samples from N(mean, spread^2), balanced labels.
ClassificationDataset gen_gaussian_mixture(std::size_t n_samples, std::size_t n_classes, std::size_t dims,
                                           double spread, std::uint64_t seed);

struct PcaResult {
  RealMatrix projected;       // P x k, each column min-max scaled to [0, 1]
  RealMatrix scores;          // P x k, centered projections before scaling
  RealMatrix basis;           // d x k, orthonormal columns
  std::vector<double> mean;   // length d
  std::vector<double> variances;  // top-k covariance eigenvalues, descending
  ScaleTransform scaling;     // scores -> projected
};

/// Principal components by eigendecomposition of the covariance. Each basis
/// vector is signed so its largest-magnitude entry is positive.
PcaResult pca_reduce(const RealMatrix& data, std::size_t k);

// -------------------------------------------------------------- Forecasting

using StatePredictor = std::function<std::vector<double>(const QuantumState&)>;

struct ForecastOptions {
  bool clip = true;
};

struct ForecastResult {
  RealMatrix predicted;  // n_steps x d
  RealMatrix truth;      // filled by callers that have it
  std::size_t horizon_steps = 0;
  std::optional<double> horizon_lyapunov;
  bool censored = false;
  double rms_train_error = 0.0;
  std::size_t clip_events = 0;
};

/// Drives the reservoir through `warm_series`, then feeds each prediction
/// back as the next input for `n_steps` steps. Row i of the result is the
/// prediction of the sample that follows the warm series by i steps.
ForecastResult closed_loop_forecast(const StatePredictor& model, const ReservoirSpec& spec, const ComplexMatrix& u,
                                    const RealMatrix& warm_series, std::size_t n_steps,
                                    const ForecastOptions& options = {});

struct Horizon {
  std::size_t steps = 0;
  std::optional<double> lyapunov_units;
  bool censored = false;
};

/// First index at which ||truth_i - predicted_i|| exceeds sigma; the window
/// length (censored) when it never does.
Horizon forecast_horizon(const RealMatrix& truth, const RealMatrix& predicted, double sigma, double dt,
                         std::optional<double> lyapunov = std::nullopt);

/// Root of the mean squared Euclidean row deviation.
double rms_error(const RealMatrix& truth, const RealMatrix& predicted);
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

/// sqrt(mean ||z - mean(z)||^2) over the rows.
double trajectory_sigma(const RealMatrix& z);

// ------------------------------------------------------------------ Text IO

/// Comma-separated table with a one-line header of column names.
void write_table_csv(std::ostream& os, const std::vector<std::string>& header, const RealMatrix& data);
struct Table {
  std::vector<std::string> header;
  RealMatrix data;
};
Table read_table_csv(std::istream& is);

}  // namespace qrck
