#include "qrck/tasks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qrck/random.hpp"

namespace qrck {

// ------------------------------------------------------------------- Scaling

ScaleTransform ScaleTransform::identity(std::size_t dims) {
  return {std::vector<double>(dims, 1.0), std::vector<double>(dims, 0.0)};
}

ScaleTransform ScaleTransform::fit_minmax(const RealMatrix& data, double lo, double hi) {
  if (data.rows() == 0) throw DimensionMismatch("fit_minmax: empty data");
  if (!(hi > lo)) throw ValidationError("scaling", "upper bound must exceed lower bound");
  ScaleTransform t = identity(data.cols());
  for (std::size_t c = 0; c < data.cols(); ++c) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      mn = std::min(mn, data(r, c));
      mx = std::max(mx, data(r, c));
    }
    if (mx > mn) {
      t.scale[c] = (hi - lo) / (mx - mn);
      t.offset[c] = lo - t.scale[c] * mn;
    } else {
      t.scale[c] = 1.0;
      t.offset[c] = 0.5 * (lo + hi) - mn;
    }
  }
  return t;
}

std::vector<double> ScaleTransform::apply(std::span<const double> x) const {
  if (x.size() != dims()) throw DimensionMismatch("scale transform dimension mismatch");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = scale[i] * x[i] + offset[i];
  return y;
}

std::vector<double> ScaleTransform::invert(std::span<const double> y) const {
  if (y.size() != dims()) throw DimensionMismatch("scale transform dimension mismatch");
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (y[i] - offset[i]) / scale[i];
  return x;
}

RealMatrix ScaleTransform::apply(const RealMatrix& x) const {
  RealMatrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = apply(x.row(r));
    std::copy(row.begin(), row.end(), y.row(r).begin());
  }
  return y;
}

RealMatrix ScaleTransform::invert(const RealMatrix& y) const {
  RealMatrix x(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto row = invert(y.row(r));
    std::copy(row.begin(), row.end(), x.row(r).begin());
  }
  return x;
}

// -------------------------------------------------------------------- Lorenz

std::array<double, 3> lorenz_rhs(const std::array<double, 3>& x, const LorenzParams& p) {
  return {p.sigma * (x[1] - x[0]), x[0] * (p.rho - x[2]) - x[1], x[0] * x[1] - p.beta * x[2]};
}

std::array<double, 3> lorenz_rk4_step(const std::array<double, 3>& x, double h, const LorenzParams& p) {
  auto axpy = [](const std::array<double, 3>& a, double s, const std::array<double, 3>& b) {
    return std::array<double, 3>{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
  };
  const auto k1 = lorenz_rhs(x, p);
  const auto k2 = lorenz_rhs(axpy(x, 0.5 * h, k1), p);
  const auto k3 = lorenz_rhs(axpy(x, 0.5 * h, k2), p);
  const auto k4 = lorenz_rhs(axpy(x, h, k3), p);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

TimeSeriesDataset gen_lorenz(const LorenzParams& p) {
  if (!(p.dt_sample > 0.0)) throw ValidationError("data.dt", "sampling step must be positive");
  if (!(p.max_substep > 0.0)) throw ValidationError("data.max_substep", "must be positive");
  const auto n_sub = static_cast<std::size_t>(std::ceil(p.dt_sample / p.max_substep - 1e-9));
  const double h = p.dt_sample / static_cast<double>(n_sub);
  std::array<double, 3> x = p.x0;
  if (p.x0_jitter > 0.0) {
    Rng rng(p.seed);
    for (auto& v : x) v += rng.uniform(-p.x0_jitter, p.x0_jitter);
  }
  TimeSeriesDataset ds;
  ds.samples = RealMatrix(p.n_samples, 3);
  ds.dt = p.dt_sample;
  ds.scale_transform = ScaleTransform::identity(3);
  ds.lyapunov_exponent = kLorenzLyapunov;
  for (std::size_t s = 0; s < p.discard + p.n_samples; ++s) {
    if (s >= p.discard) std::copy(x.begin(), x.end(), ds.samples.row(s - p.discard).begin());
    for (std::size_t k = 0; k < n_sub; ++k) x = lorenz_rk4_step(x, h, p);
  }
  return ds;
}

TimeSeriesDataset gen_lorenz(const std::array<double, 3>& x0, std::size_t n_samples, double dt_sample,
                             std::uint64_t seed) {
  LorenzParams p;
  p.x0 = x0;
  p.n_samples = n_samples;
  p.dt_sample = dt_sample;
  p.seed = seed;
  return gen_lorenz(p);
}

// -------------------------------------------------------------- Mackey-Glass

TimeSeriesDataset gen_mackey_glass(const MackeyGlassParams& p) {
  if (!(p.substep > 0.0) || !(p.dt_sample > 0.0)) throw ValidationError("data", "steps must be positive");
  const double delay_steps = p.delay / p.substep;
  const double sample_steps = p.dt_sample / p.substep;
  if (std::abs(delay_steps - std::round(delay_steps)) > 1e-9 ||
      std::abs(sample_steps - std::round(sample_steps)) > 1e-9) {
    throw ValidationError("data.substep", "delay and sampling step must be multiples of the substep");
  }
  const auto d = static_cast<std::size_t>(std::llround(delay_steps));
  const auto every = static_cast<std::size_t>(std::llround(sample_steps));
  if (d < 2) throw ValidationError("data.delay", "delay must span at least two substeps");

  // buf[n + d + 2] holds z at substep n; history covers n = -(d + 2) .. 0.
  std::vector<double> buf;
  const std::size_t total = p.discard + p.n_samples;
  buf.reserve(d + 3 + total * every);
  Rng rng(p.seed);
  for (std::size_t i = 0; i < d + 3; ++i) {
    double v = p.history;
    if (p.history_noise > 0.0) v += rng.uniform(-p.history_noise, p.history_noise);
    buf.push_back(v);
  }
  const std::size_t base = d + 2;
  auto z_at = [&](std::size_t n_plus_base) { return buf[n_plus_base]; };
  auto f = [&](double z, double zd) { return p.beta * zd / (1.0 + std::pow(zd, p.exponent)) - p.gamma * z; };
  const double h = p.substep;

  std::vector<double> raw;
  raw.reserve(total);
  std::size_t n = 0;  // current substep
  for (std::size_t s = 0; s < total; ++s) {
    raw.push_back(z_at(n + base));
    for (std::size_t k = 0; k < every; ++k, ++n) {
      const std::size_t i = n + base;  // index of z_n
      const double z = buf[i];
      const double zd0 = buf[i - d];
      const double zd1 = buf[i - d + 1];
      const double zdh = (-buf[i - d - 1] + 9.0 * buf[i - d] + 9.0 * buf[i - d + 1] - buf[i - d + 2]) / 16.0;
      const double k1 = f(z, zd0);
      const double k2 = f(z + 0.5 * h * k1, zdh);
      const double k3 = f(z + 0.5 * h * k2, zdh);
      const double k4 = f(z + h * k3, zd1);
      buf.push_back(z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
  }

  TimeSeriesDataset ds;
  ds.dt = p.dt_sample;
  ds.lyapunov_exponent = kMackeyGlassLyapunov;
  RealMatrix kept(p.n_samples, 1);
  for (std::size_t i = 0; i < p.n_samples; ++i) kept(i, 0) = raw[p.discard + i];
  ds.scale_transform = p.scale_output && p.n_samples > 0 ? ScaleTransform::fit_minmax(kept, p.out_lo, p.out_hi)
                                                        : ScaleTransform::identity(1);
  ds.samples = ds.scale_transform.apply(kept);
  if (p.scale_output) {
    for (auto& v : std::span<double>(ds.samples.data(), ds.samples.size())) v = std::clamp(v, p.out_lo, p.out_hi);
  }
  return ds;
}

TimeSeriesDataset gen_mackey_glass(std::size_t n_samples, std::uint64_t seed) {
  MackeyGlassParams p;
  p.n_samples = n_samples;
  p.seed = seed;
  return gen_mackey_glass(p);
}

// ------------------------------------------------------------------ Harmonic

double harmonic_signal(std::span<const double> a, std::span<const double> b, double omega0, double t) {
  if (a.size() != b.size()) throw DimensionMismatch("harmonic_signal: amplitude lists differ in length");
  double z = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double w = static_cast<double>(k + 1) * omega0 * t;
    z += a[k] * std::cos(w) + b[k] * std::sin(w);
  }
  return z;
}

TimeSeriesDataset gen_harmonic(const HarmonicParams& p) {
  if (p.n_frequencies == 0) throw ValidationError("data.n_frequencies", "must be at least 1");
  std::vector<double> a = p.a;
  std::vector<double> b = p.b;
  if (a.empty() && b.empty()) {
    Rng rng(p.seed);
    for (unsigned k = 0; k < p.n_frequencies; ++k) a.push_back(rng.uniform(-1.0, 1.0));
    for (unsigned k = 0; k < p.n_frequencies; ++k) b.push_back(rng.uniform(-1.0, 1.0));
  }
  if (a.size() != p.n_frequencies || b.size() != p.n_frequencies) {
    throw DimensionMismatch("gen_harmonic: forced amplitudes must have n_frequencies entries");
  }
  TimeSeriesDataset ds;
  ds.dt = p.dt;
  ds.samples = RealMatrix(p.n_samples, 1);
  double peak = 0.0;
  for (std::size_t n = 0; n < p.n_samples; ++n) {
    ds.samples(n, 0) = harmonic_signal(a, b, p.omega0, static_cast<double>(n) * p.dt);
    peak = std::max(peak, std::abs(ds.samples(n, 0)));
  }
  ds.scale_transform = ScaleTransform::identity(1);
  if (p.max_abs > 0.0 && peak > 0.0) {
    ds.scale_transform.scale[0] = p.max_abs / peak;
    ds.samples = ds.scale_transform.apply(ds.samples);
  }
  return ds;
}

TimeSeriesDataset gen_harmonic(unsigned n_frequencies, double omega0, std::size_t n_samples, double dt,
                               std::uint64_t seed) {
  HarmonicParams p;
  p.n_frequencies = n_frequencies;
  p.omega0 = omega0;
  p.n_samples = n_samples;
  p.dt = dt;
  p.seed = seed;
  return gen_harmonic(p);
}

RealMatrix add_input_noise(const RealMatrix& series, double std_dev, std::uint64_t seed, double lo, double hi) {
  RealMatrix out = series;
  if (std_dev <= 0.0) return out;
  Rng rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::clamp(out.data()[i] + std_dev * rng.normal(), lo, hi);
  return out;
}

// ------------------------------------------------------------ Classification

DataSplit train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ValidationError("data.test_fraction", "must lie in [0, 1]");
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  DataSplit s;
  s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

namespace {

std::uint32_t read_be32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw TruncatedFile(std::string("IDX header truncated: ") + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

ClassificationDataset parse_idx(std::istream& images, std::istream& labels) {
  const std::uint32_t im_magic = read_be32(images, "image magic");
  if (im_magic != 0x00000803U) throw BadMagic("image file magic is not 0x00000803");
  const std::uint32_t n = read_be32(images, "image count");
  const std::uint32_t rows = read_be32(images, "image rows");
  const std::uint32_t cols = read_be32(images, "image columns");
  const std::uint32_t lb_magic = read_be32(labels, "label magic");
  if (lb_magic != 0x00000801U) throw BadMagic("label file magic is not 0x00000801");
  const std::uint32_t n_labels = read_be32(labels, "label count");
  if (n != n_labels) {
    throw CountMismatch(std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
  }
  const std::size_t d = std::size_t{rows} * cols;
  ClassificationDataset ds;
  ds.features = RealMatrix(n, d);
  std::vector<unsigned char> buf(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d))) {
      throw TruncatedFile("image data ends at image " + std::to_string(i));
    }
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = buf[j] / 255.0;
  }
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int ch = labels.get();
    if (ch == EOF) throw TruncatedFile("label data ends at label " + std::to_string(i));
    ds.labels[i] = static_cast<std::size_t>(ch);
    ds.n_classes = std::max(ds.n_classes, ds.labels[i] + 1);
  }
  return ds;
}

ClassificationDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ifstream im(images, std::ios::binary);
  if (!im) throw IoError("cannot open " + images.string());
  std::ifstream lb(labels, std::ios::binary);
  if (!lb) throw IoError("cannot open " + labels.string());
  return parse_idx(im, lb);
}

ClassificationDataset gen_gaussian_mixture(std::size_t n_samples, std::size_t n_classes, std::size_t dims,
                                           double spread, std::uint64_t seed) {
  if (n_classes < 2) throw ValidationError("data.n_classes", "need at least two classes");
  if (dims == 0) throw ValidationError("data.dims", "must be positive");
  Rng rng(seed);
  RealMatrix means(n_classes, dims);
  for (std::size_t i = 0; i < means.size(); ++i) means.data()[i] = rng.normal();
  ClassificationDataset ds;
  ds.n_classes = n_classes;
  ds.features = RealMatrix(n_samples, dims);
  ds.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t c = i % n_classes;
    ds.labels[i] = c;
    for (std::size_t j = 0; j < dims; ++j) ds.features(i, j) = means(c, j) + spread * rng.normal();
  }
  return ds;
}

PcaResult pca_reduce(const RealMatrix& data, std::size_t k) {
  const std::size_t p = data.rows();
  const std::size_t d = data.cols();
  if (k == 0 || k > std::min(p, d)) {
    throw RangeViolation("pca_reduce: k = " + std::to_string(k) + " must lie in [1, min(P, d)]");
  }
  PcaResult r;
  r.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < d; ++j) r.mean[j] += data(i, j);
  for (auto& m : r.mean) m /= static_cast<double>(p);
  RealMatrix centered(p, d);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = data(i, j) - r.mean[j];
  const RealMatrix ct = centered.transpose();
  RealMatrix cov(d, d);
  const double norm = p > 1 ? 1.0 / static_cast<double>(p - 1) : 1.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) cov(a, b) = cov(b, a) = norm * dot(ct.row(a), ct.row(b));
  const EigenDecomposition eig = symmetric_eig(cov);

  r.basis = RealMatrix(d, k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = d - 1 - c;
    r.variances.push_back(eig.eigenvalues[src]);
    std::size_t arg = 0;
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(eig.eigenvectors(j, src).real()) > std::abs(eig.eigenvectors(arg, src).real())) arg = j;
    const double sign = eig.eigenvectors(arg, src).real() < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) r.basis(j, c) = sign * eig.eigenvectors(j, src).real();
  }
  r.scores = centered * r.basis;
  r.scaling = ScaleTransform::fit_minmax(r.scores, 0.0, 1.0);
  r.projected = r.scaling.apply(r.scores);
  for (auto& v : std::span<double>(r.projected.data(), r.projected.size())) v = std::clamp(v, 0.0, 1.0);
  return r;
}

// --------------------------------------------------------------- Forecasting

ForecastResult closed_loop_forecast(const StatePredictor& model, const ReservoirSpec& spec, const ComplexMatrix& u,
                                    const RealMatrix& warm_series, std::size_t n_steps,
                                    const ForecastOptions& options) {
  spec.validate();
  const std::size_t dim = spec.encoding.input_dim;
  if (warm_series.cols() != dim) throw DimensionMismatch("closed_loop_forecast: warm series width");
  if (warm_series.rows() == 0) throw ValidationError("warm_series", "need at least one warm-up sample");
  if (spec.n_ancilla > 0 && warm_series.rows() <= spec.washout) {
    throw ValidationError("warm_series", "must be longer than the washout");
  }
  ReservoirDriver driver(spec, u);
  for (std::size_t t = 0; t < warm_series.rows(); ++t) driver.step(warm_series.row(t));

  ForecastResult out;
  out.predicted = RealMatrix(n_steps, dim);
  const double lo = spec.encoding.range_min();
  const double hi = spec.encoding.range_max();
  std::vector<double> next = model(driver.last());
  for (std::size_t i = 0; i < n_steps; ++i) {
    if (next.size() != dim) throw DimensionMismatch("closed_loop_forecast: model output width");
    if (options.clip) {
      for (auto& v : next) {
        if (v < lo || v > hi || std::isnan(v)) {
          ++out.clip_events;
          v = std::isnan(v) ? 0.5 * (lo + hi) : std::clamp(v, lo, hi);
        }
      }
    }
    std::copy(next.begin(), next.end(), out.predicted.row(i).begin());
    if (i + 1 == n_steps) break;
    next = model(driver.step(next));
  }
  return out;
}

Horizon forecast_horizon(const RealMatrix& truth, const RealMatrix& predicted, double sigma, double dt,
                         std::optional<double> lyapunov) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
    throw DimensionMismatch("forecast_horizon: truth and prediction shapes differ");
  }
  if (!(sigma > 0.0)) throw ValidationError("sigma", "must be positive");
  Horizon h;
  h.steps = truth.rows();
  h.censored = true;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const double e = truth(i, c) - predicted(i, c);
      s += e * e;
    }
    if (!(std::sqrt(s) <= sigma)) {
      h.steps = i;
      h.censored = false;
      break;
    }
  }
  if (lyapunov) h.lyapunov_units = static_cast<double>(h.steps) * dt * *lyapunov;
  return h;
}

double rms_error(const RealMatrix& truth, const RealMatrix& predicted) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
    throw DimensionMismatch("rms_error: shapes differ");
  }
  if (truth.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth.values()[i] - predicted.values()[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(truth.rows()));
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) throw DimensionMismatch("accuracy: lengths differ");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double trajectory_sigma(const RealMatrix& z) {
  if (z.rows() == 0) throw DimensionMismatch("trajectory_sigma: empty trajectory");
  std::vector<double> mean(z.cols(), 0.0);
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t c = 0; c < z.cols(); ++c) mean[c] += z(r, c);
  for (auto& m : mean) m /= static_cast<double>(z.rows());
  double s = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t c = 0; c < z.cols(); ++c) s += (z(r, c) - mean[c]) * (z(r, c) - mean[c]);
  return std::sqrt(s / static_cast<double>(z.rows()));
}

// ------------------------------------------------------------------- Text IO

void write_table_csv(std::ostream& os, const std::vector<std::string>& header, const RealMatrix& data) {
  if (header.size() != data.cols()) throw DimensionMismatch("write_table_csv: header width");
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  char buf[64];
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, data(r, c));
      if (c) os << ',';
      os.write(buf, res.ptr - buf);
    }
    os << '\n';
  }
}

Table read_table_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw TruncatedFile("table has no header line");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  if (t.header.empty()) throw ParseError("empty header", 1, 1);
  std::vector<double> values;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t col = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      const char* first = line.data() + pos;
      const char* last = line.data() + end;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        throw ParseError("invalid number '" + line.substr(pos, end - pos) + "'", line_no, pos + 1);
      }
      values.push_back(v);
      ++col;
      if (end == line.size()) break;
      pos = end + 1;
    }
    if (col != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " columns, found " + std::to_string(col),
                       line_no, 1);
    }
    ++rows;
  }
  t.data = RealMatrix(rows, t.header.size(), std::move(values));
  return t;
}

}  // namespace qrck
