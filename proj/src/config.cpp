#include "qrck/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include "qrck/errors.hpp"

namespace qrck {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError(key, "expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  if (!v.empty() && v.front() == '-') throw ValidationError(key, "must be non-negative, got '" + v + "'");
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

unsigned to_unsigned(const std::string& key, const std::string& v) {
  const auto n = to_count(key, v);
  if (n > 1'000'000) throw ValidationError(key, "value " + v + " is out of range");
  return static_cast<unsigned>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(key, "expected true or false, got '" + v + "'");
}

std::string solver_name(KernelSolver s) {
  switch (s) {
    case KernelSolver::Auto: return "auto";
    case KernelSolver::Dual: return "dual";
    case KernelSolver::OperatorSpace: return "operator_space";
  }
  return "auto";
}

KernelSolver parse_solver(const std::string& key, const std::string& v) {
  if (v == "auto") return KernelSolver::Auto;
  if (v == "dual") return KernelSolver::Dual;
  if (v == "operator_space") return KernelSolver::OperatorSpace;
  throw ValidationError(key, "unknown solver '" + v + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + f(items[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Order here is the order of config_to_text. `task` must stay first since
// parsing starts from the task's defaults.
const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<Field> table = {
      {"task", [](C& c, S, S v) { c.task = parse_task(v); }, [](const C& c) { return to_string(c.task); }},
      {"run_id", [](C& c, S, S v) { c.run_id = v; }, [](const C& c) { return c.run_id; }},

      {"reservoir.n_input", [](C& c, S k, S v) { c.reservoir.n_input = to_unsigned(k, v); },
       [](const C& c) { return std::to_string(c.reservoir.n_input); }},
      {"reservoir.n_ancilla", [](C& c, S k, S v) { c.reservoir.n_ancilla = to_unsigned(k, v); },
       [](const C& c) { return std::to_string(c.reservoir.n_ancilla); }},
      {"reservoir.encoding",
       [](C& c, S k, S v) {
         try {
           c.reservoir.encoding.scheme = parse_encoding(v);
         } catch (const ValidationError& e) {
           throw ValidationError(k, e.what());
         }
       },
       [](const C& c) { return to_string(c.reservoir.encoding.scheme); }},
      {"reservoir.input_dim",
       [](C& c, S k, S v) { c.reservoir.encoding.input_dim = to_unsigned(k, v); },
       [](const C& c) { return std::to_string(c.reservoir.encoding.input_dim); }},
      {"reservoir.h", [](C& c, S k, S v) { c.reservoir.tfim_h = to_double(k, v); },
       [](const C& c) { return fmt(c.reservoir.tfim_h); }},
      {"reservoir.j", [](C& c, S k, S v) { c.reservoir.tfim_j = to_double(k, v); },
       [](const C& c) { return fmt(c.reservoir.tfim_j); }},
      {"reservoir.t", [](C& c, S k, S v) { c.reservoir.evolution_time = to_double(k, v); },
       [](const C& c) { return fmt(c.reservoir.evolution_time); }},
      {"reservoir.variant",
       [](C& c, S k, S v) {
         try {
           c.reservoir.variant = parse_tfim_variant(v);
         } catch (const ValidationError& e) {
           throw ValidationError(k, e.what());
         }
       },
       [](const C& c) { return to_string(c.reservoir.variant); }},
      {"reservoir.washout",
       [](C& c, S k, S v) { c.reservoir.washout = to_count(k, v); },
       [](const C& c) { return std::to_string(c.reservoir.washout); }},
      {"reservoir.unitary", [](C& c, S k, S v) { c.use_unitary = to_bool(k, v); },
       [](const C& c) { return std::string(c.use_unitary ? "true" : "false"); }},

      {"training.ridge", [](C& c, S k, S v) { c.ridge = to_double(k, v); }, [](const C& c) { return fmt(c.ridge); }},
      {"training.refit_ridge",
       [](C& c, S k, S v) {
         if (v == "same") c.refit_ridge.reset();
         else c.refit_ridge = to_double(k, v);
       },
       [](const C& c) { return c.refit_ridge ? fmt(*c.refit_ridge) : std::string("same"); }},
      {"training.p_max", [](C& c, S k, S v) { c.p_max = to_unsigned(k, v); },
       [](const C& c) { return std::to_string(c.p_max); }},
      {"training.subset_sizes",
       [](C& c, S k, S v) {
         c.subset_sizes.clear();
         c.sweep_all_sizes = v == "all";
         if (c.sweep_all_sizes || v == "none") return;
         for (const auto& item : split_list(v)) c.subset_sizes.push_back(to_count(k, item));
       },
       [](const C& c) {
         if (c.sweep_all_sizes) return std::string("all");
         if (c.subset_sizes.empty()) return std::string("none");
         return join(c.subset_sizes, [](std::size_t s) { return std::to_string(s); });
       }},
      {"training.modes",
       [](C& c, S k, S v) {
         c.modes.clear();
         for (const auto& item : split_list(v)) {
           try {
             c.modes.push_back(parse_sweep_mode(item));
           } catch (const ValidationError& e) {
             throw ValidationError(k, e.what());
           }
         }
       },
       [](const C& c) { return join(c.modes, [](SweepMode m) { return to_string(m); }); }},
      {"training.scope",
       [](C& c, S k, S v) {
         if (v == "joint") c.per_channel_ranking = false;
         else if (v == "per_channel") c.per_channel_ranking = true;
         else throw ValidationError(k, "expected joint or per_channel, got '" + v + "'");
       },
       [](const C& c) { return std::string(c.per_channel_ranking ? "per_channel" : "joint"); }},
      {"training.max_weight", [](C& c, S k, S v) { c.max_weight = to_unsigned(k, v); },
       [](const C& c) { return std::to_string(c.max_weight); }},
      {"training.input_noise", [](C& c, S k, S v) { c.input_noise = to_double(k, v); },
       [](const C& c) { return fmt(c.input_noise); }},
      {"training.train_length", [](C& c, S k, S v) { c.train_length = to_count(k, v); },
       [](const C& c) { return std::to_string(c.train_length); }},
      {"training.solver", [](C& c, S k, S v) { c.solver = parse_solver(k, v); },
       [](const C& c) { return solver_name(c.solver); }},
      {"training.primal_reference", [](C& c, S k, S v) { c.primal_reference = to_bool(k, v); },
       [](const C& c) { return std::string(c.primal_reference ? "true" : "false"); }},

      {"data.dt", [](C& c, S k, S v) { c.dt = to_double(k, v); }, [](const C& c) { return fmt(c.dt); }},
      {"data.x0",
       [](C& c, S k, S v) {
         const auto items = split_list(v);
         if (items.size() != 3) throw ValidationError(k, "expected three comma-separated numbers");
         for (int i = 0; i < 3; ++i) c.x0[i] = to_double(k, items[i]);
       },
       [](const C& c) { return fmt(c.x0[0]) + "," + fmt(c.x0[1]) + "," + fmt(c.x0[2]); }},
      {"data.x0_jitter", [](C& c, S k, S v) { c.x0_jitter = to_double(k, v); },
       [](const C& c) { return fmt(c.x0_jitter); }},
      {"data.discard", [](C& c, S k, S v) { c.discard = to_count(k, v); },
       [](const C& c) { return std::to_string(c.discard); }},
      {"data.scale_lo", [](C& c, S k, S v) { c.scale_lo = to_double(k, v); },
       [](const C& c) { return fmt(c.scale_lo); }},
      {"data.scale_hi", [](C& c, S k, S v) { c.scale_hi = to_double(k, v); },
       [](const C& c) { return fmt(c.scale_hi); }},
      {"data.history_noise", [](C& c, S k, S v) { c.history_noise = to_double(k, v); },
       [](const C& c) { return fmt(c.history_noise); }},
      {"data.n_frequencies", [](C& c, S k, S v) { c.n_frequencies = to_unsigned(k, v); },
       [](const C& c) { return std::to_string(c.n_frequencies); }},
      {"data.omega0", [](C& c, S k, S v) { c.omega0 = to_double(k, v); }, [](const C& c) { return fmt(c.omega0); }},
      {"data.max_abs", [](C& c, S k, S v) { c.max_abs = to_double(k, v); },
       [](const C& c) { return fmt(c.max_abs); }},
      {"data.mnist_dir", [](C& c, S, S v) { c.mnist_dir = v; }, [](const C& c) { return c.mnist_dir; }},
      {"data.n_subset", [](C& c, S k, S v) { c.n_subset = to_count(k, v); },
       [](const C& c) { return std::to_string(c.n_subset); }},
      {"data.test_fraction", [](C& c, S k, S v) { c.test_fraction = to_double(k, v); },
       [](const C& c) { return fmt(c.test_fraction); }},
      {"data.synthetic_classes", [](C& c, S k, S v) { c.synthetic_classes = to_count(k, v); },
       [](const C& c) { return std::to_string(c.synthetic_classes); }},
      {"data.synthetic_dims", [](C& c, S k, S v) { c.synthetic_dims = to_count(k, v); },
       [](const C& c) { return std::to_string(c.synthetic_dims); }},
      {"data.synthetic_spread", [](C& c, S k, S v) { c.synthetic_spread = to_double(k, v); },
       [](const C& c) { return fmt(c.synthetic_spread); }},

      {"evaluation.n_trials", [](C& c, S k, S v) { c.n_trials = to_count(k, v); },
       [](const C& c) { return std::to_string(c.n_trials); }},
      {"evaluation.seed_base", [](C& c, S k, S v) { c.seed_base = to_count(k, v); },
       [](const C& c) { return std::to_string(c.seed_base); }},
      {"evaluation.test_window", [](C& c, S k, S v) { c.test_window = to_count(k, v); },
       [](const C& c) { return std::to_string(c.test_window); }},
      {"evaluation.clip", [](C& c, S k, S v) { c.clip = to_bool(k, v); },
       [](const C& c) { return std::string(c.clip ? "true" : "false"); }},

      {"output.dir", [](C& c, S, S v) { c.output_dir = v; }, [](const C& c) { return c.output_dir.string(); }},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

}  // namespace

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Lorenz: return "lorenz";
    case TaskKind::MackeyGlass: return "mackey_glass";
    case TaskKind::Harmonic: return "harmonic";
    case TaskKind::Classify: return "classify";
  }
  return "lorenz";
}

TaskKind parse_task(const std::string& s) {
  if (s == "lorenz") return TaskKind::Lorenz;
  if (s == "mackey_glass") return TaskKind::MackeyGlass;
  if (s == "harmonic") return TaskKind::Harmonic;
  if (s == "classify") return TaskKind::Classify;
  throw ValidationError("task", "unknown task '" + s + "'");
}

std::string to_string(SweepMode m) {
  switch (m) {
    case SweepMode::Pauli: return "pauli";
    case SweepMode::ZString: return "zstring";
    case SweepMode::Eigenvalue: return "eigenvalue";
    case SweepMode::ConstrainedZ: return "primal_zzz";
  }
  return "pauli";
}

SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "pauli") return SweepMode::Pauli;
  if (s == "zstring") return SweepMode::ZString;
  if (s == "eigenvalue") return SweepMode::Eigenvalue;
  if (s == "primal_zzz") return SweepMode::ConstrainedZ;
  throw ValidationError("training.modes", "unknown mode '" + s + "'");
}

std::vector<std::uint64_t> ExperimentConfig::seeds(std::uint64_t seed_offset) const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n_trials; ++i) out.push_back(seed_base + seed_offset + i);
  return out;
}

void ExperimentConfig::validate() const {
  if (run_id.empty() || run_id.find_first_of("/\\ ,") != std::string::npos || run_id == "." || run_id == "..") {
    throw ValidationError("run_id", "must be non-empty without separators, spaces or commas");
  }
  try {
    reservoir.validate();
  } catch (const ValidationError& e) {
    const std::string& f = e.field();
    if (f.rfind("encoding.", 0) == 0) throw ValidationError("reservoir.input_dim", e.what());
    throw;
  }
  if (!(reservoir.tfim_h >= 0.0)) throw ValidationError("reservoir.h", "must be non-negative");
  if (!(reservoir.tfim_j >= 0.0)) throw ValidationError("reservoir.j", "must be non-negative");
  if (!(reservoir.evolution_time >= 0.0)) throw ValidationError("reservoir.t", "must be non-negative");
  if (!(ridge > 0.0)) throw ValidationError("training.ridge", "must be positive");
  if (refit_ridge && !(*refit_ridge > 0.0)) throw ValidationError("training.refit_ridge", "must be positive");
  if (p_max < 1 || p_max > 4) throw ValidationError("training.p_max", "must be in [1, 4]");
  for (auto s : subset_sizes)
    if (s == 0) throw ValidationError("training.subset_sizes", "sizes must be positive");
  if (modes.empty()) throw ValidationError("training.modes", "at least one mode is required");
  if (max_weight > reservoir.n_qubits()) throw ValidationError("training.max_weight", "exceeds the qubit count");
  if (!(input_noise >= 0.0)) throw ValidationError("training.input_noise", "must be non-negative");
  if (!(dt > 0.0)) throw ValidationError("data.dt", "must be positive");
  if (!(x0_jitter >= 0.0)) throw ValidationError("data.x0_jitter", "must be non-negative");
  if (!(history_noise >= 0.0)) throw ValidationError("data.history_noise", "must be non-negative");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("data.test_fraction", "must lie strictly between 0 and 1");
  }
  if (!(synthetic_spread > 0.0)) throw ValidationError("data.synthetic_spread", "must be positive");
  if (n_trials == 0) throw ValidationError("evaluation.n_trials", "must be positive");

  const bool forecasting = task != TaskKind::Classify;
  if (forecasting) {
    if (train_length <= reservoir.washout + 1) {
      throw ValidationError("training.train_length", "must exceed the washout by at least two samples");
    }
    if (test_window == 0) throw ValidationError("evaluation.test_window", "must be positive");
    const double lo = reservoir.encoding.range_min(), hi = reservoir.encoding.range_max();
    if (task == TaskKind::Lorenz) {
      if (reservoir.encoding.input_dim != 3) throw ValidationError("reservoir.input_dim", "lorenz needs 3 inputs");
      if (!(scale_lo >= lo && scale_hi <= hi && scale_lo < scale_hi)) {
        throw ValidationError("data.scale_lo", "scaled range must lie inside the encoding range");
      }
    } else {
      if (reservoir.encoding.input_dim != 1) throw ValidationError("reservoir.input_dim", "scalar task needs 1 input");
    }
    if (task == TaskKind::MackeyGlass && !(scale_lo >= lo && scale_hi <= hi && scale_lo < scale_hi)) {
      throw ValidationError("data.scale_lo", "scaled range must lie inside the encoding range");
    }
    if (task == TaskKind::Harmonic) {
      if (n_frequencies == 0) throw ValidationError("data.n_frequencies", "must be positive");
      if (!(omega0 > 0.0)) throw ValidationError("data.omega0", "must be positive");
      if (!(max_abs > 0.0 && max_abs <= std::max(-lo, hi))) {
        throw ValidationError("data.max_abs", "must be positive and inside the encoding range");
      }
    }
  } else {
    if (reservoir.n_ancilla != 0) throw ValidationError("reservoir.n_ancilla", "classification is stateless");
    if (n_subset < 10) throw ValidationError("data.n_subset", "must be at least 10");
    if (!mnist_dir.empty() && !std::filesystem::is_directory(mnist_dir)) {
      throw ValidationError("data.mnist_dir", "directory " + mnist_dir + " does not exist");
    }
    if (synthetic_classes < 2) throw ValidationError("data.synthetic_classes", "need at least two classes");
    if (synthetic_dims < reservoir.encoding.input_dim) {
      throw ValidationError("data.synthetic_dims", "fewer dimensions than encoded components");
    }
  }
}

ExperimentConfig default_config(TaskKind task) {
  ExperimentConfig c;
  c.task = task;
  c.reservoir.washout = 100;
  switch (task) {
    case TaskKind::Lorenz:
      c.reservoir.n_input = 3;
      c.reservoir.n_ancilla = 1;
      c.reservoir.encoding = EncodingSpec::make(EncodingScheme::AmplitudeSqrt, 3);
      c.ridge = kDefaultRidgeTimeSeries;
      c.train_length = 4000;
      c.dt = 0.02;
      c.test_window = 1500;
      c.scale_lo = 0.05;
      c.scale_hi = 0.95;
      break;
    case TaskKind::MackeyGlass:
      c.reservoir.n_input = 1;
      c.reservoir.n_ancilla = 3;
      c.reservoir.encoding = EncodingSpec::make(EncodingScheme::AmplitudeSqrt, 1);
      c.reservoir.tfim_h = 4.549;
      c.reservoir.tfim_j = 0.635;
      c.reservoir.evolution_time = 0.668;
      c.ridge = 1.7e-6;
      c.input_noise = 1e-3;
      c.train_length = 3000;
      c.dt = 1.0;
      c.test_window = 1000;
      c.scale_lo = 0.0;
      c.scale_hi = 0.3;
      break;
    case TaskKind::Harmonic:
      c.reservoir.n_input = 1;
      c.reservoir.n_ancilla = 3;
      c.reservoir.encoding = EncodingSpec::make(EncodingScheme::AmplitudeSymmetric, 1);
      c.reservoir.tfim_h = 1.688;
      c.reservoir.tfim_j = 0.331;
      c.reservoir.evolution_time = 1.606;
      c.ridge = 8.6e-9;
      c.input_noise = 3e-3;
      c.train_length = 2500;
      c.dt = 0.2;
      c.omega0 = 1.0;
      c.max_abs = 0.7;
      c.test_window = 500;
      break;
    case TaskKind::Classify:
      c.reservoir.n_input = 5;
      c.reservoir.n_ancilla = 0;
      c.reservoir.encoding = EncodingSpec::make(EncodingScheme::RotationalPairedYZ, 10);
      c.reservoir.washout = 0;
      c.ridge = kDefaultRidgeClassification;
      c.n_trials = 1;
      c.use_unitary = false;
      c.modes = {SweepMode::Pauli, SweepMode::ZString, SweepMode::ConstrainedZ};
      break;
  }
  return c;
}

ExperimentConfig parse_config(std::istream& is) {
  struct Entry {
    std::string key, value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos || (hash != std::string::npos && eq > hash)) {
      const auto col = raw.find_first_not_of(" \t");
      throw ParseError("expected 'key = value'", line_no, col + 1);
    }
    Entry e{trim(raw.substr(0, eq)), trim(hash == std::string::npos ? raw.substr(eq + 1)
                                                                    : raw.substr(eq + 1, hash - eq - 1)),
            line_no};
    if (e.key.empty()) throw ParseError("missing key before '='", line_no, eq + 1);
    if (!find_field(e.key)) throw ValidationError(e.key, "unknown configuration key (line " +
                                                             std::to_string(line_no) + ")");
    if (!seen.insert(e.key).second) throw ValidationError(e.key, "duplicate key (line " + std::to_string(line_no) + ")");
    entries.push_back(std::move(e));
  }

  TaskKind task = TaskKind::Lorenz;
  for (const auto& e : entries)
    if (e.key == "task") task = parse_task(e.value);
  ExperimentConfig cfg = default_config(task);
  for (const auto& f : fields())
    for (const auto& e : entries)
      if (e.key == f.key) f.set(cfg, e.key, e.value);
  try {
    cfg.reservoir.encoding = EncodingSpec::make(cfg.reservoir.encoding.scheme, cfg.reservoir.encoding.input_dim);
  } catch (const ValidationError& e) {
    throw ValidationError("reservoir.input_dim", e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  return parse_config(is);
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace qrck
