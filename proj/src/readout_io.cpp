#include "qrck/readout_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace qrck {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Tokenizer {
 public:
  explicit Tokenizer(std::istream& is) : is_(is) {}

  // Next whitespace-separated token, or nullopt at end of input.
  std::optional<std::string> next() {
    int ch;
    while ((ch = is_.get()) != EOF && std::isspace(ch)) advance(ch);
    if (ch == EOF) return std::nullopt;
    tok_line_ = line_;
    tok_col_ = col_;
    std::string tok;
    do {
      tok.push_back(static_cast<char>(ch));
      advance(ch);
    } while ((ch = is_.peek()) != EOF && !std::isspace(ch) && (is_.get(), true));
    return tok;
  }

  std::string expect_any(const char* what) {
    auto t = next();
    if (!t) throw TruncatedFile(std::string("readout file ended while reading ") + what);
    return *t;
  }

  void expect(const std::string& keyword) {
    const std::string t = expect_any(keyword.c_str());
    if (t != keyword) fail("expected '" + keyword + "', found '" + t + "'");
  }

  double number(const char* what) {
    const std::string t = expect_any(what);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) fail("invalid number '" + t + "' for " + what);
    return v;
  }

  std::uint64_t count(const char* what) {
    const std::string t = expect_any(what);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) fail("invalid count '" + t + "' for " + what);
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, tok_line_, tok_col_); }

 private:
  void advance(int ch) {
    if (ch == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
  }

  std::istream& is_;
  std::size_t line_ = 1, col_ = 1;
  std::size_t tok_line_ = 1, tok_col_ = 1;
};

const char* kind_name(MeasurementGroup::Kind k) {
  switch (k) {
    case MeasurementGroup::Kind::Pauli: return "pauli";
    case MeasurementGroup::Kind::ZString: return "zstring";
    case MeasurementGroup::Kind::Projector: return "projector";
  }
  return "pauli";
}

void write_complex_matrix(std::ostream& os, const ComplexMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) os << ' ' << fmt(m(r, c).real()) << ' ' << fmt(m(r, c).imag());
    os << '\n';
  }
}

ComplexMatrix read_complex_matrix(Tokenizer& t, std::size_t d) {
  ComplexMatrix m(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double re = t.number("matrix entry");
      const double im = t.number("matrix entry");
      m(r, c) = {re, im};
    }
  return m;
}

constexpr std::uint64_t kMaxDimension = std::uint64_t{1} << kMaxReservoirQubits;
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

}  // namespace

void write_readout(std::ostream& os, const TrainedReadout& r) {
  const ReservoirSpec& s = r.reservoir;
  os << kReadoutMagic << '\n';
  os << "reservoir " << s.n_input << ' ' << s.n_ancilla << ' ' << to_string(s.encoding.scheme) << ' '
     << s.encoding.input_dim << ' ' << fmt(s.tfim_h) << ' ' << fmt(s.tfim_j) << ' ' << fmt(s.evolution_time) << ' '
     << to_string(s.variant) << ' ' << s.washout << '\n';
  os << "ridge " << fmt(r.ridge) << '\n';
  os << "alpha " << r.alpha.rows() << ' ' << r.alpha.cols() << '\n';
  for (std::size_t i = 0; i < r.alpha.rows(); ++i) {
    for (std::size_t c = 0; c < r.alpha.cols(); ++c) os << (c ? " " : "") << fmt(r.alpha(i, c));
    os << '\n';
  }
  const std::size_t d = r.observables.empty() ? 0 : r.observables.front().rows();
  os << "observables " << r.observables.size() << ' ' << d << '\n';
  for (const auto& m : r.observables) {
    if (m.rows() != d || m.cols() != d) throw DimensionMismatch("write_readout: observables differ in size");
    write_complex_matrix(os, m);
  }
  os << "primal " << (r.primal ? 1 : 0) << '\n';
  if (r.primal) {
    const PrimalSolution& p = *r.primal;
    os << "set " << p.operator_set.n_qubits << ' ' << fmt(p.operator_set.scale) << ' '
       << p.operator_set.groups.size() << '\n';
    for (const auto& g : p.operator_set.groups) {
      os << "group " << kind_name(g.kind) << ' ' << g.codes.size() << ' ' << (g.rotation.empty() ? 0 : 1);
      for (auto c : g.codes) os << ' ' << c;
      os << '\n';
      if (!g.rotation.empty()) write_complex_matrix(os, g.rotation);
    }
    os << "monomial_order " << p.monomial_order << '\n';
    os << "channels " << p.channels.size() << '\n';
    for (const auto& ch : p.channels) {
      os << "channel " << ch.features.size();
      for (auto f : ch.features) os << ' ' << f;
      os << ' ' << ch.weights.size();
      for (double w : ch.weights) os << ' ' << fmt(w);
      os << '\n';
    }
  }
  os << "end\n";
  if (!os) throw IoError("write_readout: stream error");
}

TrainedReadout read_readout(std::istream& is) {
  Tokenizer t(is);
  const auto magic = t.next();
  if (!magic || *magic != kReadoutMagic) {
    throw BadMagic("readout file does not start with " + std::string(kReadoutMagic));
  }
  TrainedReadout r;
  ReservoirSpec& s = r.reservoir;
  t.expect("reservoir");
  s.n_input = static_cast<unsigned>(t.count("n_input"));
  s.n_ancilla = static_cast<unsigned>(t.count("n_ancilla"));
  try {
    const std::string scheme = t.expect_any("encoding");
    const auto dim = static_cast<unsigned>(t.count("input_dim"));
    s.encoding = EncodingSpec::make(parse_encoding(scheme), dim);
    s.tfim_h = t.number("h");
    s.tfim_j = t.number("J");
    s.evolution_time = t.number("t");
    s.variant = parse_tfim_variant(t.expect_any("variant"));
  } catch (const ValidationError& e) {
    t.fail(e.what());
  }
  s.washout = t.count("washout");

  t.expect("ridge");
  r.ridge = t.number("ridge");

  t.expect("alpha");
  const auto p = t.count("alpha rows");
  const auto c = t.count("alpha columns");
  if (p > kMaxCount || c > kMaxCount || p * c > kMaxCount) t.fail("alpha shape too large");
  r.alpha = RealMatrix(p, c);
  for (std::size_t i = 0; i < p * c; ++i) r.alpha.data()[i] = t.number("alpha entry");

  t.expect("observables");
  const auto n_obs = t.count("observable count");
  const auto d = t.count("observable dimension");
  if (d > kMaxDimension || n_obs > kMaxCount) t.fail("observable shape too large");
  if (p != 0 && n_obs != 0 && n_obs != c) {
    throw CountMismatch("readout has " + std::to_string(n_obs) + " observables for " + std::to_string(c) +
                        " alpha columns");
  }
  for (std::size_t i = 0; i < n_obs; ++i) r.observables.push_back(read_complex_matrix(t, d));

  t.expect("primal");
  const auto has_primal = t.count("primal flag");
  if (has_primal > 1) t.fail("primal flag must be 0 or 1");
  if (has_primal) {
    PrimalSolution sol;
    t.expect("set");
    sol.operator_set.n_qubits = static_cast<unsigned>(t.count("set qubits"));
    if (sol.operator_set.n_qubits > kMaxReservoirQubits) t.fail("measurement set qubit count too large");
    sol.operator_set.scale = t.number("set scale");
    const auto n_groups = t.count("group count");
    if (n_groups > kMaxCount) t.fail("group count too large");
    const std::size_t dim = std::size_t{1} << sol.operator_set.n_qubits;
    for (std::size_t g = 0; g < n_groups; ++g) {
      t.expect("group");
      MeasurementGroup group;
      const std::string kind = t.expect_any("group kind");
      if (kind == "pauli") group.kind = MeasurementGroup::Kind::Pauli;
      else if (kind == "zstring") group.kind = MeasurementGroup::Kind::ZString;
      else if (kind == "projector") group.kind = MeasurementGroup::Kind::Projector;
      else t.fail("unknown group kind '" + kind + "'");
      const auto n_codes = t.count("code count");
      if (n_codes > kMaxCount) t.fail("code count too large");
      const auto has_rotation = t.count("rotation flag");
      for (std::size_t k = 0; k < n_codes; ++k) group.codes.push_back(t.count("code"));
      if (has_rotation) group.rotation = read_complex_matrix(t, dim);
      sol.operator_set.groups.push_back(std::move(group));
    }
    sol.operator_set.validate();
    t.expect("monomial_order");
    sol.monomial_order = static_cast<unsigned>(t.count("monomial order"));
    if (sol.monomial_order == 0) t.fail("monomial order must be at least 1");
    t.expect("channels");
    const auto n_channels = t.count("channel count");
    if (n_channels > kMaxCount) t.fail("channel count too large");
    const std::size_t n_features = sol.operator_set.size();
    for (std::size_t ch = 0; ch < n_channels; ++ch) {
      t.expect("channel");
      ChannelReadout readout;
      const auto nf = t.count("feature count");
      if (nf > n_features) throw CountMismatch("channel lists more features than the set measures");
      for (std::size_t k = 0; k < nf; ++k) {
        const auto f = t.count("feature index");
        if (f >= n_features) t.fail("feature index out of range");
        readout.features.push_back(f);
      }
      const auto nw = t.count("weight count");
      if (nw != monomial_count(nf, sol.monomial_order)) {
        throw CountMismatch("channel has " + std::to_string(nw) + " weights, expected " +
                            std::to_string(monomial_count(nf, sol.monomial_order)));
      }
      for (std::size_t k = 0; k < nw; ++k) readout.weights.push_back(t.number("weight"));
      sol.channels.push_back(std::move(readout));
    }
    sol.ridge = r.ridge;
    r.primal = std::move(sol);
  }
  const std::string tail = t.expect_any("end marker");
  if (tail != "end") throw CountMismatch("unexpected token '" + tail + "' where the end marker belongs");
  return r;
}

void save_readout(const std::filesystem::path& path, const TrainedReadout& r) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_readout(os, r);
}

TrainedReadout load_readout(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read_readout(is);
}

}  // namespace qrck
