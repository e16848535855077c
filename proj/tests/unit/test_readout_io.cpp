#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "qrck/decompose.hpp"
#include "qrck/readout_io.hpp"
#include "test_util.hpp"

using namespace qrck;
using qrck::testing::random_mixed_state;
using qrck::testing::random_pure_state;

namespace {

TrainedReadout sample_readout() {
  Rng rng(1);
  TrainedReadout r;
  r.reservoir.n_input = 1;
  r.reservoir.n_ancilla = 1;
  r.reservoir.encoding = EncodingSpec::make(EncodingScheme::AmplitudeSymmetric, 1);
  r.reservoir.tfim_h = 1.688;
  r.reservoir.tfim_j = 0.1 + 0.2;  // not exactly representable in short decimal form
  r.reservoir.evolution_time = 1.606;
  r.reservoir.variant = TfimVariant::ZFieldXXCoupling;
  r.reservoir.washout = 17;
  r.ridge = 8.6e-9;
  std::vector<QuantumState> states;
  for (int i = 0; i < 6; ++i) states.push_back(i % 2 ? random_mixed_state(2, rng) : random_pure_state(2, rng));
  RealMatrix y(6, 2);
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
  const DualSolution dual = dual_solve(gram(states), y, 1e-3);
  r.alpha = dual.alpha;
  r.observables = optimal_observable(states, dual);
  std::vector<SpectralDecomposition> spectra;
  for (std::size_t c = 0; c < 2; ++c) spectra.push_back(diagonalize(r.observables[c], c));
  RankOptions options;
  options.scope = RankScope::PerChannel;
  const OperatorSubset subset = rank_operators(spectra, RankMode::ZString, options).prefix(5);
  r.primal = refit_subset(subset, states, y, 1e-3, 2);
  return r;
}

std::string serialize(const TrainedReadout& r) {
  std::ostringstream os;
  write_readout(os, r);
  return os.str();
}

TrainedReadout deserialize(const std::string& s) {
  std::istringstream is(s);
  return read_readout(is);
}

}  // namespace

TEST(ReadoutIo, RoundTripIsExact) {
  const TrainedReadout r = sample_readout();
  const std::string text = serialize(r);
  EXPECT_EQ(text.rfind("QRCK1\n", 0), 0u);
  const TrainedReadout back = deserialize(text);
  EXPECT_EQ(back.reservoir.tfim_j, r.reservoir.tfim_j);
  EXPECT_EQ(back.reservoir.variant, r.reservoir.variant);
  EXPECT_EQ(back.reservoir.encoding.scheme, r.reservoir.encoding.scheme);
  EXPECT_EQ(back.reservoir.washout, 17u);
  EXPECT_EQ(back.ridge, r.ridge);
  EXPECT_EQ(back.alpha, r.alpha);
  ASSERT_EQ(back.observables.size(), 2u);
  EXPECT_EQ(back.observables[0], r.observables[0]);
  ASSERT_TRUE(back.primal.has_value());
  EXPECT_EQ(back.primal->monomial_order, 2u);
  ASSERT_EQ(back.primal->channels.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(back.primal->channels[c].features, r.primal->channels[c].features);
    EXPECT_EQ(back.primal->channels[c].weights, r.primal->channels[c].weights);
  }
  Rng rng(2);
  const QuantumState x = random_mixed_state(2, rng);
  EXPECT_EQ(predict(*back.primal, x), predict(*r.primal, x));
  EXPECT_EQ(serialize(back), text);
}

TEST(ReadoutIo, EmptyReadoutRoundTrips) {
  TrainedReadout r;
  r.ridge = 1.0;
  const TrainedReadout back = deserialize(serialize(r));
  EXPECT_TRUE(back.alpha.empty());
  EXPECT_TRUE(back.observables.empty());
  EXPECT_FALSE(back.primal.has_value());
}

TEST(ReadoutIo, BadMagic) {
  std::string text = serialize(sample_readout());
  text[4] = '2';
  EXPECT_THROW(deserialize(text), BadMagic);
  EXPECT_THROW(deserialize(""), BadMagic);
}

TEST(ReadoutIo, Truncated) {
  const std::string text = serialize(sample_readout());
  EXPECT_THROW(deserialize(text.substr(0, text.size() / 2)), TruncatedFile);
  EXPECT_THROW(deserialize(text.substr(0, text.size() - 5)), TruncatedFile);
}

TEST(ReadoutIo, CountMismatch) {
  std::string text = serialize(sample_readout());
  const auto pos = text.find("observables 2");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 13, "observables 3");
  EXPECT_THROW(deserialize(text), CountMismatch);
}

TEST(ReadoutIo, MalformedNumberReportsPosition) {
  std::string text = serialize(sample_readout());
  const auto pos = text.find("ridge ");
  text.replace(pos + 6, 1, "q");
  try {
    deserialize(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 7u);
  }
}

TEST(ReadoutIo, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "qrck_readout_test.qrck";
  const TrainedReadout r = sample_readout();
  save_readout(path, r);
  EXPECT_EQ(serialize(load_readout(path)), serialize(r));
  std::filesystem::remove(path);
  EXPECT_THROW(load_readout(path), IoError);
}
