#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qrck/config.hpp"

using namespace qrck;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string validation_field(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalLorenzEchoesDefaults) {
  const ExperimentConfig cfg = parse("task = lorenz\n");
  EXPECT_EQ(config_to_text(cfg), config_to_text(default_config(TaskKind::Lorenz)));
  EXPECT_EQ(cfg.reservoir.n_input, 3u);
  EXPECT_EQ(cfg.reservoir.n_ancilla, 1u);
  EXPECT_EQ(cfg.reservoir.encoding.scheme, EncodingScheme::AmplitudeSqrt);
  EXPECT_EQ(cfg.ridge, 1e-8);
  EXPECT_EQ(cfg.n_trials, 10u);
}

TEST(Config, EveryTaskDefaultValidates) {
  for (auto t : {TaskKind::Lorenz, TaskKind::MackeyGlass, TaskKind::Harmonic, TaskKind::Classify}) {
    const ExperimentConfig cfg = default_config(t);
    EXPECT_NO_THROW(cfg.validate()) << to_string(t);
    EXPECT_EQ(parse("task = " + to_string(t) + "\n").task, t);
  }
  EXPECT_EQ(default_config(TaskKind::Classify).ridge, 1e-6);
}

TEST(Config, CommentsBlankLinesAndOverrides) {
  const ExperimentConfig cfg = parse(
      "# comment\n\ntask = mackey_glass\nreservoir.h = 2.5   # trailing\ntraining.subset_sizes = 4,2,8\n"
      "training.modes = zstring\nevaluation.n_trials = 3\n");
  EXPECT_EQ(cfg.reservoir.tfim_h, 2.5);
  EXPECT_EQ(cfg.subset_sizes, (std::vector<std::size_t>{4, 2, 8}));
  EXPECT_EQ(cfg.modes, (std::vector<SweepMode>{SweepMode::ZString}));
  EXPECT_EQ(cfg.seeds(), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(cfg.seeds(10), (std::vector<std::uint64_t>{10, 11, 12}));
}

TEST(Config, UnknownKeyIsNamed) {
  EXPECT_EQ(validation_field("task = lorenz\ntfim_g = 1.0\n"), "tfim_g");
}

TEST(Config, NegativeWashoutRejected) {
  EXPECT_EQ(validation_field("task = harmonic\nreservoir.washout = -1\n"), "reservoir.washout");
}

TEST(Config, DuplicateKeyRejected) {
  EXPECT_EQ(validation_field("task = lorenz\nreservoir.h = 1\nreservoir.h = 2\n"), "reservoir.h");
}

TEST(Config, OutOfRangeValuesNameTheirField) {
  EXPECT_EQ(validation_field("task = lorenz\ntraining.ridge = 0\n"), "training.ridge");
  EXPECT_EQ(validation_field("task = lorenz\ntraining.p_max = 7\n"), "training.p_max");
  EXPECT_EQ(validation_field("task = lorenz\nreservoir.n_input = 1\n"), "reservoir.n_input");
  EXPECT_EQ(validation_field("task = classify\ndata.mnist_dir = /nonexistent/mnist\n"), "data.mnist_dir");
  EXPECT_EQ(validation_field("task = lorenz\ntraining.max_weight = 9\n"), "training.max_weight");
  EXPECT_EQ(validation_field("task = lorenz\nreservoir.h = abc\n"), "reservoir.h");
  EXPECT_EQ(validation_field("task = weather\n"), "task");
}

TEST(Config, MissingEqualsReportsPosition) {
  try {
    parse("task = lorenz\n\nreservoir.h 2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GE(e.column(), 1u);
  }
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig cfg = default_config(TaskKind::Harmonic);
  cfg.refit_ridge = 3e-5;
  cfg.subset_sizes = {1, 5, 9};
  cfg.per_channel_ranking = true;
  cfg.run_id = "roundtrip";
  cfg.seed_base = 42;
  const std::string text = config_to_text(cfg);
  EXPECT_EQ(config_to_text(parse(text)), text);
  EXPECT_EQ(parse(text).effective_refit_ridge(), 3e-5);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "qrck_config_test.conf";
  {
    std::ofstream os(path);
    os << "task = classify\nevaluation.seed_base = 5\n";
  }
  const ExperimentConfig cfg = load_config(path);
  EXPECT_EQ(cfg.task, TaskKind::Classify);
  EXPECT_EQ(cfg.seed_base, 5u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), IoError);
}
