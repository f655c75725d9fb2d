#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "affekt/error.hpp"
#include "affekt/pipeline.hpp"

using namespace affekt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("affekt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AFFEKT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ErrorKind config_error(const std::string& text) {
  try {
    PipelineConfig::from_json_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::MissingFile;
}

PipelineConfig tiny_config(const fs::path& work) {
  PipelineConfig c = PipelineConfig::from_json_text(R"({"seed": 5, "synth": {"n_subjects": 4, "channels": 4}})");
  c.work_dir = work;
  c.smote_k = 1;
  return c;
}

}  // namespace

TEST(Config, SeedIsMandatory) {
  EXPECT_EQ(config_error("{}"), ErrorKind::InvalidConfig);
  EXPECT_EQ(config_error("[1, 2]"), ErrorKind::InvalidConfig);
  EXPECT_EQ(config_error("{ nope"), ErrorKind::InvalidConfig);
}

TEST(Config, FieldsAndValidation) {
  const auto c = PipelineConfig::from_json_text(R"({
    "seed": 3,
    "filter": {"kind": "bandstop", "order": 2, "edges_hz": [58, 62]},
    "labels": {"dimension": "valence", "low": 3.5},
    "stream": {"hop_samples": 256, "trigger_consecutive": 3, "policy": "fixed", "strategy": "breathing_exercise"},
    "model": {"blocks": [{"out_width": 4, "stride": 2}]}
  })");
  EXPECT_EQ(c.filter_order, 2);
  EXPECT_EQ(c.filter_edges_hz, (std::vector<double>{58, 62}));
  EXPECT_EQ(c.labels.dimension, RatingDimension::Valence);
  EXPECT_DOUBLE_EQ(c.labels.low, 3.5);
  EXPECT_EQ(c.stream.hop_samples, 256u);
  EXPECT_EQ(c.stream.policy, StrategyPolicy::Fixed);
  EXPECT_EQ(c.stream.fixed_strategy, Strategy::BreathingExercise);
  ASSERT_EQ(c.model_blocks.size(), 1u);
  EXPECT_NE(c.train.seed, c.split.seed);

  EXPECT_EQ(config_error(R"({"seed": 1, "filter": {"order": 0}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(config_error(R"({"seed": 1, "filter": {"kind": "comb"}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(config_error(R"({"seed": 1, "train": {"lr_decay": 2.0}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(config_error(R"({"seed": 1, "stream": {"strategy": "nap"}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(config_error(R"({"seed": "x"})"), ErrorKind::InvalidConfig);
}

TEST(Config, SeedOverrideRederivesStages) {
  auto a = PipelineConfig::from_json_text(R"({"seed": 1})");
  const auto b = PipelineConfig::from_json_text(R"({"seed": 2})");
  EXPECT_NE(a.synth.seed, b.synth.seed);
  a.set_seed(2);
  EXPECT_EQ(a.synth.seed, b.synth.seed);
  EXPECT_EQ(a.train.seed, b.train.seed);
  EXPECT_EQ(a.noise_for_subject(3).seed, b.noise_for_subject(3).seed);
  EXPECT_NE(a.noise_for_subject(3).seed, a.noise_for_subject(4).seed);
}

TEST(FeatureDataset, BuildSaveLoad) {
  const auto dir = temp_dir("dataset");
  const PipelineConfig cfg = tiny_config(dir);
  std::vector<RecordingWithEvents> recs;
  for (int i = 0; i < cfg.synth.n_subjects; ++i) {
    auto r = synth_subject(cfg.synth, i);
    r.recording = preprocess_recording(r.recording, cfg);
    recs.push_back(std::move(r));
  }
  const FeatureDataset ds = build_feature_dataset(recs, cfg);
  EXPECT_EQ(ds.n_channels, 4u);
  EXPECT_EQ(ds.n_bins, 128u);
  std::size_t real = 0;
  for (const auto& r : ds.records) {
    if (r.synthetic) {
      EXPECT_EQ(r.split, "train");
      EXPECT_FALSE(r.base_id.empty());
    } else {
      ++real;
    }
  }
  EXPECT_EQ(real, 32u);

  save_feature_dataset(dir / "features", ds);
  const FeatureDataset back = load_feature_dataset(dir / "features");
  ASSERT_EQ(back.records.size(), ds.records.size());
  EXPECT_EQ(back.emotions, ds.emotions);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    EXPECT_EQ(back.records[i].id, ds.records[i].id);
    EXPECT_EQ(back.records[i].label, ds.records[i].label);
    EXPECT_EQ(back.records[i].split, ds.records[i].split);
    EXPECT_EQ(back.records[i].u, ds.records[i].u);
    EXPECT_NEAR(back.records[i].values(1, 7), ds.records[i].values(1, 7), 1e-6);
  }

  const auto bin = task_inputs(ds, Task::Binary, "test");
  for (int y : bin.labels) EXPECT_TRUE(y == 0 || y == 1);
  EXPECT_THROW(load_feature_dataset(dir / "nothing"), Error);
}

TEST(Cli, FeaturizeWithoutPreprocessIsMissingInput) {
  const auto dir = temp_dir("cli_missing");
  std::ofstream(dir / "cfg.json") << R"({"seed": 1, "work_dir": ")" << (dir / "run").string() << R"("})";
  EXPECT_EQ(run_cli("featurize --config " + (dir / "cfg.json").string()), 2);
  EXPECT_EQ(run_cli("train --config " + (dir / "cfg.json").string()), 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("bogus --config x.json"), 2);
  EXPECT_EQ(run_cli("synth"), 2);
  EXPECT_EQ(run_cli("synth --config /nonexistent/cfg.json"), 2);
  EXPECT_EQ(run_cli("synth --help"), 0);
}
