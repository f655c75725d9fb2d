#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "affekt/error.hpp"
#include "affekt/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace affekt;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::MissingFile, "failed writing " + path.string());
}

std::vector<fs::path> require_subjects(const fs::path& dir, const std::string& stage_hint) {
  auto subjects = list_subject_dirs(dir);
  if (subjects.empty()) {
    throw Error(ErrorKind::MissingInput, "no subject recordings under " + dir.string() + " (run '" + stage_hint + "' first)");
  }
  return subjects;
}

fs::path raw_dir(const PipelineConfig& cfg) { return cfg.raw_dir.value_or(cfg.work_dir / "raw"); }

json profile_json(const EntropyProfile& p) {
  json scales = json::array();
  for (const auto& s : p.per_scale) {
    scales.push_back({{"tau", s.tau}, {"sampen", s.sampen ? json(*s.sampen) : json(nullptr)}});
  }
  return {{"scales", scales}, {"ci", p.complexity_index}};
}

json cmd_synth(const PipelineConfig& cfg) {
  const fs::path out = raw_dir(cfg);
  synth_generate(cfg.synth, out);
  return {{"subjects", cfg.synth.n_subjects}, {"out", out.string()}};
}

json cmd_preprocess(const PipelineConfig& cfg) {
  const fs::path out = cfg.work_dir / "preprocessed";
  const auto subjects = require_subjects(raw_dir(cfg), "synth");
  for (const auto& dir : subjects) {
    const RecordingWithEvents r = load_recording(dir);
    save_recording(out / dir.filename(), preprocess_recording(r.recording, cfg), r.events);
  }
  return {{"subjects", subjects.size()}, {"out", out.string()}};
}

json cmd_augment(const PipelineConfig& cfg) {
  const fs::path out = cfg.work_dir / "augmented";
  const auto subjects = require_subjects(cfg.work_dir / "preprocessed", "preprocess");
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    RecordingWithEvents r = load_recording(subjects[i]);
    r.recording.data = add_gaussian_noise(r.recording.data, cfg.noise_for_subject(i));
    save_recording(out / subjects[i].filename(), r.recording, r.events);
  }
  return {{"subjects", subjects.size()}, {"max_magnitude", cfg.noise.max_magnitude}, {"out", out.string()}};
}

std::optional<LabeledWindow> first_window(const RecordingWithEvents& r, std::size_t window_len) {
  EmotionTable table;
  for (const auto& ev : r.events) table.register_name(ev.emotion_name);
  auto ex = extract_windows(r.recording, r.events, table, window_len);
  if (ex.windows.empty()) return std::nullopt;
  return std::move(ex.windows.front());
}

json cmd_entropy(const PipelineConfig& cfg) {
  const auto clean_dirs = require_subjects(cfg.work_dir / "preprocessed", "preprocess");
  require_subjects(cfg.work_dir / "augmented", "augment");
  json subjects = json::array();
  const auto n = std::min<std::size_t>(clean_dirs.size(), static_cast<std::size_t>(std::max(cfg.entropy_max_subjects, 0)));
  for (std::size_t i = 0; i < n; ++i) {
    const fs::path noisy_dir = cfg.work_dir / "augmented" / clean_dirs[i].filename();
    if (!fs::exists(noisy_dir)) throw Error(ErrorKind::MissingInput, "no augmented recording for " + noisy_dir.string());
    const auto clean = load_recording(clean_dirs[i]);
    const auto noisy = load_recording(noisy_dir);
    auto wc = first_window(clean, cfg.window_len);
    auto wn = first_window(noisy, cfg.window_len);
    if (!wc || !wn) continue;
    const auto report = complexity_shift_report(wc->data, wn->data, cfg.entropy);
    json channels = json::array();
    for (std::size_t c = 0; c < report.size(); ++c) {
      channels.push_back({{"channel", clean.recording.channel_names.at(c)},
                          {"clean", profile_json(report[c].clean)},
                          {"noisy", profile_json(report[c].noisy)},
                          {"delta", report[c].delta}});
    }
    subjects.push_back({{"subject_id", clean.recording.subject_id}, {"window_id", wc->window_id}, {"channels", channels}});
  }
  const json doc = {{"m", cfg.entropy.m},
                    {"r_factor", cfg.entropy.r_factor},
                    {"max_scale", cfg.entropy.max_scale},
                    {"subjects", subjects}};
  write_json(cfg.work_dir / "entropy_report.json", doc);
  return {{"subjects", subjects.size()}, {"out", (cfg.work_dir / "entropy_report.json").string()}};
}

json cmd_featurize(const PipelineConfig& cfg) {
  const fs::path src = cfg.work_dir / (cfg.noise.enabled ? "augmented" : "preprocessed");
  const auto subjects = require_subjects(src, cfg.noise.enabled ? "augment" : "preprocess");
  std::vector<RecordingWithEvents> recs;
  for (const auto& d : subjects) recs.push_back(load_recording(d));
  const FeatureDataset ds = build_feature_dataset(recs, cfg);
  const fs::path out = cfg.work_dir / "features";
  fs::remove_all(out);
  save_feature_dataset(out, ds);
  std::size_t synthetic = 0;
  for (const auto& r : ds.records) synthetic += r.synthetic ? 1 : 0;
  return {{"windows", ds.records.size() - synthetic},
          {"synthetic", synthetic},
          {"skipped_events", ds.skipped_events},
          {"emotions", ds.emotions},
          {"out", out.string()}};
}

json cmd_train(const PipelineConfig& cfg) {
  const FeatureDataset ds = load_feature_dataset(cfg.work_dir / "features");
  const fs::path out = cfg.work_dir / "model";
  fs::create_directories(out);
  json summary = json::object();
  for (const auto& [task, name] : {std::pair{Task::Binary, "binary"}, std::pair{Task::Categorical, "categorical"}}) {
    const TrainedModel m = train_task(ds, task, cfg);
    save_checkpoint(out / (std::string(name) + ".eegm"), m.config, m.result.best_params);
    std::ofstream log(out / (std::string(name) + "_log.jsonl"), std::ios::trunc);
    for (const auto& e : m.result.log) {
      log << json{{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                  {"val_acc", e.val_acc}}.dump()
          << '\n';
    }
    summary[name] = {{"best_epoch", m.result.best_epoch},
                     {"epochs_run", m.result.epochs_run},
                     {"stopped_early", m.result.stopped_early},
                     {"n_classes", m.config.n_classes}};
  }
  return summary;
}

Checkpoint require_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingInput, "checkpoint not found: " + path.string() + " (run 'train' first)");
  return load_checkpoint(path);
}

json cmd_eval(const PipelineConfig& cfg) {
  const FeatureDataset ds = load_feature_dataset(cfg.work_dir / "features");
  const Checkpoint bin = require_checkpoint(cfg.work_dir / "model" / "binary.eegm");
  const Checkpoint cat = require_checkpoint(cfg.work_dir / "model" / "categorical.eegm");
  const MetricsReport m = evaluate_models(ds, bin, cat, cfg.split.batch_size);
  const json doc = {{"task1", {{"binary_loss", m.binary.loss}, {"binary_accuracy", m.binary.accuracy}}},
                    {"task2", {{"categorical_loss", m.categorical.loss}, {"categorical_accuracy", m.categorical.accuracy}}},
                    {"time_per_batch_ms", m.time_per_batch_ms}};
  write_json(cfg.work_dir / "metrics.json", doc);
  return doc;
}

json cmd_stream(const PipelineConfig& cfg) {
  fs::path rec_dir;
  if (cfg.stream_recording) {
    rec_dir = *cfg.stream_recording;
  } else {
    rec_dir = require_subjects(raw_dir(cfg), "synth").front();
  }
  if (!fs::exists(rec_dir)) throw Error(ErrorKind::MissingInput, "stream recording not found: " + rec_dir.string());
  const Checkpoint bin = require_checkpoint(cfg.work_dir / "model" / "binary.eegm");
  const RecordingWithEvents r = load_recording(rec_dir);
  const StreamResult res = stream_classify(r.recording, bin.config, bin.params, cfg.stream,
                                           cfg.filter_for(r.recording.sample_rate_hz), cfg.psd);

  std::ofstream log(cfg.work_dir / "interventions.jsonl", std::ios::trunc);
  json windows = json::array();
  for (const auto& w : res.windows) {
    windows.push_back({{"window_id", w.window_id},
                       {"t_s", w.t_s},
                       {"predicted", std::string(to_string(w.predicted))},
                       {"p_negative", w.p_negative},
                       {"latency_ms", w.latency_ms}});
    if (!w.event) continue;
    log << json{{"t_s", w.event->timestamp_s},
                {"window_id", w.event->window_id},
                {"class", std::string(to_string(w.event->detected_class))},
                {"confidence", w.event->confidence},
                {"strategy", std::string(to_string(w.event->strategy))}}.dump()
        << '\n';
  }
  const double budget_ms = 1000.0 * static_cast<double>(cfg.stream.hop_samples) / r.recording.sample_rate_hz;
  const json doc = {{"recording", r.recording.subject_id},
                    {"n_windows", res.windows.size()},
                    {"n_interventions", res.events().size()},
                    {"mean_latency_ms", res.mean_latency_ms},
                    {"max_latency_ms", res.max_latency_ms},
                    {"realtime_budget_ms", budget_ms},
                    {"windows", windows}};
  write_json(cfg.work_dir / "stream_report.json", doc);
  return {{"n_windows", res.windows.size()},
          {"n_interventions", res.events().size()},
          {"mean_latency_ms", res.mean_latency_ms},
          {"realtime_budget_ms", budget_ms}};
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::MissingInput || kind == ErrorKind::InvalidConfig ? 2 : 1;
}

void report_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG emotion pipeline: synthesize, preprocess, featurize, train, evaluate, stream"};
  app.require_subcommand(1);

  struct Stage {
    const char* name;
    const char* help;
    json (*run)(const PipelineConfig&);
  };
  const Stage stages[] = {
      {"synth", "Generate synthetic subject recordings", cmd_synth},
      {"preprocess", "Notch-filter and z-score raw recordings", cmd_preprocess},
      {"augment", "Add truncated Gaussian noise to preprocessed recordings", cmd_augment},
      {"entropy", "Multiscale entropy report, clean vs. noisy", cmd_entropy},
      {"featurize", "Feature matrices, split and SMOTE", cmd_featurize},
      {"train", "Train the binary and categorical models", cmd_train},
      {"eval", "Evaluate both models on the test split", cmd_eval},
      {"stream", "Sliding-window classification with interventions", cmd_stream},
  };

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "Pipeline config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config's master seed");
    sub->add_option("--out", out_dir, "Override the working directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    return 2;
  }

  for (const auto& s : stages) {
    if (!app.got_subcommand(s.name)) continue;
    try {
      PipelineConfig cfg = PipelineConfig::load(config_path);
      if (seed) cfg.set_seed(*seed);
      if (out_dir) cfg.work_dir = *out_dir;
      fs::create_directories(cfg.work_dir);
      json report = s.run(cfg);
      std::cout << json{{"stage", s.name}, {"result", report}}.dump(2) << '\n';
      return 0;
    } catch (const Error& e) {
      report_error(to_string(e.kind()), e.what());
      return exit_code_for(e.kind());
    } catch (const std::exception& e) {
      report_error("RuntimeError", e.what());
      return 1;
    }
  }
  return 2;
}
