#include "affekt/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "affekt/error.hpp"
#include "affekt/seed.hpp"

namespace affekt {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

template <typename T>
void read_opt(const json& j, const char* key, T& target) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    target = it->get<T>();
  } catch (const json::exception&) {
    bad_config(std::string("config field '") + key + "' has the wrong type");
  }
}

const json& section(const json& root, const char* key) {
  static const json empty = json::object();
  auto it = root.find(key);
  if (it == root.end()) return empty;
  if (!it->is_object()) bad_config(std::string("config section '") + key + "' must be an object");
  return *it;
}

FilterKind parse_filter_kind(const std::string& s) {
  if (s == "lowpass") return FilterKind::LowPass;
  if (s == "highpass") return FilterKind::HighPass;
  if (s == "bandpass") return FilterKind::BandPass;
  if (s == "bandstop") return FilterKind::BandStop;
  bad_config("unknown filter kind '" + s + "'");
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    bad_config(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) bad_config("config must be a JSON object");
  if (!root.contains("seed")) bad_config("config needs a top-level 'seed'");

  PipelineConfig c;
  std::uint64_t seed = 0;
  read_opt(root, "seed", seed);
  std::string path;
  if (root.contains("work_dir")) {
    read_opt(root, "work_dir", path);
    c.work_dir = path;
  }
  if (root.contains("raw_dir")) {
    read_opt(root, "raw_dir", path);
    c.raw_dir = path;
  }

  const json& syn = section(root, "synth");
  read_opt(syn, "n_subjects", c.synth.n_subjects);
  read_opt(syn, "events_per_subject", c.synth.n_events_per_subject);
  read_opt(syn, "channels", c.synth.channels);
  read_opt(syn, "sample_rate_hz", c.synth.sample_rate_hz);
  read_opt(syn, "event_duration_s", c.synth.event_duration_s);
  read_opt(syn, "event_spacing_s", c.synth.event_spacing_s);
  read_opt(syn, "lead_in_s", c.synth.lead_in_s);
  read_opt(syn, "background_uv", c.synth.background_uv);
  read_opt(syn, "background_exponent", c.synth.background_exponent);
  read_opt(syn, "oscillation_uv", c.synth.oscillation_uv);
  read_opt(syn, "powerline_uv", c.synth.powerline_uv);
  read_opt(syn, "powerline_hz", c.synth.powerline_hz);
  read_opt(syn, "response_rate", c.synth.response_rate);
  if (c.synth.n_subjects < 1 || c.synth.n_events_per_subject < 1 || c.synth.channels < 1 ||
      !(c.synth.sample_rate_hz > 0.0)) {
    bad_config("synth: subjects, events, channels and sample rate must be positive");
  }

  const json& flt = section(root, "filter");
  std::string kind = "bandstop";
  read_opt(flt, "kind", kind);
  c.filter_kind = parse_filter_kind(kind);
  read_opt(flt, "order", c.filter_order);
  read_opt(flt, "edges_hz", c.filter_edges_hz);

  const json& noise = section(root, "noise");
  read_opt(noise, "enabled", c.noise.enabled);
  read_opt(noise, "max_magnitude", c.noise.max_magnitude);

  const json& ent = section(root, "entropy");
  read_opt(ent, "m", c.entropy.m);
  read_opt(ent, "r_factor", c.entropy.r_factor);
  read_opt(ent, "max_scale", c.entropy.max_scale);
  read_opt(ent, "max_subjects", c.entropy_max_subjects);

  const json& psd = section(root, "psd");
  if (psd.contains("segment_len") && !psd["segment_len"].is_null()) {
    std::size_t seg = 0;
    read_opt(psd, "segment_len", seg);
    c.psd.segment_len = seg;
  }
  read_opt(psd, "overlap_fraction", c.psd.overlap_fraction);
  read_opt(psd, "max_freq_hz", c.psd.max_freq_hz);

  const json& lab = section(root, "labels");
  read_opt(lab, "low", c.labels.low);
  read_opt(lab, "high", c.labels.high);
  std::string dim = "arousal";
  read_opt(lab, "dimension", dim);
  if (dim == "arousal") {
    c.labels.dimension = RatingDimension::Arousal;
  } else if (dim == "valence") {
    c.labels.dimension = RatingDimension::Valence;
  } else {
    bad_config("labels.dimension must be 'arousal' or 'valence'");
  }
  read_opt(lab, "window_len", c.window_len);
  if (c.window_len == 0) bad_config("labels.window_len must be positive");

  const json& spl = section(root, "split");
  read_opt(spl, "ratios", c.split.ratios);
  read_opt(spl, "batch_size", c.split.batch_size);
  std::string unit = "window";
  read_opt(spl, "unit", unit);
  if (unit == "window") {
    c.split.unit = SplitUnit::Window;
  } else if (unit == "subject") {
    c.split.unit = SplitUnit::Subject;
  } else {
    bad_config("split.unit must be 'window' or 'subject'");
  }

  read_opt(section(root, "smote"), "k", c.smote_k);
  if (c.smote_k < 0) bad_config("smote.k must be >= 0 (0 disables oversampling)");

  const json& model = section(root, "model");
  if (model.contains("blocks")) {
    c.model_blocks.clear();
    for (const auto& b : model["blocks"]) {
      BlockSpec spec;
      read_opt(b, "out_width", spec.out_width);
      read_opt(b, "stride", spec.stride);
      read_opt(b, "residual", spec.residual);
      c.model_blocks.push_back(spec);
    }
  }

  const json& tr = section(root, "train");
  read_opt(tr, "max_epochs", c.train.max_epochs);
  read_opt(tr, "lr0", c.train.lr0);
  read_opt(tr, "lr_decay", c.train.lr_decay);
  read_opt(tr, "batch_size", c.train.batch_size);
  read_opt(tr, "patience", c.train.early_stop_patience);

  const json& st = section(root, "stream");
  read_opt(st, "window_len", c.stream.window_len);
  read_opt(st, "hop_samples", c.stream.hop_samples);
  read_opt(st, "trigger_consecutive", c.stream.trigger_consecutive);
  std::string policy = "round_robin";
  read_opt(st, "policy", policy);
  if (policy == "round_robin") {
    c.stream.policy = StrategyPolicy::RoundRobin;
  } else if (policy == "fixed") {
    c.stream.policy = StrategyPolicy::Fixed;
  } else {
    bad_config("stream.policy must be 'round_robin' or 'fixed'");
  }
  if (st.contains("strategy")) {
    std::string s;
    read_opt(st, "strategy", s);
    auto parsed = parse_strategy(s);
    if (!parsed) bad_config("unknown stream.strategy '" + s + "'");
    c.stream.fixed_strategy = *parsed;
  }
  if (st.contains("recording")) {
    read_opt(st, "recording", path);
    c.stream_recording = path;
  }

  c.set_seed(seed);
  try {
    c.entropy.validate();
    c.train.validate();
    c.stream.validate();
    c.filter_for(c.synth.sample_rate_hz).validate();
  } catch (const Error& e) {
    bad_config(e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingInput, "config not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void PipelineConfig::set_seed(std::uint64_t master) {
  seed = master;
  synth.seed = derive_seed(master, "synth");
  split.seed = derive_seed(master, "split");
  train.seed = derive_seed(master, "train");
}

FilterSpec PipelineConfig::filter_for(double sample_rate_hz) const {
  FilterSpec f;
  f.kind = filter_kind;
  f.order = filter_order;
  f.edges_hz = filter_edges_hz;
  f.sample_rate_hz = sample_rate_hz;
  return f;
}

NoiseSpec PipelineConfig::noise_for_subject(std::size_t subject_index) const {
  NoiseSpec n;
  n.max_magnitude = noise.max_magnitude;
  n.seed = mix_seed(derive_seed(seed, "augment") ^ subject_index);
  return n;
}

Recording preprocess_recording(const Recording& rec, const PipelineConfig& cfg) {
  return zscore(apply_filter(design_filter(cfg.filter_for(rec.sample_rate_hz)), rec));
}

FeatureDataset build_feature_dataset(const std::vector<RecordingWithEvents>& recordings, const PipelineConfig& cfg) {
  FeatureDataset ds;
  EmotionTable table;
  for (const auto& r : recordings) {
    for (const auto& ev : r.events) table.register_name(ev.emotion_name);
  }
  ds.emotions = table.names();

  std::vector<int> classes;
  std::vector<std::string> subjects;
  for (const auto& r : recordings) {
    const WindowExtraction ex = extract_windows(r.recording, r.events, table, cfg.window_len, cfg.labels);
    ds.skipped_events += ex.skipped.size();
    for (const auto& w : ex.windows) {
      FeatureMatrix fm = build_feature_matrix(w, r.recording.sample_rate_hz, cfg.psd);
      if (ds.records.empty()) {
        ds.n_channels = fm.values.rows();
        ds.n_bins = fm.values.cols();
      } else if (fm.values.rows() != ds.n_channels || fm.values.cols() != ds.n_bins) {
        throw Error(ErrorKind::ShapeMismatch, "feature matrix of " + w.window_id + " has a different shape");
      }
      FeatureRecord rec;
      rec.id = w.window_id;
      rec.subject_id = w.subject_id;
      rec.values = std::move(fm.values);
      rec.label = w.label;
      classes.push_back(w.label.categorical);
      subjects.push_back(w.subject_id);
      ds.records.push_back(std::move(rec));
    }
  }
  if (ds.records.empty()) throw Error(ErrorKind::EmptyClass, "no windows could be extracted");

  const DatasetSplit split = split_dataset(classes, static_cast<int>(ds.emotions.size()), cfg.split, subjects);
  for (auto i : split.train) ds.records[i].split = "train";
  for (auto i : split.val) ds.records[i].split = "val";
  for (auto i : split.test) ds.records[i].split = "test";

  if (cfg.smote_k == 0) return ds;
  std::vector<std::vector<double>> points;
  std::vector<int> train_classes;
  for (auto i : split.train) {
    points.push_back(ds.records[i].values.values());
    train_classes.push_back(classes[i]);
  }
  const SmoteResult sm = smote_resample(points, train_classes, {cfg.smote_k, derive_seed(cfg.seed, "smote")});
  std::size_t n_synth = 0;
  for (std::size_t r = 0; r < sm.points.size(); ++r) {
    const SmoteOrigin& o = sm.origin[r];
    if (!o.synthetic) continue;
    const FeatureRecord& base = ds.records[split.train[o.base]];
    const FeatureRecord& nb = ds.records[split.train[o.neighbor]];
    FeatureRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "smote/%05zu", n_synth++);
    rec.id = id;
    rec.values = Matrix(ds.n_channels, ds.n_bins);
    std::copy(sm.points[r].begin(), sm.points[r].end(), rec.values.values().begin());
    rec.label.categorical = sm.classes[r];
    if (base.label.binary == nb.label.binary) rec.label.binary = base.label.binary;
    rec.split = "train";
    rec.synthetic = true;
    rec.base_id = base.id;
    rec.neighbor_id = nb.id;
    rec.u = o.u;
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_feature_dataset(const std::filesystem::path& dir, const FeatureDataset& ds) {
  std::filesystem::create_directories(dir);
  json records = json::array();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const FeatureRecord& r = ds.records[i];
    char file[32];
    std::snprintf(file, sizeof(file), "%05zu.eegf", i);
    write_feature_file(dir / file, r.values, static_cast<std::uint32_t>(r.label.categorical));
    json entry = {{"id", r.id},
                  {"file", file},
                  {"subject_id", r.subject_id},
                  {"categorical", r.label.categorical},
                  {"emotion", ds.emotions.at(static_cast<std::size_t>(r.label.categorical))},
                  {"binary", r.label.binary ? json(std::string(to_string(*r.label.binary))) : json(nullptr)},
                  {"split", r.split},
                  {"provenance", r.synthetic ? "smote" : "real"}};
    if (r.synthetic) {
      entry["base"] = r.base_id;
      entry["neighbor"] = r.neighbor_id;
      entry["u"] = r.u;
    }
    records.push_back(std::move(entry));
  }
  json table = json::object();
  for (std::size_t i = 0; i < ds.emotions.size(); ++i) table[ds.emotions[i]] = i;
  const json manifest = {{"emotions", ds.emotions},
                         {"emotion_ids", table},
                         {"n_channels", ds.n_channels},
                         {"n_bins", ds.n_bins},
                         {"skipped_events", ds.skipped_events},
                         {"records", records}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::MissingFile, "failed writing " + (dir / "manifest.json").string());
}

FeatureDataset load_feature_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingInput, "feature manifest not found: " + path.string());
  FeatureDataset ds;
  try {
    const json m = json::parse(in);
    ds.emotions = m.at("emotions").get<std::vector<std::string>>();
    ds.n_channels = m.at("n_channels").get<std::size_t>();
    ds.n_bins = m.at("n_bins").get<std::size_t>();
    ds.skipped_events = m.at("skipped_events").get<std::size_t>();
    for (const auto& e : m.at("records")) {
      FeatureRecord r;
      r.id = e.at("id").get<std::string>();
      r.subject_id = e.at("subject_id").get<std::string>();
      r.label.categorical = e.at("categorical").get<int>();
      if (!e.at("binary").is_null()) {
        r.label.binary = e["binary"].get<std::string>() == "negative" ? BinaryLabel::Negative : BinaryLabel::Positive;
      }
      r.split = e.at("split").get<std::string>();
      r.synthetic = e.at("provenance").get<std::string>() == "smote";
      if (r.synthetic) {
        r.base_id = e.at("base").get<std::string>();
        r.neighbor_id = e.at("neighbor").get<std::string>();
        r.u = e.at("u").get<double>();
      }
      FeatureFile f = read_feature_file(dir / e.at("file").get<std::string>());
      if (f.values.rows() != ds.n_channels || f.values.cols() != ds.n_bins) {
        throw Error(ErrorKind::ShapeMismatch, "feature file for " + r.id + " has an unexpected shape");
      }
      r.values = std::move(f.values);
      ds.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, "malformed feature manifest: " + std::string(e.what()));
  }
  return ds;
}

LabeledInputs task_inputs(const FeatureDataset& ds, Task task, const std::string& split) {
  LabeledInputs out;
  for (const auto& r : ds.records) {
    if (r.split != split) continue;
    if (task == Task::Binary) {
      if (!r.label.binary) continue;
      out.labels.push_back(static_cast<int>(*r.label.binary));
    } else {
      out.labels.push_back(r.label.categorical);
    }
    out.inputs.push_back(r.values.values());
  }
  return out;
}

CnnConfig model_config_for(const FeatureDataset& ds, Task task, const PipelineConfig& cfg) {
  CnnConfig c;
  c.input_channels = static_cast<int>(ds.n_channels);
  c.input_bins = static_cast<int>(ds.n_bins);
  c.blocks = cfg.model_blocks;
  c.n_classes = task == Task::Binary ? 2 : static_cast<int>(ds.emotions.size());
  c.seed = derive_seed(cfg.seed, task == Task::Binary ? "model.binary" : "model.categorical");
  return c;
}

TrainedModel train_task(const FeatureDataset& ds, Task task, const PipelineConfig& cfg) {
  TrainedModel out;
  out.config = model_config_for(ds, task, cfg);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = derive_seed(cfg.train.seed, task == Task::Binary ? "binary" : "categorical");
  out.result = train(out.config, init_params(out.config), task_inputs(ds, task, "train"),
                     task_inputs(ds, task, "val"), tcfg);
  return out;
}

MetricsReport evaluate_models(const FeatureDataset& ds, const Checkpoint& binary, const Checkpoint& categorical,
                              std::size_t batch_size) {
  for (const Checkpoint* ck : {&binary, &categorical}) {
    if (static_cast<std::size_t>(ck->config.input_channels) != ds.n_channels ||
        static_cast<std::size_t>(ck->config.input_bins) != ds.n_bins) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint input shape does not match the feature set");
    }
  }
  if (binary.config.n_classes != 2) throw Error(ErrorKind::ShapeMismatch, "binary checkpoint must have 2 classes");
  MetricsReport m;
  m.binary = evaluate(binary.config, binary.params, task_inputs(ds, Task::Binary, "test"), batch_size);
  m.categorical = evaluate(categorical.config, categorical.params, task_inputs(ds, Task::Categorical, "test"),
                           batch_size);
  const auto batches = [&](std::size_t n) { return static_cast<double>((n + batch_size - 1) / batch_size); };
  const double nb = batches(m.binary.n), nc = batches(m.categorical.n);
  m.time_per_batch_ms = (m.binary.time_per_batch_ms * nb + m.categorical.time_per_batch_ms * nc) / (nb + nc);
  return m;
}

}  // namespace affekt
