// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "affekt/dataset.hpp"
#include "affekt/entropy.hpp"
#include "affekt/error.hpp"
#include "affekt/features.hpp"
#include "affekt/model.hpp"
#include "affekt/pipeline.hpp"
#include "affekt/signal.hpp"
#include "affekt/stream.hpp"
#include "../oracles.hpp"

using namespace affekt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<double> tone(double hz, double fs, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / fs + phase);
  return x;
}

// ---------------------------------------------------------------------------

Outcome ac1_filter() {
  const double fs = 512.0, fc = 40.0;
  double worst = 0.0, worst_cut = 0.0;
  for (int n : {2, 4, 8}) {
    FilterSpec s;
    s.kind = FilterKind::LowPass;
    s.order = n;
    s.edges_hz = {fc};
    s.sample_rate_hz = fs;
    const auto f = design_filter(s);
    for (double hz = 0.05; hz <= fc; hz += 0.05) {
      const double h = std::abs(oracle::sos_response(f, hz));
      worst = std::max(worst, std::abs(h - oracle::butter_lowpass_gain(n, hz, fc, fs)));
    }
    worst_cut = std::max(worst_cut, std::abs(std::abs(oracle::sos_response(f, fc)) - 1.0 / std::sqrt(2.0)));
  }
  return {worst < 1e-3 && worst_cut < 1e-3, fmt("max passband |H-Ha| = %.2e, max ||H(fc)|-1/sqrt2| = %.2e (tol 1e-3)", worst, worst_cut)};
}

Outcome ac2_notch() {
  const PipelineConfig cfg;
  const auto f = design_filter(cfg.filter_for(512.0));
  const double att50 = -20.0 * std::log10(std::abs(oracle::sos_response(f, 50.0)));
  const double loss10 = -20.0 * std::log10(std::abs(oracle::sos_response(f, 10.0)));
  // Same numbers measured on tones after the filter settles.
  auto measured = [&](double hz) {
    const auto x = tone(hz, 512.0, 16384);
    const auto y = filter_causal(f, x);
    const std::span<const double> tail_y(y.data() + 8192, 8192), tail_x(x.data() + 8192, 8192);
    return -20.0 * std::log10(oracle::rms(tail_y) / oracle::rms(tail_x));
  };
  const double m50 = measured(50.0), m10 = measured(10.0);
  const bool ok = att50 >= 30.0 && m50 >= 30.0 && loss10 < 0.5 && m10 < 0.5;
  return {ok, fmt("50 Hz: %.1f dB (tone %.1f dB) >= 30; 10 Hz: %.4f dB (tone %.4f dB) < 0.5", att50, m50, loss10, m10)};
}

Outcome ac3_sampen() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(20, 300);
  std::normal_distribution<double> g;
  int checked = 0, mismatches = 0;
  for (int s = 0; s < 200; ++s) {
    std::vector<double> x(static_cast<std::size_t>(len(rng)));
    // Mix of white noise and a slow drift so some series are regular.
    const double drift = 0.02 * (s % 5);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = g(rng) + drift * static_cast<double>(i);
    const double sd = std::sqrt(oracle::variance(x));
    for (int m : {1, 2, 3}) {
      for (double rf : {0.1, 0.15, 0.2}) {
        const auto got = count_template_matches(x, m, rf * sd);
        const auto want = oracle::sampen_counts(x, m, rf * sd);
        ++checked;
        if (got.a != want.a || got.b != want.b) ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("%d/%d (series, m, r) cases with exact (A, B) agreement", checked - mismatches, checked)};
}

Outcome ac4_complexity() {
  SynthSpec spec;
  spec.channels = 1;
  spec.n_events_per_subject = 1;
  spec.event_duration_s = 3.0;
  spec.event_spacing_s = 3.5;
  PipelineConfig cfg;
  const EntropyParams params;  // m 2, r 0.15, 10 scales
  int higher = 0;
  for (int trial = 0; trial < 100; ++trial) {
    spec.seed = 1000 + static_cast<std::uint64_t>(trial);
    const auto subject = synth_subject(spec, trial);
    const Recording clean_rec = preprocess_recording(subject.recording, cfg);
    Matrix clean(1, 1500);
    std::copy_n(clean_rec.data.row(0).begin() + 256, 1500, clean.row(0).begin());
    const Matrix noisy = add_gaussian_noise(clean, {4.0, 5000 + static_cast<std::uint64_t>(trial)});
    const auto rep = complexity_shift_report(clean, noisy, params);
    if (rep[0].clean.per_scale.size() != 10) return {false, "expected 10 scales"};
    if (rep[0].noisy.complexity_index > rep[0].clean.complexity_index) ++higher;
  }
  return {higher >= 95, fmt("CI(noisy) > CI(clean) in %d/100 trials (need >= 95), 10 scales", higher)};
}

Outcome ac5_psd() {
  const double fs = 512.0;
  PsdSpec full;
  full.max_freq_hz = 256.0;
  double worst = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  for (int fixture = 0; fixture < 10; ++fixture) {
    std::vector<double> x(1500, 0.0);
    for (int k = 0; k < 6; ++k) {
      const double hz = 2.0 + 20.0 * k + fixture;
      const auto t = tone(hz, fs, x.size(), ph(rng));
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += (1.0 + 0.3 * k) * t[i];
    }
    const Psd p = welch_psd(x, fs, full);
    const double df = p.freqs_hz[1] - p.freqs_hz[0];
    double power = 0.0;
    for (double v : p.density) power += v * df;
    worst = std::max(worst, std::abs(power / oracle::variance(x) - 1.0));
  }
  const Psd p10 = welch_psd(tone(10.0, fs, 1500), fs, PsdSpec{});
  const auto peak = static_cast<std::size_t>(std::max_element(p10.density.begin(), p10.density.end()) - p10.density.begin());
  const double peak_hz = p10.freqs_hz[peak];

  SynthSpec spec;
  spec.n_events_per_subject = 3;
  spec.seed = 77;
  const auto subject = synth_subject(spec, 0);
  EmotionTable table;
  for (const auto& e : subject.events) table.register_name(e.emotion_name);
  const auto ex = extract_windows(subject.recording, subject.events, table, 1500);
  bool shapes = !ex.windows.empty();
  for (const auto& w : ex.windows) {
    const auto fm = build_feature_matrix(w, fs, PsdSpec{});
    shapes = shapes && fm.values.rows() == 128 && fm.values.cols() == 128;
  }
  const bool ok = worst < 0.02 && peak_hz == 10.0 && shapes;
  return {ok, fmt("Parseval max rel err %.4f (< 0.02); 10 Hz tone peak at %.1f Hz; %zu windows 128x128: %s", worst, peak_hz,
                  ex.windows.size(), shapes ? "yes" : "no")};
}

Outcome ac6_smote() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  const int counts[] = {40, 9, 23, 6};
  const std::size_t dim = 64;
  std::vector<std::vector<double>> pts;
  std::vector<int> cls;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < counts[c]; ++i) {
      std::vector<double> x(dim);
      for (auto& v : x) v = g(rng) + c;
      pts.push_back(std::move(x));
      cls.push_back(c);
    }
  }
  const int k = 5;
  const auto res = smote_resample(pts, cls, {k, 99});
  std::map<int, int> per;
  for (int c : res.classes) ++per[c];
  bool equal = true;
  for (int c = 0; c < 4; ++c) equal = equal && per[c] == 40;
  bool originals = true;
  for (std::size_t i = 0; i < pts.size(); ++i) originals = originals && res.points[i] == pts[i] && res.classes[i] == cls[i];

  double worst_resid = 0.0;
  bool u_ok = true, nn_ok = true;
  for (std::size_t i = pts.size(); i < res.points.size(); ++i) {
    const auto& o = res.origin[i];
    const auto& a = pts[o.base];
    const auto& b = pts[o.neighbor];
    double num = 0.0, den = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      num += (res.points[i][d] - a[d]) * (b[d] - a[d]);
      den += (b[d] - a[d]) * (b[d] - a[d]);
    }
    const double u = num / den;
    u_ok = u_ok && u >= 0.0 && u <= 1.0;
    for (std::size_t d = 0; d < dim; ++d) worst_resid = std::max(worst_resid, std::abs(res.points[i][d] - (a[d] + u * (b[d] - a[d]))));
    // Neighbor must be one of the k nearest same-class points (brute force).
    std::vector<std::pair<double, std::size_t>> dists;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j == o.base || cls[j] != cls[o.base]) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += (pts[j][d] - a[d]) * (pts[j][d] - a[d]);
      dists.emplace_back(s, j);
    }
    std::sort(dists.begin(), dists.end());
    bool found = false;
    for (int q = 0; q < k; ++q) found = found || dists[static_cast<std::size_t>(q)].second == o.neighbor;
    nn_ok = nn_ok && found && res.classes[i] == cls[o.base];
  }
  const bool ok = equal && originals && u_ok && nn_ok && worst_resid <= 1e-9;
  return {ok, fmt("classes equalized: %s; originals untouched: %s; u in [0,1]: %s; neighbor in %d-NN: %s; max residual %.2e (tol 1e-9)",
                  equal ? "yes" : "no", originals ? "yes" : "no", u_ok ? "yes" : "no", k, nn_ok ? "yes" : "no", worst_resid)};
}

Outcome ac7_gradcheck() {
  double worst = 0.0;
  for (bool residual : {false, true}) {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      CnnConfig c;
      c.input_channels = 4;
      c.input_bins = 8;
      c.n_classes = 3;
      c.seed = seed;
      c.blocks = residual ? std::vector<BlockSpec>{{3, 2, false}, {3, 1, true}} : std::vector<BlockSpec>{{3, 1, false}, {4, 2, false}};
      ModelParams p = init_params(c);
      for (auto& nt : p.tensors) {
        if (nt.name.find("bias") != std::string::npos) {
          for (auto& v : nt.tensor.values) v = 0.05;
        }
      }
      std::mt19937_64 rng(seed * 7);
      std::normal_distribution<double> g;
      std::vector<std::vector<double>> xs(4, std::vector<double>(32));
      for (auto& x : xs) {
        for (auto& v : x) v = g(rng);
      }
      const std::vector<int> labels{0, 1, 2, 1};
      InputBatch batch;
      for (const auto& x : xs) batch.emplace_back(x);
      const LossGradient lg = backward(c, p, batch, labels);
      const double h = 1e-4;
      for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t j = 0; j < p.tensors[t].tensor.size(); ++j) {
          ModelParams plus = p, minus = p;
          plus.tensors[t].tensor.values[j] += h;
          minus.tensors[t].tensor.values[j] -= h;
          const double num =
              (oracle::mean_cross_entropy(c, plus, xs, labels) - oracle::mean_cross_entropy(c, minus, xs, labels)) / (2 * h);
          const double ana = lg.grads.tensors[t].tensor.values[j];
          diff2 += (ana - num) * (ana - num);
          a2 += ana * ana;
          n2 += num * num;
        }
        worst = std::max(worst, std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-12}));
      }
    }
  }
  return {worst < 1e-4, fmt("max per-tensor relative error %.2e over 2 architectures x 3 seeds (tol 1e-4)", worst)};
}

Outcome ac8_schedule() {
  double worst_lr = 0.0;
  for (int t : {0, 1, 100, 399}) {
    long double ref = 1e-3L;
    for (int i = 0; i < t; ++i) ref *= 0.99L;
    worst_lr = std::max(worst_lr, static_cast<double>(std::fabs((lr_at(t) - ref) / ref)));
  }
  // Scalar fixtures: first step moves each weight by lr * g / (|g| + eps).
  double worst_adam = 0.0;
  const double grads[] = {0.5, -0.1, 3.0, 1e-3, -7.5};
  for (double gv : grads) {
    ModelParams p{{{"w", Tensor{{1}, {0.25}}}}};
    const ModelParams g{{{"w", Tensor{{1}, {gv}}}}};
    AdamState s;
    adam_step(p, g, s, 1e-3);
    const double m = 0.1 * gv, v = 0.001 * gv * gv;
    const double want = 0.25 - 1e-3 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
    worst_adam = std::max(worst_adam, std::abs(p.tensors[0].tensor.values[0] - want));
    // Second step with a new gradient.
    const ModelParams g2{{{"w", Tensor{{1}, {-0.5 * gv + 0.2}}}}};
    const double before = p.tensors[0].tensor.values[0];
    adam_step(p, g2, s, lr_at(1));
    const double g2v = -0.5 * gv + 0.2;
    const double m2 = 0.9 * m + 0.1 * g2v, v2 = 0.999 * v + 0.001 * g2v * g2v;
    const double want2 = before - lr_at(1) * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.998001)) + 1e-8);
    worst_adam = std::max(worst_adam, std::abs(p.tensors[0].tensor.values[0] - want2));
  }
  const bool ok = worst_lr < 1e-14 && worst_adam < 1e-9;
  return {ok, fmt("lr_at max rel err %.1e at t in {0,1,100,399}; Adam max abs err %.1e (tol 1e-9)", worst_lr, worst_adam)};
}

Outcome ac9_learning() {
  PipelineConfig cfg;
  cfg.set_seed(1);
  const auto t0 = Clock::now();
  std::vector<RecordingWithEvents> recs;
  for (int i = 0; i < cfg.synth.n_subjects; ++i) {
    auto r = synth_subject(cfg.synth, i);
    r.recording = preprocess_recording(r.recording, cfg);
    r.recording.data = add_gaussian_noise(r.recording.data, cfg.noise_for_subject(static_cast<std::size_t>(i)));
    recs.push_back(std::move(r));
  }
  const FeatureDataset ds = build_feature_dataset(recs, cfg);
  const auto t1 = Clock::now();
  const TrainedModel bin = train_task(ds, Task::Binary, cfg);
  const TrainedModel cat = train_task(ds, Task::Categorical, cfg);
  const auto t2 = Clock::now();
  const double train_s = std::chrono::duration<double>(t2 - t1).count();

  const auto bin_test = task_inputs(ds, Task::Binary, "test");
  const auto cat_test = task_inputs(ds, Task::Categorical, "test");
  const TaskMetrics mb = evaluate(bin.config, bin.result.best_params, bin_test);
  const TaskMetrics mc = evaluate(cat.config, cat.result.best_params, cat_test);

  // Chance: the better of uniform guessing and always predicting the majority class.
  std::map<int, int> freq;
  for (int y : cat_test.labels) ++freq[y];
  int majority = 0;
  for (const auto& [y, n] : freq) majority = std::max(majority, n);
  const double chance = std::max(1.0 / static_cast<double>(cat.config.n_classes),
                                 static_cast<double>(majority) / static_cast<double>(cat_test.size()));

  auto converged = [](const TrainResult& r) {
    return r.stopped_early && r.epochs_run < 300 && r.log.back().train_loss < r.log.front().train_loss;
  };
  const bool ok = mb.accuracy >= 0.90 && mc.accuracy > 1.5 * chance && train_s < 600.0 && converged(bin.result) &&
                  converged(cat.result);
  return {ok, fmt("binary acc %.3f (n=%zu, need >= 0.90); categorical acc %.3f vs chance %.3f (need > %.3f); "
                  "stopped at epochs %d/%d (best %d/%d, need < 300); data %.0f s, training %.0f s (< 600 s)",
                  mb.accuracy, mb.n, mc.accuracy, chance, 1.5 * chance, bin.result.epochs_run, cat.result.epochs_run,
                  bin.result.best_epoch, cat.result.best_epoch, std::chrono::duration<double>(t1 - t0).count(), train_s)};
}

Outcome ac10_early_stop() {
  CnnConfig c;
  c.input_channels = 4;
  c.input_bins = 16;
  c.n_classes = 2;
  c.seed = 21;
  c.blocks = {{4, 2, false}, {4, 1, true}};
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 0.3);
  LabeledInputs tr, va;
  for (int i = 0; i < 96; ++i) {
    const int y = i % 2;
    std::vector<double> x(64);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = g(rng) + (y == 1 && j < 16 ? 2.0 : 0.0);
    tr.inputs.push_back(x);
    tr.labels.push_back(y);
    va.inputs.push_back(std::move(x));
    va.labels.push_back(1 - y);  // learning the training labels worsens validation
  }
  TrainConfig tcfg;
  tcfg.lr0 = 1e-2;
  tcfg.seed = 4;
  std::vector<ModelParams> snapshots;
  const TrainResult r = train(c, init_params(c), tr, va, tcfg,
                              [&](const EpochRecord&, const ModelParams& p) { snapshots.push_back(p); });
  bool monotone = true;
  for (std::size_t i = 1; i < r.log.size(); ++i) monotone = monotone && r.log[i].val_loss > r.log[i - 1].val_loss;
  const bool restored = !snapshots.empty() && r.best_params == snapshots[0];
  const int expected = tcfg.early_stop_patience + 1;
  const bool ok = monotone && r.stopped_early && r.epochs_run == expected && r.best_epoch == 1 && restored;
  return {ok, fmt("patience %d: stopped after %d epochs (want %d), val loss monotone worsening: %s, best epoch %d, "
                  "restored params bit-identical to epoch 1: %s",
                  tcfg.early_stop_patience, r.epochs_run, expected, monotone ? "yes" : "no", r.best_epoch,
                  restored ? "yes" : "no")};
}

Outcome ac11_stream() {
  // Four-channel headband setup: a binary model trained on clean
  // (filtered, z-scored, no injected noise) synthetic windows.
  PipelineConfig cfg;
  cfg.set_seed(11);
  cfg.synth.channels = 4;
  cfg.noise.enabled = false;
  std::vector<RecordingWithEvents> recs;
  for (int i = 0; i < cfg.synth.n_subjects; ++i) {
    auto r = synth_subject(cfg.synth, i);
    r.recording = preprocess_recording(r.recording, cfg);
    recs.push_back(std::move(r));
  }
  const TrainedModel model = train_task(build_feature_dataset(recs, cfg), Task::Binary, cfg);

  // Scripted recording: back-to-back 6 s segments of known valence.
  SynthSpec spec = cfg.synth;
  spec.n_events_per_subject = 8;
  spec.event_duration_s = 6.0;
  spec.event_spacing_s = 6.0;
  spec.lead_in_s = 0.0;
  spec.response_rate = 1.0;
  spec.classes = {{"sadness", BinaryLabel::Negative, 6.0, 1.0}, {"joy", BinaryLabel::Positive, 20.0, 1.0}};
  spec.seed = 31337;
  const auto scripted = synth_subject(spec, 0);
  const double fs = scripted.recording.sample_rate_hz;

  int negatives = 0;
  for (const auto& e : scripted.events) negatives += e.emotion_name == "sadness" ? 1 : 0;

  bool all_ok = negatives > 0 && negatives < 8;
  std::string detail = fmt("%d/8 negative segments; ", negatives);
  for (const auto& [m, policy] : {std::pair{1, StrategyPolicy::RoundRobin}, std::pair{3, StrategyPolicy::Fixed}}) {
    StreamConfig sc = cfg.stream;
    sc.trigger_consecutive = m;
    sc.policy = policy;
    sc.fixed_strategy = Strategy::BreathingExercise;
    const auto res = stream_classify(scripted.recording, model.config, model.result.best_params, sc,
                                     cfg.filter_for(fs), cfg.psd);

    // Independent replay of the trigger rule over the predicted labels.
    int run = 0;
    std::size_t emitted = 0, mismatched = 0, interior = 0, agree = 0;
    bool strategies_ok = true, times_ok = true;
    double last_t = -1.0;
    for (std::size_t i = 0; i < res.windows.size(); ++i) {
      const auto& w = res.windows[i];
      bool fire = false;
      if (w.predicted == BinaryLabel::Negative) {
        if (++run == m) {
          fire = true;
          run = 0;
        }
      } else {
        run = 0;
      }
      if (fire != w.event.has_value()) ++mismatched;
      if (w.event) {
        const Strategy want = policy == StrategyPolicy::Fixed ? Strategy::BreathingExercise : kAllStrategies[emitted % 3];
        strategies_ok = strategies_ok && w.event->strategy == want &&
                        std::find(std::begin(kAllStrategies), std::end(kAllStrategies), w.event->strategy) != std::end(kAllStrategies);
        times_ok = times_ok && w.event->timestamp_s >= last_t && w.event->timestamp_s == w.t_s;
        last_t = w.event->timestamp_s;
        ++emitted;
      }
      // Windows lying entirely inside one scripted segment have a known label.
      const double start_s = static_cast<double>(w.start_sample) / fs;
      const auto seg = static_cast<std::size_t>(start_s / spec.event_spacing_s);
      if (seg < scripted.events.size() && w.t_s <= (static_cast<double>(seg) + 1.0) * spec.event_spacing_s) {
        ++interior;
        const bool neg = scripted.events[seg].emotion_name == "sadness";
        agree += (neg == (w.predicted == BinaryLabel::Negative)) ? 1 : 0;
      }
    }
    for (std::size_t i = 1; i < res.windows.size(); ++i) times_ok = times_ok && res.windows[i].t_s >= res.windows[i - 1].t_s;
    const double budget_ms = 1000.0 * static_cast<double>(sc.hop_samples) / fs;
    const double agreement = interior ? static_cast<double>(agree) / static_cast<double>(interior) : 0.0;
    const bool ok = mismatched == 0 && emitted > 0 && strategies_ok && times_ok && res.mean_latency_ms < budget_ms &&
                    agreement >= 0.9;
    all_ok = all_ok && ok;
    detail += fmt("M=%d: %zu windows, %zu events, %zu trigger mismatches, strategies ok %s, times nondecreasing %s, "
                  "segment agreement %.2f (>= 0.9), latency %.1f ms (< %.0f ms); ",
                  m, res.windows.size(), emitted, mismatched, strategies_ok ? "yes" : "no", times_ok ? "yes" : "no",
                  agreement, res.mean_latency_ms, budget_ms);
  }
  return {all_ok, detail};
}

// FNV-1a over file bytes; JSON artifacts are hashed after dropping wall-clock
// fields (keys ending in "_ms").
void strip_timing(nlohmann::json& j) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      const std::string& k = it.key();
      if (k.size() > 3 && k.compare(k.size() - 3, 3, "_ms") == 0) {
        it = j.erase(it);
      } else {
        strip_timing(*it);
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) strip_timing(v);
  }
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t tree_hash(const fs::path& root, std::size_t& files, std::size_t& stripped) {
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) paths.push_back(fs::relative(e.path(), root));
  }
  std::sort(paths.begin(), paths.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& rel : paths) {
    if (rel.filename() == "cfg.json") continue;
    std::ifstream in(root / rel, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto ext = rel.extension();
    if (ext == ".json" || ext == ".jsonl") {
      std::istringstream lines(bytes);
      std::string line, out;
      auto docs = ext == ".json" ? std::vector<std::string>{bytes} : std::vector<std::string>{};
      if (ext == ".jsonl") {
        while (std::getline(lines, line)) docs.push_back(line);
      }
      for (const auto& d : docs) {
        auto j = nlohmann::json::parse(d);
        const auto before = j.dump();
        strip_timing(j);
        const auto after = j.dump();
        stripped += before != after ? 1 : 0;
        out += after + "\n";
      }
      bytes = out;
    }
    h = fnv1a(rel.generic_string() + '\0', h);
    h = fnv1a(bytes, h);
    ++files;
  }
  return h;
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome ac12_determinism(const std::string& cli) {
  const fs::path base = fs::temp_directory_path() / "affekt_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path cfg = base / "cfg.json";
  std::ofstream(cfg) << R"({
  "seed": 2718,
  "synth": {"n_subjects": 6, "channels": 8},
  "entropy": {"max_subjects": 1},
  "smote": {"k": 2},
  "train": {"max_epochs": 25, "patience": 10}
})";
  const char* stages[] = {"synth", "preprocess", "augment", "entropy", "featurize", "train", "eval", "stream"};
  std::uint64_t hashes[2] = {0, 0};
  std::size_t files[2] = {0, 0}, stripped[2] = {0, 0};
  for (int r = 0; r < 2; ++r) {
    const fs::path out = base / ("run" + std::to_string(r));
    for (const char* s : stages) {
      const int code = run(cli + " " + s + " --config " + cfg.string() + " --out " + out.string() + " > /dev/null");
      if (code != 0) return {false, fmt("run %d: stage %s exited with %d", r + 1, s, code)};
    }
    hashes[r] = tree_hash(out, files[r], stripped[r]);
  }
  const bool ok = hashes[0] == hashes[1] && files[0] == files[1] && files[0] > 0;
  return {ok, fmt("8-stage chain twice: %zu artifacts, hash %016llx vs %016llx (%zu JSON docs had *_ms timing fields excluded)",
                  files[0], static_cast<unsigned long long>(hashes[0]), static_cast<unsigned long long>(hashes[1]), stripped[0])};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-affekt-cli>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];

  struct Criterion {
    const char* id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "butterworth lowpass matches prototype", 1.0, ac1_filter},
      {"AC2", "powerline notch", 1.0, ac2_notch},
      {"AC3", "sample entropy counts vs brute force", 30.0, ac3_sampen},
      {"AC4", "noise raises complexity index", 120.0, ac4_complexity},
      {"AC5", "welch psd and feature shape", 10.0, ac5_psd},
      {"AC6", "smote properties", 5.0, ac6_smote},
      {"AC7", "gradient check", 60.0, ac7_gradcheck},
      {"AC8", "lr schedule and adam", 1.0, ac8_schedule},
      {"AC9", "end-to-end learning", 900.0, ac9_learning},
      {"AC10", "early stopping", 60.0, ac10_early_stop},
      {"AC11", "streaming interventions", 300.0, ac11_stream},
      {"AC12", "cli determinism", 300.0, [&] { return ac12_determinism(cli); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += pass ? 0 : 1;
    std::printf("[%s] %s %s: %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s, in_budget ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
