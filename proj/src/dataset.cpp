#include "affekt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "affekt/error.hpp"
#include "binary_io.hpp"

namespace affekt {

namespace fs = std::filesystem;

std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::Negative ? "negative" : "positive";
}

EmotionTable::EmotionTable(std::vector<std::string> names) {
  for (const auto& n : names) register_name(n);
}

int EmotionTable::register_name(const std::string& name) {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  const int id = static_cast<int>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

int EmotionTable::id_of(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw Error(ErrorKind::UnknownEmotionName, "unknown emotion name '" + name + "'");
  return it->second;
}

ClassLabel label_from_ratings(const EmotionEvent& ev, const EmotionTable& table, const LabelingOptions& options) {
  const double rating = options.dimension == RatingDimension::Arousal ? ev.arousal : ev.valence;
  if (!(rating >= 1.0 && rating <= 9.0)) {
    throw Error(ErrorKind::MalformedEvent, "rating " + std::to_string(rating) + " outside [1, 9]");
  }
  ClassLabel label;
  label.categorical = table.id_of(ev.emotion_name);
  if (rating < options.low) {
    label.binary = BinaryLabel::Negative;
  } else if (rating > options.high) {
    label.binary = BinaryLabel::Positive;
  }
  return label;
}

// ---------------------------------------------------------------------------

namespace {

const char* const kEventColumns[] = {"onset", "duration", "trial_type", "valence", "arousal", "emotion"};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<EmotionEvent> parse_events(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "missing events file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::MalformedEvent, path.string() + ": empty events file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_tabs(line);
  std::array<std::size_t, 6> col{};
  for (std::size_t k = 0; k < 6; ++k) {
    auto it = std::find(header.begin(), header.end(), kEventColumns[k]);
    if (it == header.end()) {
      throw Error(ErrorKind::MalformedEvent, path.string() + ": header lacks column '" + kEventColumns[k] + "'");
    }
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<EmotionEvent> events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    const auto where = path.string() + " line " + std::to_string(line_no);
    if (cells.size() < header.size()) throw Error(ErrorKind::MalformedEvent, where + ": too few columns");
    auto number = [&](std::size_t k) {
      auto v = parse_double(cells[col[k]]);
      if (!v) {
        throw Error(ErrorKind::MalformedEvent,
                    where + ": column '" + kEventColumns[k] + "' is not numeric: '" + cells[col[k]] + "'");
      }
      return *v;
    };
    EmotionEvent ev;
    ev.onset_s = number(0);
    ev.duration_s = number(1);
    ev.trial_type = cells[col[2]];
    ev.valence = number(3);
    ev.arousal = number(4);
    ev.emotion_name = cells[col[5]];
    if (ev.onset_s < 0.0 || ev.duration_s <= 0.0) {
      throw Error(ErrorKind::MalformedEvent, where + ": onset must be >= 0 and duration > 0");
    }
    for (double r : {ev.valence, ev.arousal}) {
      if (r < 1.0 || r > 9.0) throw Error(ErrorKind::MalformedEvent, where + ": rating outside [1, 9]");
    }
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace

RecordingWithEvents load_recording(const fs::path& dir) {
  const fs::path sidecar = dir / "eeg.json";
  const fs::path raw = dir / "eeg.f32";
  const fs::path tsv = dir / "events.tsv";
  for (const auto& p : {sidecar, raw, tsv}) {
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::MissingFile, "missing file " + p.string());
  }

  RecordingWithEvents out;
  Recording& rec = out.recording;
  std::size_t n_samples = 0;
  try {
    std::ifstream in(sidecar);
    const auto j = nlohmann::json::parse(in);
    rec.subject_id = j.at("subject_id").get<std::string>();
    rec.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    rec.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    n_samples = j.at("n_samples").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidRecording, sidecar.string() + ": " + e.what());
  }

  const std::size_t channels = rec.channel_names.size();
  const std::uintmax_t expected = static_cast<std::uintmax_t>(channels) * n_samples * 4;
  const std::uintmax_t actual = fs::file_size(raw);
  if (actual != expected) {
    throw Error(ErrorKind::ShapeMismatch, raw.string() + ": expected " + std::to_string(expected) +
                                              " bytes for " + std::to_string(channels) + " x " +
                                              std::to_string(n_samples) + " samples, found " +
                                              std::to_string(actual));
  }
  std::vector<unsigned char> bytes(expected);
  std::ifstream in(raw, std::ios::binary);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(ErrorKind::ShapeMismatch, raw.string() + ": short read");
  rec.data = Matrix(channels, n_samples);
  auto& values = rec.data.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(io::u32_from_bytes(bytes.data() + 4 * i));
  }
  rec.validate();
  out.events = parse_events(tsv);
  return out;
}

void save_recording(const fs::path& dir, const Recording& rec, const std::vector<EmotionEvent>& events) {
  rec.validate();
  fs::create_directories(dir);
  {
    nlohmann::json j;
    j["subject_id"] = rec.subject_id;
    j["sample_rate_hz"] = rec.sample_rate_hz;
    j["channel_names"] = rec.channel_names;
    j["n_samples"] = rec.n_samples();
    std::ofstream out(dir / "eeg.json", std::ios::trunc);
    out << j.dump(2) << '\n';
  }
  {
    std::ostringstream buf(std::ios::binary);
    for (double v : rec.data.values()) io::put_f32(buf, static_cast<float>(v));
    std::ofstream out(dir / "eeg.f32", std::ios::binary | std::ios::trunc);
    const std::string bytes = buf.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::MissingFile, "failed writing " + (dir / "eeg.f32").string());
  }
  {
    std::ofstream out(dir / "events.tsv", std::ios::binary | std::ios::trunc);
    out << "onset\tduration\ttrial_type\tvalence\tarousal\temotion\n";
    for (const auto& ev : events) {
      out << format_double(ev.onset_s) << '\t' << format_double(ev.duration_s) << '\t' << ev.trial_type << '\t'
          << format_double(ev.valence) << '\t' << format_double(ev.arousal) << '\t' << ev.emotion_name << '\n';
    }
  }
}

std::vector<fs::path> list_subject_dirs(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename().string().starts_with("sub-")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

WindowExtraction extract_windows(const Recording& rec, const std::vector<EmotionEvent>& events,
                                 const EmotionTable& table, std::size_t window_len,
                                 const LabelingOptions& options) {
  rec.validate();
  WindowExtraction out;
  const double fs = rec.sample_rate_hz;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto& ev = events[e];
    const auto start = static_cast<std::size_t>(std::llround(ev.onset_s * fs));
    const auto duration = static_cast<std::size_t>(std::llround(ev.duration_s * fs));
    if (duration < window_len) {
      out.skipped.push_back({e, "event shorter than window"});
      continue;
    }
    if (start + window_len > rec.n_samples()) {
      out.skipped.push_back({e, "window runs past end of recording"});
      continue;
    }
    LabeledWindow w;
    w.data = Matrix(rec.n_channels(), window_len);
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      const auto src = rec.data.row(c).subspan(start, window_len);
      std::copy(src.begin(), src.end(), w.data.row(c).begin());
    }
    w.label = label_from_ratings(ev, table, options);
    w.subject_id = rec.subject_id;
    char id[32];
    std::snprintf(id, sizeof(id), "/ev%03zu", e);
    w.window_id = rec.subject_id + id;
    out.windows.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  const std::size_t train = std::min(n, n_train);
  return {train, n_val, n - train - n_val};
}

void validate_ratios(const std::array<double, 3>& ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; }) || std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidParams, "split ratios must be non-negative and sum to 1");
  }
}

}  // namespace

DatasetSplit split_dataset(const std::vector<int>& classes, int n_classes, const SplitOptions& options,
                           const std::vector<std::string>& subjects) {
  validate_ratios(options.ratios);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(std::max(n_classes, 0)));
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int c = classes[i];
    if (c < 0 || c >= n_classes) throw Error(ErrorKind::InvalidParams, "class id out of range");
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(c) + " has no windows");
  }

  std::mt19937_64 rng(options.seed);
  DatasetSplit split;

  if (options.unit == SplitUnit::Subject) {
    if (subjects.size() != classes.size()) {
      throw Error(ErrorKind::InvalidParams, "subject-level split needs one subject id per window");
    }
    std::vector<std::string> unique(subjects.begin(), subjects.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    std::shuffle(unique.begin(), unique.end(), rng);
    const auto counts = split_counts(unique.size(), options.ratios);
    std::map<std::string, int> part;
    for (std::size_t s = 0; s < unique.size(); ++s) part[unique[s]] = s < counts[0] ? 0 : (s < counts[0] + counts[1] ? 1 : 2);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      const int p = part[subjects[i]];
      (p == 0 ? split.train : p == 1 ? split.val : split.test).push_back(i);
    }
    return split;
  }

  // Each class is shuffled and spread evenly over [0, 1); merging on that
  // key keeps every prefix of the combined order proportionally stratified.
  struct Keyed {
    double key;
    int cls;
    std::size_t index;
  };
  std::vector<Keyed> order;
  order.reserve(classes.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    const double n = static_cast<double>(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
      order.push_back({(static_cast<double>(j) + 0.5) / n, static_cast<int>(c), members[j]});
    }
  }
  std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.cls < b.cls;
  });

  const auto counts = split_counts(order.size(), options.ratios);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < counts[0] ? split.train : (i < counts[0] + counts[1] ? split.val : split.test);
    dst.push_back(order[i].index);
  }
  return split;
}

std::vector<Batch> make_batches(const std::vector<std::size_t>& indices, std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::InvalidParams, "batch size must be positive");
  std::vector<Batch> out;
  for (std::size_t i = 0; i < indices.size(); i += batch_size) {
    const std::size_t end = std::min(indices.size(), i + batch_size);
    out.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(i), indices.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

BatchedSplit split_and_batch(const std::vector<int>& classes, int n_classes, const SplitOptions& options,
                             const std::vector<std::string>& subjects) {
  BatchedSplit out;
  out.split = split_dataset(classes, n_classes, options, subjects);
  out.train = make_batches(out.split.train, options.batch_size);
  out.val = make_batches(out.split.val, options.batch_size);
  out.test = make_batches(out.split.test, options.batch_size);
  return out;
}

}  // namespace affekt
