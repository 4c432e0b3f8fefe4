#include "aqks/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>

#include "aqks/errors.hpp"
#include "aqks/random.hpp"

namespace aqks {

namespace {

constexpr std::uint64_t kDataTag = 0x64617461ULL;      // "data"
constexpr std::uint64_t kSplitTag = 0x73706c74ULL;     // "splt"
constexpr std::uint64_t kSubsampleTag = 0x73756273ULL; // "subs"
constexpr std::uint64_t kEpisodeTag = 0x65706973ULL;   // "epis"
constexpr std::uint64_t kMeasureTag = 0x6d656173ULL;   // "meas"
constexpr std::uint64_t kValidTag = 0x76616c69ULL;     // "vali"

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string real_text(double v) { return fmt("%.17g", v); }

std::vector<int> labels_at(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(y[i]);
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration objects

void ExperimentConfig::validate() const {
  distribution.validate();
  transform.validate();
  if (!(svm.C > 0.0) || !std::isfinite(svm.C)) throw ConfigError("svm.C must be a positive real");
  if (!(svm.tol > 0.0)) throw ConfigError("svm.tol must be a positive real");
  if (svm.max_epochs < 1) throw ConfigError("svm.max_epochs must be >= 1");
  if (trials < 1) throw ConfigError("experiment.trials must be >= 1");
  if (threads < 1) throw ConfigError("experiment.threads must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("experiment.validation_fraction must lie in [0, 1)");
  const DatasetSpec& d = dataset;
  if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0))
    throw ConfigError("dataset.train_fraction must lie in (0, 1)");
  if (d.kind == DatasetKind::kCircles) {
    if (d.circles.n_per_class < 1) throw ConfigError("dataset.n_per_class must be >= 1");
    if (!(d.circles.factor > 0.0 && d.circles.factor < 1.0))
      throw ConfigError("dataset.factor must lie in (0, 1)");
    if (!(d.circles.noise_std >= 0.0)) throw ConfigError("dataset.noise_std must be >= 0");
  } else {
    auto digit_ok = [](int v) { return v >= 0 && v <= 9; };
    if (!digit_ok(d.digits.first) || !digit_ok(d.digits.second) ||
        d.digits.first == d.digits.second)
      throw ConfigError("dataset.digits must be two distinct digits 0-9");
  }
}

ExperimentConfig default_config(DatasetKind kind, bool full) {
  ExperimentConfig cfg;
  cfg.dataset.kind = kind;
  cfg.transform.num_qubits = 2;
  cfg.transform.total_time = 5.0;
  cfg.transform.step_duration = 1.0;
  cfg.transform.topology = TopologyKind::kComplete;
  if (kind == DatasetKind::kCircles) {
    cfg.distribution = DistributionConfig::uniform_2pi(1.0);
    cfg.transform.num_episodes = 1000;
  } else {
    cfg.distribution = DistributionConfig::zero_bias(0.01);
    cfg.transform.num_episodes = full ? 20000 : 2000;
    cfg.dataset.subsample = full ? 0 : 3000;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Summaries

namespace {

const Accuracy& pick(const TrialResult& r, Method m) {
  return m == Method::kBaseline ? r.baseline : r.aqks;
}

double pick(const Accuracy& a, Split s) { return s == Split::kTrain ? a.train : a.test; }

}  // namespace

std::size_t TrialSummary::successful_trials() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const TrialResult& r) { return r.ok(); }));
}

double TrialSummary::mean(Method m, Split s) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TrialResult& r : trials) {
    if (!r.ok()) continue;
    sum += pick(pick(r, m), s);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double TrialSummary::stddev(Method m, Split s) const {
  const double mu = mean(m, s);
  double ss = 0.0;
  std::size_t n = 0;
  for (const TrialResult& r : trials) {
    if (!r.ok()) continue;
    const double d = pick(pick(r, m), s) - mu;
    ss += d * d;
    ++n;
  }
  return n ? std::sqrt(ss / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN();
}

double TrialSummary::mean_validation() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TrialResult& r : trials) {
    if (!r.ok() || !r.aqks_validation) continue;
    sum += *r.aqks_validation;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Experiments

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const DatasetSpec& spec = cfg.dataset;
  PreparedData out;
  if (spec.kind == DatasetKind::kCircles) {
    CirclesOptions opts = spec.circles;
    opts.seed = derive_key({cfg.master_seed, kDataTag});
    out.data = make_circles(opts);
  } else {
    RawDataset raw;
    if (!spec.mnist_dir.empty())
      raw = load_mnist_dir(spec.mnist_dir);
    else if (!spec.mnist_images.empty() && !spec.mnist_labels.empty())
      raw = load_mnist_idx(spec.mnist_images, spec.mnist_labels);
    else
      throw ConfigError(
          "MNIST needs dataset.mnist_dir or both dataset.mnist_images and dataset.mnist_labels");
    RawDataset filtered = filter_digits(raw, spec.digits);
    if (spec.subsample > 0 && spec.subsample < filtered.size()) {
      const auto keep = stratified_subsample(filtered.y, spec.subsample,
                                             derive_key({cfg.master_seed, kSubsampleTag}));
      const std::string provenance = filtered.provenance;
      filtered = filtered.select(keep);
      filtered.provenance = provenance + ", stratified subsample " + std::to_string(keep.size());
    }
    if (spec.scale_pixels) {
      filtered.X /= 255.0;
      filtered.provenance += ", pixels / 255";
    }
    out.data = std::move(filtered);
  }
  out.split = split_indices(out.data.y, SplitSpec{spec.train_fraction,
                                                  derive_key({cfg.master_seed, kSplitTag}), true});
  if (out.split.train.empty() || out.split.test.empty())
    throw DataError("train/test split left one side empty");
  return out;
}

std::pair<Accuracy, double> run_baseline(const PreparedData& prepared, const SvmOptions& svm) {
  const auto start = Clock::now();
  const RawDataset train = prepared.data.select(prepared.split.train);
  const RawDataset test = prepared.data.select(prepared.split.test);
  const LinearSVMModel model = fit(train.labeled(), svm);
  Accuracy acc{accuracy(model, train.labeled()), accuracy(model, test.labeled())};
  return {acc, seconds_since(start)};
}

std::uint64_t trial_episode_seed(std::uint64_t master_seed, int trial) {
  return derive_key({master_seed, kEpisodeTag, static_cast<std::uint64_t>(trial)});
}

std::uint64_t trial_measurement_seed(std::uint64_t master_seed, int trial) {
  return derive_key({master_seed, kMeasureTag, static_cast<std::uint64_t>(trial)});
}

namespace {

void run_trial(const ExperimentConfig& cfg, const PreparedData& prepared, TrialResult& r) {
  const RawDataset& data = prepared.data;
  const std::vector<EpisodeParams> episodes =
      sample_episodes(cfg.transform.num_episodes, cfg.transform.num_qubits,
                      static_cast<int>(data.dim()), cfg.distribution, r.episode_seed);

  auto start = Clock::now();
  const FeatureMatrix features =
      transform_dataset(data.X, episodes, cfg.transform, r.measurement_seed, cfg.threads);
  r.transform_seconds = seconds_since(start);

  if (!cfg.out_dir.empty() && cfg.write_caches && cfg.transform.shots_per_episode == 1)
    write_feature_cache(cfg.out_dir / ("features_trial" + std::to_string(r.trial) + ".aqkc"),
                        features, r.measurement_seed);

  const FeatureMatrix train = features.select_rows(prepared.split.train);
  const FeatureMatrix test = features.select_rows(prepared.split.test);
  const std::vector<int> y_train = labels_at(data.y, prepared.split.train);
  const std::vector<int> y_test = labels_at(data.y, prepared.split.test);

  start = Clock::now();
  const LinearSVMModel model = fit(train, y_train, cfg.svm);
  r.aqks.train = accuracy(model, train, y_train);
  r.aqks.test = accuracy(model, test, y_test);

  if (cfg.validation_fraction > 0.0) {
    const SplitIndices inner = split_indices(
        y_train, SplitSpec{1.0 - cfg.validation_fraction,
                           derive_key({cfg.master_seed, kValidTag}), true});
    if (inner.train.empty() || inner.test.empty())
      throw DataError("validation split left one side empty");
    const FeatureMatrix fit_rows = train.select_rows(inner.train);
    const FeatureMatrix val_rows = train.select_rows(inner.test);
    const LinearSVMModel inner_model = fit(fit_rows, labels_at(y_train, inner.train), cfg.svm);
    r.aqks_validation = accuracy(inner_model, val_rows, labels_at(y_train, inner.test));
  }
  r.fit_seconds = seconds_since(start);
}

void write_manifest(const ExperimentConfig& cfg, const PreparedData& prepared) {
  std::ofstream os(cfg.out_dir / "manifest.txt", std::ios::trunc);
  if (!os) throw Error("cannot write " + (cfg.out_dir / "manifest.txt").string());
  os << "# dataset: " << prepared.data.provenance << '\n'
     << "# rows: " << prepared.data.size() << " (train " << prepared.split.train.size()
     << ", test " << prepared.split.test.size() << ")\n"
     << to_config_text(cfg);
}

}  // namespace

TrialSummary run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, prepare_data(cfg));
}

TrialSummary run_experiment(const ExperimentConfig& cfg, const PreparedData& prepared) {
  cfg.validate();
  if (!cfg.out_dir.empty()) {
    ensure_dir(cfg.out_dir);
    write_manifest(cfg, prepared);
  }
  const auto [baseline, baseline_seconds] = run_baseline(prepared, cfg.svm);

  TrialSummary summary;
  for (int t = 0; t < cfg.trials; ++t) {
    TrialResult r;
    r.trial = t;
    r.episode_seed = trial_episode_seed(cfg.master_seed, t);
    r.measurement_seed = trial_measurement_seed(cfg.master_seed, t);
    r.baseline = baseline;
    r.baseline_seconds = baseline_seconds;
    try {
      run_trial(cfg, prepared, r);
    } catch (const std::exception& e) {
      r.error = "trial " + std::to_string(t) + ": " + e.what();
    }
    summary.trials.push_back(std::move(r));
    if (!cfg.out_dir.empty()) emit_csv({summary}, cfg.out_dir / "results.csv");
  }
  return summary;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "sigma_d") return SweepAxis::kSigmaD;
  if (name == "episodes") return SweepAxis::kEpisodes;
  if (name == "qubits") return SweepAxis::kQubits;
  if (name == "topology") return SweepAxis::kTopology;
  if (name == "anneal_time") return SweepAxis::kAnnealTime;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected sigma_d, episodes, qubits, topology or anneal_time)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSigmaD: return "sigma_d";
    case SweepAxis::kEpisodes: return "episodes";
    case SweepAxis::kQubits: return "qubits";
    case SweepAxis::kTopology: return "topology";
    case SweepAxis::kAnnealTime: return "anneal_time";
  }
  return "?";
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& raw, const char* type_name) {
  const std::string text = trim(raw);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(key + ": expected " + type_name + ", got '" + raw + "'");
  return value;
}

int parse_int(const std::string& key, const std::string& raw) {
  return parse_number<int>(key, raw, "an integer");
}

double parse_real(const std::string& key, const std::string& raw) {
  const double v = parse_number<double>(key, raw, "a real number");
  if (!std::isfinite(v)) throw ConfigError(key + ": expected a finite real number, got '" + raw + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  return parse_number<std::uint64_t>(key, raw, "a non-negative integer");
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean (true/false), got '" + raw + "'");
}

TopologyKind parse_topology_key(const std::string& key, const std::string& raw) {
  try {
    return parse_topology(trim(raw));
  } catch (const Error&) {
    throw ConfigError(key + ": expected one of linear, square, complete, got '" + raw + "'");
  }
}

}  // namespace

ExperimentConfig apply_axis(const ExperimentConfig& cfg, SweepAxis axis, const std::string& value) {
  ExperimentConfig out = cfg;
  switch (axis) {
    case SweepAxis::kSigmaD: out.distribution.sigma_d = parse_real("sigma_d", value); break;
    case SweepAxis::kEpisodes: out.transform.num_episodes = parse_int("episodes", value); break;
    case SweepAxis::kQubits: out.transform.num_qubits = parse_int("qubits", value); break;
    case SweepAxis::kTopology: out.transform.topology = parse_topology_key("topology", value); break;
    case SweepAxis::kAnnealTime: out.transform.total_time = parse_real("anneal_time", value); break;
  }
  out.validate();
  return out;
}

std::vector<TrialSummary> run_sweep(const ExperimentConfig& cfg, SweepAxis axis,
                                    const std::vector<std::string>& values) {
  const PreparedData prepared = prepare_data(cfg);
  if (!cfg.out_dir.empty()) ensure_dir(cfg.out_dir);
  std::vector<TrialSummary> out;
  for (const std::string& value : values) {
    TrialSummary s;
    try {
      ExperimentConfig point = apply_axis(cfg, axis, value);
      if (!cfg.out_dir.empty()) point.out_dir = cfg.out_dir / (to_string(axis) + "_" + value);
      s = run_experiment(point, prepared);
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    s.axis = to_string(axis);
    s.value = value;
    out.push_back(std::move(s));
    if (!cfg.out_dir.empty()) emit_csv(out, cfg.out_dir / "sweep.csv");
  }
  return out;
}

std::optional<std::size_t> best_by_validation(const std::vector<TrialSummary>& summaries) {
  std::optional<std::size_t> best;
  double best_value = -1.0;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    if (!summaries[i].error.empty()) continue;
    const double v = summaries[i].mean_validation();
    if (std::isnan(v)) continue;
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// CSV

std::vector<CsvRow> csv_rows(const std::vector<TrialSummary>& summaries) {
  std::vector<CsvRow> rows;
  for (const TrialSummary& s : summaries) {
    for (const TrialResult& r : s.trials) {
      if (!r.ok()) continue;
      const double aqks_seconds = r.transform_seconds + r.fit_seconds;
      rows.push_back({s.axis, s.value, r.trial, "train", "baseline", r.baseline.train, r.baseline_seconds});
      rows.push_back({s.axis, s.value, r.trial, "test", "baseline", r.baseline.test, r.baseline_seconds});
      rows.push_back({s.axis, s.value, r.trial, "train", "aqks", r.aqks.train, aqks_seconds});
      rows.push_back({s.axis, s.value, r.trial, "test", "aqks", r.aqks.test, aqks_seconds});
      if (r.aqks_validation)
        rows.push_back({s.axis, s.value, r.trial, "validation", "aqks", *r.aqks_validation, aqks_seconds});
    }
  }
  return rows;
}

void emit_csv(const std::vector<TrialSummary>& summaries, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << kCsvHeader << '\n';
  for (const CsvRow& row : csv_rows(summaries))
    os << row.axis << ',' << row.value << ',' << row.trial << ',' << row.split << ','
       << row.method << ',' << fmt("%.6f", row.accuracy) << ',' << fmt("%.3f", row.seconds)
       << '\n';
  if (!os) throw Error("failed writing " + path.string());
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || trim(line) != kCsvHeader)
    throw ParseError(path.string() + ": missing header '" + std::string(kCsvHeader) + "'");
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_on(trim(line), ',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 7) throw ParseError(where + ": expected 7 fields");
    try {
      rows.push_back({f[0], f[1], parse_int("trial", f[2]), f[3], f[4],
                      parse_real("accuracy", f[5]), parse_real("seconds", f[6])});
    } catch (const ConfigError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return rows;
}

std::vector<TrialSummary> summaries_from_csv(const std::vector<CsvRow>& rows) {
  std::vector<TrialSummary> out;
  auto find_summary = [&](const CsvRow& row) -> TrialSummary& {
    for (TrialSummary& s : out)
      if (s.axis == row.axis && s.value == row.value) return s;
    TrialSummary s;
    s.axis = row.axis;
    s.value = row.value;
    out.push_back(std::move(s));
    return out.back();
  };
  for (const CsvRow& row : rows) {
    TrialSummary& s = find_summary(row);
    auto it = std::find_if(s.trials.begin(), s.trials.end(),
                           [&](const TrialResult& r) { return r.trial == row.trial; });
    if (it == s.trials.end()) {
      TrialResult r;
      r.trial = row.trial;
      s.trials.push_back(r);
      it = std::prev(s.trials.end());
    }
    if (row.method == "baseline") {
      (row.split == "train" ? it->baseline.train : it->baseline.test) = row.accuracy;
      it->baseline_seconds = row.seconds;
    } else if (row.method == "aqks") {
      if (row.split == "validation")
        it->aqks_validation = row.accuracy;
      else
        (row.split == "train" ? it->aqks.train : it->aqks.test) = row.accuracy;
      it->transform_seconds = row.seconds;
    } else {
      throw ParseError("unknown method '" + row.method + "' in results");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

std::ofstream open_svg(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os;
}

std::string xy(double x, double y) { return fmt("%.2f", x) + "," + fmt("%.2f", y); }

}  // namespace

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "accuracy_vs_axis") return PlotKind::kAccuracyVsAxis;
  if (name == "scatter2d") return PlotKind::kScatter2d;
  throw ConfigError("unknown plot kind '" + name + "' (expected accuracy_vs_axis or scatter2d)");
}

void emit_accuracy_plot(const std::vector<TrialSummary>& summaries,
                        const std::filesystem::path& path) {
  std::vector<const TrialSummary*> points;
  for (const TrialSummary& s : summaries)
    if (s.error.empty() && s.successful_trials() > 0) points.push_back(&s);
  if (points.empty()) throw DomainError("accuracy plot: no summary has a successful trial");

  double lo = 1.0;
  double hi = 0.0;
  for (const TrialSummary* s : points) {
    const double m = s->mean(Method::kAqks, Split::kTest);
    const double d = s->stddev(Method::kAqks, Split::kTest);
    lo = std::min({lo, m - d, s->mean(Method::kBaseline, Split::kTest)});
    hi = std::max({hi, m + d, s->mean(Method::kBaseline, Split::kTest)});
  }
  lo = std::max(0.0, std::floor((lo - 0.02) * 20.0) / 20.0);
  hi = std::min(1.0, std::ceil((hi + 0.02) * 20.0) / 20.0);
  if (hi <= lo) hi = std::min(1.0, lo + 0.05);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const std::size_t n = points.size();
  auto px = [&](std::size_t i) {
    return n == 1 ? kLeft + plot_w / 2.0
                  : kLeft + plot_w * (0.05 + 0.9 * static_cast<double>(i) / static_cast<double>(n - 1));
  };
  auto py = [&](double acc) { return kTop + plot_h * (1.0 - (acc - lo) / (hi - lo)); };

  std::ofstream os = open_svg(path);
  os << "<g stroke=\"black\" stroke-width=\"1\">\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
     << "\" y2=\"" << kTop + plot_h << "\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + plot_h << "\"/>\n</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double acc = lo + (hi - lo) * k / 4.0;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.2f", py(acc) + 4) << "\">"
       << fmt("%.3f", acc) << "</text>\n";
  }
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
  for (std::size_t i = 0; i < n; ++i)
    os << "<text x=\"" << fmt("%.2f", px(i)) << "\" y=\"" << kTop + plot_h + 18 << "\">"
       << xml_escape(points[i]->value) << "</text>\n";
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\">"
     << xml_escape(points.front()->axis) << "</text>\n"
     << "<text transform=\"translate(16," << kTop + plot_h / 2
     << ") rotate(-90)\">test accuracy</text>\n</g>\n";

  // Baseline mean as a dashed reference (identical across points of a sweep).
  const double base = points.front()->mean(Method::kBaseline, Split::kTest);
  os << "<line class=\"baseline\" x1=\"" << kLeft << "\" y1=\"" << fmt("%.2f", py(base))
     << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << fmt("%.2f", py(base))
     << "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n";

  os << "<g class=\"errorbars\" stroke=\"#1f77b4\" stroke-width=\"1\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double m = points[i]->mean(Method::kAqks, Split::kTest);
    const double d = points[i]->stddev(Method::kAqks, Split::kTest);
    const double x = px(i);
    os << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << fmt("%.2f", py(m - d)) << "\" x2=\""
       << fmt("%.2f", x) << "\" y2=\"" << fmt("%.2f", py(m + d)) << "\"/>\n";
  }
  os << "</g>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < n; ++i)
    os << (i ? " " : "") << xy(px(i), py(points[i]->mean(Method::kAqks, Split::kTest)));
  os << "\"/>\n</svg>\n";
  if (!os) throw Error("failed writing " + path.string());
}

void emit_scatter_plot(const RawDataset& data, const std::filesystem::path& path) {
  if (data.dim() != 2)
    throw ShapeError("scatter2d needs 2-D samples, dataset has " + std::to_string(data.dim()) +
                     " features");
  if (data.size() == 0) throw DomainError("scatter2d: empty dataset");
  const double extent = std::max(1e-12, data.X.cwiseAbs().maxCoeff()) * 1.05;
  const double side = std::min(kWidth, kHeight) - 40.0;
  const double cx = kWidth / 2.0;
  const double cy = kHeight / 2.0;
  std::ofstream os = open_svg(path);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double x = cx + data.X(r, 0) / extent * side / 2.0;
    const double y = cy - data.X(r, 1) / extent * side / 2.0;
    os << "<circle cx=\"" << fmt("%.2f", x) << "\" cy=\"" << fmt("%.2f", y)
       << "\" r=\"2\" fill=\"" << (data.y[i] > 0 ? "#d62728" : "#1f77b4") << "\"/>\n";
  }
  os << "</svg>\n";
  if (!os) throw Error("failed writing " + path.string());
}

void emit_svg_plot(const std::vector<TrialSummary>& summaries, PlotKind kind,
                   const std::filesystem::path& path, const RawDataset* data) {
  if (kind == PlotKind::kAccuracyVsAxis) return emit_accuracy_plot(summaries, path);
  if (data == nullptr) throw ConfigError("scatter2d plot needs a dataset");
  emit_scatter_plot(*data, path);
}

// ---------------------------------------------------------------------------
// Configuration text

ConfigValues parse_config_text(const std::string& text) {
  ConfigValues out;
  std::istringstream is(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(where + ": missing key");
    if (section.empty()) throw ParseError(where + ": key '" + key + "' outside any [section]");
    out.emplace_back(section + "." + key, trim(line.substr(eq + 1)));
  }
  return out;
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset.kind", [](ExperimentConfig&, const std::string&, const std::string&) {}},
      {"dataset.full", [](ExperimentConfig&, const std::string& k, const std::string& v) {
         parse_bool(k, v);
       }},
      {"dataset.n_per_class",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.dataset.circles.n_per_class = parse_int(k, v);
       }},
      {"dataset.factor", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.dataset.circles.factor = parse_real(k, v);
       }},
      {"dataset.noise_std", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.dataset.circles.noise_std = parse_real(k, v);
       }},
      {"dataset.mnist_images", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.dataset.mnist_images = v;
       }},
      {"dataset.mnist_labels", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.dataset.mnist_labels = v;
       }},
      {"dataset.mnist_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.dataset.mnist_dir = v;
       }},
      {"dataset.digits", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto parts = split_on(v, ',');
         if (parts.size() != 2)
           throw ConfigError(k + ": expected two comma-separated digits, got '" + v + "'");
         c.dataset.digits = {parse_int(k, parts[0]), parse_int(k, parts[1])};
       }},
      {"dataset.subsample", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const int n = parse_int(k, v);
         if (n < 0) throw ConfigError(k + ": expected a non-negative integer, got '" + v + "'");
         c.dataset.subsample = static_cast<std::size_t>(n);
       }},
      {"dataset.scale_pixels", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.dataset.scale_pixels = parse_bool(k, v);
       }},
      {"dataset.train_fraction",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.dataset.train_fraction = parse_real(k, v);
       }},
      {"encoding.sigma_d", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.distribution.sigma_d = parse_real(k, v);
       }},
      {"encoding.b_mode", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const double s = c.distribution.sigma_d;
         if (v == "zero")
           c.distribution = DistributionConfig::zero_bias(s);
         else if (v == "uniform2pi")
           c.distribution = DistributionConfig::uniform_2pi(s);
         else
           throw ConfigError(k + ": expected zero or uniform2pi, got '" + v + "'");
       }},
      {"transform.qubits", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.transform.num_qubits = parse_int(k, v);
       }},
      {"transform.episodes", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.transform.num_episodes = parse_int(k, v);
       }},
      {"transform.anneal_time",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.transform.total_time = parse_real(k, v);
       }},
      {"transform.tau", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.transform.step_duration = parse_real(k, v);
       }},
      {"transform.topology", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.transform.topology = parse_topology_key(k, v);
       }},
      {"transform.transverse_sign",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "standard")
           c.transform.transverse_sign = TransverseSign::kStandard;
         else if (v == "literal")
           c.transform.transverse_sign = TransverseSign::kLiteral;
         else
           throw ConfigError(k + ": expected standard or literal, got '" + v + "'");
       }},
      {"transform.shots", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.transform.shots_per_episode = parse_int(k, v);
       }},
      {"svm.C", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.svm.C = parse_real(k, v);
       }},
      {"svm.tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.svm.tol = parse_real(k, v);
       }},
      {"svm.max_epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.svm.max_epochs = parse_int(k, v);
       }},
      {"svm.seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.svm.seed = parse_u64(k, v);
       }},
      {"experiment.trials", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.trials = parse_int(k, v);
       }},
      {"experiment.seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.master_seed = parse_u64(k, v);
       }},
      {"experiment.out", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.out_dir = v;
       }},
      {"experiment.threads", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.threads = parse_int(k, v);
       }},
      {"experiment.write_caches",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.write_caches = parse_bool(k, v);
       }},
      {"experiment.validation_fraction",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.validation_fraction = parse_real(k, v);
       }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(const ConfigValues& file_values, const ConfigValues& overrides) {
  ConfigValues merged = file_values;
  merged.insert(merged.end(), overrides.begin(), overrides.end());

  const auto& table = setters();
  for (const auto& [key, value] : merged)
    if (!table.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");

  // The dataset kind and --full choose the defaults everything else overrides.
  DatasetKind kind = DatasetKind::kCircles;
  bool full = false;
  for (const auto& [key, value] : merged) {
    if (key == "dataset.kind") {
      if (value == "circles")
        kind = DatasetKind::kCircles;
      else if (value == "mnist")
        kind = DatasetKind::kMnist;
      else
        throw ConfigError(key + ": expected circles or mnist, got '" + value + "'");
    } else if (key == "dataset.full") {
      full = parse_bool(key, value);
    }
  }
  ExperimentConfig cfg = default_config(kind, full);
  // b_mode resets sigma_d to the value current at that point, so apply
  // sigma_d entries after all b_mode entries.
  for (const auto& [key, value] : merged)
    if (key != "encoding.sigma_d") table.at(key)(cfg, key, value);
  for (const auto& [key, value] : merged)
    if (key == "encoding.sigma_d") table.at(key)(cfg, key, value);
  cfg.validate();
  return cfg;
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  const DatasetSpec& d = cfg.dataset;
  os << "[dataset]\n"
     << "kind = " << (d.kind == DatasetKind::kCircles ? "circles" : "mnist") << '\n';
  if (d.kind == DatasetKind::kCircles) {
    os << "n_per_class = " << d.circles.n_per_class << '\n'
       << "factor = " << real_text(d.circles.factor) << '\n'
       << "noise_std = " << real_text(d.circles.noise_std) << '\n';
  } else {
    if (!d.mnist_dir.empty()) os << "mnist_dir = " << d.mnist_dir.string() << '\n';
    if (!d.mnist_images.empty()) os << "mnist_images = " << d.mnist_images.string() << '\n';
    if (!d.mnist_labels.empty()) os << "mnist_labels = " << d.mnist_labels.string() << '\n';
    os << "digits = " << d.digits.first << ',' << d.digits.second << '\n'
       << "subsample = " << d.subsample << '\n'
       << "scale_pixels = " << (d.scale_pixels ? "true" : "false") << '\n';
  }
  os << "train_fraction = " << real_text(d.train_fraction) << "\n\n"
     << "[encoding]\n"
     << "b_mode = " << (cfg.distribution.b_mode == BiasMode::kZero ? "zero" : "uniform2pi") << '\n'
     << "sigma_d = " << real_text(cfg.distribution.sigma_d) << "\n\n"
     << "[transform]\n"
     << "qubits = " << cfg.transform.num_qubits << '\n'
     << "episodes = " << cfg.transform.num_episodes << '\n'
     << "anneal_time = " << real_text(cfg.transform.total_time) << '\n'
     << "tau = " << real_text(cfg.transform.step_duration) << '\n'
     << "topology = " << to_string(cfg.transform.topology) << '\n'
     << "transverse_sign = "
     << (cfg.transform.transverse_sign == TransverseSign::kStandard ? "standard" : "literal") << '\n'
     << "shots = " << cfg.transform.shots_per_episode << "\n\n"
     << "[svm]\n"
     << "C = " << real_text(cfg.svm.C) << '\n'
     << "tol = " << real_text(cfg.svm.tol) << '\n'
     << "max_epochs = " << cfg.svm.max_epochs << '\n'
     << "seed = " << cfg.svm.seed << "\n\n"
     << "[experiment]\n"
     << "trials = " << cfg.trials << '\n'
     << "seed = " << cfg.master_seed << '\n';
  if (!cfg.out_dir.empty()) os << "out = " << cfg.out_dir.string() << '\n';
  os << "threads = " << cfg.threads << '\n'
     << "write_caches = " << (cfg.write_caches ? "true" : "false") << '\n'
     << "validation_fraction = " << real_text(cfg.validation_fraction) << '\n';
  return os.str();
}

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("AQKS_THREADS"); env != nullptr && *env != '\0') {
    const int n = parse_int("AQKS_THREADS", env);
    if (n < 1) throw ConfigError("AQKS_THREADS must be >= 1");
    return n;
  }
  return 1;
}

}  // namespace aqks
