#pragma once

// Experiment driver: dataset preparation, baseline vs AQKS trials, sweeps,
// CSV/SVG output and the key = value configuration format.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aqks/classifier.hpp"
#include "aqks/data.hpp"
#include "aqks/encoding.hpp"
#include "aqks/features.hpp"

namespace aqks {

enum class DatasetKind { kCircles, kMnist };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kCircles;
  CirclesOptions circles;
  // MNIST: either an explicit image/label pair or a directory holding the
  // standard train-* and t10k-* files (concatenated).
  std::filesystem::path mnist_images;
  std::filesystem::path mnist_labels;
  std::filesystem::path mnist_dir;
  std::pair<int, int> digits{3, 5};
  std::size_t subsample = 3000;  // 0 keeps every filtered image
  bool scale_pixels = false;
  double train_fraction = 0.75;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  TransformConfig transform;
  DistributionConfig distribution;
  SvmOptions svm;
  int trials = 10;
  std::uint64_t master_seed = 0;
  std::filesystem::path out_dir;  // empty: write nothing
  int threads = 1;
  bool write_caches = true;
  /// Fraction of each trial's training rows held out to score an extra AQKS
  /// model (used to pick sweep points without touching the test rows).
  /// 0 disables the validation fit.
  double validation_fraction = 0.0;

  void validate() const;
};

/// Defaults that depend on the dataset (sigma_d, b_mode, E, subsample).
ExperimentConfig default_config(DatasetKind kind, bool full = false);

struct Accuracy {
  double train = 0.0;
  double test = 0.0;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t episode_seed = 0;
  std::uint64_t measurement_seed = 0;
  Accuracy baseline;
  Accuracy aqks;
  std::optional<double> aqks_validation;
  double baseline_seconds = 0.0;
  double transform_seconds = 0.0;
  double fit_seconds = 0.0;
  std::string error;  // non-empty when the trial aborted

  bool ok() const noexcept { return error.empty(); }
};

enum class Method { kBaseline, kAqks };
enum class Split { kTrain, kTest };

struct TrialSummary {
  std::string axis = "none";
  std::string value;
  std::vector<TrialResult> trials;
  std::string error;  // set when the whole point failed (e.g. invalid axis value)

  /// Mean and population standard deviation over successful trials.
  double mean(Method m, Split s) const;
  double stddev(Method m, Split s) const;
  /// Mean validation accuracy, NaN when no trial has one.
  double mean_validation() const;
  std::size_t successful_trials() const;
};

struct PreparedData {
  RawDataset data;
  SplitIndices split;
};

/// Generates or loads the dataset and its train/test split; everything is
/// derived from cfg.master_seed.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Baseline LSVM on raw features, fitted on the training rows.
std::pair<Accuracy, double> run_baseline(const PreparedData& prepared, const SvmOptions& svm);

/// Episode and measurement seeds of trial `t`.
std::uint64_t trial_episode_seed(std::uint64_t master_seed, int trial);
std::uint64_t trial_measurement_seed(std::uint64_t master_seed, int trial);

/// Runs every trial. Writes results.csv, manifest.txt and per-trial feature
/// caches into cfg.out_dir when it is set. A failing trial is recorded with
/// its error and the remaining trials still run.
TrialSummary run_experiment(const ExperimentConfig& cfg);
TrialSummary run_experiment(const ExperimentConfig& cfg, const PreparedData& prepared);

enum class SweepAxis { kSigmaD, kEpisodes, kQubits, kTopology, kAnnealTime };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

/// Copy of `cfg` with the axis set to `value`. Throws ConfigError for values
/// that do not parse or leave the config invalid.
ExperimentConfig apply_axis(const ExperimentConfig& cfg, SweepAxis axis, const std::string& value);

/// One experiment per value with the same master seed, so the dataset, split
/// and baseline are identical across points. Per-point errors are recorded
/// and the sweep continues. Writes sweep.csv into cfg.out_dir when set.
std::vector<TrialSummary> run_sweep(const ExperimentConfig& cfg, SweepAxis axis,
                                    const std::vector<std::string>& values);

/// Index of the summary with the highest mean validation accuracy, skipping
/// failed points.
std::optional<std::size_t> best_by_validation(const std::vector<TrialSummary>& summaries);

// CSV -----------------------------------------------------------------------

struct CsvRow {
  std::string axis;
  std::string value;
  int trial = 0;
  std::string split;
  std::string method;
  double accuracy = 0.0;
  double seconds = 0.0;
};

inline constexpr const char* kCsvHeader = "axis,value,trial,split,method,accuracy,seconds";

std::vector<CsvRow> csv_rows(const std::vector<TrialSummary>& summaries);
void emit_csv(const std::vector<TrialSummary>& summaries, const std::filesystem::path& path);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);
/// Regroups rows by (axis, value), preserving first-appearance order.
std::vector<TrialSummary> summaries_from_csv(const std::vector<CsvRow>& rows);

// SVG -----------------------------------------------------------------------

enum class PlotKind { kAccuracyVsAxis, kScatter2d };

PlotKind parse_plot_kind(const std::string& name);

/// AQKS mean test accuracy per summary as one polyline with +-stddev error
/// bars; the baseline mean is drawn as a dashed reference line.
void emit_accuracy_plot(const std::vector<TrialSummary>& summaries,
                        const std::filesystem::path& path);
/// One circle element per sample, coloured by label. Requires 2-D data.
void emit_scatter_plot(const RawDataset& data, const std::filesystem::path& path);

/// Dispatches on `kind`; scatter2d needs `data`.
void emit_svg_plot(const std::vector<TrialSummary>& summaries, PlotKind kind,
                   const std::filesystem::path& path, const RawDataset* data = nullptr);

// Configuration -------------------------------------------------------------

/// "section.key" -> raw value, e.g. {"transform.episodes", "1000"}.
using ConfigValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `[section]` / `key = value` text ('#' and ';' start comments).
ConfigValues parse_config_text(const std::string& text);

/// Builds a config from file values followed by overrides (later entries win).
/// Unknown keys and malformed values raise ConfigError naming the key.
ExperimentConfig parse_config(const ConfigValues& file_values, const ConfigValues& overrides = {});

/// Inverse of parse_config: every resolved setting, parseable again.
std::string to_config_text(const ExperimentConfig& cfg);

/// Thread count from a flag value, falling back to AQKS_THREADS, then 1.
int resolve_threads(std::optional<int> flag);

}  // namespace aqks
