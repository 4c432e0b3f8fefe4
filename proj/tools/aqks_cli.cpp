// Command-line front end: baseline, aqks, sweep, plot and gram subcommands.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "aqks/errors.hpp"
#include "aqks/harness.hpp"
#include "aqks/kernel.hpp"

namespace {

using namespace aqks;

// Flag values are kept as text and routed through parse_config so flag and
// file errors read the same way.
struct CommonFlags {
  std::string config_file;
  std::optional<std::string> dataset, mnist_images, mnist_labels, mnist_dir, qubits, episodes,
      sigma_d, b_mode, topology, anneal_time, tau, trials, seed, subsample, out, shots,
      transverse_sign, svm_c, validation_fraction;
  std::optional<int> threads;
  bool full = false;
  bool scale_pixels = false;
  bool no_cache = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_file, "key = value configuration file");
  app->add_option("--dataset", f.dataset, "circles or mnist");
  app->add_option("--mnist-images", f.mnist_images, "IDX image file");
  app->add_option("--mnist-labels", f.mnist_labels, "IDX label file");
  app->add_option("--mnist-dir", f.mnist_dir, "directory with train-* and t10k-* IDX files");
  app->add_option("--qubits", f.qubits, "qubits per episode");
  app->add_option("--episodes", f.episodes, "episodes E");
  app->add_option("--sigma-d", f.sigma_d, "standard deviation of encoding weights");
  app->add_option("--b-mode", f.b_mode, "zero or uniform2pi");
  app->add_option("--topology", f.topology, "linear, square or complete");
  app->add_option("--anneal-time", f.anneal_time, "total anneal time T");
  app->add_option("--tau", f.tau, "Trotter step duration");
  app->add_option("--trials", f.trials, "number of trials");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--subsample", f.subsample, "MNIST stratified subsample size (0 = all)");
  app->add_flag("--full", f.full, "full-scale MNIST: every image, E = 20000");
  app->add_flag("--scale-pixels", f.scale_pixels, "divide MNIST pixels by 255");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--threads", f.threads, "worker threads (default: AQKS_THREADS or 1)");
  app->add_option("--shots", f.shots, "measurements per episode");
  app->add_option("--transverse-sign", f.transverse_sign, "standard or literal");
  app->add_option("--C", f.svm_c, "SVM regularization strength");
  app->add_option("--validation-fraction", f.validation_fraction,
                  "share of training rows held out for validation scoring");
  app->add_flag("--no-cache", f.no_cache, "do not write feature caches");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ConfigValues file_values;
  if (!f.config_file.empty()) {
    std::ifstream is(f.config_file);
    if (!is) throw Error("cannot open config file " + f.config_file);
    std::stringstream ss;
    ss << is.rdbuf();
    file_values = parse_config_text(ss.str());
  }
  ConfigValues over;
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) over.emplace_back(key, *v);
  };
  put("dataset.kind", f.dataset);
  put("dataset.mnist_images", f.mnist_images);
  put("dataset.mnist_labels", f.mnist_labels);
  put("dataset.mnist_dir", f.mnist_dir);
  if (f.full) over.emplace_back("dataset.full", "true");
  if (f.scale_pixels) over.emplace_back("dataset.scale_pixels", "true");
  put("dataset.subsample", f.subsample);
  put("encoding.b_mode", f.b_mode);
  put("encoding.sigma_d", f.sigma_d);
  put("transform.qubits", f.qubits);
  put("transform.episodes", f.episodes);
  put("transform.anneal_time", f.anneal_time);
  put("transform.tau", f.tau);
  put("transform.topology", f.topology);
  put("transform.transverse_sign", f.transverse_sign);
  put("transform.shots", f.shots);
  put("svm.C", f.svm_c);
  put("experiment.trials", f.trials);
  put("experiment.seed", f.seed);
  put("experiment.out", f.out);
  put("experiment.validation_fraction", f.validation_fraction);
  if (f.no_cache) over.emplace_back("experiment.write_caches", "false");

  bool file_has_threads = false;
  for (const auto& kv : file_values) file_has_threads |= kv.first == "experiment.threads";
  if (f.threads || !file_has_threads)
    over.emplace_back("experiment.threads", std::to_string(resolve_threads(f.threads)));
  return parse_config(file_values, over);
}

void print_summary(const TrialSummary& s) {
  for (const TrialResult& r : s.trials) {
    if (!r.ok()) {
      std::printf("  %s\n", r.error.c_str());
      continue;
    }
    std::printf("  trial %d: aqks train %.4f test %.4f", r.trial, r.aqks.train, r.aqks.test);
    if (r.aqks_validation) std::printf(" validation %.4f", *r.aqks_validation);
    std::printf("  (transform %.1fs, fit %.1fs)\n", r.transform_seconds, r.fit_seconds);
  }
  if (s.successful_trials() == 0) return;
  std::printf("  baseline test %.4f | aqks test mean %.4f std %.4f over %zu trials\n",
              s.mean(Method::kBaseline, Split::kTest), s.mean(Method::kAqks, Split::kTest),
              s.stddev(Method::kAqks, Split::kTest), s.successful_trials());
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_baseline(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve(flags);
  const PreparedData prepared = prepare_data(cfg);
  const auto [acc, seconds] = run_baseline(prepared, cfg.svm);
  std::printf("dataset: %s\n", prepared.data.provenance.c_str());
  std::printf("baseline train %.4f test %.4f (%.2fs)\n", acc.train, acc.test, seconds);
  return 0;
}

int cmd_aqks(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve(flags);
  const TrialSummary s = run_experiment(cfg);
  print_summary(s);
  if (!cfg.out_dir.empty()) std::printf("results in %s\n", cfg.out_dir.string().c_str());
  return s.successful_trials() == s.trials.size() ? 0 : 1;
}

int cmd_sweep(const CommonFlags& flags, const std::string& axis_name, std::string values) {
  const ExperimentConfig cfg = resolve(flags);
  const SweepAxis axis = parse_sweep_axis(axis_name);
  if (values.empty()) {
    if (axis != SweepAxis::kSigmaD || cfg.dataset.kind != DatasetKind::kCircles)
      throw ConfigError("--values is required for this sweep");
    values = "0.1,0.5,1,2,4";
  }
  const auto summaries = run_sweep(cfg, axis, split_values(values));
  bool all_ok = true;
  for (const TrialSummary& s : summaries) {
    std::printf("%s = %s\n", s.axis.c_str(), s.value.c_str());
    if (!s.error.empty()) {
      std::printf("  error: %s\n", s.error.c_str());
      all_ok = false;
      continue;
    }
    print_summary(s);
    all_ok &= s.successful_trials() == s.trials.size();
  }
  if (const auto best = best_by_validation(summaries))
    std::printf("best by validation: %s = %s (test mean %.4f)\n", summaries[*best].axis.c_str(),
                summaries[*best].value.c_str(),
                summaries[*best].mean(Method::kAqks, Split::kTest));
  if (!cfg.out_dir.empty()) {
    try {
      emit_accuracy_plot(summaries, cfg.out_dir / "sweep.svg");
    } catch (const DomainError& e) {
      std::fprintf(stderr, "no plot: %s\n", e.what());
    }
    std::printf("results in %s\n", cfg.out_dir.string().c_str());
  }
  return all_ok ? 0 : 1;
}

int cmd_plot(const CommonFlags& flags, const std::string& kind_name, const std::string& input,
             const std::string& output) {
  const PlotKind kind = parse_plot_kind(kind_name);
  if (kind == PlotKind::kAccuracyVsAxis) {
    if (input.empty()) throw ConfigError("accuracy_vs_axis needs --input results CSV");
    emit_accuracy_plot(summaries_from_csv(read_csv(input)), output);
  } else {
    const PreparedData prepared = prepare_data(resolve(flags));
    emit_scatter_plot(prepared.data, output);
  }
  std::printf("wrote %s\n", output.c_str());
  return 0;
}

int cmd_gram(const CommonFlags& flags, std::size_t samples, bool exact, const std::string& output) {
  const ExperimentConfig cfg = resolve(flags);
  const PreparedData prepared = prepare_data(cfg);
  const std::size_t n = std::min(samples, prepared.data.size());
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i * prepared.data.size() / n;
  const RawDataset subset = prepared.data.select(rows);
  const auto episodes =
      sample_episodes(cfg.transform.num_episodes, cfg.transform.num_qubits,
                      static_cast<int>(subset.dim()), cfg.distribution,
                      trial_episode_seed(cfg.master_seed, 0));
  Eigen::MatrixXd gram;
  if (exact) {
    std::vector<ProbabilityFeatures> probs;
    for (std::size_t i = 0; i < n; ++i)
      probs.push_back(exact_probability_features(
          subset.X.row(static_cast<Eigen::Index>(i)).transpose(), episodes, cfg.transform));
    gram = gram_matrix(probs, build_s_matrix(cfg.transform.num_qubits), cfg.threads);
  } else {
    const FeatureMatrix f = transform_dataset(subset.X, episodes, cfg.transform,
                                              trial_measurement_seed(cfg.master_seed, 0),
                                              cfg.threads);
    std::vector<QuantumFeatures> feats;
    for (std::size_t i = 0; i < n; ++i) feats.push_back(f.sample(i));
    gram = gram_matrix(feats, cfg.threads);
  }
  write_matrix_csv(output, gram);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  std::printf("%s Gram matrix %zux%zu written to %s; min eigenvalue %.3e\n",
              exact ? "exact" : "estimated", n, n, output.c_str(), es.eigenvalues().minCoeff());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adiabatic quantum kitchen sinks experiments"};
  app.require_subcommand(1);

  CommonFlags baseline_flags, aqks_flags, sweep_flags, plot_flags, gram_flags;

  CLI::App* baseline = app.add_subcommand("baseline", "linear SVM on raw features");
  add_common(baseline, baseline_flags);

  CLI::App* aqks_cmd = app.add_subcommand("aqks", "AQKS features + linear SVM over trials");
  add_common(aqks_cmd, aqks_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "run experiments along one parameter axis");
  add_common(sweep, sweep_flags);
  std::string axis = "sigma_d";
  std::string values;
  sweep->add_option("--axis", axis, "sigma_d, episodes, qubits, topology or anneal_time");
  sweep->add_option("--values", values, "comma-separated axis values");

  CLI::App* plot = app.add_subcommand("plot", "render an SVG from results or a dataset");
  add_common(plot, plot_flags);
  std::string kind = "accuracy_vs_axis";
  std::string input;
  std::string plot_output = "plot.svg";
  plot->add_option("--kind", kind, "accuracy_vs_axis or scatter2d");
  plot->add_option("--input", input, "results CSV (accuracy_vs_axis)");
  plot->add_option("--output", plot_output, "SVG path");

  CLI::App* gram = app.add_subcommand("gram", "kernel Gram matrix diagnostics");
  add_common(gram, gram_flags);
  std::size_t samples = 20;
  bool exact = false;
  std::string gram_output = "gram.csv";
  gram->add_option("--samples", samples, "number of samples");
  gram->add_flag("--exact", exact, "use exact outcome probabilities");
  gram->add_option("--output", gram_output, "CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (baseline->parsed()) return cmd_baseline(baseline_flags);
    if (aqks_cmd->parsed()) return cmd_aqks(aqks_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, axis, values);
    if (plot->parsed()) return cmd_plot(plot_flags, kind, input, plot_output);
    if (gram->parsed()) return cmd_gram(gram_flags, samples, exact, gram_output);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
