#include "aqks/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "aqks/errors.hpp"
#include "aqks/random.hpp"

namespace aqks {

namespace {

// Read-only view of a dense row-major matrix of any arithmetic element type.
template <typename T>
struct RowsView {
  const T* data;
  std::size_t rows;
  std::size_t cols;

  const T* row(std::size_t i) const { return data + i * cols; }
};

RowsView<double> view(const RowMatrixXd& X) {
  return {X.data(), static_cast<std::size_t>(X.rows()), static_cast<std::size_t>(X.cols())};
}

RowsView<std::uint8_t> view(const FeatureMatrix& F) { return {F.values.data(), F.rows, F.cols}; }

// Decision value with on-the-fly standardization: sum_k w_k (x_k - mu_k) / s_k + b.
template <typename T>
double decision(const T* x, const Eigen::VectorXd& w, const Eigen::VectorXd& mean,
                const Eigen::VectorXd& inv_std, double b) {
  double acc = 0.0;
  const Eigen::Index d = w.size();
  for (Eigen::Index k = 0; k < d; ++k)
    acc += w[k] * ((static_cast<double>(x[k]) - mean[k]) * inv_std[k]);
  return acc + b;
}

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows)
    throw ShapeError("label count " + std::to_string(y.size()) + " does not match " +
                     std::to_string(rows) + " rows");
  bool pos = false;
  bool neg = false;
  for (int label : y) {
    if (label == 1)
      pos = true;
    else if (label == -1)
      neg = true;
    else
      throw DataError("labels must be +1 or -1, got " + std::to_string(label));
  }
  if (rows < 2) throw TrainingError("need at least two training samples");
  if (!pos || !neg) throw TrainingError("training data contains a single class");
}

template <typename T>
LinearSVMModel fit_impl(RowsView<T> X, std::span<const int> y, const SvmOptions& opts) {
  if (!(opts.C > 0.0) || !std::isfinite(opts.C)) throw ConfigError("C must be positive");
  if (!(opts.tol > 0.0)) throw ConfigError("tol must be positive");
  if (opts.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  check_labels(y, X.rows);

  const std::size_t n = X.rows;
  const std::size_t d = X.cols;
  const auto di = static_cast<Eigen::Index>(d);

  LinearSVMModel model;
  model.C = opts.C;
  model.column_means = Eigen::VectorXd::Zero(di);
  model.column_stds = Eigen::VectorXd::Zero(di);
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = X.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      const double v = static_cast<double>(x[k]);
      if (!std::isfinite(v)) throw DataError("non-finite feature at row " + std::to_string(i));
      model.column_means[static_cast<Eigen::Index>(k)] += v;
    }
  }
  model.column_means /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = X.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      const double c = static_cast<double>(x[k]) - model.column_means[static_cast<Eigen::Index>(k)];
      model.column_stds[static_cast<Eigen::Index>(k)] += c * c;
    }
  }
  for (Eigen::Index k = 0; k < di; ++k)
    model.column_stds[k] =
        std::max(std::sqrt(model.column_stds[k] / static_cast<double>(n)), kMinColumnStd);
  const Eigen::VectorXd inv_std = model.column_stds.cwiseInverse();
  const Eigen::VectorXd& mean = model.column_means;

  // Q_ii = |x~_i|^2 + 1 (augmented bias coordinate).
  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = X.row(i);
    double acc = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double s = (static_cast<double>(x[k]) - mean[static_cast<Eigen::Index>(k)]) *
                       inv_std[static_cast<Eigen::Index>(k)];
      acc += s * s;
    }
    qii[i] = acc;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(di);
  double b = 0.0;
  std::vector<double> alpha(n, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(derive_key({opts.seed, 0x73766dULL /* "svm" */}));
  const double C = opts.C;

  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    // Fisher-Yates with a portable generator.
    for (std::size_t k = n; k > 1; --k) {
      const std::size_t j = static_cast<std::size_t>(rng() % k);
      std::swap(order[k - 1], order[j]);
    }
    double max_violation = 0.0;
    for (std::size_t i : order) {
      const T* x = X.row(i);
      const double yi = static_cast<double>(y[i]);
      const double g = yi * decision(x, w, mean, inv_std, b) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0)
        pg = std::min(g, 0.0);
      else if (alpha[i] >= C)
        pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (pg == 0.0) continue;
      const double updated = std::clamp(alpha[i] - g / qii[i], 0.0, C);
      const double delta = (updated - alpha[i]) * yi;
      alpha[i] = updated;
      if (delta == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        w[kk] += delta * ((static_cast<double>(x[k]) - mean[kk]) * inv_std[kk]);
      }
      b += delta;
    }
    const double dual =
        0.5 * (w.squaredNorm() + b * b) - std::accumulate(alpha.begin(), alpha.end(), 0.0);
    model.diagnostics.dual_objective.push_back(dual);
    model.diagnostics.epochs = epoch + 1;
    model.diagnostics.final_violation = max_violation;
    if (max_violation < opts.tol) {
      model.diagnostics.converged = true;
      break;
    }
  }
  model.weights = std::move(w);
  model.bias = b;
  return model;
}

template <typename T>
std::vector<double> decisions_impl(const LinearSVMModel& model, RowsView<T> X) {
  if (X.cols != model.dim())
    throw ShapeError("model expects " + std::to_string(model.dim()) + " features, got " +
                     std::to_string(X.cols));
  const Eigen::VectorXd inv_std = model.column_stds.cwiseInverse();
  std::vector<double> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i)
    out[i] = decision(X.row(i), model.weights, model.column_means, inv_std, model.bias);
  return out;
}

std::vector<int> signs(const std::vector<double>& values) {
  std::vector<int> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] >= 0.0 ? 1 : -1;
  return out;
}

void write_vector(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
  char buf[64];
  os << name;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    std::snprintf(buf, sizeof buf, " %.17g", v[k]);
    os << buf;
  }
  os << '\n';
}

Eigen::VectorXd read_vector(std::istream& is, const char* name, std::size_t d) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(std::string("model file missing ") + name);
  std::istringstream ls(line);
  std::string key;
  ls >> key;
  if (key != name) throw ParseError("model file: expected '" + std::string(name) + "', got '" + key + "'");
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k)
    if (!(ls >> v[static_cast<Eigen::Index>(k)]))
      throw ParseError(std::string("model file: short ") + name + " vector");
  return v;
}

}  // namespace

LinearSVMModel fit(const LabeledDataset& data, const SvmOptions& opts) {
  return fit_impl(view(data.X), data.y, opts);
}

LinearSVMModel fit(const FeatureMatrix& features, std::span<const int> y, const SvmOptions& opts) {
  return fit_impl(view(features), y, opts);
}

double decision_value(const LinearSVMModel& model, std::span<const double> x) {
  return decisions_impl(model, RowsView<double>{x.data(), 1, x.size()}).front();
}

std::vector<double> decision_function(const LinearSVMModel& model, const RowMatrixXd& X) {
  return decisions_impl(model, view(X));
}

std::vector<double> decision_function(const LinearSVMModel& model, const FeatureMatrix& X) {
  return decisions_impl(model, view(X));
}

std::vector<int> predict(const LinearSVMModel& model, const RowMatrixXd& X) {
  return signs(decision_function(model, X));
}

std::vector<int> predict(const LinearSVMModel& model, const FeatureMatrix& X) {
  return signs(decision_function(model, X));
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (labels.empty()) throw DomainError("accuracy of an empty dataset is undefined");
  if (predicted.size() != labels.size()) throw ShapeError("prediction/label count mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double accuracy(const LinearSVMModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw DomainError("accuracy of an empty dataset is undefined");
  return accuracy(predict(model, data.X), data.y);
}

double accuracy(const LinearSVMModel& model, const FeatureMatrix& X, std::span<const int> y) {
  if (y.empty()) throw DomainError("accuracy of an empty dataset is undefined");
  return accuracy(predict(model, X), y);
}

double primal_objective(const LinearSVMModel& model, const LabeledDataset& data) {
  const std::vector<double> f = decision_function(model, data.X);
  double loss = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) loss += std::max(0.0, 1.0 - data.y[i] * f[i]);
  return 0.5 * (model.weights.squaredNorm() + model.bias * model.bias) + model.C * loss;
}

void save_model(const std::filesystem::path& path, const LinearSVMModel& model) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open model file for writing: " + path.string());
  char buf[64];
  os << "aqks-linear-svm 1\n";
  os << "dimension " << model.dim() << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", model.C);
  os << "C " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", model.bias);
  os << "bias " << buf << '\n';
  write_vector(os, "weights", model.weights);
  write_vector(os, "means", model.column_means);
  write_vector(os, "stds", model.column_stds);
  if (!os) throw Error("failed writing model file: " + path.string());
}

LinearSVMModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open model file: " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != "aqks-linear-svm 1") throw ParseError("model file: unsupported header '" + line + "'");
  auto scalar = [&](const char* name) {
    if (!std::getline(is, line)) throw ParseError(std::string("model file missing ") + name);
    std::istringstream ls(line);
    std::string key;
    double v = 0.0;
    if (!(ls >> key >> v) || key != name)
      throw ParseError(std::string("model file: malformed ") + name + " line");
    return v;
  };
  const double dim = scalar("dimension");
  if (dim < 0 || dim != std::floor(dim)) throw ParseError("model file: bad dimension");
  const auto d = static_cast<std::size_t>(dim);
  LinearSVMModel model;
  model.C = scalar("C");
  model.bias = scalar("bias");
  model.weights = read_vector(is, "weights", d);
  model.column_means = read_vector(is, "means", d);
  model.column_stds = read_vector(is, "stds", d);
  return model;
}

}  // namespace aqks
