#pragma once

// Linear soft-margin SVM trained by dual coordinate descent.
//
// Columns are standardized with training statistics, then
//
//   min_{w,b}  1/2 (|w|^2 + b^2) + C sum_i max(0, 1 - y_i (w . x_i + b))
//
// is solved in the dual (bias handled as a constant augmented feature, the
// usual liblinear convention, which keeps every dual coordinate box-only).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aqks/encoding.hpp"
#include "aqks/features.hpp"

namespace aqks {

struct LabeledDataset {
  RowMatrixXd X;       // n x d
  std::vector<int> y;  // +1 / -1

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }
};

struct SvmOptions {
  double C = 1.0;
  double tol = 1e-4;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
};

struct FitDiagnostics {
  int epochs = 0;
  bool converged = false;
  double final_violation = 0.0;
  /// Dual objective 1/2 |w_aug|^2 - sum alpha after each epoch.
  std::vector<double> dual_objective;
};

struct LinearSVMModel {
  Eigen::VectorXd weights;  // in standardized coordinates
  double bias = 0.0;
  double C = 1.0;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_stds;  // floored at kMinColumnStd
  FitDiagnostics diagnostics;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.size()); }
};

inline constexpr double kMinColumnStd = 1e-12;

LinearSVMModel fit(const LabeledDataset& data, const SvmOptions& opts = {});
LinearSVMModel fit(const FeatureMatrix& features, std::span<const int> y,
                   const SvmOptions& opts = {});

/// w . standardize(x) + b.
double decision_value(const LinearSVMModel& model, std::span<const double> x);
std::vector<double> decision_function(const LinearSVMModel& model, const RowMatrixXd& X);
std::vector<double> decision_function(const LinearSVMModel& model, const FeatureMatrix& X);

/// sign of the decision value; exactly 0 maps to +1.
std::vector<int> predict(const LinearSVMModel& model, const RowMatrixXd& X);
std::vector<int> predict(const LinearSVMModel& model, const FeatureMatrix& X);

double accuracy(const LinearSVMModel& model, const LabeledDataset& data);
double accuracy(const LinearSVMModel& model, const FeatureMatrix& X, std::span<const int> y);

/// Fraction of predictions equal to labels. Throws DomainError when empty.
double accuracy(std::span<const int> predicted, std::span<const int> labels);

/// Primal objective of the model on (standardized) training data.
double primal_objective(const LinearSVMModel& model, const LabeledDataset& data);

/// Versioned plain-text model file, 17 significant digits.
void save_model(const std::filesystem::path& path, const LinearSVMModel& model);
LinearSVMModel load_model(const std::filesystem::path& path);

}  // namespace aqks
