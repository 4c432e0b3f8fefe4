#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "aqks/classifier.hpp"
#include "aqks/encoding.hpp"

namespace aqks {

struct RawDataset {
  RowMatrixXd X;
  std::vector<int> y;
  std::string provenance;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }

  RawDataset select(const std::vector<std::size_t>& indices) const;
  LabeledDataset labeled() const { return LabeledDataset{X, y}; }
};

struct CirclesOptions {
  int n_per_class = 1000;
  double factor = 0.8;
  double noise_std = 0.04;
  std::uint64_t seed = 0;
};

/// Two concentric noisy circles. Outer (unit radius) points are labelled +1,
/// inner (radius `factor`) points -1. Outer points come first.
RawDataset make_circles(const CirclesOptions& opts);

/// Reads an IDX3 image file (magic 2051) and IDX1 label file (magic 2049).
/// X is n x (rows*cols) with raw 0..255 pixel values; y holds the digits.
RawDataset load_mnist_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path);

/// Loads train-* and t10k-* files from `dir` and concatenates them.
RawDataset load_mnist_dir(const std::filesystem::path& dir);

/// Writes IDX files (used for fixtures). Pixel values must be integers in [0, 255].
void write_idx_images(const std::filesystem::path& path, const RowMatrixXd& X, int rows,
                      int cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& y);

/// Keeps rows labelled keep.first (-> -1) or keep.second (-> +1).
RawDataset filter_digits(const RawDataset& ds, std::pair<int, int> keep);

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class (or over all rows when not stratified) the rows are shuffled
/// with the seed; the larger part of the split is the prefix of that order
/// and has round(max(f, 1-f) * n_class) rows. Hence fractions f and 1-f with
/// the same seed give exactly complementary partitions. Index lists are
/// returned sorted.
SplitIndices split_indices(const std::vector<int>& labels, const SplitSpec& spec);

std::pair<RawDataset, RawDataset> split(const RawDataset& ds, const SplitSpec& spec);

/// Stratified random subset of exactly `count` rows (largest-remainder
/// allocation across classes), sorted by original index.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels, std::size_t count,
                                              std::uint64_t seed);

/// x1,...,xp,label per row with a header line.
void write_dataset_csv(const std::filesystem::path& path, const RawDataset& ds);

}  // namespace aqks
