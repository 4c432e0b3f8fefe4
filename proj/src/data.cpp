#include "aqks/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "aqks/errors.hpp"
#include "aqks/random.hpp"

namespace aqks {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 2051;
constexpr std::uint32_t kIdxLabelsMagic = 2049;

std::uint32_t read_be32(std::istream& is, const std::string& what) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  if (!is) throw ParseError("IDX header truncated reading " + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  os.write(b.data(), 4);
}

// Fisher-Yates driven by a counter-based stream, identical on every platform.
void shuffle(std::vector<std::size_t>& v, CounterRng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng() % k]);
}

std::map<int, std::vector<std::size_t>> group_by_label(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

// Largest-remainder allocation of `total` rows across groups in proportion
// to their sizes; ties go to the earlier group.
std::vector<std::size_t> allocate(const std::vector<std::size_t>& sizes, std::size_t total) {
  std::size_t n = 0;
  for (std::size_t s : sizes) n += s;
  const double scale = static_cast<double>(total) / static_cast<double>(n);
  std::vector<std::size_t> quota(sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double exact = scale * static_cast<double>(sizes[g]);
    quota[g] = std::min(sizes[g], static_cast<std::size_t>(std::floor(exact)));
    remainders.emplace_back(exact - static_cast<double>(quota[g]), g);
    assigned += quota[g];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r) {
    const std::size_t g = remainders[r % remainders.size()].second;
    if (quota[g] < sizes[g]) {
      ++quota[g];
      ++assigned;
    }
  }
  return quota;
}

}  // namespace

RawDataset RawDataset::select(const std::vector<std::size_t>& indices) const {
  RawDataset out;
  out.X.resize(static_cast<Eigen::Index>(indices.size()), X.cols());
  out.y.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw SizeError("row index out of range");
    out.X.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(indices[k]));
    out.y.push_back(y[indices[k]]);
  }
  out.provenance = provenance;
  return out;
}

RawDataset make_circles(const CirclesOptions& opts) {
  if (opts.n_per_class < 1) throw ConfigError("circles n_per_class must be >= 1");
  if (!(opts.factor > 0.0 && opts.factor < 1.0))
    throw ConfigError("circles factor must lie in (0, 1)");
  if (!(opts.noise_std >= 0.0) || !std::isfinite(opts.noise_std))
    throw ConfigError("circles noise_std must be >= 0");

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto n = static_cast<Eigen::Index>(opts.n_per_class);
  RawDataset ds;
  ds.X.resize(2 * n, 2);
  ds.y.resize(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const bool outer = i < n;
    const double r = outer ? 1.0 : opts.factor;
    const double t = angle(rng);
    double x = r * std::cos(t);
    double y = r * std::sin(t);
    if (opts.noise_std > 0.0) {
      x += opts.noise_std * noise(rng);
      y += opts.noise_std * noise(rng);
    }
    ds.X(i, 0) = x;
    ds.X(i, 1) = y;
    ds.y[static_cast<std::size_t>(i)] = outer ? 1 : -1;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "circles(n_per_class=%d, factor=%g, noise_std=%g, seed=%llu)",
                opts.n_per_class, opts.factor, opts.noise_std,
                static_cast<unsigned long long>(opts.seed));
  ds.provenance = buf;
  return ds;
}

RawDataset load_mnist_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw ParseError("cannot open IDX images file: " + images_path.string());
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw ParseError("cannot open IDX labels file: " + labels_path.string());

  const std::uint32_t img_magic = read_be32(img, "images magic");
  if (img_magic != kIdxImagesMagic)
    throw ParseError("images magic number is " + std::to_string(img_magic) + ", expected 2051");
  const std::uint32_t n_images = read_be32(img, "images count");
  const std::uint32_t rows = read_be32(img, "images rows");
  const std::uint32_t cols = read_be32(img, "images cols");

  const std::uint32_t lab_magic = read_be32(lab, "labels magic");
  if (lab_magic != kIdxLabelsMagic)
    throw ParseError("labels magic number is " + std::to_string(lab_magic) + ", expected 2049");
  const std::uint32_t n_labels = read_be32(lab, "labels count");
  if (n_labels != n_images)
    throw ParseError("count mismatch: images file has " + std::to_string(n_images) +
                     " items, labels file has " + std::to_string(n_labels));
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
    throw ParseError("implausible image dimensions " + std::to_string(rows) + "x" +
                     std::to_string(cols));

  const std::size_t p = static_cast<std::size_t>(rows) * cols;
  RawDataset ds;
  ds.X.resize(n_images, static_cast<Eigen::Index>(p));
  std::vector<unsigned char> buf(p);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(p));
    if (!img)
      throw ParseError("images payload truncated at image " + std::to_string(i) + " of " +
                       std::to_string(n_images));
    for (std::size_t k = 0; k < p; ++k) ds.X(i, static_cast<Eigen::Index>(k)) = buf[k];
  }
  std::vector<unsigned char> labels(n_labels);
  lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n_labels));
  if (!lab) throw ParseError("labels payload truncated (expected " + std::to_string(n_labels) + ")");
  ds.y.assign(labels.begin(), labels.end());
  ds.provenance = "idx(" + images_path.string() + ", " + labels_path.string() + ")";
  return ds;
}

RawDataset load_mnist_dir(const std::filesystem::path& dir) {
  const RawDataset train =
      load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
  const RawDataset test =
      load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  if (train.dim() != test.dim()) throw DataError("train/test image sizes differ");
  RawDataset all;
  all.X.resize(train.X.rows() + test.X.rows(), train.X.cols());
  all.X << train.X, test.X;
  all.y = train.y;
  all.y.insert(all.y.end(), test.y.begin(), test.y.end());
  all.provenance = "mnist(" + dir.string() + ")";
  return all;
}

void write_idx_images(const std::filesystem::path& path, const RowMatrixXd& X, int rows,
                      int cols) {
  if (static_cast<Eigen::Index>(rows) * cols != X.cols())
    throw ShapeError("rows*cols does not match the feature dimension");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  write_be32(os, kIdxImagesMagic);
  write_be32(os, static_cast<std::uint32_t>(X.rows()));
  write_be32(os, static_cast<std::uint32_t>(rows));
  write_be32(os, static_cast<std::uint32_t>(cols));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      const double v = X(i, k);
      if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
        throw DataError("IDX pixel values must be integers in [0, 255]");
      os.put(static_cast<char>(static_cast<unsigned char>(v)));
    }
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& y) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  write_be32(os, kIdxLabelsMagic);
  write_be32(os, static_cast<std::uint32_t>(y.size()));
  for (int v : y) {
    if (v < 0 || v > 255) throw DataError("IDX labels must lie in [0, 255]");
    os.put(static_cast<char>(static_cast<unsigned char>(v)));
  }
}

RawDataset filter_digits(const RawDataset& ds, std::pair<int, int> keep) {
  if (keep.first == keep.second)
    throw DomainError("filter_digits requires two distinct digits, got " +
                      std::to_string(keep.first) + " twice");
  std::vector<std::size_t> rows;
  bool seen_first = false;
  bool seen_second = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] == keep.first) seen_first = true;
    if (ds.y[i] == keep.second) seen_second = true;
    if (ds.y[i] == keep.first || ds.y[i] == keep.second) rows.push_back(i);
  }
  if (!seen_first) throw DataError("digit " + std::to_string(keep.first) + " absent from dataset");
  if (!seen_second)
    throw DataError("digit " + std::to_string(keep.second) + " absent from dataset");
  RawDataset out = ds.select(rows);
  for (int& label : out.y) label = label == keep.first ? -1 : 1;
  out.provenance = ds.provenance + " digits(" + std::to_string(keep.first) + "->-1, " +
                   std::to_string(keep.second) + "->+1)";
  return out;
}

SplitIndices split_indices(const std::vector<int>& labels, const SplitSpec& spec) {
  const double f = spec.train_fraction;
  if (!(f > 0.0 && f < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    for (auto& [label, rows] : group_by_label(labels)) groups.push_back(std::move(rows));
  } else {
    groups.emplace_back(labels.size());
    std::iota(groups.back().begin(), groups.back().end(), std::size_t{0});
  }

  SplitIndices out;
  const bool train_is_major = f >= 0.5;
  const double major = std::max(f, 1.0 - f);
  std::vector<std::size_t> sizes;
  for (const auto& rows : groups) sizes.push_back(rows.size());
  const auto major_total = static_cast<std::size_t>(std::llround(major * static_cast<double>(labels.size())));
  const std::vector<std::size_t> quota = allocate(sizes, major_total);
  auto& major_part = train_is_major ? out.train : out.test;
  auto& minor_part = train_is_major ? out.test : out.train;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& rows = groups[g];
    CounterRng rng(derive_key({spec.seed, 0x73706c6974ULL /* "split" */, g}));
    shuffle(rows, rng);
    const auto k = static_cast<std::ptrdiff_t>(quota[g]);
    major_part.insert(major_part.end(), rows.begin(), rows.begin() + k);
    minor_part.insert(minor_part.end(), rows.begin() + k, rows.end());
  }
  if (out.train.empty() || out.test.empty())
    throw ConfigError("split leaves an empty train or test part");
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<RawDataset, RawDataset> split(const RawDataset& ds, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(ds.y, spec);
  return {ds.select(idx.train), ds.select(idx.test)};
}

std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels, std::size_t count,
                                              std::uint64_t seed) {
  if (count == 0 || count > labels.size())
    throw ConfigError("subsample size " + std::to_string(count) + " outside [1, " +
                      std::to_string(labels.size()) + "]");
  auto groups = group_by_label(labels);
  std::vector<std::size_t> sizes;
  for (const auto& [label, rows] : groups) sizes.push_back(rows.size());
  const std::vector<std::size_t> counts = allocate(sizes, count);
  std::vector<std::pair<int, std::size_t>> quota;
  std::size_t g = 0;
  for (const auto& [label, rows] : groups) quota.emplace_back(label, counts[g++]);

  std::vector<std::size_t> out;
  for (auto& [label, q] : quota) {
    auto& rows = groups[label];
    CounterRng rng(derive_key({seed, 0x737562ULL /* "sub" */, static_cast<std::uint64_t>(label)}));
    shuffle(rows, rng);
    out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(q));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, const RawDataset& ds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  for (Eigen::Index k = 0; k < ds.X.cols(); ++k) os << 'x' << (k + 1) << ',';
  os << "label\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index k = 0; k < ds.X.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,", ds.X(static_cast<Eigen::Index>(i), k));
      os << buf;
    }
    os << ds.y[i] << '\n';
  }
  if (!os) throw Error("failed writing " + path.string());
}

}  // namespace aqks
