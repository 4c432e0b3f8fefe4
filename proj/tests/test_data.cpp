#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "aqks/data.hpp"
#include "aqks/errors.hpp"
#include "test_util.hpp"

using namespace aqks;

namespace {

std::filesystem::path mnist_dir() {
  if (const char* env = std::getenv("AQKS_MNIST_DIR")) return env;
  return "/root/data/mnist";
}

RowMatrixXd random_pixels(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  RowMatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < p; ++k) X(i, k) = d(rng);
  return X;
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void check_partition(const SplitIndices& s, std::size_t n) {
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("circles defaults") {
  const RawDataset d = make_circles({});
  CHECK(d.size() == 2000);
  CHECK(d.dim() == 2);
  CHECK(std::count(d.y.begin(), d.y.end(), 1) == 1000);
  CHECK(std::count(d.y.begin(), d.y.end(), -1) == 1000);
  CHECK(d.y.front() == 1);
  CHECK(!d.provenance.empty());

  double inner = 0.0;
  double outer = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = d.X.row(static_cast<Eigen::Index>(i)).norm();
    (d.y[i] < 0 ? inner : outer) += r / 1000.0;
  }
  CHECK(std::abs(inner - 0.8) <= 0.01);
  CHECK(std::abs(outer - 1.0) <= 0.01);
}

TEST_CASE("noiseless circles lie exactly on their radii") {
  CirclesOptions opts;
  opts.noise_std = 0.0;
  opts.n_per_class = 300;
  const RawDataset d = make_circles(opts);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = d.X.row(static_cast<Eigen::Index>(i)).norm();
    CHECK(r == doctest::Approx(d.y[i] > 0 ? 1.0 : 0.8).epsilon(1e-15));
  }
}

TEST_CASE("circles angles are spread over the full circle") {
  const RawDataset d = make_circles({});
  std::array<int, 8> octants{};
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const double a = std::atan2(d.X(i, 1), d.X(i, 0)) + M_PI;
    ++octants[std::min<std::size_t>(7, static_cast<std::size_t>(a / (M_PI / 4)))];
  }
  for (int c : octants) CHECK(testutil::binomial_ok(static_cast<std::size_t>(c), 2000, 0.125));
}

TEST_CASE("circles reproducibility and validation") {
  CirclesOptions a;
  a.seed = 3;
  CHECK(make_circles(a).X == make_circles(a).X);
  CirclesOptions b = a;
  b.seed = 4;
  CHECK(make_circles(a).X != make_circles(b).X);
  for (double f : {0.0, 1.0, -0.2, 1.5}) {
    CirclesOptions bad;
    bad.factor = f;
    CHECK_THROWS_AS(make_circles(bad), ConfigError);
  }
  CirclesOptions noise;
  noise.noise_std = -0.1;
  CHECK_THROWS_AS(make_circles(noise), ConfigError);
  CirclesOptions count;
  count.n_per_class = 0;
  CHECK_THROWS_AS(make_circles(count), ConfigError);
}

TEST_CASE("IDX round-trip") {
  testutil::TempDir dir("idx");
  const RowMatrixXd X = random_pixels(7, 12, 1);
  const std::vector<int> y{3, 5, 3, 0, 9, 5, 3};
  write_idx_images(dir / "img", X, 3, 4);
  write_idx_labels(dir / "lab", y);
  const RawDataset d = load_mnist_idx(dir / "img", dir / "lab");
  CHECK(d.X == X);
  CHECK(d.y == y);

  const auto bytes = read_bytes(dir / "img");
  REQUIRE(bytes.size() == 16 + 7 * 12);
  CHECK(bytes[2] == 0x08);
  CHECK(bytes[3] == 0x03);
  CHECK(bytes[7] == 7);
  CHECK(bytes[11] == 3);
  CHECK(bytes[15] == 4);
  CHECK(bytes[16] == static_cast<unsigned char>(X(0, 0)));

  CHECK_THROWS_AS(write_idx_images(dir / "x", X, 3, 3), ShapeError);
  RowMatrixXd frac = X;
  frac(0, 0) = 0.5;
  CHECK_THROWS_AS(write_idx_images(dir / "x", frac, 3, 4), DataError);
}

TEST_CASE("IDX parse errors name the problem") {
  testutil::TempDir dir("idxerr");
  const RowMatrixXd X = random_pixels(4, 4, 2);
  write_idx_images(dir / "img", X, 2, 2);
  write_idx_labels(dir / "lab", {1, 2, 3, 4});
  write_idx_labels(dir / "lab3", {1, 2, 3});

  // Labels file carrying the images magic.
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir / "img", dir / "img"), doctest::Contains("magic"),
                       ParseError);
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir / "lab", dir / "lab"), doctest::Contains("magic"),
                       ParseError);
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir / "img", dir / "lab3"), doctest::Contains("count"),
                       ParseError);

  auto bytes = read_bytes(dir / "img");
  bytes.resize(bytes.size() - 3);
  write_bytes(dir / "trunc", bytes);
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir / "trunc", dir / "lab"), doctest::Contains("truncated"),
                       ParseError);
  write_bytes(dir / "tiny", {0, 0});
  CHECK_THROWS_AS(load_mnist_idx(dir / "tiny", dir / "lab"), ParseError);
  CHECK_THROWS_AS(load_mnist_idx(dir / "nope", dir / "lab"), ParseError);
}

TEST_CASE("load_mnist_dir concatenates train and test") {
  testutil::TempDir dir("idxdir");
  const RowMatrixXd a = random_pixels(5, 4, 3);
  const RowMatrixXd b = random_pixels(2, 4, 4);
  write_idx_images(dir / "train-images-idx3-ubyte", a, 2, 2);
  write_idx_labels(dir / "train-labels-idx1-ubyte", {1, 2, 3, 4, 5});
  write_idx_images(dir / "t10k-images-idx3-ubyte", b, 2, 2);
  write_idx_labels(dir / "t10k-labels-idx1-ubyte", {6, 7});
  const RawDataset d = load_mnist_dir(dir.path());
  REQUIRE(d.size() == 7);
  CHECK(d.X.topRows(5) == a);
  CHECK(d.X.bottomRows(2) == b);
  CHECK(d.y == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("filter_digits") {
  RawDataset d;
  d.X = random_pixels(8, 3, 5);
  d.y = {3, 1, 5, 5, 3, 7, 3, 5};
  const RawDataset f = filter_digits(d, {3, 5});
  CHECK(f.size() == 6);
  CHECK(f.y == std::vector<int>{-1, 1, 1, -1, -1, 1});
  CHECK(f.X.row(1) == d.X.row(2));
  CHECK(f.X.row(3) == d.X.row(4));
  CHECK_THROWS_AS(filter_digits(d, {3, 3}), DomainError);
  CHECK_THROWS_AS(filter_digits(d, {3, 8}), DataError);
}

TEST_CASE("stratified 75/25 split") {
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) y[static_cast<std::size_t>(i)] = i % 2 ? 1 : -1;
  const SplitIndices s = split_indices(y, {0.75, 9, true});
  CHECK(s.train.size() == 75);
  CHECK(s.test.size() == 25);
  const auto pos = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return y[i] == 1; });
  CHECK(std::abs(static_cast<double>(pos) - 37.5) <= 1.0);
  check_partition(s, 100);

  const SplitIndices again = split_indices(y, {0.75, 9, true});
  CHECK(again.train == s.train);
  CHECK(split_indices(y, {0.75, 10, true}).train != s.train);
}

TEST_CASE("complementary fractions give complementary partitions") {
  std::mt19937_64 rng(1);
  std::vector<int> y(137);
  for (int& v : y) v = rng() % 3 == 0 ? 1 : -1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double f : {0.75, 0.6, 0.9}) {
      for (bool strat : {true, false}) {
        const SplitIndices a = split_indices(y, {f, seed, strat});
        const SplitIndices b = split_indices(y, {1.0 - f, seed, strat});
        check_partition(a, y.size());
        CHECK(a.train == b.test);
        CHECK(a.test == b.train);
      }
    }
  }
}

TEST_CASE("split errors and dataset split") {
  std::vector<int> y{1, -1, 1, -1};
  for (double f : {0.0, 1.0, -0.5, 2.0}) CHECK_THROWS_AS(split_indices(y, {f, 0, true}), ConfigError);
  CHECK_THROWS_AS(split_indices({1, -1}, {0.99, 0, false}), ConfigError);

  RawDataset d = make_circles({});
  const auto [train, test] = split(d, {0.75, 4, true});
  CHECK(train.size() == 1500);
  CHECK(test.size() == 500);
  CHECK(std::count(train.y.begin(), train.y.end(), 1) == 750);
  const SplitIndices s = split_indices(d.y, {0.75, 4, true});
  CHECK(train.X.row(10) == d.X.row(static_cast<Eigen::Index>(s.train[10])));
}

TEST_CASE("stratified_subsample") {
  std::vector<int> y;
  for (int i = 0; i < 700; ++i) y.push_back(i < 400 ? -1 : 1);
  const auto idx = stratified_subsample(y, 70, 3);
  CHECK(idx.size() == 70);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 70);
  CHECK(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] < 0; }) == 40);
  CHECK(stratified_subsample(y, 70, 3) == idx);
  CHECK(stratified_subsample(y, 700, 3).size() == 700);
  CHECK_THROWS_AS(stratified_subsample(y, 0, 3), ConfigError);
  CHECK_THROWS_AS(stratified_subsample(y, 701, 3), ConfigError);
}

TEST_CASE("dataset CSV export") {
  testutil::TempDir dir("csv");
  RawDataset d;
  d.X.resize(2, 2);
  d.X << 0.1, -2.0, 1.0 / 3.0, 4.0;
  d.y = {1, -1};
  write_dataset_csv(dir / "d.csv", d);
  std::ifstream is(dir / "d.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "x1,x2,label");
  for (int i = 0; i < 2; ++i) {
    std::string line;
    REQUIRE(std::getline(is, line));
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    CHECK(std::stod(a) == d.X(i, 0));
    CHECK(std::stod(b) == d.X(i, 1));
    CHECK(std::stoi(c) == d.y[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("MNIST 3/5 counts" * doctest::skip(!std::filesystem::exists(mnist_dir() / "train-images-idx3-ubyte"))) {
  const RawDataset all = load_mnist_dir(mnist_dir());
  CHECK(all.size() == 70000);
  CHECK(all.dim() == 784);
  CHECK(all.X.minCoeff() >= 0.0);
  CHECK(all.X.maxCoeff() <= 255.0);
  const RawDataset f = filter_digits(all, {3, 5});
  CHECK(f.size() == 13454);
  CHECK(std::count(f.y.begin(), f.y.end(), -1) == 7141);
  CHECK(std::count(f.y.begin(), f.y.end(), 1) == 6313);
}

}  // TEST_SUITE
