#include "aqks/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <string>
#include <thread>

#include "aqks/errors.hpp"
#include "aqks/small_eigen.hpp"

namespace aqks {

namespace {

// Per-episode exact distribution: encode, build the diagonal energies and
// run the Trotter loop. q <= 4 takes the allocation-free path.
class EpisodeEvaluator {
 public:
  explicit EpisodeEvaluator(const TransformConfig& cfg)
      : cfg_(cfg),
        schedule_(cfg.schedule()),
        edges_(topology_edges(cfg.topo())),
        dim_(std::size_t{1} << cfg.num_qubits) {}

  std::size_t dimension() const noexcept { return dim_; }

  void probabilities(const Eigen::Ref<const Eigen::VectorXd>& x, const EpisodeParams& ep,
                     std::span<double> out) const {
    if (ep.num_qubits() != cfg_.num_qubits)
      throw ShapeError("episode has " + std::to_string(ep.num_qubits()) +
                       " qubits, config expects " + std::to_string(cfg_.num_qubits));
    const Eigen::VectorXd j = encode(x, ep);
    switch (cfg_.num_qubits) {
      case 1: run_small<2>(j, out); return;
      case 2: run_small<4>(j, out); return;
      case 3: run_small<8>(j, out); return;
      case 4: run_small<16>(j, out); return;
      default: break;
    }
    const HamiltonianTerms terms = episode_terms(j, cfg_.topo(), cfg_.transverse_weight());
    const std::vector<double> p =
        outcome_probabilities(evolve(terms, schedule_, initial_state(cfg_.num_qubits)));
    std::copy(p.begin(), p.end(), out.begin());
  }

 private:
  template <std::size_t N>
  void run_small(const Eigen::VectorXd& j, std::span<double> out) const {
    std::array<double, N> diag;
    for (std::size_t z = 0; z < N; ++z) {
      double e = 0.0;
      for (int u = 0; u < cfg_.num_qubits; ++u) e += ((z >> u) & 1U) ? -j[u] : j[u];
      for (const QubitPair& edge : edges_) {
        const double h = j[edge.lo] * j[edge.hi];
        e += (((z >> edge.lo) ^ (z >> edge.hi)) & 1U) ? -h : h;
      }
      diag[z] = e;
    }
    std::array<double, N> probs;
    detail::evolve_uniform_probs<N>(diag, cfg_.num_qubits, cfg_.transverse_weight(),
                                    schedule_.total_time(), schedule_.step_duration(),
                                    schedule_.num_steps(), probs);
    std::copy(probs.begin(), probs.end(), out.begin());
  }

  const TransformConfig& cfg_;
  Schedule schedule_;
  std::vector<QubitPair> edges_;
  std::size_t dim_;
};

void check_episodes(std::span<const EpisodeParams> episodes, const TransformConfig& cfg,
                    Eigen::Index p) {
  if (episodes.size() != static_cast<std::size_t>(cfg.num_episodes))
    throw ShapeError("got " + std::to_string(episodes.size()) + " episodes, config expects " +
                     std::to_string(cfg.num_episodes));
  for (const EpisodeParams& ep : episodes)
    if (ep.A.cols() != p)
      throw ShapeError("episode " + std::to_string(ep.episode_index) + " expects " +
                       std::to_string(ep.A.cols()) + " features, sample has " +
                       std::to_string(p));
}

// Measures `shots` outcomes from `probs` and adds them into `block` (q entries).
void accumulate_shots(std::span<const double> probs, int q, int shots, CounterRng& rng,
                      std::uint8_t* block) {
  for (int s = 0; s < shots; ++s) {
    const std::size_t z = sample_index(probs, rng);
    for (int u = 0; u < q; ++u) block[u] = static_cast<std::uint8_t>(block[u] + ((z >> u) & 1U));
  }
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFU));
}
void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFU));
}
std::uint64_t get_le(std::istream& is, int bytes, const char* field) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw ParseError(std::string("feature cache truncated while reading ") + field);
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void TransformConfig::validate() const {
  check_qubit_count(num_qubits);
  if (num_episodes < 1) throw ConfigError("episodes must be >= 1");
  if (shots_per_episode < 1) throw ConfigError("shots_per_episode must be >= 1");
  if (shots_per_episode > 255) throw ConfigError("shots_per_episode must be <= 255");
  (void)schedule();
  (void)topology_edges(topo());
}

QuantumFeatures FeatureMatrix::sample(std::size_t i) const {
  if (i >= rows) throw SizeError("row " + std::to_string(i) + " out of range");
  QuantumFeatures f;
  const auto r = row(i);
  f.bits.assign(r.begin(), r.end());
  f.scale = 1.0 / num_episodes;
  f.sample_index = i;
  f.num_qubits = num_qubits;
  f.num_episodes = num_episodes;
  f.shots = shots;
  return f;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.rows = indices.size();
  out.cols = cols;
  out.num_qubits = num_qubits;
  out.num_episodes = num_episodes;
  out.shots = shots;
  out.values.resize(out.rows * cols);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows) throw SizeError("row index out of range");
    const auto r = row(indices[k]);
    std::copy(r.begin(), r.end(), out.values.begin() + static_cast<std::ptrdiff_t>(k * cols));
  }
  return out;
}

std::vector<std::vector<double>> exact_probability_features(
    const Eigen::Ref<const Eigen::VectorXd>& x, std::span<const EpisodeParams> episodes,
    const TransformConfig& cfg) {
  cfg.validate();
  check_episodes(episodes, cfg, x.size());
  const EpisodeEvaluator eval(cfg);
  std::vector<std::vector<double>> out(episodes.size(), std::vector<double>(eval.dimension()));
  for (std::size_t e = 0; e < episodes.size(); ++e) eval.probabilities(x, episodes[e], out[e]);
  return out;
}

QuantumFeatures transform_sample(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 std::span<const EpisodeParams> episodes,
                                 const TransformConfig& cfg, CounterRng& rng) {
  cfg.validate();
  check_episodes(episodes, cfg, x.size());
  const EpisodeEvaluator eval(cfg);
  QuantumFeatures f;
  f.bits.assign(cfg.feature_dim(), 0);
  f.scale = 1.0 / cfg.num_episodes;
  f.num_qubits = cfg.num_qubits;
  f.num_episodes = cfg.num_episodes;
  f.shots = cfg.shots_per_episode;
  std::vector<double> probs(eval.dimension());
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    eval.probabilities(x, episodes[e], probs);
    accumulate_shots(probs, cfg.num_qubits, cfg.shots_per_episode, rng,
                     f.bits.data() + e * static_cast<std::size_t>(cfg.num_qubits));
  }
  return f;
}

std::uint64_t measurement_stream_key(std::uint64_t master_seed, std::size_t sample,
                                     std::size_t episode) {
  return derive_key({master_seed, 0x6d656173ULL /* "meas" */, sample, episode});
}

FeatureMatrix transform_dataset(const RowMatrixXd& X, std::span<const EpisodeParams> episodes,
                                const TransformConfig& cfg, std::uint64_t master_seed,
                                int threads, std::size_t first_index) {
  cfg.validate();
  check_episodes(episodes, cfg, X.cols());
  FeatureMatrix out;
  out.rows = static_cast<std::size_t>(X.rows());
  out.cols = cfg.feature_dim();
  out.num_qubits = cfg.num_qubits;
  out.num_episodes = cfg.num_episodes;
  out.shots = cfg.shots_per_episode;
  out.values.assign(out.rows * out.cols, 0);
  if (out.rows == 0) return out;
  if (!X.allFinite()) throw DataError("dataset contains non-finite values");

  const EpisodeEvaluator eval(cfg);
  const std::size_t q = static_cast<std::size_t>(cfg.num_qubits);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> probs(eval.dimension());
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = X.row(static_cast<Eigen::Index>(i)).transpose();
      std::uint8_t* row = out.values.data() + i * out.cols;
      for (std::size_t e = 0; e < episodes.size(); ++e) {
        eval.probabilities(x, episodes[e], probs);
        CounterRng rng(measurement_stream_key(master_seed, first_index + i, e));
        accumulate_shots(probs, cfg.num_qubits, cfg.shots_per_episode, rng, row + e * q);
      }
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, out.rows);
  if (workers == 1) {
    work(0, out.rows);
    return out;
  }
  // Rows are written to disjoint ranges; the first exception is rethrown.
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (out.rows + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(out.rows, w * chunk);
    const std::size_t end = std::min(out.rows, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features,
                         std::uint64_t master_seed) {
  if (features.shots != 1) throw ConfigError("feature cache stores single-shot features only");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open feature cache for writing: " + path.string());
  os.write("AQKS", 4);
  put_u32(os, kFeatureCacheVersion);
  put_u64(os, features.rows);
  put_u32(os, static_cast<std::uint32_t>(features.num_qubits));
  put_u32(os, static_cast<std::uint32_t>(features.num_episodes));
  put_u64(os, master_seed);
  const std::size_t row_bytes = (features.cols + 7) / 8;
  std::vector<char> packed(row_bytes);
  for (std::size_t i = 0; i < features.rows; ++i) {
    std::fill(packed.begin(), packed.end(), 0);
    const auto r = features.row(i);
    for (std::size_t k = 0; k < features.cols; ++k) {
      if (r[k] > 1) throw DataError("feature cache value is not a single bit");
      if (r[k]) packed[k / 8] = static_cast<char>(packed[k / 8] | (1 << (k % 8)));
    }
    os.write(packed.data(), static_cast<std::streamsize>(row_bytes));
  }
  if (!os) throw Error("failed writing feature cache: " + path.string());
}

FeatureCache read_feature_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open feature cache: " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "AQKS") throw ParseError("feature cache magic mismatch");
  const auto version = static_cast<std::uint32_t>(get_le(is, 4, "version"));
  if (version != kFeatureCacheVersion)
    throw ParseError("unsupported feature cache version " + std::to_string(version));
  FeatureCache cache;
  FeatureMatrix& f = cache.features;
  f.rows = get_le(is, 8, "n");
  f.num_qubits = static_cast<int>(get_le(is, 4, "q"));
  f.num_episodes = static_cast<int>(get_le(is, 4, "E"));
  cache.master_seed = get_le(is, 8, "master_seed");
  check_qubit_count(f.num_qubits);
  if (f.num_episodes < 1) throw ParseError("feature cache field E must be >= 1");
  f.cols = static_cast<std::size_t>(f.num_qubits) * static_cast<std::size_t>(f.num_episodes);
  f.shots = 1;
  const std::size_t row_bytes = (f.cols + 7) / 8;
  std::error_code ec;
  const auto file_bytes = std::filesystem::file_size(path, ec);
  constexpr std::uint64_t kHeaderBytes = 32;
  if (!ec && (file_bytes < kHeaderBytes || (file_bytes - kHeaderBytes) / row_bytes < f.rows))
    throw ParseError("feature cache payload shorter than its header declares");
  f.values.assign(f.rows * f.cols, 0);
  std::vector<char> packed(row_bytes);
  for (std::size_t i = 0; i < f.rows; ++i) {
    is.read(packed.data(), static_cast<std::streamsize>(row_bytes));
    if (!is) throw ParseError("feature cache payload truncated at row " + std::to_string(i));
    for (std::size_t k = 0; k < f.cols; ++k)
      f.values[i * f.cols + k] = static_cast<std::uint8_t>((packed[k / 8] >> (k % 8)) & 1);
  }
  return cache;
}

}  // namespace aqks
