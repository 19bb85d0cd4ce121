#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ekcpd/error.hpp"
#include "ekcpd/kernel_cost.hpp"
#include "ekcpd/metrics.hpp"
#include "ekcpd/penalty.hpp"
#include "ekcpd/sequence.hpp"
#include "ekcpd/solver.hpp"

namespace ekcpd {

// splitmix64 finalizer; child seeds are derived as mix(seed ^ mix(index + 1)).
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 1));
}

/// ceil(2 ln T), the change-point count used by the synthetic protocol.
inline std::size_t default_num_changepoints(std::size_t T) {
  if (T < 2) return 0;
  return static_cast<std::size_t>(std::ceil(2.0 * std::log(static_cast<double>(T))));
}

/// K interior boundaries drawn uniformly without replacement from 1..T-1,
/// sorted, with T appended.
inline Segmentation sample_changepoints(std::size_t T, std::size_t K, std::uint64_t seed) {
  if (T < 1 || K >= T) {
    throw Error(ErrorCode::InvalidK, "need 0 <= K < T, got K=" + std::to_string(K) + ", T=" + std::to_string(T));
  }
  std::vector<std::size_t> pool(T - 1);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < K; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(K);
  return Segmentation::from_changepoints(std::move(pool), T);
}

/// Order-m moving-average noise, Z_t = (m+1)^{-1/2} * sum_{j=0..m} eps_{t-j},
/// eps iid N(0, sigma^2 I). Row t (0-based) reads innovations t..t+m, so rows
/// more than m apart share none and the process is exactly m-dependent.
inline std::vector<double> ma_noise(std::size_t T, std::size_t d, std::size_t m, double sigma,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  const std::size_t innovations = T + m;
  std::vector<double> eps(innovations * d);
  for (double& v : eps) v = normal(rng);
  std::vector<double> out(T * d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m + 1));
  std::vector<double> window(d, 0.0);
  for (std::size_t j = 0; j <= m; ++j) {
    for (std::size_t k = 0; k < d; ++k) window[k] += eps[j * d + k];
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < d; ++k) out[t * d + k] = scale * window[k];
    if (t + 1 == T) break;
    for (std::size_t k = 0; k < d; ++k) {
      window[k] += eps[(t + m + 1) * d + k] - eps[t * d + k];
    }
  }
  return out;
}

/// Innovation indices [first, last] feeding noise row t (0-based) of ma_noise.
inline std::pair<std::size_t, std::size_t> ma_support(std::size_t t, std::size_t m) noexcept {
  return {t, t + m};
}

/// Autocovariance of one coordinate of ma_noise at lag l.
inline double ma_autocovariance(std::size_t lag, std::size_t m, double sigma) noexcept {
  if (lag > m) return 0.0;
  return sigma * sigma * static_cast<double>(m + 1 - lag) / static_cast<double>(m + 1);
}

inline std::vector<double> random_unit_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = normal(rng);
      sq += x * x;
    }
  } while (sq <= 1e-24);
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
  return v;
}

struct SynthConfig {
  std::size_t T = 500;
  std::optional<std::size_t> K;  // defaults to ceil(2 ln T)
  std::size_t d = 16;
  std::size_t m = 20;
  double delta = 1.0;
  std::size_t topics = 5;
  double noise_scale = 0.5;
  bool normalize = true;
  std::uint64_t seed = 0;

  std::size_t num_changepoints() const { return K.value_or(default_num_changepoints(T)); }

  void validate() const {
    if (T < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "T and d must be >= 1");
    if (num_changepoints() >= T) throw Error(ErrorCode::InvalidK, "K must be < T");
    if (topics < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 topics");
    if (!(delta > 0.0) || !(noise_scale > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "delta and noise_scale must be positive");
    }
  }
};

struct PlantedInstance {
  EmbeddingSequence seq;
  Segmentation truth;
  std::vector<std::size_t> topic_of_segment;
  std::vector<std::vector<double>> means;  // per segment, before noise
  SynthConfig config;
};

/// Planted-change sequence: topic means on the unit sphere scaled by delta,
/// consecutive segments on different topics, plus m-dependent MA noise.
inline PlantedInstance gen_planted(const SynthConfig& config) {
  config.validate();
  const std::size_t T = config.T;
  const std::size_t d = config.d;

  std::mt19937_64 topic_rng(child_seed(config.seed, 0));
  std::vector<std::vector<double>> topics;
  for (std::size_t i = 0; i < config.topics; ++i) {
    auto v = random_unit_vector(d, topic_rng);
    for (double& x : v) x *= config.delta;
    topics.push_back(std::move(v));
  }

  Segmentation truth = sample_changepoints(T, config.num_changepoints(), child_seed(config.seed, 1));

  std::mt19937_64 assign_rng(child_seed(config.seed, 2));
  std::vector<std::size_t> topic_of(truth.num_segments());
  for (std::size_t k = 0; k < topic_of.size(); ++k) {
    if (k == 0) {
      topic_of[k] = std::uniform_int_distribution<std::size_t>(0, config.topics - 1)(assign_rng);
    } else {
      // uniform over the other topics
      std::size_t draw = std::uniform_int_distribution<std::size_t>(0, config.topics - 2)(assign_rng);
      topic_of[k] = draw >= topic_of[k - 1] ? draw + 1 : draw;
    }
  }

  std::mt19937_64 noise_rng(child_seed(config.seed, 3));
  std::vector<double> values = ma_noise(T, d, config.m, config.noise_scale, noise_rng);
  const auto labels = truth.labels();
  for (std::size_t t = 0; t < T; ++t) {
    const auto& mu = topics[topic_of[labels[t]]];
    for (std::size_t k = 0; k < d; ++k) values[t * d + k] += mu[k];
  }

  EmbeddingSequence seq(T, d, std::move(values));
  if (config.normalize) seq = normalize_rows(seq);

  std::vector<std::vector<double>> means;
  for (std::size_t k : topic_of) means.push_back(topics[k]);
  return {std::move(seq), std::move(truth), std::move(topic_of), std::move(means), config};
}

// ---------------------------------------------------------------------------
// Concentration check for a single block cost

/// lambda_T = 4 sqrt(2) M sqrt((8m + 5) ln T).
inline double lambda_T(std::size_t T, std::size_t m, double M = 1.0) {
  return 4.0 * std::sqrt(2.0) * M *
         std::sqrt(static_cast<double>(8 * m + 5) * std::log(static_cast<double>(T)));
}

/// Tail bound P(|C_hat - C| > x) <= 4 exp(-x^2 / (8 (8m + 5) M^2 n)).
inline double deviation_bound(double x, std::size_t n, std::size_t m, double M = 1.0) {
  return 4.0 * std::exp(-x * x / (8.0 * static_cast<double>(8 * m + 5) * M * M * static_cast<double>(n)));
}

/// Population cost C(1, n) of the linear kernel on raw (unnormalized) rows
/// Y_t = mu + Z_t with Z from ma_noise:
///   (n - 1) c_0 - 2 sum_{l >= 1} (1 - l/n) c_l,  c_l = d * autocov(l).
inline double population_cost_linear_ma(std::size_t n, std::size_t m, std::size_t d, double sigma) {
  const double nn = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  double cost = (nn - 1.0) * dd * ma_autocovariance(0, m, sigma);
  for (std::size_t l = 1; l < n && l <= m; ++l) {
    cost -= 2.0 * (1.0 - static_cast<double>(l) / nn) * dd * ma_autocovariance(l, m, sigma);
  }
  return cost;
}

struct DeviationSetup {
  std::size_t d = 8;
  double noise_scale = 0.5;
  double delta = 1.0;
};

struct DeviationReport {
  std::size_t n = 0;
  std::size_t m = 0;
  double x = 0.0;
  std::size_t reps = 0;
  double empirical_prob = 0.0;
  double bound = 0.0;
  double population_cost = 0.0;  // calibration estimate of C(1, n)
};

namespace detail {

inline double simulate_block_cost(std::size_t n, std::size_t m, const std::vector<double>& mu,
                                  const DeviationSetup& setup, const KernelSpec& kernel, double gamma,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> values = ma_noise(n, setup.d, m, setup.noise_scale, rng);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < setup.d; ++k) values[t * setup.d + k] += mu[k];
  }
  EmbeddingSequence block(n, setup.d, std::move(values));
  if (kernel.normalize_rows) block = normalize_rows(block);
  return whole_block_cost(block, kernel.kind, gamma);
}

}  // namespace detail

/// Monte-Carlo exceedance frequencies of |C_hat(1, n) - C(1, n)| over a set
/// of thresholds, sharing one simulation. C(1, n) is estimated from a
/// disjoint calibration run of 10 * reps blocks.
inline std::vector<DeviationReport> mc_deviation_sweep(std::size_t n, std::size_t m, const KernelSpec& kernel,
                                                       const std::vector<double>& xs, std::size_t reps,
                                                       std::uint64_t seed, const DeviationSetup& setup = {}) {
  kernel.validate();
  if (reps < 1000) throw Error(ErrorCode::InvalidArgument, "deviation check needs reps >= 1000");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "block length must be >= 1");
  if (kernel.kind == KernelKind::Linear && !kernel.normalize_rows) {
    throw Error(ErrorCode::InvalidArgument, "linear kernel is bounded by M = 1 only on normalized rows");
  }
  std::mt19937_64 mean_rng(child_seed(seed, 0));
  std::vector<double> mu = random_unit_vector(setup.d, mean_rng);
  for (double& v : mu) v *= setup.delta;

  double gamma = 0.0;
  if (kernel.kind == KernelKind::Rbf) {
    if (const auto* g = std::get_if<FixedGamma>(&kernel.bandwidth)) {
      gamma = g->value;
    } else {
      // One pilot block fixes the bandwidth for the whole experiment.
      std::mt19937_64 pilot_rng(child_seed(seed, 1));
      std::vector<double> values = ma_noise(std::max<std::size_t>(n, 2), setup.d, m, setup.noise_scale, pilot_rng);
      EmbeddingSequence pilot(std::max<std::size_t>(n, 2), setup.d, std::move(values));
      if (kernel.normalize_rows) pilot = normalize_rows(pilot);
      gamma = median_bandwidth(pilot);
    }
  }

  const std::uint64_t calib_seed = child_seed(seed, 2);
  const std::uint64_t test_seed = child_seed(seed, 3);
  double calib_sum = 0.0;
  const std::size_t calib_reps = 10 * reps;
  for (std::size_t r = 0; r < calib_reps; ++r) {
    calib_sum += detail::simulate_block_cost(n, m, mu, setup, kernel, gamma, child_seed(calib_seed, r));
  }
  const double population = calib_sum / static_cast<double>(calib_reps);

  std::vector<double> deviations(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    deviations[r] =
        std::abs(detail::simulate_block_cost(n, m, mu, setup, kernel, gamma, child_seed(test_seed, r)) - population);
  }

  std::vector<DeviationReport> out;
  for (double x : xs) {
    std::size_t exceed = 0;
    for (double dev : deviations) exceed += dev > x;
    out.push_back({n, m, x, reps, static_cast<double>(exceed) / static_cast<double>(reps),
                   deviation_bound(x, n, m), population});
  }
  return out;
}

inline DeviationReport mc_deviation_check(std::size_t n, std::size_t m, const KernelSpec& kernel, double x,
                                          std::size_t reps, std::uint64_t seed, const DeviationSetup& setup = {}) {
  return mc_deviation_sweep(n, m, kernel, {x}, reps, seed, setup).front();
}

// ---------------------------------------------------------------------------
// Localization scaling experiment

struct LocalizationConfig {
  std::vector<std::size_t> Ts{250, 500, 1000, 2000};
  double C = 0.1;
  std::size_t m = 20;
  std::size_t reps = 50;
  std::uint64_t seed = 0;
  std::size_t d = 16;
  double noise_scale = 0.5;
  double delta = 1.0;
  std::size_t topics = 5;
  KernelSpec kernel = KernelSpec::cosine();
  std::size_t min_size = 1;
};

struct LocalizationRow {
  std::size_t T = 0;
  std::size_t K = 0;
  std::size_t reps = 0;
  double mean_pk = 0.0;
  double mean_wd = 0.0;
  double mean_boundary_error = 0.0;
  double delta_T = 0.0;

  /// Boundary error relative to the mean segment length T / (K + 1).
  double relative_error() const {
    return mean_boundary_error / (static_cast<double>(T) / static_cast<double>(K + 1));
  }
};

inline std::vector<LocalizationRow> localization_experiment(const LocalizationConfig& cfg) {
  if (cfg.reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
  for (std::size_t i = 1; i < cfg.Ts.size(); ++i) {
    if (cfg.Ts[i] <= cfg.Ts[i - 1]) throw Error(ErrorCode::InvalidArgument, "Ts must be increasing");
  }
  std::vector<LocalizationRow> rows;
  for (std::size_t T : cfg.Ts) {
    SynthConfig sc;
    sc.T = T;
    sc.d = cfg.d;
    sc.m = cfg.m;
    sc.delta = cfg.delta;
    sc.topics = cfg.topics;
    sc.noise_scale = cfg.noise_scale;
    sc.normalize = cfg.kernel.normalize_rows;
    SolverOptions opts;
    opts.beta = scaled_beta(cfg.C, T);
    opts.min_size = cfg.min_size;
    opts.algorithm = Algorithm::Pelt;

    LocalizationRow row;
    row.T = T;
    row.K = sc.num_changepoints();
    row.reps = cfg.reps;
    row.delta_T = std::sqrt(static_cast<double>(T) * std::log(static_cast<double>(T)));
    const std::uint64_t t_seed = child_seed(cfg.seed, T);
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      sc.seed = child_seed(t_seed, r);
      const PlantedInstance inst = gen_planted(sc);
      const CostModel model = CostModel::build(inst.seq, cfg.kernel);
      const Segmentation est = solve_pelt(model, opts);
      const std::size_t window = default_window(inst.truth);
      row.mean_pk += pk(inst.truth, est, window);
      row.mean_wd += window_diff(inst.truth, est, window);
      row.mean_boundary_error += static_cast<double>(boundary_error(inst.truth, est));
    }
    const double reps = static_cast<double>(cfg.reps);
    row.mean_pk /= reps;
    row.mean_wd /= reps;
    row.mean_boundary_error /= reps;
    rows.push_back(row);
  }
  return rows;
}

inline void write_localization_csv(std::ostream& os, const std::vector<LocalizationRow>& rows) {
  os << "T,K,reps,mean_pk,mean_wd,mean_boundary_error,delta_T\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.T << ',' << r.K << ',' << r.reps << ',' << r.mean_pk << ',' << r.mean_wd << ','
       << r.mean_boundary_error << ',' << r.delta_T << '\n';
  }
  os.precision(old);
}

inline void write_deviation_csv(std::ostream& os, const std::vector<DeviationReport>& rows) {
  os << "n,m,x,reps,empirical_prob,bound,population_cost\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.n << ',' << r.m << ',' << r.x << ',' << r.reps << ',' << r.empirical_prob << ',' << r.bound << ','
       << r.population_cost << '\n';
  }
  os.precision(old);
}

}  // namespace ekcpd
