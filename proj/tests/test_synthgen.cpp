#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ekcpd/io.hpp"
#include "ekcpd/synthgen.hpp"

using namespace ekcpd;

TEST(SampleChangepoints, Examples) {
  EXPECT_EQ(sample_changepoints(10, 0, 1), Segmentation({10}));
  EXPECT_EQ(sample_changepoints(5, 4, 1), Segmentation({1, 2, 3, 4, 5}));
  try {
    sample_changepoints(5, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidK);
  }
}

TEST(SampleChangepoints, DeterministicGivenSeed) {
  const auto a = sample_changepoints(100, 9, 2024);
  EXPECT_EQ(a, sample_changepoints(100, 9, 2024));
  EXPECT_EQ(a.num_changepoints(), 9u);
  EXPECT_EQ(a.length(), 100u);
  EXPECT_NE(a, sample_changepoints(100, 9, 2025));
}

TEST(SampleChangepoints, RoughlyUniform) {
  // each interior position is hit with probability K / (T - 1)
  const std::size_t T = 11, K = 3, reps = 20000;
  std::vector<double> hits(T, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t b : sample_changepoints(T, K, child_seed(5, r)).changepoints()) hits[b] += 1.0;
  }
  const double p = static_cast<double>(K) / static_cast<double>(T - 1);
  const double se = std::sqrt(p * (1 - p) / reps);
  for (std::size_t b = 1; b < T; ++b) EXPECT_NEAR(hits[b] / reps, p, 4 * se) << b;
}

TEST(DefaultK, NaturalLog) {
  EXPECT_EQ(default_num_changepoints(250), 12u);   // 2 ln 250 = 11.04
  EXPECT_EQ(default_num_changepoints(2000), 16u);  // 2 ln 2000 = 15.20
}

TEST(MaNoise, MatchesMovingAverageDefinition) {
  const std::size_t T = 40, d = 3, m = 4;
  const double sigma = 0.7;
  std::mt19937_64 rng(99);
  const auto z = ma_noise(T, d, m, sigma, rng);
  // regenerate the innovations from the same stream
  std::mt19937_64 replay(99);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> eps((T + m) * d);
  for (double& v : eps) v = normal(replay);
  for (std::size_t t = 0; t < T; ++t) {
    const auto [first, last] = ma_support(t, m);
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t i = first; i <= last; ++i) s += eps[i * d + k];
      EXPECT_NEAR(z[t * d + k], s / std::sqrt(m + 1.0), 1e-12);
    }
  }
}

TEST(MaNoise, StructurallyMDependent) {
  const std::size_t m = 6;
  for (std::size_t t = 0; t < 50; ++t) {
    for (std::size_t u = t; u < 50; ++u) {
      const auto a = ma_support(t, m);
      const auto b = ma_support(u, m);
      const bool overlap = a.second >= b.first && b.second >= a.first;
      EXPECT_EQ(overlap, u - t <= m) << t << "," << u;
    }
  }
}

TEST(MaNoise, LagBeyondMHasZeroAutocovariance) {
  // T=500, K=12, d=16, m=20, sigma=0.5; 100 replicates
  const std::size_t T = 500, d = 16, m = 20, reps = 100;
  const double sigma = 0.5;
  std::vector<double> stats;
  std::vector<double> lag1_stats;
  for (std::size_t r = 0; r < reps; ++r) {
    std::mt19937_64 rng(child_seed(12, r));
    const auto z = ma_noise(T, d, m, sigma, rng);
    double acc = 0.0, acc1 = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t + m + 1 < T; ++t) {
      for (std::size_t k = 0; k < d; ++k) {
        acc += z[t * d + k] * z[(t + m + 1) * d + k];
        acc1 += z[t * d + k] * z[(t + 1) * d + k];
        ++count;
      }
    }
    stats.push_back(acc / count);
    lag1_stats.push_back(acc1 / count);
  }
  double mean = 0.0, mean1 = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    mean += stats[i] / reps;
    mean1 += lag1_stats[i] / reps;
  }
  double var = 0.0;
  for (double s : stats) var += (s - mean) * (s - mean) / (reps - 1);
  const double se = std::sqrt(var / reps);
  EXPECT_LE(std::abs(mean), 3 * se);
  // sanity: lag 1 is clearly correlated, at sigma^2 * m / (m + 1)
  EXPECT_NEAR(mean1, ma_autocovariance(1, m, sigma), 0.02);
}

TEST(GenPlanted, ConsecutiveSegmentsDiffer) {
  SynthConfig cfg;
  cfg.T = 200;
  for (std::uint64_t r = 0; r < 100; ++r) {
    cfg.seed = r;
    const auto inst = gen_planted(cfg);
    ASSERT_EQ(inst.topic_of_segment.size(), inst.truth.num_segments());
    for (std::size_t k = 1; k < inst.topic_of_segment.size(); ++k) {
      EXPECT_NE(inst.topic_of_segment[k], inst.topic_of_segment[k - 1]);
      EXPECT_NE(inst.means[k], inst.means[k - 1]);
    }
  }
}

TEST(GenPlanted, DeterministicBytes) {
  SynthConfig cfg;
  cfg.T = 500;
  cfg.m = 20;
  cfg.seed = 7;
  const auto a = gen_planted(cfg);
  const auto b = gen_planted(cfg);
  EXPECT_EQ(io::encode_binary(a.seq), io::encode_binary(b.seq));
  EXPECT_EQ(a.seq, b.seq);
  EXPECT_EQ(a.truth, b.truth);
  cfg.seed = 8;
  EXPECT_NE(gen_planted(cfg).seq, a.seq);
}

TEST(GenPlanted, DefaultsAndValidation) {
  SynthConfig cfg;
  cfg.T = 1000;
  const auto inst = gen_planted(cfg);
  EXPECT_EQ(inst.truth.num_changepoints(), 14u);  // ceil(2 ln 1000) = ceil(13.8)
  EXPECT_TRUE(inst.seq.unit_normalized());
  cfg.topics = 1;
  EXPECT_THROW(gen_planted(cfg), Error);
  cfg.topics = 5;
  cfg.K = 1000;
  EXPECT_THROW(gen_planted(cfg), Error);
}

TEST(GenPlanted, NoiselessRowsEqualTheirMeans) {
  SynthConfig cfg;
  cfg.T = 300;
  cfg.m = 0;
  cfg.noise_scale = 1e-12;
  cfg.normalize = false;
  cfg.seed = 4;
  const auto inst = gen_planted(cfg);
  const auto labels = inst.truth.labels();
  for (std::size_t t = 0; t < cfg.T; ++t) {
    for (std::size_t k = 0; k < cfg.d; ++k) EXPECT_NEAR(inst.seq.row0(t)[k], inst.means[labels[t]][k], 1e-9);
  }
  const auto model = CostModel::build(inst.seq, KernelSpec::cosine());
  SolverOptions opts;
  opts.beta = 1e-6;
  EXPECT_EQ(solve_pelt(model, opts), inst.truth);
}

TEST(GenPlanted, WithinSegmentStationarity) {
  // Two disjoint halves of one long block share first and second moments.
  SynthConfig cfg;
  cfg.T = 4000;
  cfg.K = 0;
  cfg.d = 4;
  cfg.m = 5;
  cfg.normalize = false;
  double mean_gap = 0.0, var_gap = 0.0;
  const std::size_t reps = 40;
  for (std::uint64_t r = 0; r < reps; ++r) {
    cfg.seed = r;
    const auto inst = gen_planted(cfg);
    double m1 = 0, m2 = 0, v1 = 0, v2 = 0;
    const std::size_t half = cfg.T / 2;
    for (std::size_t t = 0; t < half; ++t) {
      const double a = inst.seq.row0(t)[0] - inst.means[0][0];
      const double b = inst.seq.row0(t + half)[0] - inst.means[0][0];
      m1 += a;
      m2 += b;
      v1 += a * a;
      v2 += b * b;
    }
    mean_gap += (m1 - m2) / half / reps;
    var_gap += (v1 - v2) / half / reps;
  }
  // MA(5) sums have long-run sd ~ sigma * sqrt(m+1); averaged over 40 replicates
  EXPECT_NEAR(mean_gap, 0.0, 0.05);
  EXPECT_NEAR(var_gap, 0.0, 0.02);
}

TEST(Deviation, BoundAndLambda) {
  EXPECT_NEAR(deviation_bound(1.0, 1, 0, 1.0), 4.0 * std::exp(-1.0 / 40.0), 1e-15);
  // at x = lambda_T sqrt(n) with T = n the bound collapses to 4 T^-4
  const std::size_t n = 50;
  const double x = lambda_T(n, 0) * std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(deviation_bound(x, n, 0), 4.0 * std::pow(50.0, -4.0), 1e-18);
  EXPECT_NEAR(lambda_T(50, 0), 25.0184667969183, 1e-10);
}

TEST(Deviation, LinearPopulationCostClosedForm) {
  // Monte-Carlo mean of C_hat(1, n) on raw rows against the closed form.
  const std::size_t n = 40, m = 3, d = 4;
  const double sigma = 0.8;
  const std::vector<double> mu{0.5, -0.5, 0.5, -0.5};
  const std::size_t reps = 4000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::mt19937_64 rng(child_seed(21, r));
    auto values = ma_noise(n, d, m, sigma, rng);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t k = 0; k < d; ++k) values[t * d + k] += mu[k];
    }
    const double c = whole_block_cost(EmbeddingSequence(n, d, std::move(values)), KernelKind::Linear);
    sum += c;
    sq += c * c;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / reps);
  const double expected = population_cost_linear_ma(n, m, d, sigma);
  EXPECT_NEAR(mean, expected, 4 * se);
  // c_l collapse for m = 0: (n - 1) d sigma^2
  EXPECT_NEAR(population_cost_linear_ma(10, 0, 2, 1.0), 18.0, 1e-12);
}

TEST(Deviation, HugeThresholdNeverExceeded) {
  const std::size_t n = 50;
  const double x = 180.0;  // 4 exp(-180^2 / 2000) ~ 3.7e-7
  const auto r = mc_deviation_check(n, 0, KernelSpec::cosine(), x, 10000, 1);
  EXPECT_LT(r.bound, 1e-6);
  EXPECT_EQ(r.empirical_prob, 0.0);
  EXPECT_LE(r.empirical_prob, r.bound);
}

TEST(Deviation, LambdaThresholdAtTEqualsN) {
  const std::size_t n = 50;
  const double x = lambda_T(n, 0) * std::sqrt(static_cast<double>(n));
  const auto r = mc_deviation_check(n, 0, KernelSpec::cosine(), x, 1000, 2);
  EXPECT_LT(r.bound, 1e-6);
  EXPECT_EQ(r.empirical_prob, 0.0);
}

TEST(Deviation, SmallThresholdsAreExceededSometimes) {
  // the simulation is not vacuous: tiny thresholds are exceeded often
  const auto rows = mc_deviation_sweep(30, 2, KernelSpec::rbf(1.0), {1e-3, 0.05}, 1000, 3);
  EXPECT_GT(rows[0].empirical_prob, 0.9);
  EXPECT_GT(rows[0].population_cost, 0.0);
  for (const auto& r : rows) EXPECT_LE(r.empirical_prob, r.bound);
}

TEST(Deviation, PreconditionsEnforced) {
  EXPECT_THROW(mc_deviation_check(20, 0, KernelSpec::cosine(), 1.0, 999, 1), Error);
  EXPECT_THROW(mc_deviation_check(20, 0, KernelSpec::linear(), 1.0, 1000, 1), Error);
}

TEST(Localization, NoiselessRecoveryIsPerfect) {
  LocalizationConfig cfg;
  cfg.Ts = {100, 200};
  cfg.reps = 5;
  cfg.m = 0;
  cfg.noise_scale = 1e-9;
  cfg.C = 0.01;
  const auto rows = localization_experiment(cfg);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.mean_pk, 0.0);
    EXPECT_EQ(r.mean_wd, 0.0);
    EXPECT_EQ(r.mean_boundary_error, 0.0);
    EXPECT_EQ(r.K, default_num_changepoints(r.T));
    EXPECT_NEAR(r.delta_T, std::sqrt(r.T * std::log(r.T)), 1e-12);
  }
}

TEST(Localization, CsvSchema) {
  std::ostringstream os;
  write_localization_csv(os, {LocalizationRow{250, 12, 50, 0.1, 0.2, 3.0, 37.1}});
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "T,K,reps,mean_pk,mean_wd,mean_boundary_error,delta_T");
  EXPECT_NE(text.find("250,12,50,"), std::string::npos);
}
