#pragma once

// Test-only reference implementations. Nothing here reuses the prefix caches
// or the dynamic programs it is used to check.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "ekcpd/sequence.hpp"

namespace ekcpd::testing {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * sq);
}

/// Direct double-sum block cost, O(L^2) per query.
struct DirectCost {
  const EmbeddingSequence* seq;
  bool use_rbf = false;
  double gamma = 1.0;

  std::size_t size() const { return seq->size(); }

  double k(std::size_t i, std::size_t j) const {
    return use_rbf ? rbf(seq->row(i), seq->row(j), gamma) : dot(seq->row(i), seq->row(j));
  }

  double cost(std::size_t s, std::size_t e) const {
    double diag = 0.0;
    double all = 0.0;
    for (std::size_t i = s; i <= e; ++i) {
      diag += k(i, i);
      for (std::size_t j = s; j <= e; ++j) all += k(i, j);
    }
    return diag - all / static_cast<double>(e - s + 1);
  }
};

inline EmbeddingSequence random_sequence(std::size_t T, std::size_t d, std::mt19937_64& rng,
                                         bool normalize = true) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(T * d);
  for (double& v : values) v = normal(rng);
  EmbeddingSequence seq(T, d, std::move(values));
  return normalize ? normalize_rows(seq) : seq;
}

/// Piecewise-constant-mean sequence with a few blocks, rounded to a coarse
/// grid so exact ties between candidate segmentations do occur.
inline EmbeddingSequence blocky_sequence(std::size_t T, std::size_t d, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> level(-2, 2);
  std::bernoulli_distribution change(0.3);
  std::vector<double> values(T * d);
  std::vector<double> mean(d);
  for (double& v : mean) v = level(rng);
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0 && change(rng)) {
      for (double& v : mean) v = level(rng);
    }
    for (std::size_t k = 0; k < d; ++k) values[t * d + k] = mean[k] + 0.25 * level(rng) + 0.125;  // never exactly zero
  }
  return EmbeddingSequence(T, d, std::move(values));
}

/// The 6-row fixture: three copies of (1, 0) followed by three of (0, 1).
inline EmbeddingSequence two_block_fixture() {
  return EmbeddingSequence::from_rows({{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}, {0, 1}});
}

}  // namespace ekcpd::testing
