#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ekcpd/error.hpp"
#include "ekcpd/sequence.hpp"

namespace ekcpd {

enum class KernelKind { Linear, Rbf };

struct MedianHeuristic {};
struct FixedGamma {
  double value;
};
using Bandwidth = std::variant<MedianHeuristic, FixedGamma>;

/// Kernel choice. The feature map and RKHS are implicit in `kind`:
///   Linear: k(x, y) = <x, y>        (cosine when normalize_rows is set)
///   Rbf:    k(x, y) = exp(-gamma * |x - y|^2), values in (0, 1]
/// Rbf and cosine are bounded by M = 1.
struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  Bandwidth bandwidth = MedianHeuristic{};
  bool normalize_rows = true;

  static KernelSpec cosine() { return {KernelKind::Linear, MedianHeuristic{}, true}; }
  static KernelSpec linear() { return {KernelKind::Linear, MedianHeuristic{}, false}; }
  static KernelSpec rbf_median(bool normalize = false) {
    return {KernelKind::Rbf, MedianHeuristic{}, normalize};
  }
  static KernelSpec rbf(double gamma, bool normalize = false) {
    return {KernelKind::Rbf, FixedGamma{gamma}, normalize};
  }

  void validate() const {
    if (kind != KernelKind::Rbf) return;
    if (const auto* g = std::get_if<FixedGamma>(&bandwidth)) {
      if (!(g->value > 0.0) || !std::isfinite(g->value)) {
        throw Error(ErrorCode::InvalidArgument, "RBF gamma must be positive and finite");
      }
    }
  }
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  const std::size_t n = a.size();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const double d0 = a[k] - b[k], d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2], d3 = a[k + 3] - b[k + 3];
    acc0 += d0 * d0;
    acc1 += d1 * d1;
    acc2 += d2 * d2;
    acc3 += d3 * d3;
  }
  for (; k < n; ++k) {
    const double dk = a[k] - b[k];
    acc0 += dk * dk;
  }
  return (acc0 + acc1) + (acc2 + acc3);
}

inline double squared_norm(std::span<const double> a) noexcept {
  double acc0 = 0.0, acc1 = 0.0;
  std::size_t k = 0;
  for (; k + 2 <= a.size(); k += 2) {
    acc0 += a[k] * a[k];
    acc1 += a[k + 1] * a[k + 1];
  }
  if (k < a.size()) acc0 += a[k] * a[k];
  return acc0 + acc1;
}

// Checks the raw scatter value against the clamp tolerance. `scale` is the
// magnitude of the diagonal term, so the tolerance tracks accumulated rounding.
inline double clamp_cost(double raw, double scale) {
  if (raw >= 0.0) return raw;
  if (raw >= -1e-9 * std::max(1.0, scale)) return 0.0;
  throw Error(ErrorCode::Internal, "segment cost " + std::to_string(raw) + " is negative beyond tolerance");
}

}  // namespace detail

/// gamma = 1 / median of the positive squared pairwise distances.
inline double median_bandwidth(const EmbeddingSequence& seq) {
  const std::size_t T = seq.size();
  if (T < 2) throw Error(ErrorCode::DegenerateSequence, "median heuristic needs T >= 2");
  std::vector<double> dist;
  dist.reserve(T * (T - 1) / 2);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t j = i + 1; j < T; ++j) {
      const double sq = detail::squared_distance(seq.row0(i), seq.row0(j));
      if (sq > 0.0) dist.push_back(sq);
    }
  }
  if (dist.empty()) throw Error(ErrorCode::DegenerateSequence, "all rows are identical");
  const std::size_t n = dist.size();
  const auto upper = dist.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(dist.begin(), upper, dist.end());
  double median = *upper;
  if (n % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), upper);
    median = 0.5 * (lower + median);
  }
  return 1.0 / median;
}

struct BuildOptions {
  // Rbf caches are O(T^2); lengths above this are refused unless overridden.
  std::size_t max_rbf_length = 20000;
  bool allow_large_gram = false;
};

/// Answers empirical block-cost queries
///   C(s, e) = sum_t k(Y_t, Y_t) - (1 / (e - s + 1)) sum_i sum_j k(Y_i, Y_j)
/// over 1 <= s <= e <= T. Immutable after construction, so concurrent queries
/// are safe.
class CostModel {
 public:
  static CostModel build(const EmbeddingSequence& input, const KernelSpec& kernel,
                         const BuildOptions& options = {}) {
    kernel.validate();
    CostModel model;
    model.kernel_ = kernel;
    const EmbeddingSequence seq =
        (kernel.normalize_rows && !input.unit_normalized()) ? normalize_rows(input) : input;
    model.T_ = seq.size();
    model.d_ = seq.dim();
    model.unit_rows_ = seq.unit_normalized();
    if (kernel.kind == KernelKind::Linear) {
      model.build_linear(seq);
    } else {
      if (model.T_ > options.max_rbf_length && !options.allow_large_gram) {
        throw Error(ErrorCode::MemoryGuard,
                    "RBF cache for T=" + std::to_string(model.T_) + " exceeds the limit of " +
                        std::to_string(options.max_rbf_length) + " rows");
      }
      if (const auto* g = std::get_if<FixedGamma>(&kernel.bandwidth)) {
        model.gamma_ = g->value;
      } else {
        model.gamma_ = median_bandwidth(seq);
      }
      model.build_rbf(seq);
    }
    return model;
  }

  std::size_t size() const noexcept { return T_; }
  std::size_t dim() const noexcept { return d_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  /// Resolved RBF bandwidth; 0 for the linear kernel.
  double gamma() const noexcept { return gamma_; }

  /// Prefix sums P_0..P_T (linear kernel only), row t = sum_{i <= t} y_i.
  std::span<const double> prefix(std::size_t t) const {
    if (kernel_.kind != KernelKind::Linear) throw Error(ErrorCode::InvalidArgument, "no prefix cache for the RBF kernel");
    if (t > T_) throw Error(ErrorCode::IndexOutOfRange, "prefix index");
    return {prefix_.data() + t * d_, d_};
  }

  /// Gram matrix entry k(Y_i, Y_j) recovered from the 2-D prefix table (Rbf only).
  double gram(std::size_t i, std::size_t j) const {
    if (kernel_.kind != KernelKind::Rbf) throw Error(ErrorCode::InvalidArgument, "no Gram cache for the linear kernel");
    if (i < 1 || j < 1 || i > T_ || j > T_) throw Error(ErrorCode::IndexOutOfRange, "Gram index");
    return G(i, j) - G(i - 1, j) - G(i, j - 1) + G(i - 1, j - 1);
  }

  double cost(std::size_t s, std::size_t e) const {
    if (s < 1 || s > e || e > T_) {
      throw Error(ErrorCode::IndexOutOfRange, "segment [" + std::to_string(s) + ", " +
                                                  std::to_string(e) + "] outside 1.." +
                                                  std::to_string(T_));
    }
    if (s == e) return 0.0;
    const double L = static_cast<double>(e - s + 1);
    if (kernel_.kind == KernelKind::Linear) {
      const double diag = unit_rows_ ? L : sq_prefix_[e] - sq_prefix_[s - 1];
      const double* pe = prefix_.data() + e * d_;
      const double* ps = prefix_.data() + (s - 1) * d_;
      double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      std::size_t k = 0;
      for (; k + 4 <= d_; k += 4) {
        const double d0 = pe[k] - ps[k], d1 = pe[k + 1] - ps[k + 1];
        const double d2 = pe[k + 2] - ps[k + 2], d3 = pe[k + 3] - ps[k + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
      }
      for (; k < d_; ++k) {
        const double dk = pe[k] - ps[k];
        acc0 += dk * dk;
      }
      const double sum_sq = (acc0 + acc1) + (acc2 + acc3);
      return detail::clamp_cost(diag - sum_sq / L, diag);
    }
    const double diag = diag_prefix_[e] - diag_prefix_[s - 1];
    const double block = G(e, e) - G(s - 1, e) - G(e, s - 1) + G(s - 1, s - 1);
    return detail::clamp_cost(diag - block / L, diag);
  }

 private:
  double G(std::size_t i, std::size_t j) const noexcept { return gram2d_[i * (T_ + 1) + j]; }

  void build_linear(const EmbeddingSequence& seq) {
    prefix_.assign((T_ + 1) * d_, 0.0);
    sq_prefix_.assign(T_ + 1, 0.0);
    for (std::size_t t = 1; t <= T_; ++t) {
      const auto y = seq.row(t);
      for (std::size_t k = 0; k < d_; ++k) {
        prefix_[t * d_ + k] = prefix_[(t - 1) * d_ + k] + y[k];
      }
      sq_prefix_[t] = sq_prefix_[t - 1] + detail::squared_norm(y);
    }
  }

  void build_rbf(const EmbeddingSequence& seq) {
    const std::size_t n = T_ + 1;
    gram2d_.assign(n * n, 0.0);
    diag_prefix_.assign(n, 0.0);
    std::vector<double> row(T_);
    for (std::size_t i = 1; i <= T_; ++i) {
      for (std::size_t j = 1; j <= T_; ++j) {
        row[j - 1] = (i == j) ? 1.0
                              : std::exp(-gamma_ * detail::squared_distance(seq.row(i), seq.row(j)));
      }
      double running = 0.0;
      for (std::size_t j = 1; j <= T_; ++j) {
        running += row[j - 1];
        gram2d_[i * n + j] = gram2d_[(i - 1) * n + j] + running;
      }
      diag_prefix_[i] = diag_prefix_[i - 1] + row[i - 1];
    }
  }

  KernelSpec kernel_;
  std::size_t T_ = 0;
  std::size_t d_ = 0;
  bool unit_rows_ = false;
  double gamma_ = 0.0;
  std::vector<double> prefix_;
  std::vector<double> sq_prefix_;
  std::vector<double> gram2d_;
  std::vector<double> diag_prefix_;
};

inline CostModel build_cost_model(const EmbeddingSequence& seq, const KernelSpec& kernel,
                                  const BuildOptions& options = {}) {
  return CostModel::build(seq, kernel, options);
}

inline double segment_cost(const CostModel& model, std::size_t s, std::size_t e) {
  return model.cost(s, e);
}

/// L(tau) = sum of block costs + beta * K.
template <typename Cost>
double total_penalized_cost(const Cost& model, const Segmentation& seg, double beta) {
  if (seg.length() != model.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "segmentation length " + std::to_string(seg.length()) +
                                                " does not match T=" + std::to_string(model.size()));
  }
  double total = 0.0;
  std::size_t start = 1;
  for (std::size_t b : seg.boundaries()) {
    total += model.cost(start, b);
    start = b + 1;
  }
  return total + beta * static_cast<double>(seg.num_changepoints());
}

/// Scatter of a whole sequence, C(1, T), without building a cache. Used by the
/// Monte-Carlo checks, where each simulated block is queried exactly once.
inline double whole_block_cost(const EmbeddingSequence& seq, KernelKind kind, double gamma = 0.0) {
  const std::size_t n = seq.size();
  const std::size_t d = seq.dim();
  if (n == 1) return 0.0;
  if (kind == KernelKind::Linear) {
    std::vector<double> sum(d, 0.0);
    double diag = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
      const auto y = seq.row(t);
      for (std::size_t k = 0; k < d; ++k) sum[k] += y[k];
      diag += detail::squared_norm(y);
    }
    return detail::clamp_cost(diag - detail::squared_norm(sum) / static_cast<double>(n), diag);
  }
  double off = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      off += std::exp(-gamma * detail::squared_distance(seq.row(i), seq.row(j)));
    }
  }
  const double diag = static_cast<double>(n);
  return detail::clamp_cost(diag - (diag + 2.0 * off) / diag, diag);
}

}  // namespace ekcpd
