#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ekcpd/error.hpp"

namespace ekcpd {

/// An observed sequence Y_1..Y_T of d-dimensional embeddings, stored row-major.
///
/// Rows are addressed 1-based through `row(t)` to match the segment notation
/// used everywhere else in the library; `row0(i)` is the 0-based accessor.
class EmbeddingSequence {
 public:
  EmbeddingSequence() = default;

  EmbeddingSequence(std::size_t T, std::size_t d, std::vector<double> values,
                    std::vector<std::string> ids = {}, bool unit_normalized = false)
      : T_(T), d_(d), values_(std::move(values)), ids_(std::move(ids)),
        unit_normalized_(unit_normalized) {
    validate();
  }

  static EmbeddingSequence from_rows(const std::vector<std::vector<double>>& rows,
                                     std::vector<std::string> ids = {}) {
    if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "sequence must have T >= 1 rows");
    const std::size_t d = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * d);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != d) {
        throw Error(ErrorCode::InvalidArgument,
                    "row " + std::to_string(t + 1) + " has dimension " +
                        std::to_string(rows[t].size()) + ", expected " + std::to_string(d));
      }
      values.insert(values.end(), rows[t].begin(), rows[t].end());
    }
    return EmbeddingSequence(rows.size(), d, std::move(values), std::move(ids));
  }

  std::size_t size() const noexcept { return T_; }
  std::size_t dim() const noexcept { return d_; }
  bool unit_normalized() const noexcept { return unit_normalized_; }

  std::span<const double> row(std::size_t t) const { return row0(t - 1); }
  std::span<const double> row0(std::size_t i) const {
    return {values_.data() + i * d_, d_};
  }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  friend bool operator==(const EmbeddingSequence&, const EmbeddingSequence&) = default;

 private:
  void validate() const {
    if (T_ < 1 || d_ < 1) throw Error(ErrorCode::InvalidArgument, "sequence requires T >= 1 and d >= 1");
    if (values_.size() != T_ * d_) {
      throw Error(ErrorCode::InvalidArgument, "value count does not match T*d");
    }
    if (!ids_.empty() && ids_.size() != T_) {
      throw Error(ErrorCode::InvalidArgument, "ids must be empty or have one entry per row");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(ErrorCode::InvalidArgument,
                    "non-finite entry in row " + std::to_string(i / d_ + 1));
      }
    }
    if (unit_normalized_) {
      for (std::size_t t = 0; t < T_; ++t) {
        double sq = 0.0;
        for (double v : row0(t)) sq += v * v;
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
          throw Error(ErrorCode::InvalidArgument,
                      "row " + std::to_string(t + 1) + " is marked unit-normalized but has norm " +
                          std::to_string(std::sqrt(sq)));
        }
      }
    }
  }

  std::size_t T_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
  std::vector<std::string> ids_;
  bool unit_normalized_ = false;
};

/// Divides every row by its Euclidean norm. Throws ZeroVector for rows with
/// norm <= 1e-12.
inline EmbeddingSequence normalize_rows(const EmbeddingSequence& seq) {
  std::vector<double> out(seq.values());
  const std::size_t d = seq.dim();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) sq += out[i * d + k] * out[i * d + k];
    const double norm = std::sqrt(sq);
    if (norm <= 1e-12) throw Error(ErrorCode::ZeroVector, "row " + std::to_string(i + 1));
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= norm;
  }
  return EmbeddingSequence(seq.size(), seq.dim(), std::move(out), seq.ids(), true);
}

/// Segment end indices (1-based, inclusive), strictly increasing, last = T.
/// K = boundaries().size() - 1 change points.
class Segmentation {
 public:
  Segmentation() = default;

  explicit Segmentation(std::vector<std::size_t> boundaries) : boundaries_(std::move(boundaries)) {
    if (boundaries_.empty()) throw Error(ErrorCode::InvalidArgument, "segmentation needs at least one boundary");
    std::size_t prev = 0;
    for (std::size_t b : boundaries_) {
      if (b <= prev) {
        throw Error(ErrorCode::InvalidArgument, "boundaries must be strictly increasing and >= 1");
      }
      prev = b;
    }
  }

  /// The segmentation with K = 0 change points.
  static Segmentation whole(std::size_t T) { return Segmentation({T}); }

  /// Builds a segmentation from interior change points (any order, no duplicates).
  static Segmentation from_changepoints(std::vector<std::size_t> cps, std::size_t T) {
    std::sort(cps.begin(), cps.end());
    cps.push_back(T);
    return Segmentation(std::move(cps));
  }

  std::size_t length() const noexcept { return boundaries_.empty() ? 0 : boundaries_.back(); }
  std::size_t num_changepoints() const noexcept {
    return boundaries_.empty() ? 0 : boundaries_.size() - 1;
  }
  std::size_t num_segments() const noexcept { return boundaries_.size(); }

  const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }

  /// Interior change points, i.e. all boundaries except the terminal T.
  std::vector<std::size_t> changepoints() const {
    if (boundaries_.empty()) return {};
    return {boundaries_.begin(), boundaries_.end() - 1};
  }

  /// Segment label (0-based) of every index 1..T, returned as a 0-based array.
  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out(length());
    std::size_t start = 0;
    for (std::size_t k = 0; k < boundaries_.size(); ++k) {
      for (std::size_t t = start; t < boundaries_[k]; ++t) out[t] = k;
      start = boundaries_[k];
    }
    return out;
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::vector<std::size_t> boundaries_;
};

}  // namespace ekcpd
