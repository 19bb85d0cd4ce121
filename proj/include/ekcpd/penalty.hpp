#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "ekcpd/error.hpp"
#include "ekcpd/solver.hpp"

namespace ekcpd {

struct ExplicitBeta {
  double beta;
};

/// beta_T = C * sqrt(T * ln T).
struct ScaledPenalty {
  double C;
};

using PenaltySpec = std::variant<ExplicitBeta, ScaledPenalty>;

inline double scaled_beta(double C, std::size_t T) {
  if (T < 2) return 0.0;
  const double t = static_cast<double>(T);
  return C * std::sqrt(t * std::log(t));
}

inline double beta_from_spec(const PenaltySpec& spec, std::size_t T) {
  if (const auto* e = std::get_if<ExplicitBeta>(&spec)) return e->beta;
  return scaled_beta(std::get<ScaledPenalty>(spec).C, T);
}

/// `count` log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo < hi and at least 2 points");
  }
  std::vector<double> grid(count);
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = std::exp(a + step * static_cast<double>(i));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

inline std::vector<double> default_c_grid() { return log_grid(1e-2, 1.0, 25); }

struct ElbowPoint {
  double C;
  std::size_t k_hat;
};

struct ElbowCurve {
  std::vector<ElbowPoint> points;
};

/// K-hat as a function of C under the scaled schedule. `opts.beta` is
/// overwritten per grid point.
template <SegmentCost Cost>
ElbowCurve changepoint_curve(const Cost& model, const std::vector<double>& grid, SolverOptions opts) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "grid must be strictly increasing");
    }
  }
  ElbowCurve curve;
  curve.points.reserve(grid.size());
  for (double C : grid) {
    opts.beta = scaled_beta(C, model.size());
    const Segmentation seg = solve(model, opts);
    curve.points.push_back({C, seg.num_changepoints()});
  }
  return curve;
}

/// Index of the maximum discrete second difference K[i-1] - 2K[i] + K[i+1]
/// over interior points; ties go to the smaller C. Empty when the curve is
/// constant.
inline std::optional<std::size_t> elbow_index(const ElbowCurve& curve) {
  const auto& p = curve.points;
  if (p.size() < 3) throw Error(ErrorCode::InvalidArgument, "elbow needs at least 3 curve points");
  bool constant = true;
  for (const auto& q : p) constant = constant && q.k_hat == p.front().k_hat;
  if (constant) return std::nullopt;
  std::size_t arg = 1;
  long long best = std::numeric_limits<long long>::min();
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const long long d2 = static_cast<long long>(p[i - 1].k_hat) - 2 * static_cast<long long>(p[i].k_hat) +
                         static_cast<long long>(p[i + 1].k_hat);
    if (d2 > best) {
      best = d2;
      arg = i;
    }
  }
  return arg;
}

/// Mean of the per-curve elbow C values. Constant curves are skipped; if all
/// are constant, throws DegenerateCurve.
inline double elbow_C(const std::vector<ElbowCurve>& curves) {
  if (curves.empty()) throw Error(ErrorCode::InvalidArgument, "no curves");
  for (const auto& c : curves) {
    if (c.points.size() != curves.front().points.size()) {
      throw Error(ErrorCode::InvalidArgument, "curves must share one grid");
    }
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      if (c.points[i].C != curves.front().points[i].C) {
        throw Error(ErrorCode::InvalidArgument, "curves must share one grid");
      }
    }
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& c : curves) {
    if (auto idx = elbow_index(c)) {
      sum += c.points[*idx].C;
      ++used;
    }
  }
  if (used == 0) throw Error(ErrorCode::DegenerateCurve, "every change-point curve is constant");
  return sum / static_cast<double>(used);
}

}  // namespace ekcpd
