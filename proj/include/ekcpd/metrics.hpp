#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ekcpd/error.hpp"
#include "ekcpd/sequence.hpp"

namespace ekcpd {

struct SegEvalReport {
  double pk = 0.0;
  double window_diff = 0.0;
  std::size_t window = 1;
  std::optional<std::size_t> boundary_error;  // empty when the reference has no change points
  std::size_t k_true = 0;
  std::size_t k_hat = 0;
};

/// Half the average reference segment length, rounded half-up, at least 1.
inline std::size_t default_window(const Segmentation& ref) {
  const std::size_t T = ref.length();
  const std::size_t segments = ref.num_segments();
  // floor(T / (2 * segments) + 1/2) in exact integer arithmetic
  const std::size_t k = (T + segments) / (2 * segments);
  return std::max<std::size_t>(1, k);
}

namespace detail {

inline void check_pair(const Segmentation& ref, const Segmentation& hyp, std::size_t window) {
  if (ref.length() != hyp.length()) {
    throw Error(ErrorCode::InvalidArgument, "reference has T=" + std::to_string(ref.length()) +
                                                " but hypothesis has T=" + std::to_string(hyp.length()));
  }
  if (window < 1 || window >= ref.length()) {
    throw Error(ErrorCode::WindowTooLarge, "window " + std::to_string(window) + " must lie in [1, T-1] for T=" +
                                               std::to_string(ref.length()));
  }
}

// gaps[b] = 1 when there is a boundary after index b (b in 1..T-1); prefix-summed.
inline std::vector<std::size_t> gap_prefix(const Segmentation& seg) {
  const std::size_t T = seg.length();
  std::vector<std::size_t> prefix(T + 1, 0);
  std::vector<char> gap(T + 1, 0);
  for (std::size_t b : seg.changepoints()) gap[b] = 1;
  for (std::size_t b = 1; b <= T; ++b) prefix[b] = prefix[b - 1] + static_cast<std::size_t>(gap[b]);
  return prefix;
}

}  // namespace detail

/// Fraction of probe pairs (t, t + window), t = 1..T-window, on which the two
/// segmentations disagree about whether both ends share a segment.
inline double pk(const Segmentation& ref, const Segmentation& hyp, std::size_t window) {
  detail::check_pair(ref, hyp, window);
  const auto lr = ref.labels();
  const auto lh = hyp.labels();
  const std::size_t probes = ref.length() - window;
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < probes; ++i) {
    const bool same_ref = lr[i] == lr[i + window];
    const bool same_hyp = lh[i] == lh[i + window];
    disagree += same_ref != same_hyp;
  }
  return static_cast<double>(disagree) / static_cast<double>(probes);
}

/// Fraction of windows whose boundary counts differ. A boundary is a gap
/// position b in 1..T-1; window t covers gaps t..t+window-1.
inline double window_diff(const Segmentation& ref, const Segmentation& hyp, std::size_t window) {
  detail::check_pair(ref, hyp, window);
  const auto pr = detail::gap_prefix(ref);
  const auto ph = detail::gap_prefix(hyp);
  const std::size_t probes = ref.length() - window;
  std::size_t differ = 0;
  for (std::size_t t = 1; t <= probes; ++t) {
    const std::size_t hi = t + window - 1;
    differ += (pr[hi] - pr[t - 1]) != (ph[hi] - ph[t - 1]);
  }
  return static_cast<double>(differ) / static_cast<double>(probes);
}

/// max over true change points of the distance to the nearest estimated
/// boundary, where the estimate also includes the endpoints 0 and T.
inline std::size_t boundary_error(const Segmentation& ref, const Segmentation& hyp) {
  if (ref.length() != hyp.length()) {
    throw Error(ErrorCode::InvalidArgument, "reference and hypothesis lengths differ");
  }
  const auto truth = ref.changepoints();
  if (truth.empty()) throw Error(ErrorCode::NoTrueChanges, "reference has no change points");
  std::vector<std::size_t> est{0};
  for (std::size_t b : hyp.boundaries()) est.push_back(b);
  std::size_t worst = 0;
  for (std::size_t tau : truth) {
    auto it = std::lower_bound(est.begin(), est.end(), tau);
    std::size_t nearest = (it == est.end()) ? tau - est.back() : *it - tau;
    if (it != est.begin()) nearest = std::min(nearest, tau - *(it - 1));
    worst = std::max(worst, nearest);
  }
  return worst;
}

inline SegEvalReport evaluate(const Segmentation& ref, const Segmentation& hyp,
                              std::optional<std::size_t> window = std::nullopt) {
  SegEvalReport report;
  report.window = window.value_or(default_window(ref));
  report.pk = pk(ref, hyp, report.window);
  report.window_diff = window_diff(ref, hyp, report.window);
  if (ref.num_changepoints() > 0) report.boundary_error = boundary_error(ref, hyp);
  report.k_true = ref.num_changepoints();
  report.k_hat = hyp.num_changepoints();
  return report;
}

}  // namespace ekcpd
