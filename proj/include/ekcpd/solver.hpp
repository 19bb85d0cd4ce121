#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ekcpd/error.hpp"
#include "ekcpd/sequence.hpp"

namespace ekcpd {

/// Anything that answers block-cost queries over 1 <= s <= e <= size().
/// Costs must be superadditive for the PELT pruning rule to stay exact.
template <typename C>
concept SegmentCost = requires(const C& c, std::size_t s, std::size_t e) {
  { c.size() } -> std::convertible_to<std::size_t>;
  { c.cost(s, e) } -> std::convertible_to<double>;
};

enum class Algorithm { ExactDp, Pelt, BruteForce };

struct SolverOptions {
  double beta = 0.0;
  std::size_t min_size = 1;
  std::optional<std::size_t> max_changepoints;
  Algorithm algorithm = Algorithm::Pelt;
};

struct PeltStats {
  std::size_t max_candidates = 0;
  std::size_t cost_evaluations = 0;
};

inline constexpr std::size_t kBruteForceMaxLength = 16;

namespace detail {

inline void check_options(std::size_t T, const SolverOptions& opts) {
  if (!(opts.beta >= 0.0) || !std::isfinite(opts.beta)) {
    throw Error(ErrorCode::InvalidArgument, "beta must be finite and nonnegative");
  }
  if (opts.min_size < 1) throw Error(ErrorCode::InvalidArgument, "min_size must be >= 1");
  if (T < opts.min_size) {
    throw Error(ErrorCode::Infeasible, "T=" + std::to_string(T) + " is shorter than min_size=" +
                                           std::to_string(opts.min_size));
  }
}

inline Segmentation backtrack(const std::vector<std::size_t>& last, std::size_t T) {
  std::vector<std::size_t> bounds;
  for (std::size_t s = T; s > 0; s = last[s]) bounds.push_back(s);
  std::reverse(bounds.begin(), bounds.end());
  return Segmentation(std::move(bounds));
}

inline void check_cap(const Segmentation& seg, const SolverOptions& opts) {
  if (opts.max_changepoints && seg.num_changepoints() > *opts.max_changepoints) {
    throw Error(ErrorCode::TooManyChangepoints,
                "optimal segmentation has " + std::to_string(seg.num_changepoints()) +
                    " change points, cap is " + std::to_string(*opts.max_changepoints));
  }
}

}  // namespace detail

/// Unpruned O(T^2) dynamic program:
///   F(0) = -beta,  F(s) = min_t F(t) + C(t+1, s) + beta
/// with t ranging over {0} U {min_size, ..., s - min_size}. Ties go to the
/// smaller t.
template <SegmentCost Cost>
Segmentation solve_exact_dp(const Cost& model, const SolverOptions& opts) {
  const std::size_t T = model.size();
  detail::check_options(T, opts);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t m = opts.min_size;
  std::vector<double> F(T + 1, inf);
  std::vector<std::size_t> last(T + 1, 0);
  F[0] = -opts.beta;
  for (std::size_t s = m; s <= T; ++s) {
    double best = inf;
    std::size_t arg = 0;
    for (std::size_t t = 0; t + m <= s; ++t) {
      if (F[t] == inf) continue;
      const double v = F[t] + model.cost(t + 1, s) + opts.beta;
      if (v < best) {
        best = v;
        arg = t;
      }
    }
    F[s] = best;
    last[s] = arg;
  }
  Segmentation seg = detail::backtrack(last, T);
  detail::check_cap(seg, opts);
  return seg;
}

/// PELT: the same recursion as solve_exact_dp with candidate pruning.
/// Candidate t is dominated at step s once F(t) + C(t+1, s) > F(s) (plus a
/// rounding margin); by superadditivity it can never win again once s itself
/// is a feasible predecessor, i.e. from step s + min_size on. Until then it is
/// kept, so the result matches the exact DP including tie-breaking.
///
/// The cost must also be nondecreasing as a segment grows to the right (true
/// for every kernel cost). The last evaluated F(t) + C(t+1, s') is then a lower
/// bound for later s, and a candidate whose bound already loses by more than
/// the margin is not re-evaluated at this step.
template <SegmentCost Cost>
Segmentation solve_pelt(const Cost& model, const SolverOptions& opts, PeltStats* stats = nullptr) {
  const std::size_t T = model.size();
  detail::check_options(T, opts);
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t never = std::numeric_limits<std::size_t>::max();
  const std::size_t m = opts.min_size;

  struct Candidate {
    std::size_t t;
    std::size_t expires;  // first step at which t may be dropped
    double bound;         // F(t) + C(t+1, s') from the last evaluation
  };

  std::vector<double> F(T + 1, inf);
  std::vector<std::size_t> last(T + 1, 0);
  F[0] = -opts.beta;
  std::vector<Candidate> live;
  live.reserve(64);
  std::size_t evaluations = 0;
  std::size_t max_live = 0;
  std::size_t previous_arg = 0;

  const auto margin_of = [](double v) { return 1e-9 * (1.0 + std::abs(v)); };

  for (std::size_t s = m; s <= T; ++s) {
    // t = s - m becomes admissible now; t = 0 is the first admissible candidate,
    // and t in (0, m) never is (F(t) = inf).
    const std::size_t fresh = s - m;
    if (F[fresh] != inf) live.push_back({fresh, never, -inf});

    std::erase_if(live, [s](const Candidate& c) { return c.expires <= s; });
    max_live = std::max(max_live, live.size());

    // Seed with the previous winner, which usually stays best.
    double best = inf;  // minimum of F(t) + C(t+1, s) so far
    std::size_t arg = 0;
    std::size_t seeded = live.size();
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (live[i].t == previous_arg) {
        live[i].bound = F[previous_arg] + model.cost(previous_arg + 1, s);
        ++evaluations;
        best = live[i].bound;
        arg = previous_arg;
        seeded = i;
        break;
      }
    }
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (i == seeded) continue;
      Candidate& c = live[i];
      if (c.bound > best + margin_of(best)) continue;
      c.bound = F[c.t] + model.cost(c.t + 1, s);
      ++evaluations;
      if (c.bound < best || (c.bound == best && c.t < arg)) {
        best = c.bound;
        arg = c.t;
      }
    }
    if (best == inf) continue;
    F[s] = best + opts.beta;
    last[s] = arg;
    previous_arg = arg;

    const double threshold = F[s] + margin_of(F[s]);
    for (auto& c : live) {
      if (c.expires == never && c.bound > threshold) c.expires = s + m;
    }
  }
  if (stats) {
    stats->max_candidates = max_live;
    stats->cost_evaluations = evaluations;
  }
  Segmentation seg = detail::backtrack(last, T);
  detail::check_cap(seg, opts);
  return seg;
}

/// Exhaustive enumeration over all 2^(T-1) boundary subsets (T <= 16).
/// Totals are accumulated in the same order as the dynamic program, and ties
/// are broken the same way: smallest last change point, then recursively on
/// the prefix.
template <SegmentCost Cost>
Segmentation brute_force_oracle(const Cost& model, const SolverOptions& opts) {
  const std::size_t T = model.size();
  if (T > kBruteForceMaxLength) {
    throw Error(ErrorCode::TooLarge, "brute force supports T <= " + std::to_string(kBruteForceMaxLength));
  }
  detail::check_options(T, opts);

  // Reverse-lexicographic comparison of boundary lists: compare from the end.
  auto prefer = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    auto ia = a.rbegin();
    auto ib = b.rbegin();
    for (; ia != a.rend() && ib != b.rend(); ++ia, ++ib) {
      if (*ia != *ib) return *ia < *ib;
    }
    // One is a suffix of the other; the shorter one has a "0" next.
    return a.size() < b.size();
  };

  const std::uint32_t subsets = 1u << (T - 1);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_bounds;
  std::vector<std::size_t> bounds;
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    bounds.clear();
    for (std::size_t b = 1; b < T; ++b) {
      if (mask & (1u << (b - 1))) bounds.push_back(b);
    }
    bounds.push_back(T);
    bool feasible = true;
    double total = -opts.beta;
    std::size_t start = 0;
    for (std::size_t b : bounds) {
      if (b - start < opts.min_size) {
        feasible = false;
        break;
      }
      total = total + model.cost(start + 1, b) + opts.beta;
      start = b;
    }
    if (!feasible) continue;
    if (total < best || (total == best && prefer(bounds, best_bounds))) {
      best = total;
      best_bounds = bounds;
    }
  }
  Segmentation seg(std::move(best_bounds));
  detail::check_cap(seg, opts);
  return seg;
}

template <SegmentCost Cost>
Segmentation solve(const Cost& model, const SolverOptions& opts) {
  switch (opts.algorithm) {
    case Algorithm::ExactDp: return solve_exact_dp(model, opts);
    case Algorithm::Pelt: return solve_pelt(model, opts);
    case Algorithm::BruteForce: return brute_force_oracle(model, opts);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

}  // namespace ekcpd
