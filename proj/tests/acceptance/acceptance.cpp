// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ekcpd/ekcpd.hpp"
#include "support/oracles.hpp"

using namespace ekcpd;
using ekcpd::testing::DirectCost;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> length(2, 12);
  std::size_t instances = 0;
  std::size_t mismatches = 0;
  for (int round = 0; round < 25; ++round) {
    for (bool use_rbf : {false, true}) {
      const std::size_t T = length(rng);
      const auto seq = round % 2 == 0 ? ekcpd::testing::random_sequence(T, 3, rng)
                                      : ekcpd::testing::blocky_sequence(T, 3, rng);
      const KernelSpec kernel = use_rbf ? KernelSpec::rbf_median() : KernelSpec::cosine();
      const CostModel model = CostModel::build(seq, kernel);
      for (double beta : {0.01, 0.5, 2.0}) {
        for (std::size_t min_size : {1u, 2u}) {
          if (T < min_size) continue;
          SolverOptions opts;
          opts.beta = beta;
          opts.min_size = min_size;
          const auto pelt = solve_pelt(model, opts);
          const auto dp = solve_exact_dp(model, opts);
          const auto brute = brute_force_oracle(model, opts);
          ++instances;
          mismatches += !(pelt == dp && dp == brute);
        }
      }
    }
  }
  const double secs = seconds_since(start);
  return {instances >= 200 && mismatches == 0 && secs < 30.0,
          fmt("instances=%.0f mismatches=%.0f time=%.2fs", static_cast<double>(instances),
              static_cast<double>(mismatches), secs)};
}

Outcome closed_form_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto seq = ekcpd::testing::random_sequence(50, 8, rng);
    const CostModel model = CostModel::build(seq, KernelSpec::linear());
    const DirectCost direct{&seq, false, 0.0};
    for (std::size_t s = 1; s <= 50; ++s) {
      for (std::size_t e = s; e <= 50; ++e) {
        const double ref = direct.cost(s, e);
        const double rel = std::abs(model.cost(s, e) - ref) / std::max(1.0, std::abs(ref));
        worst = std::max(worst, rel);
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 5.0, fmt("max_rel_err=%.3g time=%.2fs", worst, secs)};
}

Outcome metric_fixtures() {
  const Segmentation ref({3, 6});
  const Segmentation hyp({2, 6});
  const std::size_t w = default_window(ref);
  const double p = pk(ref, hyp, w);
  const double wd = window_diff(ref, hyp, w);
  bool ok = w == 2 && p == 0.5 && wd == 0.5;

  std::mt19937_64 rng(11);
  std::size_t nonzero = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t T = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    const std::size_t K = std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(T - 1, 10))(rng);
    const Segmentation a = sample_changepoints(T, K, rng());
    const std::size_t win = default_window(a) < T ? default_window(a) : T - 1;
    nonzero += pk(a, a, win) != 0.0 || window_diff(a, a, win) != 0.0;
  }
  ok = ok && nonzero == 0;
  return {ok, fmt("pk=%.17g window_diff=%.17g identical_nonzero=%.0f", p, wd, static_cast<double>(nonzero))};
}

Outcome concentration() {
  const auto start = std::chrono::steady_clock::now();
  std::size_t cells = 0;
  std::size_t violations = 0;
  double tightest = INFINITY;
  std::uint64_t cell_seed = 0;
  for (std::size_t n : {50u, 200u, 800u}) {
    for (std::size_t m : {0u, 5u, 20u}) {
      std::vector<double> xs;
      for (double k : {0.5, 1.0, 2.0}) xs.push_back(k * std::sqrt(static_cast<double>(n)));
      const auto rows = mc_deviation_sweep(n, m, KernelSpec::cosine(), xs, 10000, child_seed(99, cell_seed++));
      for (const auto& r : rows) {
        ++cells;
        violations += r.empirical_prob > r.bound;
        tightest = std::min(tightest, r.bound - r.empirical_prob);
      }
    }
  }
  const double secs = seconds_since(start);
  return {cells == 27 && violations == 0 && secs < 300.0,
          fmt("cells=%.0f violations=%.0f time=%.1fs", static_cast<double>(cells), static_cast<double>(violations),
              secs) +
              fmt(" min(bound-empirical)=%.3g", tightest)};
}

Outcome localization_trend() {
  const auto start = std::chrono::steady_clock::now();
  LocalizationConfig cfg;  // Ts {250,500,1000,2000}, C 0.1, m 20, 50 reps, cosine kernel
  cfg.seed = 2024;
  const auto rows = localization_experiment(cfg);
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail << (i ? " " : "") << "T=" << rows[i].T << ":pk=" << rows[i].mean_pk << ",rel=" << rows[i].relative_error();
    if (i > 0) {
      ok = ok && rows[i].mean_pk < rows[i - 1].mean_pk;
      ok = ok && rows[i].relative_error() < rows[i - 1].relative_error();
    }
  }
  const double secs = seconds_since(start);
  detail << " time=" << secs << "s";
  return {ok && secs < 600.0, detail.str()};
}

Outcome penalty_monotonicity() {
  const auto grid = default_c_grid();
  std::mt19937_64 rng(5);
  std::size_t violations = 0;
  std::size_t curves = 0;
  auto check = [&](const EmbeddingSequence& seq) {
    const CostModel model = CostModel::build(seq, KernelSpec::cosine());
    const auto curve = changepoint_curve(model, grid, SolverOptions{});
    for (std::size_t i = 1; i < curve.points.size(); ++i) violations += curve.points[i].k_hat > curve.points[i - 1].k_hat;
    ++curves;
  };
  for (int i = 0; i < 20; ++i) check(ekcpd::testing::random_sequence(80, 4, rng));
  for (int i = 0; i < 20; ++i) {
    SynthConfig sc;
    sc.T = 300;
    sc.m = 5;
    sc.seed = child_seed(5, static_cast<std::uint64_t>(i));
    check(gen_planted(sc).seq);
  }
  return {curves == 40 && violations == 0,
          fmt("curves=%.0f violations=%.0f", static_cast<double>(curves), static_cast<double>(violations))};
}

Outcome two_block_transition() {
  const auto seq = ekcpd::testing::two_block_fixture();
  const CostModel model = CostModel::build(seq, KernelSpec::cosine());
  SolverOptions opts;
  opts.beta = 3.0 - 1e-6;
  const auto below = solve(model, opts);
  opts.beta = 3.0 + 1e-6;
  const auto above = solve(model, opts);
  bool ok = below.boundaries() == std::vector<std::size_t>{3, 6} && above.boundaries() == std::vector<std::size_t>{6};

  // On the default grid, the last C that splits and the first that does not
  // must bracket the critical value, i.e. lie within one grid step of it.
  const double critical = 3.0 / std::sqrt(6.0 * std::log(6.0));
  const auto curve = changepoint_curve(model, default_c_grid(), SolverOptions{});
  double last_split = NAN;
  double first_whole = NAN;
  for (const auto& p : curve.points) {
    if (p.k_hat == 1) last_split = p.C;
    if (p.k_hat == 0 && std::isnan(first_whole)) first_whole = p.C;
  }
  ok = ok && last_split < critical && critical <= first_whole && !(first_whole < last_split);
  return {ok, fmt("critical_C=%.6f bracket=[%.6f, %.6f]", critical, last_split, first_whole)};
}

Outcome performance() {
  SynthConfig sc;
  sc.T = 10000;
  sc.d = 384;
  sc.m = 20;
  sc.seed = 1;
  const auto inst = gen_planted(sc);
  auto start = std::chrono::steady_clock::now();
  const CostModel linear = CostModel::build(inst.seq, KernelSpec::cosine());
  SolverOptions opts;
  opts.beta = scaled_beta(0.1, sc.T);
  const auto seg = solve_pelt(linear, opts);
  const double linear_secs = seconds_since(start);

  SynthConfig small = sc;
  small.T = 5000;
  small.d = 16;
  const auto rbf_inst = gen_planted(small);
  start = std::chrono::steady_clock::now();
  bool rbf_ok = true;
  std::size_t rbf_k = 0;
  try {
    const CostModel rbf = CostModel::build(rbf_inst.seq, KernelSpec::rbf_median());
    opts.beta = scaled_beta(0.06, small.T);
    rbf_k = solve_pelt(rbf, opts).num_changepoints();
  } catch (const Error&) {
    rbf_ok = false;
  }
  const double rbf_secs = seconds_since(start);
  return {linear_secs < 5.0 && rbf_ok,
          fmt("linear T=10000 d=384: %.2fs (k_hat=%.0f); ", linear_secs, static_cast<double>(seg.num_changepoints())) +
              fmt("rbf T=5000: %.2fs (k_hat=%.0f)", rbf_secs, static_cast<double>(rbf_k))};
}

Outcome round_trips() {
  std::mt19937_64 rng(3);
  std::size_t failures = 0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t T = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    const auto seq = ekcpd::testing::random_sequence(T, d, rng, i % 2 == 0);

    const std::string bytes = io::encode_binary(seq);
    const auto back = io::decode_binary(bytes);
    bool ok = io::encode_binary(back) == bytes && back.size() == T && back.dim() == d;
    for (std::size_t k = 0; ok && k < seq.values().size(); ++k) {
      ok = static_cast<float>(seq.values()[k]) == back.values()[k];
    }

    std::stringstream jsonl;
    io::encode_jsonl(jsonl, seq);
    const auto parsed = io::decode_jsonl(jsonl);
    ok = ok && parsed.size() == T && parsed.dim() == d;
    for (std::size_t k = 0; ok && k < seq.values().size(); ++k) {
      ok = static_cast<float>(parsed.values()[k]) == static_cast<float>(seq.values()[k]);
    }
    failures += !ok;
  }
  return {failures == 0, fmt("sequences=10 failures=%.0f", static_cast<double>(failures))};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments restrict the run to the named criteria.
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle_equivalence", oracle_equivalence},
      {"closed_form_cost_equivalence", closed_form_equivalence},
      {"metric_fixtures", metric_fixtures},
      {"concentration_bound", concentration},
      {"localization_trend", localization_trend},
      {"penalty_monotonicity", penalty_monotonicity},
      {"two_block_transition", two_block_transition},
      {"performance", performance},
      {"format_round_trips", round_trips},
  };
  int failed = 0;
  int ran = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    ++ran;
    Outcome r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
    std::fflush(stdout);
    failed += !r.pass;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
