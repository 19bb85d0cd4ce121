// ekcpd command-line tool: segment, eval, elbow, simulate, fetch.
//
// Exit codes: 0 ok, 1 internal, 2 input format, 3 invalid options,
// 4 degenerate elbow curves, 5 auth failure, 6 network/protocol failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ekcpd/ekcpd.hpp"
#include "ekcpd/embeddings_client.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kFormat = 2,
  kOptions = 3,
  kDegenerate = 4,
  kAuth = 5,
  kNetwork = 6,
};

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(ekcpd::ErrorCode code) {
  using ekcpd::ErrorCode;
  switch (code) {
    case ErrorCode::Format:
    case ErrorCode::ZeroVector:
    case ErrorCode::DegenerateSequence:
      return kFormat;
    case ErrorCode::DegenerateCurve:
      return kDegenerate;
    case ErrorCode::Internal:
      return kInternal;
    default:
      return kOptions;
  }
}

struct KernelFlags {
  std::string kernel = "cosine";
  std::string gamma = "median";
  bool normalize = false;

  void add(CLI::App* app) {
    app->add_option("--kernel", kernel, "cosine | linear | rbf")
        ->check(CLI::IsMember({"cosine", "linear", "rbf"}));
    app->add_option("--gamma", gamma, "RBF bandwidth: a positive number or 'median'");
    app->add_flag("--normalize", normalize, "unit-normalize rows before the RBF kernel");
  }

  ekcpd::KernelSpec spec() const {
    if (kernel == "cosine") return ekcpd::KernelSpec::cosine();
    if (kernel == "linear") return ekcpd::KernelSpec::linear();
    if (gamma == "median") return ekcpd::KernelSpec::rbf_median(normalize);
    double g = 0.0;
    try {
      std::size_t used = 0;
      g = std::stod(gamma, &used);
      if (used != gamma.size()) throw std::invalid_argument(gamma);
    } catch (const std::exception&) {
      throw Failure{kOptions, "--gamma must be a number or 'median', got '" + gamma + "'"};
    }
    auto spec = ekcpd::KernelSpec::rbf(g, normalize);
    spec.validate();
    return spec;
  }

  // Defaults selected by the elbow procedure on the benchmark corpora.
  double default_C() const { return kernel == "rbf" ? 0.06 : 0.088; }
};

ekcpd::Algorithm parse_algo(const std::string& name) {
  if (name == "dp") return ekcpd::Algorithm::ExactDp;
  if (name == "brute") return ekcpd::Algorithm::BruteForce;
  return ekcpd::Algorithm::Pelt;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw Failure{kOptions, std::string(flag) + ": cannot parse '" + item + "'"};
    out.push_back(v);
  }
  if (out.empty()) throw Failure{kOptions, std::string(flag) + " must not be empty"};
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kOptions, "cannot write " + path.string()};
  out << text;
}

// ---------------------------------------------------------------------------

struct SegmentArgs {
  std::string input;
  std::string output;
  KernelFlags kernel;
  std::optional<double> beta;
  std::optional<double> C;
  std::size_t min_size = 1;
  std::string algo = "pelt";
  std::optional<std::size_t> max_changepoints;
  bool allow_large_gram = false;
};

int run_segment(const SegmentArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const ekcpd::EmbeddingSequence seq = ekcpd::io::read_embeddings(a.input);
  const ekcpd::KernelSpec kernel = a.kernel.spec();
  ekcpd::BuildOptions build;
  build.allow_large_gram = a.allow_large_gram;
  const ekcpd::CostModel model = ekcpd::CostModel::build(seq, kernel, build);

  const ekcpd::PenaltySpec penalty = a.beta ? ekcpd::PenaltySpec{ekcpd::ExplicitBeta{*a.beta}}
                                            : ekcpd::PenaltySpec{ekcpd::ScaledPenalty{a.C.value_or(a.kernel.default_C())}};
  ekcpd::SolverOptions opts;
  opts.beta = ekcpd::beta_from_spec(penalty, seq.size());
  opts.min_size = a.min_size;
  opts.max_changepoints = a.max_changepoints;
  opts.algorithm = parse_algo(a.algo);
  const ekcpd::Segmentation seg = ekcpd::solve(model, opts);
  const double total = ekcpd::total_penalized_cost(model, seg, opts.beta);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json meta{{"kernel", a.kernel.kernel}, {"beta", opts.beta}, {"min_size", a.min_size}, {"algo", a.algo}};
  if (!a.beta) meta["C"] = a.C.value_or(a.kernel.default_C());
  if (kernel.kind == ekcpd::KernelKind::Rbf) meta["gamma"] = model.gamma();
  if (!a.output.empty()) ekcpd::io::write_segmentation(a.output, seg, meta);

  json summary{{"T", seq.size()},
               {"k_hat", seg.num_changepoints()},
               {"total_cost", total},
               {"beta", opts.beta},
               {"wall_time_s", elapsed}};
  if (a.output.empty()) summary["boundaries"] = seg.boundaries();
  std::cout << summary.dump() << std::endl;
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string ref;
  std::string hyp;
  std::optional<std::size_t> window;
  std::string output;
};

int run_eval(const EvalArgs& a) {
  const ekcpd::Segmentation ref = ekcpd::io::read_segmentation(a.ref);
  const ekcpd::Segmentation hyp = ekcpd::io::read_segmentation(a.hyp);
  if (ref.length() != hyp.length()) {
    throw Failure{kFormat, "length mismatch: reference T=" + std::to_string(ref.length()) +
                               ", hypothesis T=" + std::to_string(hyp.length())};
  }
  const ekcpd::SegEvalReport r = ekcpd::evaluate(ref, hyp, a.window);
  json out{{"pk", r.pk},
           {"window_diff", r.window_diff},
           {"window", r.window},
           {"boundary_error", r.boundary_error ? json(*r.boundary_error) : json(nullptr)},
           {"k_true", r.k_true},
           {"k_hat", r.k_hat},
           {"pk_pct", 100.0 * r.pk},
           {"wd_pct", 100.0 * r.window_diff}};
  if (!a.output.empty()) write_text(a.output, out.dump() + "\n");
  std::cout << out.dump() << std::endl;
  return kOk;
}

// ---------------------------------------------------------------------------

struct ElbowArgs {
  std::vector<std::string> inputs;
  double grid_min = 1e-2;
  double grid_max = 1.0;
  std::size_t grid_points = 25;
  KernelFlags kernel;
  std::size_t min_size = 1;
  std::string algo = "pelt";
  std::string csv;
};

int run_elbow(const ElbowArgs& a) {
  const std::vector<double> grid = ekcpd::log_grid(a.grid_min, a.grid_max, a.grid_points);
  ekcpd::SolverOptions opts;
  opts.min_size = a.min_size;
  opts.algorithm = parse_algo(a.algo);
  const ekcpd::KernelSpec kernel = a.kernel.spec();

  std::vector<ekcpd::ElbowCurve> curves;
  json per_doc = json::array();
  for (const auto& path : a.inputs) {
    const auto seq = ekcpd::io::read_embeddings(path);
    const auto model = ekcpd::CostModel::build(seq, kernel);
    curves.push_back(ekcpd::changepoint_curve(model, grid, opts));
    const auto idx = ekcpd::elbow_index(curves.back());
    per_doc.push_back(idx ? json(curves.back().points[*idx].C) : json(nullptr));
  }
  if (!a.csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "document,C,k_hat\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
      for (const auto& p : curves[i].points) os << a.inputs[i] << ',' << p.C << ',' << p.k_hat << '\n';
    }
    write_text(a.csv, os.str());
  }
  const double c_star = ekcpd::elbow_C(curves);
  std::cout << json{{"per_document_elbows", per_doc}, {"C_star", c_star}}.dump() << std::endl;
  return kOk;
}

// ---------------------------------------------------------------------------

struct PlantedArgs {
  ekcpd::SynthConfig config;
  std::optional<std::size_t> K;
  bool no_normalize = false;
  std::string out;
  std::string truth;
};

int run_planted(PlantedArgs a) {
  a.config.K = a.K;
  a.config.normalize = !a.no_normalize;
  const auto inst = ekcpd::gen_planted(a.config);
  const json meta{{"seed", a.config.seed},     {"m", a.config.m},         {"d", a.config.d},
                  {"delta", a.config.delta},   {"topics", a.config.topics}, {"noise_scale", a.config.noise_scale},
                  {"normalize", a.config.normalize}, {"topic_of_segment", inst.topic_of_segment}};
  if (!a.out.empty()) {
    ekcpd::io::write_embeddings(a.out, inst.seq);
  } else {
    ekcpd::io::encode_jsonl(std::cout, inst.seq);
  }
  if (!a.truth.empty()) ekcpd::io::write_segmentation(a.truth, inst.truth, meta);
  return kOk;
}

struct DeviationArgs {
  std::string n = "50,200,800";
  std::string m = "0,5,20";
  std::string x_mult = "0.5,1,2";
  std::size_t reps = 10000;
  KernelFlags kernel;
  ekcpd::DeviationSetup setup;
  std::uint64_t seed = 0;
  std::string out;
};

int run_deviation(const DeviationArgs& a) {
  const auto ns = parse_list<std::size_t>(a.n, "--n");
  const auto ms = parse_list<std::size_t>(a.m, "--m");
  const auto mults = parse_list<double>(a.x_mult, "--x-mult");
  const auto kernel = a.kernel.spec();
  std::vector<ekcpd::DeviationReport> rows;
  std::size_t cell = 0;
  for (std::size_t n : ns) {
    for (std::size_t m : ms) {
      std::vector<double> xs;
      for (double k : mults) xs.push_back(k * std::sqrt(static_cast<double>(n)));
      auto part = ekcpd::mc_deviation_sweep(n, m, kernel, xs, a.reps, ekcpd::child_seed(a.seed, cell++), a.setup);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  std::ostringstream os;
  ekcpd::write_deviation_csv(os, rows);
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_text(a.out, os.str());
    std::size_t violations = 0;
    for (const auto& r : rows) violations += r.empirical_prob > r.bound;
    std::cout << json{{"cells", rows.size()}, {"violations", violations}}.dump() << std::endl;
  }
  return kOk;
}

struct LocalizationArgs {
  std::string Ts = "250,500,1000,2000";
  ekcpd::LocalizationConfig config;
  KernelFlags kernel;
  std::string out;
};

int run_localization(LocalizationArgs a) {
  a.config.Ts = parse_list<std::size_t>(a.Ts, "--Ts");
  a.config.kernel = a.kernel.spec();
  const auto rows = ekcpd::localization_experiment(a.config);
  std::ostringstream os;
  ekcpd::write_localization_csv(os, rows);
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_text(a.out, os.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct FetchArgs {
  std::string input;
  std::string output;
  std::string endpoint;
  std::string model;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  long backoff_ms = 1000;
};

int run_fetch(const FetchArgs& a) {
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw Failure{kFormat, "cannot open " + a.input};
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  const char* key = std::getenv("EKCPD_API_KEY");
  if (key == nullptr || *key == '\0') throw Failure{kAuth, "EKCPD_API_KEY is not set"};
  if (a.batch_size == 0) throw Failure{kOptions, "--batch-size must be positive"};

  std::error_code ec;
  fs::remove(a.output, ec);
  if (lines.empty()) {
    write_text(a.output, "");
    return kOk;
  }

  ekcpd::EmbeddingsClientConfig cfg;
  cfg.endpoint = a.endpoint;
  cfg.model = a.model;
  cfg.api_key = key;
  cfg.batch_size = a.batch_size;
  cfg.max_in_flight = a.max_in_flight;
  cfg.backoff_base = std::chrono::milliseconds(a.backoff_ms);
  const ekcpd::EmbeddingsClient client(cfg);
  std::vector<std::vector<double>> rows;
  try {
    rows = client.embed(lines);
  } catch (const ekcpd::FetchError& e) {
    fs::remove(a.output, ec);
    throw Failure{e.kind() == ekcpd::FetchError::Kind::Auth ? kAuth : kNetwork, e.what()};
  }

  const fs::path partial = a.output + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{kOptions, "cannot write " + partial.string()};
    const int width = 5;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::string id = std::to_string(i);
      if (id.size() < width) id.insert(0, width - id.size(), '0');
      out << json{{"id", id}, {"embedding", rows[i]}, {"text", lines[i]}}.dump() << '\n';
    }
    if (!out) {
      fs::remove(partial, ec);
      throw Failure{kOptions, "write failed for " + partial.string()};
    }
  }
  fs::rename(partial, a.output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel change-point detection for embedding sequences"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "segment an embedding file");
  segment->add_option("input", seg.input, "JSONL or EKCP binary embeddings")->required();
  segment->add_option("-o,--output", seg.output, "segmentation JSON to write");
  seg.kernel.add(segment);
  auto* beta_opt = segment->add_option("--beta", seg.beta, "explicit penalty per change point");
  auto* c_opt = segment->add_option("--C", seg.C, "penalty scale: beta = C sqrt(T ln T)");
  beta_opt->excludes(c_opt);
  segment->add_option("--min-size", seg.min_size, "minimum segment length")->check(CLI::PositiveNumber);
  segment->add_option("--algo", seg.algo, "pelt | dp | brute")->check(CLI::IsMember({"pelt", "dp", "brute"}));
  segment->add_option("--max-changepoints", seg.max_changepoints, "fail if more change points are needed");
  segment->add_flag("--allow-large-gram", seg.allow_large_gram, "lift the RBF memory guard");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "score a hypothesis segmentation against a reference");
  eval->add_option("--ref", ev.ref)->required();
  eval->add_option("--hyp", ev.hyp)->required();
  eval->add_option("--window", ev.window, "probe distance (default: half the mean reference segment length)");
  eval->add_option("-o,--output", ev.output);

  ElbowArgs el;
  auto* elbow = app.add_subcommand("elbow", "choose C from change-point curves");
  elbow->add_option("inputs", el.inputs, "embedding files")->required();
  elbow->add_option("--grid-min", el.grid_min);
  elbow->add_option("--grid-max", el.grid_max);
  elbow->add_option("--grid-points", el.grid_points);
  el.kernel.add(elbow);
  elbow->add_option("--min-size", el.min_size)->check(CLI::PositiveNumber);
  elbow->add_option("--algo", el.algo)->check(CLI::IsMember({"pelt", "dp"}));
  elbow->add_option("--csv", el.csv, "write every (document, C, k_hat) point");

  auto* simulate = app.add_subcommand("simulate", "synthetic m-dependent experiments");
  simulate->require_subcommand(1);

  PlantedArgs pl;
  auto* planted = simulate->add_subcommand("planted", "generate one planted instance");
  planted->add_option("--T", pl.config.T);
  planted->add_option("--K", pl.K, "change points (default ceil(2 ln T))");
  planted->add_option("--d", pl.config.d);
  planted->add_option("--m", pl.config.m);
  planted->add_option("--delta", pl.config.delta);
  planted->add_option("--topics", pl.config.topics);
  planted->add_option("--noise", pl.config.noise_scale);
  planted->add_flag("--no-normalize", pl.no_normalize);
  planted->add_option("--seed", pl.config.seed);
  planted->add_option("--out", pl.out, "embeddings file (.bin for binary, JSONL otherwise; default stdout)");
  planted->add_option("--truth", pl.truth, "true segmentation JSON");

  DeviationArgs dv;
  auto* deviation = simulate->add_subcommand("deviation", "Monte-Carlo check of the block-cost tail bound");
  deviation->add_option("--n", dv.n, "comma-separated block lengths");
  deviation->add_option("--m", dv.m, "comma-separated dependence orders");
  deviation->add_option("--x-mult", dv.x_mult, "thresholds as multiples of sqrt(n)");
  deviation->add_option("--reps", dv.reps);
  dv.kernel.add(deviation);
  deviation->add_option("--d", dv.setup.d);
  deviation->add_option("--noise", dv.setup.noise_scale);
  deviation->add_option("--delta", dv.setup.delta);
  deviation->add_option("--seed", dv.seed);
  deviation->add_option("--out", dv.out, "CSV path (default stdout)");

  LocalizationArgs lo;
  auto* localization = simulate->add_subcommand("localization", "accuracy versus sequence length");
  localization->add_option("--Ts", lo.Ts, "comma-separated lengths");
  localization->add_option("--C", lo.config.C);
  localization->add_option("--m", lo.config.m);
  localization->add_option("--reps", lo.config.reps);
  localization->add_option("--d", lo.config.d);
  localization->add_option("--noise", lo.config.noise_scale);
  localization->add_option("--delta", lo.config.delta);
  localization->add_option("--topics", lo.config.topics);
  localization->add_option("--min-size", lo.config.min_size)->check(CLI::PositiveNumber);
  lo.kernel.add(localization);
  localization->add_option("--seed", lo.config.seed);
  localization->add_option("--out", lo.out, "CSV path (default stdout)");

  FetchArgs fa;
  auto* fetch = app.add_subcommand("fetch", "embed one text unit per line through a /v1/embeddings endpoint");
  fetch->add_option("--input", fa.input)->required();
  fetch->add_option("--output", fa.output)->required();
  fetch->add_option("--endpoint", fa.endpoint)->required();
  fetch->add_option("--model", fa.model)->required();
  fetch->add_option("--batch-size", fa.batch_size);
  fetch->add_option("--max-in-flight", fa.max_in_flight)->check(CLI::Range(1, 4));
  fetch->add_option("--backoff-ms", fa.backoff_ms)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOptions;
  }

  try {
    if (*segment) return run_segment(seg);
    if (*eval) return run_eval(ev);
    if (*elbow) return run_elbow(el);
    if (*planted) return run_planted(pl);
    if (*deviation) return run_deviation(dv);
    if (*localization) return run_localization(lo);
    if (*fetch) return run_fetch(fa);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const ekcpd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kOptions;
}
