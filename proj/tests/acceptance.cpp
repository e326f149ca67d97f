// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//
// Environment:
//   GLOVESGNS_CORPUS          corpus file for the directional run (default: synthetic)
//   GLOVESGNS_ACCEPT_TOKENS   synthetic corpus size (default kDirectionalTokens)
//   GLOVESGNS_ACCEPT_DIR      scratch directory (default: <tmp>/glovesgns_acceptance)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "glovesgns/cli.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_corpus.hpp"

using namespace glovesgns;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr int kGradientInstances = 1000;
constexpr double kGradientRelTol = 1e-5;
constexpr double kGradientStep = 1e-5;
constexpr double kGradientBudgetSeconds = 10.0;
constexpr int kOptimumTuples = 1000;
constexpr double kOptimumTol = 1e-9;
constexpr double kGloveResidualMax = 0.05;
constexpr double kSgnsResidualMax = 0.1;
constexpr double kFactorizationBudgetSeconds = 120.0;
constexpr int kCountingStreams = 100;
constexpr std::size_t kCountingMaxLength = 50;
constexpr std::size_t kDirectionalTokens = 3000000;
constexpr double kDirectionalMinR = 0.5;
constexpr double kDirectionalBudgetSeconds = 3600.0;

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch_dir() {
  if (const char* d = std::getenv("GLOVESGNS_ACCEPT_DIR")) return d;
  return fs::temp_directory_path() / "glovesgns_acceptance";
}

CoocTable dense_table(std::size_t v, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CoocCell> cells;
  for (WordId i = 0; i < v; ++i)
    for (WordId j = 0; j < v; ++j) cells.push_back({i, j, rng.uniform(1.0, 200.0)});
  return CoocTable::from_cells(v, std::move(cells));
}

int run_cli(const std::vector<std::string>& args, std::ostream& log) {
  std::ostringstream out;
  return cli::run(args, out, log);
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(20240101);
  double worst_glove = 0.0, worst_sgns = 0.0;
  std::size_t glove_checks = 0;

  for (int n = 0; n < kGradientInstances; ++n) {
    const std::size_t v = 1 + rng.below(4), d = 1 + rng.below(8);
    auto p = glove::Params::random(v, d, rng.next());
    for (double& x : p.word.data()) x = rng.uniform(-1, 1);
    for (double& x : p.context.data()) x = rng.uniform(-1, 1);
    for (double& b : p.word_bias) b = rng.uniform(-1, 1);
    for (double& b : p.context_bias) b = rng.uniform(-1, 1);
    const auto i = static_cast<WordId>(rng.below(v)), j = static_cast<WordId>(rng.below(v));
    const double count = std::exp(rng.uniform(-2.0, 6.0));
    const glove::WeightingConfig w{rng.uniform() < 0.5 ? 10.0 : 100.0, 0.75};
    const auto g = glove::local_gradients(p, i, j, count, w);

    auto check = [&](double analytic, double& slot) {
      const double saved = slot;
      const double numeric = glovesgns::testing::central_difference(
          [&](double x) {
            slot = x;
            return glove::local_cost(p, i, j, count, w);
          },
          saved, kGradientStep);
      slot = saved;
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst_glove = std::max(worst_glove, std::abs(analytic - numeric) / scale);
      ++glove_checks;
    };
    for (std::size_t k = 0; k < d; ++k) {
      check(g.word[k], p.word(i, k));
      check(g.context[k], p.context(j, k));
    }
    check(g.word_bias, p.word_bias[i]);
    check(g.context_bias, p.context_bias[j]);
  }

  for (int n = 0; n < kGradientInstances; ++n) {
    const double n_w = std::exp(rng.uniform(0.0, 10.0)), n_c = std::exp(rng.uniform(0.0, 10.0));
    const double total = std::max(n_w, n_c) * std::exp(rng.uniform(0.0, 6.0));
    const double n_wc = std::min(n_w, n_c) * rng.uniform(0.001, 1.0);
    const int k = 1 + static_cast<int>(rng.below(15));
    const double x = rng.uniform(-8.0, 8.0);
    const double analytic = sgns::local_derivative(x, n_wc, n_w, n_c, total, k);
    const double numeric = glovesgns::testing::central_difference(
        [&](double t) { return sgns::expected_local_objective(t, n_wc, n_w, n_c, total, k); }, x, kGradientStep);
    // The derivative is a difference of two positive terms; measure against their sum.
    const double terms = n_wc * sgns::sigmoid(-x) + k * n_w * n_c / total * sgns::sigmoid(x);
    worst_sgns = std::max(worst_sgns, std::abs(analytic - numeric) / terms);
  }

  const double secs = seconds_since(t0);
  const bool pass = worst_glove <= kGradientRelTol && worst_sgns <= kGradientRelTol && secs < kGradientBudgetSeconds;
  return {pass, std::to_string(glove_checks) + " GloVe partials over " + std::to_string(kGradientInstances) +
                    " instances, worst rel " + fmt("%.2e", worst_glove) + "; " + std::to_string(kGradientInstances) +
                    " SGNS derivatives, worst rel " + fmt("%.2e", worst_sgns) + "; " + fmt("%.2f s", secs)};
}

Outcome closed_form_optimum() {
  Rng rng(99);
  double worst = 0.0;
  for (int n = 0; n < kOptimumTuples; ++n) {
    const double n_w = std::exp(rng.uniform(0.0, 10.0)), n_c = std::exp(rng.uniform(0.0, 10.0));
    const double total = std::max(n_w, n_c) * std::exp(rng.uniform(0.0, 6.0));
    const double n_wc = std::min(n_w, n_c) * rng.uniform(0.001, 1.0);
    const int k = 1 + static_cast<int>(rng.below(15));
    const double root = glovesgns::testing::bisect_decreasing(
        [&](double x) { return sgns::local_derivative(x, n_wc, n_w, n_c, total, k); }, -60.0, 60.0);
    worst = std::max(worst, std::abs(sgns::solve_optimum(n_wc, n_w, n_c, total, k) - root));
  }
  const double worked = sgns::solve_optimum(4, 10, 20, 100, 5);
  const double worked_root = glovesgns::testing::bisect_decreasing(
      [](double x) { return sgns::local_derivative(x, 4, 10, 20, 100, 5); }, -60.0, 60.0);
  const double worked_err = std::max(std::abs(worked - std::log(0.4)), std::abs(worked_root - std::log(0.4)));
  const bool pass = worst <= kOptimumTol && worked_err <= kOptimumTol;
  return {pass, std::to_string(kOptimumTuples) + " tuples, worst |closed - bisect| " + fmt("%.2e", worst) +
                    "; worked case " + fmt("%.15f", worked) + " vs log(0.4)"};
}

Outcome factorization_oracle() {
  const auto t0 = Clock::now();
  const auto table = dense_table(10, 17);

  glove::TrainConfig gcfg;
  gcfg.dim = 10;
  gcfg.iterations = 3000;
  gcfg.eta = 0.1;
  const auto gp = glove::train(table, gcfg, {100.0, 0.75});
  const double glove_res = pmi::residual_report(gp, table).max_abs;

  sgns::Config scfg;
  scfg.dim = 10;
  scfg.k = 5;
  scfg.eta = 0.1;
  scfg.epochs = 4000;
  const auto sp = sgns::train_matrix(table, scfg);
  const double sgns_res = pmi::residual_report(sp, table, scfg.k).max_abs;

  const double secs = seconds_since(t0);
  const bool pass = glove_res < kGloveResidualMax && sgns_res < kSgnsResidualMax && secs < kFactorizationBudgetSeconds;
  return {pass, "10x10 d=10: GloVe max residual " + fmt("%.3e", glove_res) + ", SGNS max shifted-PMI residual " +
                    fmt("%.3e", sgns_res) + "; " + fmt("%.1f s", secs)};
}

Outcome counting_oracle() {
  Rng rng(31337);
  int mismatches = 0;
  for (int n = 0; n < kCountingStreams; ++n) {
    const std::size_t vocab = 1 + rng.below(10);
    std::vector<WordId> ids(rng.below(kCountingMaxLength + 1));
    for (auto& id : ids) id = static_cast<WordId>(rng.below(vocab));
    const std::size_t window = 1 + rng.below(12);
    const bool weighted = n % 4 != 0;
    const unsigned threads = 2 + static_cast<unsigned>(rng.below(6));
    const auto oracle = glovesgns::testing::brute_force_counts(ids, window, weighted);

    auto same = [&](const CoocTable& t) {
      if (t.size() != oracle.size()) return false;
      for (const auto& c : t.cells()) {
        auto it = oracle.find({c.word, c.context});
        if (it == oracle.end() || it->second != c.weight) return false;
      }
      return true;
    };
    if (!same(count(ids, vocab, {window, weighted, threads}))) ++mismatches;
  }
  return {mismatches == 0, std::to_string(kCountingStreams) + " streams (length <= " +
                               std::to_string(kCountingMaxLength) + ", 2-7 shards), " + std::to_string(mismatches) +
                               " mismatches against brute force"};
}

Outcome directional_reproduction() {
  const auto t0 = Clock::now();
  const auto dir = scratch_dir() / "directional";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::string corpus;
  std::string source;
  if (const char* c = std::getenv("GLOVESGNS_CORPUS")) {
    corpus = c;
    source = corpus;
  } else {
    glovesgns::testing::SyntheticCorpusConfig cfg;
    cfg.tokens = kDirectionalTokens;
    if (const char* n = std::getenv("GLOVESGNS_ACCEPT_TOKENS")) cfg.tokens = std::stoul(n);
    corpus = (dir / "corpus.txt").string();
    std::ofstream(corpus, std::ios::binary) << glovesgns::testing::synthetic_corpus(cfg);
    source = "synthetic " + std::to_string(cfg.tokens) + " tokens";
  }
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  std::ofstream log(dir / "experiment.log");
  const int code = run_cli({"experiment", "--min-count", "50", "--dim", "100", "--window", "10", "--iters", "50",
                            "--x-max", "10", "--x-max", "100", "--alpha", "0.75", "--seed", "1", "--threads",
                            std::to_string(threads), "--out-dir", (dir / "out").string(), corpus},
                           log);
  if (code != 0) return {false, "experiment exited with " + std::to_string(code) + "; see " + (dir / "experiment.log").string()};

  std::map<std::string, std::pair<double, double>> r;  // tag -> (iteration 1, final)
  for (const std::string tag : {"10", "100"}) {
    const auto trace = analysis::load_trace((dir / "out" / ("trace_xmax" + tag + ".csv")).string());
    if (trace.size() != 50 || trace.records().front().iteration != 1) return {false, "trace for x_max " + tag + " is incomplete"};
    r[tag] = {trace.records().front().r_word, trace.back().r_word};
  }
  const bool a = r["10"].second > r["10"].first && r["100"].second > r["100"].first;
  const bool b = r["10"].second >= kDirectionalMinR && r["100"].second >= kDirectionalMinR;
  const bool c = r["10"].second >= r["100"].second;
  const double secs = seconds_since(t0);
  const bool in_budget = secs < kDirectionalBudgetSeconds;

  std::string detail = source + ", " + std::to_string(threads) + " threads; r_word x_max=10: " +
                       fmt("%.4f", r["10"].first) + " -> " + fmt("%.4f", r["10"].second) + ", x_max=100: " +
                       fmt("%.4f", r["100"].first) + " -> " + fmt("%.4f", r["100"].second) + "; (a) " +
                       (a ? "ok" : "FAILED") + " (b) " + (b ? "ok" : "FAILED") + " (c) " + (c ? "ok" : "FAILED") +
                       "; " + fmt("%.0f s", secs);
  return {a && b && c && in_budget, detail};
}

std::map<std::string, std::uint64_t> hash_tree(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = fnv1a_file(e.path().string());
  }
  return out;
}

Outcome determinism() {
  const auto dir = scratch_dir() / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  glovesgns::testing::SyntheticCorpusConfig cfg;
  cfg.tokens = 200000;
  const auto corpus = (dir / "corpus.txt").string();
  std::ofstream(corpus, std::ios::binary) << glovesgns::testing::synthetic_corpus(cfg);

  const auto out = dir / "out";
  const auto o = [&](const std::string& name) { return (out / name).string(); };
  const std::vector<std::vector<std::string>> pipeline{
      {"vocab", "--min-count", "10", "--threads", "1", "--out", o("vocab.txt"), corpus},
      {"count", "--vocab", o("vocab.txt"), "--window", "10", "--threads", "1", "--out", o("cooc.bin"), corpus},
      {"train-glove", "--cooc", o("cooc.bin"), "--vocab", o("vocab.txt"), "--dim", "20", "--iters", "5", "--x-max",
       "10", "--seed", "7", "--threads", "1", "--out-dir", o("glove")},
      {"train-sgns", "--mode", "stream", "--input", corpus, "--vocab", o("vocab.txt"), "--dim", "20", "--iters", "1",
       "--seed", "7", "--threads", "1", "--out-dir", o("sgns_stream")},
      {"train-sgns", "--mode", "matrix", "--cooc", o("cooc.bin"), "--vocab", o("vocab.txt"), "--dim", "20", "--iters",
       "3", "--seed", "7", "--threads", "1", "--out-dir", o("sgns_matrix")},
      {"pmi", "--cooc", o("cooc.bin"), "--vocab", o("vocab.txt"), "--out", o("pmi.csv")},
      {"analyze", "--cooc", o("cooc.bin"), "--vocab", o("vocab.txt"), "--word-biases", o("glove/biases.txt"),
       "--context-biases", o("glove/context_biases.txt"), "--pair-sample", "1000", "--seed", "7", "--out-dir",
       o("analyze")},
      {"experiment", "--min-count", "10", "--dim", "20", "--iters", "5", "--x-max", "10", "--x-max", "100",
       "--pair-sample", "1000", "--seed", "7", "--threads", "1", "--save-vectors", "--out-dir", o("experiment"),
       corpus},
  };

  std::vector<std::map<std::string, std::uint64_t>> hashes;
  for (int attempt = 0; attempt < 2; ++attempt) {
    fs::remove_all(out);
    fs::create_directories(out);
    std::ostringstream log;
    for (const auto& args : pipeline) {
      if (const int code = run_cli(args, log); code != 0) {
        return {false, args[0] + " exited with " + std::to_string(code) + ": " + log.str()};
      }
    }
    hashes.push_back(hash_tree(out));
  }
  return {hashes[0] == hashes[1] && !hashes[0].empty(),
          std::to_string(hashes[0].size()) + " output files from 8 pipeline steps, " +
              (hashes[0] == hashes[1] ? "all hashes equal" : "hashes differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient-suite", gradient_suite},
      {"closed-form-optimum", closed_form_optimum},
      {"factorization-oracle", factorization_oracle},
      {"counting-oracle", counting_oracle},
      {"determinism", determinism},
      {"directional-reproduction", directional_reproduction},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
