#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glovesgns/analysis.hpp"
#include "glovesgns/cooccur.hpp"
#include "glovesgns/corpus.hpp"
#include "glovesgns/error.hpp"
#include "glovesgns/glove.hpp"
#include "glovesgns/manifest.hpp"
#include "glovesgns/pmi.hpp"
#include "glovesgns/sgns.hpp"
#include "glovesgns/text_io.hpp"

namespace glovesgns::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

namespace detail {

namespace fs = std::filesystem;

// Flag combination that parses but cannot be honoured.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::vector<std::string> inputs;
  std::string out;
  std::string out_dir;
  std::string vocab;
  std::string cooc;
  std::string word_biases;
  std::string context_biases;
  std::string mode = "stream";
  std::uint64_t min_count = 100;
  std::size_t window = 10;
  bool no_distance_weighting = false;
  std::vector<double> x_max{100.0};
  double alpha = 0.75;
  std::size_t dim = 300;
  int iters = 50;
  double eta = 0.05;
  int k = 5;
  double smoothing = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t pair_sample = analysis::kDefaultPairSample;
  int iter_label = 1;
  bool no_clip = false;
  bool save_vectors = false;
};

// Resolved flag values of a subcommand, for the manifest.
inline std::map<std::string, std::string> resolved_flags(const CLI::App& sub) {
  std::map<std::string, std::string> flags;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      std::string joined;
      for (const auto& r : opt->results()) joined += (joined.empty() ? "" : " ") + r;
      flags[name] = joined.empty() ? "true" : joined;
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

inline RunManifest make_manifest(const CLI::App& sub, std::uint64_t seed, std::vector<std::string> inputs) {
  RunManifest m;
  m.command = sub.get_name();
  m.flags = resolved_flags(sub);
  m.seed = seed;
  m.inputs = std::move(inputs);
  return m;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

inline std::string xmax_tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

inline CountConfig count_config(const Options& o) {
  return CountConfig{o.window, !o.no_distance_weighting, o.threads};
}

inline glove::TrainConfig glove_config(const Options& o) {
  glove::TrainConfig t;
  t.dim = o.dim;
  t.iterations = o.iters;
  t.eta = o.eta;
  t.seed = o.seed;
  t.threads = o.threads;
  t.clip_bound = o.no_clip ? 0.0 : 100.0;
  return t;
}

// Trains GloVe, recording a bias correlation after each epoch. Scatter data
// is written after the first and after the last epoch.
inline analysis::BiasTrace train_with_trace(const CoocTable& table, const Vocabulary& vocab, const Options& o,
                                            double x_max, const std::string& dir, const std::string& suffix,
                                            std::ostream& log) {
  analysis::BiasTrace trace;
  glove::WeightingConfig w{x_max, o.alpha};
  const auto tcfg = glove_config(o);
  auto params = glove::train(table, tcfg, w, [&](int epoch, const glove::Params& p, double cost) {
    trace.append(analysis::correlate_biases(p, table, o.pair_sample, o.seed, epoch));
    const auto& r = trace.back();
    log << "x_max=" << xmax_tag(x_max) << " iter " << epoch << " cost " << cost << " r_word " << r.r_word
        << " r_context " << r.r_context << " r_sum " << r.r_sum << '\n';
    if (epoch == 1) analysis::export_scatter(p, vocab, table, join(dir, "scatter" + suffix + "_iter1.csv"));
  });
  analysis::export_trace(trace, join(dir, "trace" + suffix + ".csv"));
  analysis::export_scatter(params, vocab, table, join(dir, "scatter" + suffix + "_final.csv"));
  glove::save_biases(params, vocab, join(dir, "biases" + suffix + ".txt"), glove::BiasKind::word);
  glove::save_biases(params, vocab, join(dir, "context_biases" + suffix + ".txt"), glove::BiasKind::context);
  if (o.save_vectors) {
    glove::save_embeddings(params, vocab, join(dir, "vectors" + suffix + ".txt"));
    save_vectors(params.context, vocab, join(dir, "context_vectors" + suffix + ".txt"));
  }
  return trace;
}

inline void cmd_vocab(const CLI::App& sub, const Options& o, std::ostream& log) {
  const std::string text = read_corpus(o.inputs);
  const Vocabulary vocab = build_vocab(text, o.min_count, o.threads);
  save_vocab(vocab, o.out);
  make_manifest(sub, o.seed, o.inputs).save(o.out + ".manifest.json");
  log << "vocabulary: " << vocab.size() << " words\n";
}

inline void cmd_count(const CLI::App& sub, const Options& o, std::ostream& log) {
  const Vocabulary vocab = load_vocab(o.vocab);
  const TokenStream stream = encode(read_corpus(o.inputs), vocab, o.threads);
  const CoocTable table = count(stream, vocab.size(), count_config(o));
  save(table, o.out);
  auto inputs = o.inputs;
  inputs.push_back(o.vocab);
  make_manifest(sub, o.seed, inputs).save(o.out + ".manifest.json");
  log << "tokens: " << stream.size() << ", cells: " << table.size() << ", total: " << table.total() << '\n';
}

inline void cmd_train_glove(const CLI::App& sub, const Options& o, std::ostream& log) {
  const Vocabulary vocab = load_vocab(o.vocab);
  const CoocTable table = load(o.cooc, vocab.size());
  ensure_dir(o.out_dir);
  Options single = o;
  single.save_vectors = true;
  train_with_trace(table, vocab, single, o.x_max.front(), o.out_dir, "", log);
  make_manifest(sub, o.seed, {o.vocab, o.cooc}).save(join(o.out_dir, "manifest.json"));
}

inline void cmd_train_sgns(const CLI::App& sub, const Options& o, std::ostream& log) {
  if (o.mode == "matrix" && o.cooc.empty()) throw UsageError("--mode matrix needs --cooc");
  if (o.mode == "stream" && o.inputs.empty()) throw UsageError("--mode stream needs --input");
  const Vocabulary vocab = load_vocab(o.vocab);
  sgns::Config cfg;
  cfg.k = o.k;
  cfg.dim = o.dim;
  cfg.eta = o.eta;
  cfg.epochs = o.iters;
  cfg.seed = o.seed;
  cfg.smoothing = o.smoothing;
  cfg.threads = o.threads;
  ensure_dir(o.out_dir);
  sgns::Params params;
  std::vector<std::string> inputs{o.vocab};
  if (o.mode == "matrix") {
    const CoocTable table = load(o.cooc, vocab.size());
    params = sgns::train_matrix(table, cfg);
    const auto res = pmi::residual_report(params, table, cfg.k);
    log << "shifted-PMI residual: max " << res.max_abs << ", mean " << res.mean_abs << '\n';
    inputs.push_back(o.cooc);
  } else {
    const TokenStream stream = encode(read_corpus(o.inputs), vocab, 1);
    sgns::StreamReport report;
    params = sgns::train_stream(stream, vocab, o.window, cfg, &report);
    log << "positive updates: " << report.positive_updates << ", negative updates: " << report.negative_updates
        << '\n';
    inputs.insert(inputs.end(), o.inputs.begin(), o.inputs.end());
  }
  save_vectors(params.word, vocab, join(o.out_dir, "vectors.txt"));
  save_vectors(params.context, vocab, join(o.out_dir, "context_vectors.txt"));
  make_manifest(sub, o.seed, inputs).save(join(o.out_dir, "manifest.json"));
}

inline void cmd_pmi(const CLI::App& sub, const Options& o, std::ostream& log) {
  const CoocTable table = o.vocab.empty() ? load(o.cooc) : load(o.cooc, load_vocab(o.vocab).size());
  const auto m = pmi::shifted_pmi_matrix(table, o.k);
  pmi::export_csv(m, o.out);
  std::vector<std::string> inputs{o.cooc};
  if (!o.vocab.empty()) inputs.push_back(o.vocab);
  make_manifest(sub, o.seed, inputs).save(o.out + ".manifest.json");
  log << "cells: " << m.cells.size() << '\n';
}

inline std::vector<double> biases_for(const Vocabulary& vocab, const std::string& path) {
  const auto loaded = load_scalars(path);
  if (loaded.tokens.size() != vocab.size()) {
    throw FormatError("bias file " + path + " has " + std::to_string(loaded.tokens.size()) +
                          " rows, vocabulary has " + std::to_string(vocab.size()),
                      loaded.tokens.size());
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (loaded.tokens[i] != vocab.token(static_cast<WordId>(i))) {
      throw FormatError("bias file " + path + " token order differs from vocabulary at line " +
                            std::to_string(i + 1),
                        i + 1);
    }
  }
  return loaded.values;
}

inline void cmd_analyze(const CLI::App& sub, const Options& o, std::ostream& log) {
  const Vocabulary vocab = load_vocab(o.vocab);
  const CoocTable table = load(o.cooc, vocab.size());
  glove::Params params(vocab.size(), 1);
  params.word_bias = biases_for(vocab, o.word_biases);
  params.context_bias = biases_for(vocab, o.context_biases);
  ensure_dir(o.out_dir);
  analysis::BiasTrace trace;
  trace.append(analysis::correlate_biases(params, table, o.pair_sample, o.seed, o.iter_label));
  analysis::export_trace(trace, join(o.out_dir, "trace.csv"));
  analysis::export_scatter(params, vocab, table, join(o.out_dir, "scatter.csv"));
  make_manifest(sub, o.seed, {o.vocab, o.cooc, o.word_biases, o.context_biases})
      .save(join(o.out_dir, "manifest.json"));
  const auto& r = trace.back();
  log << "r_word " << r.r_word << " r_context " << r.r_context << " r_sum " << r.r_sum << '\n';
}

inline void cmd_experiment(const CLI::App& sub, const Options& o, std::ostream& log) {
  ensure_dir(o.out_dir);
  const std::string text = read_corpus(o.inputs);
  const Vocabulary vocab = build_vocab(text, o.min_count, o.threads);
  if (vocab.empty()) throw PreconditionError("no word reaches --min-count " + std::to_string(o.min_count));
  save_vocab(vocab, join(o.out_dir, "vocab.txt"));
  const TokenStream stream = encode(text, vocab, o.threads);
  const CoocTable table = count(stream, vocab.size(), count_config(o));
  save(table, join(o.out_dir, "cooc.bin"));
  log << "vocabulary " << vocab.size() << ", tokens " << stream.size() << ", cells " << table.size() << '\n';
  for (double x_max : o.x_max) {
    const auto trace = train_with_trace(table, vocab, o, x_max, o.out_dir, "_xmax" + xmax_tag(x_max), log);
    log << "x_max=" << xmax_tag(x_max) << ": r_word " << trace.records().front().r_word << " -> "
        << trace.back().r_word << '\n';
  }
  make_manifest(sub, o.seed, o.inputs).save(join(o.out_dir, "manifest.json"));
}

inline void add_common_training(CLI::App* sub, Options& o) {
  sub->add_option("--dim", o.dim, "Vector dimension")->check(CLI::PositiveNumber);
  sub->add_option("--iters", o.iters, "Training epochs")->check(CLI::PositiveNumber);
  sub->add_option("--eta", o.eta, "Initial learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--threads", o.threads, "Worker threads (>1 is nondeterministic)")->check(CLI::PositiveNumber);
}

inline void add_glove_flags(CLI::App* sub, Options& o) {
  sub->add_option("--x-max", o.x_max, "Weighting cutoff x_max (repeatable)")->check(CLI::PositiveNumber);
  sub->add_option("--alpha", o.alpha, "Weighting exponent")->check(CLI::Range(1e-12, 1.0));
  sub->add_option("--pair-sample", o.pair_sample, "Cells sampled for r_sum")->check(CLI::PositiveNumber);
  sub->add_flag("--no-clip", o.no_clip, "Disable gradient clipping");
}

}  // namespace detail

// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  Options o;
  CLI::App app{"GloVe / SGNS co-occurrence toolkit and GloVe bias analysis", "glovesgns"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* vocab = app.add_subcommand("vocab", "Build a min-count vocabulary from corpus files");
  vocab->add_option("--input,input", o.inputs, "Corpus files")->required();
  vocab->add_option("--min-count", o.min_count, "Minimum token count")->check(CLI::PositiveNumber);
  vocab->add_option("--threads", o.threads, "Scan threads")->check(CLI::PositiveNumber);
  vocab->add_option("--out", o.out, "Vocabulary file")->required();

  auto* cnt = app.add_subcommand("count", "Count symmetric windowed co-occurrences");
  cnt->add_option("--input,input", o.inputs, "Corpus files")->required();
  cnt->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  cnt->add_option("--window", o.window, "Window size")->check(CLI::PositiveNumber);
  cnt->add_flag("--no-distance-weighting", o.no_distance_weighting, "Count 1 per pair instead of 1/d");
  cnt->add_option("--threads", o.threads, "Counting threads")->check(CLI::PositiveNumber);
  cnt->add_option("--out", o.out, "Binary triple file")->required();

  auto* tg = app.add_subcommand("train-glove", "Train GloVe with AdaGrad");
  tg->add_option("--cooc", o.cooc, "Binary triple file")->required();
  tg->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  add_common_training(tg, o);
  add_glove_flags(tg, o);
  tg->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* ts = app.add_subcommand("train-sgns", "Train SGNS from a stream or a co-occurrence table");
  ts->add_option("--mode", o.mode, "stream | matrix")->check(CLI::IsMember({"stream", "matrix"}));
  ts->add_option("--input", o.inputs, "Corpus files (stream mode)");
  ts->add_option("--cooc", o.cooc, "Binary triple file (matrix mode)");
  ts->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  ts->add_option("--window", o.window, "Window size (stream mode)")->check(CLI::PositiveNumber);
  ts->add_option("--k", o.k, "Negative samples")->check(CLI::PositiveNumber);
  ts->add_option("--smoothing", o.smoothing, "Noise distribution exponent")->check(CLI::Range(1e-12, 1.0));
  add_common_training(ts, o);
  ts->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* pm = app.add_subcommand("pmi", "Export the shifted-PMI matrix over observed cells");
  pm->add_option("--cooc", o.cooc, "Binary triple file")->required();
  pm->add_option("--vocab", o.vocab, "Vocabulary file (fixes |V|)");
  pm->add_option("--k", o.k, "Shift log k")->check(CLI::PositiveNumber);
  pm->add_option("--out", o.out, "CSV output")->required();

  auto* an = app.add_subcommand("analyze", "Correlate trained biases with log marginals");
  an->add_option("--cooc", o.cooc, "Binary triple file")->required();
  an->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  an->add_option("--word-biases", o.word_biases, "Word bias file")->required();
  an->add_option("--context-biases", o.context_biases, "Context bias file")->required();
  an->add_option("--pair-sample", o.pair_sample, "Cells sampled for r_sum")->check(CLI::PositiveNumber);
  an->add_option("--seed", o.seed, "Sampling seed");
  an->add_option("--iter", o.iter_label, "Iteration label for the record")->check(CLI::PositiveNumber);
  an->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* ex = app.add_subcommand("experiment", "Full pipeline: vocab, count, GloVe per x_max with bias traces");
  ex->add_option("--input,input", o.inputs, "Corpus files")->required();
  ex->add_option("--min-count", o.min_count, "Minimum token count")->check(CLI::PositiveNumber);
  ex->add_option("--window", o.window, "Window size")->check(CLI::PositiveNumber);
  ex->add_flag("--no-distance-weighting", o.no_distance_weighting, "Count 1 per pair instead of 1/d");
  add_common_training(ex, o);
  add_glove_flags(ex, o);
  ex->add_flag("--save-vectors", o.save_vectors, "Also write word and context vectors");
  ex->add_option("--out-dir", o.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kUsage;
  }

  try {
    if (vocab->parsed()) cmd_vocab(*vocab, o, err);
    if (cnt->parsed()) cmd_count(*cnt, o, err);
    if (tg->parsed()) cmd_train_glove(*tg, o, err);
    if (ts->parsed()) cmd_train_sgns(*ts, o, err);
    if (pm->parsed()) cmd_pmi(*pm, o, err);
    if (an->parsed()) cmd_analyze(*an, o, err);
    if (ex->parsed()) cmd_experiment(*ex, o, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"glovesgns"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace glovesgns::cli
