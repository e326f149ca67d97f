#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "glovesgns/cooccur.hpp"
#include "glovesgns/corpus.hpp"
#include "glovesgns/error.hpp"
#include "glovesgns/hogwild.hpp"
#include "glovesgns/matrix.hpp"
#include "glovesgns/random.hpp"
#include "glovesgns/text_io.hpp"

namespace glovesgns::glove {

struct WeightingConfig {
  double x_max = 100.0;
  double alpha = 0.75;

  void validate() const {
    if (!(x_max > 0.0) || !std::isfinite(x_max)) throw PreconditionError("x_max must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in (0, 1]");
  }
};

struct TrainConfig {
  std::size_t dim = 300;
  int iterations = 50;
  double eta = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  // |g| <= clip_bound for the scalar residual gradient; 0 disables clipping.
  double clip_bound = 100.0;

  void validate() const {
    if (dim < 1) throw PreconditionError("dim must be >= 1");
    if (iterations < 1) throw PreconditionError("iterations must be >= 1");
    if (!(eta > 0.0)) throw PreconditionError("eta must be positive");
    if (threads < 1) throw PreconditionError("threads must be >= 1");
    if (clip_bound < 0.0) throw PreconditionError("clip_bound must be non-negative");
  }
};

// Word/context vectors and biases plus their AdaGrad accumulators.
struct Params {
  Matrix word;
  Matrix context;
  std::vector<double> word_bias;
  std::vector<double> context_bias;

  Matrix word_gradsq;
  Matrix context_gradsq;
  std::vector<double> word_bias_gradsq;
  std::vector<double> context_bias_gradsq;

  Params() = default;
  Params(std::size_t vocab_size, std::size_t dim)
      : word(vocab_size, dim),
        context(vocab_size, dim),
        word_bias(vocab_size, 0.0),
        context_bias(vocab_size, 0.0),
        word_gradsq(vocab_size, dim, 1.0),
        context_gradsq(vocab_size, dim, 1.0),
        word_bias_gradsq(vocab_size, 1.0),
        context_bias_gradsq(vocab_size, 1.0) {}

  std::size_t vocab_size() const noexcept { return word.rows(); }
  std::size_t dim() const noexcept { return word.cols(); }

  // Uniform in (-0.5/d, 0.5/d), drawn in the order W, C, b_W, b_C.
  static Params random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    Params p(vocab_size, dim);
    Rng rng(seed);
    const double half = 0.5 / static_cast<double>(dim);
    for (double& v : p.word.data()) v = rng.uniform(-half, half);
    for (double& v : p.context.data()) v = rng.uniform(-half, half);
    for (double& v : p.word_bias) v = rng.uniform(-half, half);
    for (double& v : p.context_bias) v = rng.uniform(-half, half);
    return p;
  }

  bool all_finite() const {
    auto ok = [](std::span<const double> xs) {
      return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
    };
    return ok(word.data()) && ok(context.data()) && ok(word_bias) && ok(context_bias);
  }

  bool operator==(const Params&) const = default;
};

// f(x) = (x / x_max)^alpha below x_max, 1 otherwise. Only defined on observed
// cells, so x <= 0 is rejected.
inline double weight_f(double x, const WeightingConfig& cfg) {
  if (!(x > 0.0)) throw PreconditionError("weighting function needs a positive count");
  return x < cfg.x_max ? std::pow(x / cfg.x_max, cfg.alpha) : 1.0;
}

namespace detail {

inline void check_cell(const Params& p, WordId i, WordId j, double count) {
  if (i >= p.vocab_size() || j >= p.vocab_size()) throw DimensionMismatch("cell id outside parameter matrices");
  if (!(count > 0.0)) throw PreconditionError("co-occurrence count must be positive");
}

}  // namespace detail

// W_i . C_j + b_W_i + b_C_j - log count
inline double residual(const Params& p, WordId i, WordId j, double count) {
  detail::check_cell(p, i, j, count);
  return dot(p.word.row(i), p.context.row(j)) + p.word_bias[i] + p.context_bias[j] - std::log(count);
}

inline double local_cost(const Params& p, WordId i, WordId j, double count, const WeightingConfig& cfg) {
  const double r = residual(p, i, j, count);
  return weight_f(count, cfg) * r * r;
}

struct Gradients {
  std::vector<double> word;
  std::vector<double> context;
  double word_bias = 0.0;
  double context_bias = 0.0;
};

// Exact derivatives of local_cost with respect to W_i, C_j, b_W_i, b_C_j.
inline Gradients local_gradients(const Params& p, WordId i, WordId j, double count, const WeightingConfig& cfg) {
  const double g = 2.0 * weight_f(count, cfg) * residual(p, i, j, count);
  Gradients out;
  out.word.resize(p.dim());
  out.context.resize(p.dim());
  const auto wi = p.word.row(i);
  const auto cj = p.context.row(j);
  for (std::size_t k = 0; k < p.dim(); ++k) {
    out.word[k] = g * cj[k];
    out.context[k] = g * wi[k];
  }
  out.word_bias = g;
  out.context_bias = g;
  return out;
}

// Sum of local costs over every observed cell.
inline double total_cost(const Params& p, const CoocTable& table, const WeightingConfig& cfg) {
  double sum = 0.0;
  for (const auto& c : table.cells()) sum += local_cost(p, c.word, c.context, c.weight, cfg);
  return sum;
}

// Called after each epoch with the 1-based epoch number, the parameters, and
// the cost accumulated over the epoch's updates.
using EpochCallback = std::function<void(int epoch, const Params& params, double epoch_cost)>;

namespace detail {

struct PreparedCell {
  WordId word;
  WordId context;
  double log_count;
  double weight;
};

template <typename Access>
double sgd_pass(Params& p, std::span<const PreparedCell> cells, std::span<const std::uint32_t> order, double eta,
                double clip, int epoch) {
  const std::size_t d = p.dim();
  double cost = 0.0;
  for (std::uint32_t idx : order) {
    const PreparedCell& c = cells[idx];
    auto wi = p.word.row(c.word);
    auto cj = p.context.row(c.context);
    auto gwi = p.word_gradsq.row(c.word);
    auto gcj = p.context_gradsq.row(c.context);
    double& bw = p.word_bias[c.word];
    double& bc = p.context_bias[c.context];

    double r = Access::load(bw) + Access::load(bc) - c.log_count;
    for (std::size_t k = 0; k < d; ++k) r += Access::load(wi[k]) * Access::load(cj[k]);
    if (!std::isfinite(r)) throw NumericError(c.word, c.context, epoch);
    cost += c.weight * r * r;

    double g = 2.0 * c.weight * r;
    if (clip > 0.0) g = std::clamp(g, -clip, clip);

    double moved = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double w = Access::load(wi[k]);
      const double v = Access::load(cj[k]);
      const double gw = g * v;
      const double gc = g * w;
      const double sw = Access::load(gwi[k]);
      const double sc = Access::load(gcj[k]);
      const double uw = eta * gw / std::sqrt(sw);
      const double uc = eta * gc / std::sqrt(sc);
      Access::store(wi[k], w - uw);
      Access::store(cj[k], v - uc);
      Access::store(gwi[k], sw + gw * gw);
      Access::store(gcj[k], sc + gc * gc);
      moved += uw + uc;
    }
    const double sbw = Access::load(p.word_bias_gradsq[c.word]);
    const double sbc = Access::load(p.context_bias_gradsq[c.context]);
    const double nbw = Access::load(bw) - eta * g / std::sqrt(sbw);
    const double nbc = Access::load(bc) - eta * g / std::sqrt(sbc);
    Access::store(bw, nbw);
    Access::store(bc, nbc);
    Access::store(p.word_bias_gradsq[c.word], sbw + g * g);
    Access::store(p.context_bias_gradsq[c.context], sbc + g * g);
    if (!std::isfinite(moved) || !std::isfinite(nbw) || !std::isfinite(nbc)) {
      throw NumericError(c.word, c.context, epoch);
    }
  }
  return cost;
}

}  // namespace detail

// AdaGrad SGD over the observed cells, reshuffled every epoch. With one
// thread the result is a pure function of (table, configs); more threads
// update shared parameters without locks.
inline Params train(const CoocTable& table, const TrainConfig& tcfg, const WeightingConfig& wcfg,
                    const EpochCallback& on_iteration = {}) {
  tcfg.validate();
  wcfg.validate();
  if (table.empty()) throw PreconditionError("cannot train on an empty co-occurrence table");
  if (table.size() > UINT32_MAX) throw PreconditionError("table too large");

  Params p = Params::random(table.vocab_size(), tcfg.dim, tcfg.seed);
  std::vector<detail::PreparedCell> cells;
  cells.reserve(table.size());
  for (const auto& c : table.cells()) {
    cells.push_back({c.word, c.context, std::log(c.weight), weight_f(c.weight, wcfg)});
  }
  std::vector<std::uint32_t> order(cells.size());
  // Shuffle stream is separate from the initialization stream.
  Rng rng(tcfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int epoch = 1; epoch <= tcfg.iterations; ++epoch) {
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(std::span<std::uint32_t>(order));
    double cost = 0.0;
    if (tcfg.threads <= 1) {
      cost = detail::sgd_pass<hogwild::Exclusive>(p, cells, order, tcfg.eta, tcfg.clip_bound, epoch);
    } else {
      std::vector<double> partial(tcfg.threads, 0.0);
      std::atomic<unsigned> next{0};
      hogwild::for_slices(order.size(), tcfg.threads, [&](std::size_t b, std::size_t e) {
        const unsigned slot = next.fetch_add(1);
        partial[slot] = detail::sgd_pass<hogwild::Shared>(p, cells, std::span(order).subspan(b, e - b), tcfg.eta,
                                                          tcfg.clip_bound, epoch);
      });
      for (double c : partial) cost += c;
    }
    if (on_iteration) on_iteration(epoch, p, cost);
  }
  return p;
}

inline void save_embeddings(const Params& p, const Vocabulary& vocab, const std::string& path) {
  save_vectors(p.word, vocab, path);
}

enum class BiasKind { word, context };

inline void save_biases(const Params& p, const Vocabulary& vocab, const std::string& path,
                        BiasKind kind = BiasKind::word) {
  save_scalars(kind == BiasKind::word ? p.word_bias : p.context_bias, vocab, path);
}

}  // namespace glovesgns::glove
