#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "glovesgns/cooccur.hpp"
#include "glovesgns/corpus.hpp"
#include "glovesgns/error.hpp"
#include "glovesgns/hogwild.hpp"
#include "glovesgns/matrix.hpp"
#include "glovesgns/random.hpp"

namespace glovesgns::sgns {

struct Config {
  int k = 5;
  std::size_t dim = 100;
  double eta = 0.05;
  int epochs = 5;
  std::uint64_t seed = 1;
  // Exponent applied to unigram counts for the noise distribution.
  double smoothing = 1.0;
  unsigned threads = 1;

  void validate() const {
    if (k < 1) throw PreconditionError("k must be >= 1");
    if (dim < 1) throw PreconditionError("dim must be >= 1");
    if (!(eta > 0.0)) throw PreconditionError("eta must be positive");
    if (epochs < 1) throw PreconditionError("epochs must be >= 1");
    if (!(smoothing > 0.0 && smoothing <= 1.0)) throw PreconditionError("smoothing must lie in (0, 1]");
    if (threads < 1) throw PreconditionError("threads must be >= 1");
  }
};

struct Params {
  Matrix word;
  Matrix context;

  std::size_t vocab_size() const noexcept { return word.rows(); }
  std::size_t dim() const noexcept { return word.cols(); }

  bool all_finite() const {
    auto ok = [](std::span<const double> xs) {
      return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
    };
    return ok(word.data()) && ok(context.data());
  }

  bool operator==(const Params&) const = default;
};

// Logistic function, evaluated so that exp never overflows.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

namespace detail {

inline void check_counts(double n_wc, double n_w, double n_c, double total, int k) {
  if (!(n_wc > 0.0) || !(n_w > 0.0) || !(n_c > 0.0) || !(total > 0.0)) {
    throw PreconditionError("SGNS objective needs positive counts");
  }
  if (k < 1) throw PreconditionError("k must be >= 1");
}

// Expected number of negative draws landing on the cell: k * #(w) * #(c) / total.
inline double negative_mass(double n_w, double n_c, double total, int k) {
  return static_cast<double>(k) * n_w * (n_c / total);
}

}  // namespace detail

// Per-cell SGNS objective as a function of x = W_i . C_j.
inline double expected_local_objective(double x, double n_wc, double n_w, double n_c, double total, int k) {
  detail::check_counts(n_wc, n_w, n_c, total, k);
  return n_wc * log_sigmoid(x) + detail::negative_mass(n_w, n_c, total, k) * log_sigmoid(-x);
}

inline double local_derivative(double x, double n_wc, double n_w, double n_c, double total, int k) {
  detail::check_counts(n_wc, n_w, n_c, total, k);
  return n_wc * sigmoid(-x) - detail::negative_mass(n_w, n_c, total, k) * sigmoid(x);
}

// Stationary point of the per-cell objective: PMI(w, c) - log k.
inline double solve_optimum(double n_wc, double n_w, double n_c, double total, int k) {
  detail::check_counts(n_wc, n_w, n_c, total, k);
  return std::log(n_wc) - std::log(n_w) - std::log(n_c) + std::log(total) - std::log(static_cast<double>(k));
}

// Walker/Vose alias table for O(1) draws from a discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw PreconditionError("alias table needs at least one outcome");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw PreconditionError("alias weights must be finite and >= 0");
      sum += w;
    }
    if (!(sum > 0.0)) throw PreconditionError("alias weights sum to zero");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / sum;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t i : large) prob_[i] = 1.0;
    // Leftovers in `small` are rounding residue; they keep their own outcome.
    for (std::uint32_t i : small) prob_[i] = 1.0;
  }

  std::size_t size() const noexcept { return prob_.size(); }

  std::uint32_t sample(Rng& rng) const {
    const auto i = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// Noise distribution proportional to count^smoothing.
inline AliasTable noise_table(const Vocabulary& vocab, double smoothing) {
  std::vector<double> w(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    w[i] = std::pow(static_cast<double>(vocab.count(static_cast<WordId>(i))), smoothing);
  }
  return AliasTable(w);
}

inline Params init_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed, bool zero_context) {
  Params p{Matrix(vocab_size, dim), Matrix(vocab_size, dim)};
  Rng rng(seed);
  const double half = 0.5 / static_cast<double>(dim);
  for (double& v : p.word.data()) v = rng.uniform(-half, half);
  if (!zero_context) {
    for (double& v : p.context.data()) v = rng.uniform(-half, half);
  }
  return p;
}

using EpochCallback = std::function<void(int epoch, const Params& params)>;

// Gradient ascent (AdaGrad, shuffled cells) on the sum over observed cells of
// expected_local_objective(W_i . C_j, ...). Single-threaded and deterministic.
inline Params train_matrix(const CoocTable& table, const Config& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (table.empty()) throw PreconditionError("cannot train on an empty co-occurrence table");
  const double total = table.total();
  struct Cell {
    WordId word, context;
    double n_wc, negative;
  };
  std::vector<Cell> cells;
  cells.reserve(table.size());
  for (const auto& c : table.cells()) {
    const double n_w = table.word_marginal(c.word);
    const double n_c = table.context_marginal(c.context);
    if (!(n_w > 0.0) || !(n_c > 0.0)) throw ZeroMarginalError("zero marginal in co-occurrence table");
    cells.push_back({c.word, c.context, c.weight, detail::negative_mass(n_w, n_c, total, cfg.k)});
  }

  Params p = init_params(table.vocab_size(), cfg.dim, cfg.seed, false);
  Matrix word_sq(p.vocab_size(), p.dim(), 1.0);
  Matrix context_sq(p.vocab_size(), p.dim(), 1.0);
  std::vector<std::uint32_t> order(cells.size());
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(std::span<std::uint32_t>(order));
    for (std::uint32_t idx : order) {
      const Cell& c = cells[idx];
      auto wi = p.word.row(c.word);
      auto cj = p.context.row(c.context);
      auto swi = word_sq.row(c.word);
      auto scj = context_sq.row(c.context);
      const double x = dot(wi, cj);
      const double g = c.n_wc * sigmoid(-x) - c.negative * sigmoid(x);
      if (!std::isfinite(g)) throw NumericError(c.word, c.context, epoch);
      for (std::size_t k = 0; k < p.dim(); ++k) {
        const double gw = g * cj[k];
        const double gc = g * wi[k];
        swi[k] += gw * gw;
        scj[k] += gc * gc;
        wi[k] += cfg.eta * gw / std::sqrt(swi[k]);
        cj[k] += cfg.eta * gc / std::sqrt(scj[k]);
        if (!std::isfinite(wi[k]) || !std::isfinite(cj[k])) throw NumericError(c.word, c.context, epoch);
      }
    }
    if (on_epoch) on_epoch(epoch, p);
  }
  return p;
}

struct StreamReport {
  std::uint64_t positive_updates = 0;
  std::uint64_t negative_updates = 0;
};

namespace detail {

template <typename Access>
void stream_pass(Params& p, std::span<const WordId> ids, std::size_t begin, std::size_t end, std::size_t window,
                 const Config& cfg, const AliasTable& noise, Rng& rng, std::uint64_t pairs_before,
                 std::uint64_t total_pairs, int epoch, StreamReport& report) {
  const std::size_t d = p.dim();
  std::vector<double> grad_word(d);
  std::uint64_t done = pairs_before;
  auto update = [&](WordId w, WordId c, double label, double lr) {
    auto wi = p.word.row(w);
    auto cj = p.context.row(c);
    double x = 0.0;
    for (std::size_t k = 0; k < d; ++k) x += Access::load(wi[k]) * Access::load(cj[k]);
    if (!std::isfinite(x)) throw NumericError(w, c, epoch);
    const double g = (label - sigmoid(x)) * lr;
    for (std::size_t k = 0; k < d; ++k) {
      const double cv = Access::load(cj[k]);
      grad_word[k] += g * cv;
      Access::store(cj[k], cv + g * Access::load(wi[k]));
    }
  };
  for (std::size_t pos = begin; pos < end; ++pos) {
    const WordId w = ids[pos];
    for (std::size_t off = 1; off <= window; ++off) {
      for (int side = 0; side < 2; ++side) {
        std::size_t q;
        if (side == 0) {
          if (pos < off) continue;
          q = pos - off;
        } else {
          q = pos + off;
          if (q >= ids.size()) continue;
        }
        const double progress = static_cast<double>(done) / static_cast<double>(total_pairs);
        const double lr = cfg.eta * std::max(1e-4, 1.0 - progress);
        std::fill(grad_word.begin(), grad_word.end(), 0.0);
        update(w, ids[q], 1.0, lr);
        ++report.positive_updates;
        for (int n = 0; n < cfg.k; ++n) {
          update(w, noise.sample(rng), 0.0, lr);
          ++report.negative_updates;
        }
        auto wi = p.word.row(w);
        for (std::size_t k = 0; k < d; ++k) {
          const double nv = Access::load(wi[k]) + grad_word[k];
          if (!std::isfinite(nv)) throw NumericError(w, ids[q], epoch);
          Access::store(wi[k], nv);
        }
        ++done;
      }
    }
  }
}

inline std::uint64_t window_pairs(std::size_t n, std::size_t window) {
  std::uint64_t pairs = 0;
  for (std::size_t off = 1; off <= window && off < n; ++off) pairs += 2 * (n - off);
  return pairs;
}

inline std::uint64_t window_pairs_before(std::size_t pos, std::size_t n, std::size_t window) {
  std::uint64_t pairs = 0;
  for (std::size_t off = 1; off <= window; ++off) {
    // Centers in [0, pos) with a left neighbour at `off` and a right one.
    if (pos > off) pairs += pos - off;
    if (n > off) pairs += std::min(pos, n - off);
  }
  return pairs;
}

}  // namespace detail

// Sampled SGNS over a token stream: every (center, context) pair in the
// symmetric window gets one positive update and k negative updates with
// contexts drawn from the noise distribution. The learning rate decays
// linearly over the whole run.
inline Params train_stream(const TokenStream& stream, const Vocabulary& vocab, std::size_t window, const Config& cfg,
                           StreamReport* report = nullptr, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (stream.empty()) throw PreconditionError("cannot train on an empty stream");
  if (window < 1) throw PreconditionError("window must be >= 1");
  for (WordId id : stream.ids) {
    if (id >= vocab.size()) throw PreconditionError("stream id outside vocabulary");
  }
  const AliasTable noise = noise_table(vocab, cfg.smoothing);
  Params p = init_params(vocab.size(), cfg.dim, cfg.seed, true);
  const std::uint64_t per_epoch = std::max<std::uint64_t>(1, detail::window_pairs(stream.size(), window));
  const std::uint64_t total_pairs = per_epoch * static_cast<std::uint64_t>(cfg.epochs);
  StreamReport local;
  Rng master(cfg.seed ^ 0xd1b54a32d192ed03ULL);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t before = per_epoch * static_cast<std::uint64_t>(epoch - 1);
    if (cfg.threads <= 1) {
      detail::stream_pass<hogwild::Exclusive>(p, stream.ids, 0, stream.size(), window, cfg, noise, master, before,
                                              total_pairs, epoch, local);
    } else {
      std::vector<std::uint64_t> seeds(cfg.threads);
      for (auto& s : seeds) s = master.next();
      std::vector<StreamReport> reports(cfg.threads);
      std::atomic<unsigned> next{0};
      hogwild::for_slices(stream.size(), cfg.threads, [&](std::size_t b, std::size_t e) {
        const unsigned slot = next.fetch_add(1);
        Rng rng(seeds[slot]);
        detail::stream_pass<hogwild::Shared>(p, stream.ids, b, e, window, cfg, noise, rng,
                                             before + detail::window_pairs_before(b, stream.size(), window),
                                             total_pairs, epoch, reports[slot]);
      });
      for (const auto& r : reports) {
        local.positive_updates += r.positive_updates;
        local.negative_updates += r.negative_updates;
      }
    }
    if (on_epoch) on_epoch(epoch, p);
  }
  if (report) *report = local;
  return p;
}

}  // namespace glovesgns::sgns
