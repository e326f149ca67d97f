#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "glovesgns/corpus.hpp"
#include "glovesgns/error.hpp"

namespace glovesgns {

struct CoocCell {
  WordId word = 0;
  WordId context = 0;
  double weight = 0.0;

  bool operator==(const CoocCell&) const = default;
};

// Sparse weighted co-occurrence counts #(w,c) with marginals #(w), #(c) and
// the grand total sum_w #(w). Cells are kept sorted by (word, context) and
// only observed cells (weight > 0) are stored.
class CoocTable {
 public:
  CoocTable() = default;
  explicit CoocTable(std::size_t vocab_size)
      : vocab_size_(vocab_size), word_marginals_(vocab_size, 0.0), context_marginals_(vocab_size, 0.0) {}

  // Takes ownership of `cells` (any order). Ids must be < vocab_size,
  // weights finite and positive, and no cell may appear twice.
  static CoocTable from_cells(std::size_t vocab_size, std::vector<CoocCell> cells) {
    CoocTable t(vocab_size);
    std::sort(cells.begin(), cells.end(), [](const CoocCell& a, const CoocCell& b) {
      return key(a.word, a.context) < key(b.word, b.context);
    });
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if (c.word >= vocab_size || c.context >= vocab_size) {
        throw PreconditionError("cell id out of range for vocabulary of size " + std::to_string(vocab_size));
      }
      if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
        throw PreconditionError("cell weight must be finite and positive");
      }
      if (i > 0 && cells[i - 1].word == c.word && cells[i - 1].context == c.context) {
        throw PreconditionError("duplicate cell (" + std::to_string(c.word) + ", " +
                                std::to_string(c.context) + ")");
      }
    }
    t.cells_ = std::move(cells);
    t.recompute_marginals();
    return t;
  }

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  std::span<const CoocCell> cells() const noexcept { return cells_; }
  std::span<const double> word_marginals() const noexcept { return word_marginals_; }
  std::span<const double> context_marginals() const noexcept { return context_marginals_; }
  double word_marginal(WordId i) const { return word_marginals_.at(i); }
  double context_marginal(WordId j) const { return context_marginals_.at(j); }
  double total() const noexcept { return total_; }

  std::optional<double> find(WordId word, WordId context) const {
    const std::uint64_t k = key(word, context);
    auto it = std::lower_bound(cells_.begin(), cells_.end(), k,
                               [](const CoocCell& c, std::uint64_t v) { return key(c.word, c.context) < v; });
    if (it == cells_.end() || it->word != word || it->context != context) return std::nullopt;
    return it->weight;
  }

  bool operator==(const CoocTable& other) const {
    return vocab_size_ == other.vocab_size_ && cells_ == other.cells_;
  }

  static std::uint64_t key(WordId word, WordId context) {
    return (static_cast<std::uint64_t>(word) << 32) | context;
  }

 private:
  void recompute_marginals() {
    std::fill(word_marginals_.begin(), word_marginals_.end(), 0.0);
    std::fill(context_marginals_.begin(), context_marginals_.end(), 0.0);
    for (const auto& c : cells_) {
      word_marginals_[c.word] += c.weight;
      context_marginals_[c.context] += c.weight;
    }
    total_ = 0.0;
    for (double m : word_marginals_) total_ += m;
  }

  std::size_t vocab_size_ = 0;
  std::vector<CoocCell> cells_;
  std::vector<double> word_marginals_;
  std::vector<double> context_marginals_;
  double total_ = 0.0;
};

struct CountConfig {
  std::size_t window = 10;
  bool distance_weighting = true;  // weight 1/d, else 1
  unsigned threads = 1;
};

namespace detail {

// Accumulates (key, value) increments via sorted runs: a flat buffer is
// sorted and reduced into the running result whenever it fills up.
template <typename Value>
class SortedAccumulator {
 public:
  explicit SortedAccumulator(std::size_t capacity = std::size_t{1} << 22) : capacity_(capacity) {
    buffer_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
  }

  void add(std::uint64_t key, Value v) {
    buffer_.emplace_back(key, v);
    if (buffer_.size() >= capacity_) flush();
  }

  std::vector<std::pair<std::uint64_t, Value>> take() {
    flush();
    return std::move(result_);
  }

  // Merges two reduced, sorted runs.
  static std::vector<std::pair<std::uint64_t, Value>> combine(const std::vector<std::pair<std::uint64_t, Value>>& a,
                                                              const std::vector<std::pair<std::uint64_t, Value>>& b) {
    std::vector<std::pair<std::uint64_t, Value>> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i].first < b[j].first) {
        out.push_back(a[i++]);
      } else if (b[j].first < a[i].first) {
        out.push_back(b[j++]);
      } else {
        out.emplace_back(a[i].first, a[i].second + b[j].second);
        ++i;
        ++j;
      }
    }
    out.insert(out.end(), a.begin() + i, a.end());
    out.insert(out.end(), b.begin() + j, b.end());
    return out;
  }

 private:
  void flush() {
    if (buffer_.empty()) return;
    std::stable_sort(buffer_.begin(), buffer_.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<std::pair<std::uint64_t, Value>> run;
    for (const auto& [k, v] : buffer_) {
      if (!run.empty() && run.back().first == k) {
        run.back().second += v;
      } else {
        run.emplace_back(k, v);
      }
    }
    buffer_.clear();
    result_ = result_.empty() ? std::move(run) : combine(result_, run);
  }

  std::size_t capacity_;
  std::vector<std::pair<std::uint64_t, Value>> buffer_;
  std::vector<std::pair<std::uint64_t, Value>> result_;
};

// lcm(1..window), or nullopt once it exceeds 2^32. Distance weights 1/d are
// accumulated as exact integers (lcm/d) when this exists.
inline std::optional<std::uint64_t> weight_denominator(std::size_t window) {
  std::uint64_t l = 1;
  for (std::uint64_t d = 2; d <= window; ++d) {
    l = std::lcm(l, d);
    if (l > (std::uint64_t{1} << 32)) return std::nullopt;
  }
  return l;
}

template <typename Value, typename Weight>
std::vector<std::pair<std::uint64_t, Value>> count_centers(std::span<const WordId> tokens, std::size_t center_begin,
                                                           std::size_t center_end, std::size_t window, Weight weight) {
  SortedAccumulator<Value> acc;
  const std::size_t n = tokens.size();
  for (std::size_t p = center_begin; p < center_end; ++p) {
    const WordId w = tokens[p];
    for (std::size_t d = 1; d <= window; ++d) {
      if (p >= d) acc.add(CoocTable::key(w, tokens[p - d]), weight(d));
      if (p + d < n) acc.add(CoocTable::key(w, tokens[p + d]), weight(d));
    }
  }
  return acc.take();
}

inline void check_ids(std::span<const WordId> tokens, std::size_t vocab_size) {
  for (WordId id : tokens) {
    if (id >= vocab_size) throw PreconditionError("token id " + std::to_string(id) + " outside vocabulary");
  }
}

template <typename Value, typename Weight, typename ToDouble>
CoocTable count_impl(std::span<const WordId> tokens, std::size_t vocab_size, const CountConfig& cfg, Weight weight,
                     ToDouble to_double) {
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(cfg.threads, tokens.size()));
  std::vector<std::vector<std::pair<std::uint64_t, Value>>> partial(shards);
  auto work = [&](std::size_t s) {
    const std::size_t b = tokens.size() * s / shards;
    const std::size_t e = tokens.size() * (s + 1) / shards;
    partial[s] = count_centers<Value>(tokens, b, e, cfg.window, weight);
  };
  if (shards == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t s = 0; s < shards; ++s) pool.emplace_back(work, s);
  }
  std::vector<std::pair<std::uint64_t, Value>> merged = std::move(partial[0]);
  for (std::size_t s = 1; s < shards; ++s) merged = SortedAccumulator<Value>::combine(merged, partial[s]);

  std::vector<CoocCell> cells;
  cells.reserve(merged.size());
  for (const auto& [k, v] : merged) {
    cells.push_back({static_cast<WordId>(k >> 32), static_cast<WordId>(k & 0xffffffffu), to_double(v)});
  }
  return CoocTable::from_cells(vocab_size, std::move(cells));
}

}  // namespace detail

// Counts centers in [center_begin, center_end) of `tokens`; contexts may lie
// anywhere in `tokens`. A shard of a longer stream therefore has to carry
// `window` tokens of context on either side of its center range.
inline CoocTable count_shard(std::span<const WordId> tokens, std::size_t center_begin, std::size_t center_end,
                             std::size_t vocab_size, std::size_t window, bool distance_weighting) {
  if (window < 1) throw PreconditionError("window must be >= 1");
  if (center_begin > center_end || center_end > tokens.size()) throw PreconditionError("bad center range");
  detail::check_ids(tokens, vocab_size);
  auto pairs = detail::count_centers<double>(tokens, center_begin, center_end, window, [&](std::size_t d) {
    return distance_weighting ? 1.0 / static_cast<double>(d) : 1.0;
  });
  std::vector<CoocCell> cells;
  cells.reserve(pairs.size());
  for (const auto& [k, v] : pairs) {
    cells.push_back({static_cast<WordId>(k >> 32), static_cast<WordId>(k & 0xffffffffu), v});
  }
  return CoocTable::from_cells(vocab_size, std::move(cells));
}

// Symmetric windowed counting. Each ordered pair of positions at distance
// d <= window adds 1/d (or 1) to cell (id[center], id[context]).
inline CoocTable count(std::span<const WordId> tokens, std::size_t vocab_size, const CountConfig& cfg) {
  if (cfg.window < 1) throw PreconditionError("window must be >= 1");
  detail::check_ids(tokens, vocab_size);
  auto denom = cfg.distance_weighting ? detail::weight_denominator(cfg.window) : std::optional<std::uint64_t>(1);
  if (denom) {
    const std::uint64_t l = *denom;
    const bool weighted = cfg.distance_weighting;
    return detail::count_impl<std::uint64_t>(
        tokens, vocab_size, cfg, [l, weighted](std::size_t d) { return weighted ? l / d : l; },
        [l](std::uint64_t num) { return static_cast<double>(num) / static_cast<double>(l); });
  }
  return detail::count_impl<double>(
      tokens, vocab_size, cfg, [](std::size_t d) { return 1.0 / static_cast<double>(d); },
      [](double v) { return v; });
}

inline CoocTable count(const TokenStream& stream, std::size_t vocab_size, const CountConfig& cfg) {
  return count(std::span<const WordId>(stream.ids), vocab_size, cfg);
}

// Cell-wise sum. Each cell's contributions are summed in ascending order of
// value, so the result does not depend on the order of `tables`.
inline CoocTable merge(std::span<const CoocTable> tables) {
  if (tables.empty()) return CoocTable();
  const std::size_t v = tables.front().vocab_size();
  std::size_t total_cells = 0;
  for (const auto& t : tables) {
    if (t.vocab_size() != v) {
      throw DimensionMismatch("cannot merge tables over vocabularies of size " + std::to_string(v) + " and " +
                              std::to_string(t.vocab_size()));
    }
    total_cells += t.size();
  }
  std::vector<std::pair<std::uint64_t, double>> all;
  all.reserve(total_cells);
  for (const auto& t : tables) {
    for (const auto& c : t.cells()) all.emplace_back(CoocTable::key(c.word, c.context), c.weight);
  }
  std::sort(all.begin(), all.end());
  std::vector<CoocCell> cells;
  for (const auto& [k, w] : all) {
    if (!cells.empty() && CoocTable::key(cells.back().word, cells.back().context) == k) {
      cells.back().weight += w;
    } else {
      cells.push_back({static_cast<WordId>(k >> 32), static_cast<WordId>(k & 0xffffffffu), w});
    }
  }
  return CoocTable::from_cells(v, std::move(cells));
}

inline CoocTable merge(std::initializer_list<CoocTable> tables) {
  return merge(std::span<const CoocTable>(tables.begin(), tables.size()));
}

namespace detail {

inline constexpr std::size_t kRecordBytes = 16;

template <typename T>
void put_le(unsigned char* out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  std::memcpy(out, bytes, sizeof(T));
}

template <typename T>
T get_le(const unsigned char* in) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

// Headerless little-endian records: u32 word, u32 context, f64 weight.
inline void save(const CoocTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  std::vector<unsigned char> buf(detail::kRecordBytes * std::min<std::size_t>(table.size(), 1 << 16));
  std::size_t used = 0;
  for (const auto& c : table.cells()) {
    unsigned char* rec = buf.data() + used;
    detail::put_le<std::uint32_t>(rec, c.word);
    detail::put_le<std::uint32_t>(rec + 4, c.context);
    detail::put_le<double>(rec + 8, c.weight);
    used += detail::kRecordBytes;
    if (used == buf.size()) {
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(used));
      used = 0;
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(used));
  if (!out) throw IoError("error writing: " + path);
}

// Loads a triple file. Without `vocab_size` the vocabulary is taken to be
// 1 + the largest id present.
inline CoocTable load(const std::string& path, std::optional<std::size_t> vocab_size = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open co-occurrence file: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading: " + path);
  const std::size_t whole = data.size() / detail::kRecordBytes * detail::kRecordBytes;
  if (whole != data.size()) {
    throw FormatError("truncated record at byte offset " + std::to_string(whole) + " in " + path, whole);
  }
  std::vector<CoocCell> cells;
  cells.reserve(whole / detail::kRecordBytes);
  std::size_t max_id = 0;
  for (std::size_t off = 0; off < whole; off += detail::kRecordBytes) {
    CoocCell c{detail::get_le<std::uint32_t>(&data[off]), detail::get_le<std::uint32_t>(&data[off + 4]),
               detail::get_le<double>(&data[off + 8])};
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw FormatError("non-positive or non-finite weight at byte offset " + std::to_string(off), off);
    }
    if (vocab_size && (c.word >= *vocab_size || c.context >= *vocab_size)) {
      throw FormatError("id outside vocabulary at byte offset " + std::to_string(off), off);
    }
    max_id = std::max<std::size_t>({max_id, c.word, c.context});
    cells.push_back(c);
  }
  const std::size_t v = vocab_size ? *vocab_size : (cells.empty() ? 0 : max_id + 1);
  try {
    return CoocTable::from_cells(v, std::move(cells));
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("invalid co-occurrence file ") + path + ": " + e.what(), 0);
  }
}

}  // namespace glovesgns
