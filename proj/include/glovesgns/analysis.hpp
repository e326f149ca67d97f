#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "glovesgns/cooccur.hpp"
#include "glovesgns/corpus.hpp"
#include "glovesgns/error.hpp"
#include "glovesgns/glove.hpp"
#include "glovesgns/random.hpp"
#include "glovesgns/text_io.hpp"

namespace glovesgns::analysis {

// Single-pass Pearson correlation using running means and co-moments.
class RunningCorrelation {
 public:
  void add(double x, double y) {
    ++n_;
    const double n = static_cast<double>(n_);
    const double dx = x - mean_x_;
    mean_x_ += dx / n;
    const double dy = y - mean_y_;
    mean_y_ += dy / n;
    m2_x_ += dx * (x - mean_x_);
    m2_y_ += dy * (y - mean_y_);
    c_xy_ += dx * (y - mean_y_);
  }

  std::size_t count() const noexcept { return n_; }

  double r() const {
    if (n_ < 2) throw PreconditionError("correlation needs at least two points");
    if (!(m2_x_ > 0.0) || !(m2_y_ > 0.0)) throw PreconditionError("correlation undefined for a constant vector");
    const double r = c_xy_ / std::sqrt(m2_x_ * m2_y_);
    return std::clamp(r, -1.0, 1.0);
  }

 private:
  std::size_t n_ = 0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double m2_x_ = 0.0;
  double m2_y_ = 0.0;
  double c_xy_ = 0.0;
};

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("pearson_r: length mismatch");
  RunningCorrelation acc;
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(x[i], y[i]);
  return acc.r();
}

struct BiasRecord {
  int iteration = 0;
  double r_word = 0.0;
  double r_context = 0.0;
  double r_sum = 0.0;

  bool operator==(const BiasRecord&) const = default;
};

class BiasTrace {
 public:
  void append(const BiasRecord& rec) {
    if (rec.iteration < 1) throw PreconditionError("trace iterations start at 1");
    if (!records_.empty() && rec.iteration <= records_.back().iteration) {
      throw PreconditionError("trace iterations must be strictly increasing");
    }
    for (double r : {rec.r_word, rec.r_context, rec.r_sum}) {
      if (!(r >= -1.0 && r <= 1.0)) throw PreconditionError("correlation outside [-1, 1]");
    }
    records_.push_back(rec);
  }

  const std::vector<BiasRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const BiasRecord& back() const { return records_.back(); }

 private:
  std::vector<BiasRecord> records_;
};

namespace detail {

inline std::vector<double> log_marginals(std::span<const double> marginals) {
  std::vector<double> out(marginals.size());
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    if (!(marginals[i] > 0.0)) {
      throw ZeroMarginalError("vocabulary id " + std::to_string(i) + " has a zero marginal");
    }
    out[i] = std::log(marginals[i]);
  }
  return out;
}

}  // namespace detail

inline constexpr std::size_t kDefaultPairSample = 100000;

// Correlates b_W with log #(w), b_C with log #(c), and over sampled observed
// cells b_W_i + b_C_j with log #(w_i) + log #(c_j). Cells are drawn uniformly
// with replacement; when pair_sample covers the table every cell is used once.
inline BiasRecord correlate_biases(const glove::Params& params, const CoocTable& table, std::size_t pair_sample,
                                   std::uint64_t seed, int iteration) {
  if (table.vocab_size() == 0 || params.vocab_size() == 0) throw PreconditionError("empty vocabulary");
  if (params.vocab_size() != table.vocab_size()) throw DimensionMismatch("parameters and table disagree on |V|");
  if (pair_sample < 1) throw PreconditionError("pair_sample must be >= 1");
  if (table.empty()) throw PreconditionError("no observed cells to sample");

  const auto log_w = detail::log_marginals(table.word_marginals());
  const auto log_c = detail::log_marginals(table.context_marginals());

  BiasRecord rec;
  rec.iteration = iteration;
  rec.r_word = pearson_r(params.word_bias, log_w);
  rec.r_context = pearson_r(params.context_bias, log_c);

  RunningCorrelation sum;
  const auto cells = table.cells();
  auto add_cell = [&](const CoocCell& c) {
    sum.add(params.word_bias[c.word] + params.context_bias[c.context], log_w[c.word] + log_c[c.context]);
  };
  if (pair_sample >= cells.size()) {
    for (const auto& c : cells) add_cell(c);
  } else {
    Rng rng(seed);
    for (std::size_t s = 0; s < pair_sample; ++s) add_cell(cells[rng.below(cells.size())]);
  }
  rec.r_sum = sum.r();
  return rec;
}

inline void export_trace(const BiasTrace& trace, const std::string& path) {
  if (trace.empty()) throw PreconditionError("refusing to export an empty trace");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "iter,r_word,r_context,r_sum\n";
  for (const auto& r : trace.records()) {
    out << r.iteration << ',' << format_double(r.r_word) << ',' << format_double(r.r_context) << ','
        << format_double(r.r_sum) << '\n';
  }
  if (!out) throw IoError("error writing: " + path);
}

namespace detail {

// Splits one CSV record; fields may be double-quoted with "" escapes.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back().push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back().push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back().push_back(ch);
    }
  }
  return out;
}

inline std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline BiasTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "iter,r_word,r_context,r_sum") {
    throw FormatError("trace header mismatch in " + path, 1);
  }
  BiasTrace trace;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = detail::split_csv(line);
    if (f.size() != 4) throw FormatError("expected 4 fields on trace line " + std::to_string(line_no), line_no);
    BiasRecord r;
    r.iteration = static_cast<int>(parse_double(f[0], line_no));
    r.r_word = parse_double(f[1], line_no);
    r.r_context = parse_double(f[2], line_no);
    r.r_sum = parse_double(f[3], line_no);
    trace.append(r);
  }
  return trace;
}

struct ScatterRow {
  std::string token;
  double count = 0.0;  // weighted marginal #(w)
  double log_count = 0.0;
  double bias = 0.0;
};

inline std::vector<ScatterRow> scatter_rows(const glove::Params& params, const Vocabulary& vocab,
                                            const CoocTable& table) {
  if (params.vocab_size() != vocab.size() || table.vocab_size() != vocab.size()) {
    throw DimensionMismatch("parameters, vocabulary and table disagree on |V|");
  }
  const auto log_w = detail::log_marginals(table.word_marginals());
  std::vector<ScatterRow> rows;
  rows.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    rows.push_back({vocab.token(static_cast<WordId>(i)), table.word_marginals()[i], log_w[i], params.word_bias[i]});
  }
  return rows;
}

inline void export_scatter(const std::vector<ScatterRow>& rows, const std::string& path, bool header = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  if (header) out << "token,count,log_count,bias\n";
  for (const auto& r : rows) {
    out << detail::quote_csv(r.token) << ',' << format_double(r.count) << ',' << format_double(r.log_count) << ','
        << format_double(r.bias) << '\n';
  }
  if (!out) throw IoError("error writing: " + path);
}

inline void export_scatter(const glove::Params& params, const Vocabulary& vocab, const CoocTable& table,
                           const std::string& path) {
  export_scatter(scatter_rows(params, vocab, table), path);
}

inline std::vector<ScatterRow> load_scatter(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scatter: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "token,count,log_count,bias") {
    throw FormatError("scatter header mismatch in " + path, 1);
  }
  std::vector<ScatterRow> rows;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = detail::split_csv(line);
    if (f.size() != 4) throw FormatError("expected 4 fields on scatter line " + std::to_string(line_no), line_no);
    rows.push_back({f[0], parse_double(f[1], line_no), parse_double(f[2], line_no), parse_double(f[3], line_no)});
  }
  return rows;
}

}  // namespace glovesgns::analysis
