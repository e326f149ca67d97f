#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "glovesgns/cooccur.hpp"
#include "glovesgns/error.hpp"
#include "glovesgns/glove.hpp"
#include "glovesgns/matrix.hpp"
#include "glovesgns/sgns.hpp"
#include "glovesgns/text_io.hpp"

namespace glovesgns::pmi {

namespace detail {

inline double pmi_from_counts(double n_wc, double n_w, double n_c, double total) {
  return std::log(n_wc) - std::log(n_w) - std::log(n_c) + std::log(total);
}

inline void check_marginals(const CoocTable& table, WordId i, WordId j) {
  if (!(table.word_marginal(i) > 0.0) || !(table.context_marginal(j) > 0.0) || !(table.total() > 0.0)) {
    throw ZeroMarginalError("zero marginal for cell (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  }
}

}  // namespace detail

// log #(w,c) - log #(w) - log #(c) + log sum_w #(w); only for observed cells.
inline double pmi(const CoocTable& table, WordId i, WordId j) {
  if (i >= table.vocab_size() || j >= table.vocab_size()) {
    throw DimensionMismatch("cell id outside table vocabulary");
  }
  const auto n_wc = table.find(i, j);
  if (!n_wc) throw UnobservedCellError(i, j);
  detail::check_marginals(table, i, j);
  return detail::pmi_from_counts(*n_wc, table.word_marginal(i), table.context_marginal(j), table.total());
}

struct PmiCell {
  WordId word;
  WordId context;
  double value;
};

// PMI over observed cells, optionally shifted by log k.
struct PmiMatrix {
  std::vector<PmiCell> cells;  // same order as the source table
  int k = 1;                   // value = PMI - log k
};

inline PmiMatrix shifted_pmi_matrix(const CoocTable& table, int k) {
  if (k < 1) throw PreconditionError("k must be >= 1");
  PmiMatrix out;
  out.k = k;
  out.cells.reserve(table.size());
  const double shift = std::log(static_cast<double>(k));
  for (const auto& c : table.cells()) {
    detail::check_marginals(table, c.word, c.context);
    const double v = detail::pmi_from_counts(c.weight, table.word_marginal(c.word),
                                             table.context_marginal(c.context), table.total());
    out.cells.push_back({c.word, c.context, v - shift});
  }
  return out;
}

// `i,j,value` per observed cell.
inline void export_csv(const PmiMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& c : m.cells) out << c.word << ',' << c.context << ',' << format_double(c.value) << '\n';
  if (!out) throw IoError("error writing: " + path);
}

struct ResidualSummary {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::size_t cells = 0;
};

namespace detail {

inline void check_shapes(const Matrix& w, const Matrix& c, const CoocTable& table) {
  if (w.rows() != table.vocab_size() || c.rows() != table.vocab_size()) {
    throw DimensionMismatch("parameter rows do not match table vocabulary size");
  }
  if (w.cols() != c.cols()) throw DimensionMismatch("word and context dimensions differ");
}

template <typename ResidualFn>
ResidualSummary summarize(const CoocTable& table, ResidualFn&& residual) {
  ResidualSummary s;
  double sum = 0.0;
  for (const auto& c : table.cells()) {
    const double r = std::abs(residual(c));
    s.max_abs = std::max(s.max_abs, r);
    sum += r;
  }
  s.cells = table.size();
  s.mean_abs = s.cells ? sum / static_cast<double>(s.cells) : 0.0;
  return s;
}

}  // namespace detail

// SGNS: W_i . C_j - (PMI - log k) over observed cells.
inline ResidualSummary residual_report(const sgns::Params& params, const CoocTable& table, int k) {
  detail::check_shapes(params.word, params.context, table);
  const PmiMatrix target = shifted_pmi_matrix(table, k);
  std::size_t idx = 0;
  return detail::summarize(table, [&](const CoocCell& c) {
    return dot(params.word.row(c.word), params.context.row(c.context)) - target.cells[idx++].value;
  });
}

// GloVe: W_i . C_j + b_W_i + b_C_j - log #(w,c) over observed cells.
inline ResidualSummary residual_report(const glove::Params& params, const CoocTable& table) {
  detail::check_shapes(params.word, params.context, table);
  return detail::summarize(table, [&](const CoocCell& c) {
    return glove::residual(params, c.word, c.context, c.weight);
  });
}

}  // namespace glovesgns::pmi
