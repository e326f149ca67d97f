#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glovesgns/corpus.hpp"
#include "glovesgns/error.hpp"
#include "glovesgns/matrix.hpp"

namespace glovesgns {

// Shortest-safe decimal form that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, std::uint64_t line_no) {
  if (s.empty()) throw FormatError("empty number on line " + std::to_string(line_no), line_no);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw FormatError("bad number '" + s + "' on line " + std::to_string(line_no), line_no);
  }
  return v;
}

namespace detail {

inline std::vector<std::string> split_spaces(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i == line.size()) break;
    std::size_t j = line.find(' ', i);
    if (j == std::string::npos) j = line.size();
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

// `token v1 v2 ... vd` per row, in id order.
inline void save_vectors(const Matrix& m, const Vocabulary& vocab, const std::string& path) {
  if (m.rows() != vocab.size()) throw DimensionMismatch("matrix rows do not match vocabulary size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << vocab.token(static_cast<WordId>(i));
    for (double v : m.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("error writing: " + path);
}

struct LoadedVectors {
  std::vector<std::string> tokens;
  Matrix values;
};

inline LoadedVectors load_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vectors: " + path);
  LoadedVectors out;
  std::vector<double> flat;
  std::size_t dim = 0;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = detail::split_spaces(line);
    if (fields.size() < 2) throw FormatError("vector line " + std::to_string(line_no) + " has no values", line_no);
    if (line_no == 1) dim = fields.size() - 1;
    if (fields.size() - 1 != dim) {
      throw FormatError("inconsistent dimension on line " + std::to_string(line_no), line_no);
    }
    out.tokens.push_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) flat.push_back(parse_double(fields[k], line_no));
  }
  out.values = Matrix(out.tokens.size(), dim);
  std::copy(flat.begin(), flat.end(), out.values.data().begin());
  return out;
}

// `token value` per id.
inline void save_scalars(std::span<const double> values, const Vocabulary& vocab, const std::string& path) {
  if (values.size() != vocab.size()) throw DimensionMismatch("value count does not match vocabulary size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << vocab.token(static_cast<WordId>(i)) << ' ' << format_double(values[i]) << '\n';
  }
  if (!out) throw IoError("error writing: " + path);
}

struct LoadedScalars {
  std::vector<std::string> tokens;
  std::vector<double> values;
};

inline LoadedScalars load_scalars(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  LoadedScalars out;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = detail::split_spaces(line);
    if (fields.size() != 2) throw FormatError("expected `token value` on line " + std::to_string(line_no), line_no);
    out.tokens.push_back(fields[0]);
    out.values.push_back(parse_double(fields[1], line_no));
  }
  return out;
}

}  // namespace glovesgns
