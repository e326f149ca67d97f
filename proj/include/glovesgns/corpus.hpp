#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "glovesgns/error.hpp"

namespace glovesgns {

using WordId = std::uint32_t;

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

inline char to_lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Split `text` into `parts` contiguous pieces whose boundaries fall on
// whitespace, so no token straddles two pieces.
inline std::vector<std::string_view> split_on_whitespace(std::string_view text, std::size_t parts) {
  std::vector<std::string_view> out;
  parts = std::max<std::size_t>(parts, 1);
  std::size_t begin = 0;
  for (std::size_t p = 1; p <= parts && begin < text.size(); ++p) {
    std::size_t end = (p == parts) ? text.size() : std::max(begin, text.size() * p / parts);
    while (end < text.size() && !is_space(text[end])) ++end;
    out.push_back(text.substr(begin, end - begin));
    begin = end;
  }
  return out;
}

}  // namespace detail

// Calls fn(std::string_view token) for every lowercased whitespace-delimited
// token of `text`. The view is only valid for the duration of the call.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::string buf;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && detail::is_space(text[i])) ++i;
    if (i == n) break;
    std::size_t j = i;
    while (j < n && !detail::is_space(text[j])) ++j;
    buf.assign(text.data() + i, j - i);
    for (char& c : buf) c = detail::to_lower_ascii(c);
    fn(std::string_view(buf));
    i = j;
  }
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for_each_token(text, [&](std::string_view t) { tokens.emplace_back(t); });
  return tokens;
}

struct VocabEntry {
  std::string token;
  std::uint64_t count = 0;

  bool operator==(const VocabEntry&) const = default;
};

// Shared word/context vocabulary. Ids are dense and ordered by descending
// count, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Builds from raw counts, keeping tokens with count >= min_count.
  template <typename CountMap>
  static Vocabulary from_counts(const CountMap& counts, std::uint64_t min_count) {
    if (min_count < 1) throw PreconditionError("min_count must be >= 1");
    std::vector<VocabEntry> entries;
    for (const auto& [token, count] : counts) {
      if (count >= min_count) entries.push_back({std::string(token), count});
    }
    std::sort(entries.begin(), entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
      return a.count != b.count ? a.count > b.count : a.token < b.token;
    });
    return Vocabulary(std::move(entries));
  }

  // Entries must already be in id order; throws if the ordering is violated.
  explicit Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
    if (entries_.size() > UINT32_MAX) throw PreconditionError("vocabulary exceeds 32-bit ids");
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i > 0) {
        const auto& prev = entries_[i - 1];
        const auto& cur = entries_[i];
        if (prev.count < cur.count || (prev.count == cur.count && !(prev.token < cur.token))) {
          throw PreconditionError("vocabulary entries out of order at id " + std::to_string(i));
        }
      }
      index_.emplace(entries_[i].token, static_cast<WordId>(i));
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::vector<VocabEntry>& entries() const noexcept { return entries_; }
  const std::string& token(WordId id) const { return entries_.at(id).token; }
  std::uint64_t count(WordId id) const { return entries_.at(id).count; }

  std::optional<WordId> id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t total_count() const {
    std::uint64_t sum = 0;
    for (const auto& e : entries_) sum += e.count;
    return sum;
  }

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, WordId> index_;
};

inline Vocabulary build_vocab(std::span<const std::string> tokens, std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return Vocabulary::from_counts(counts, min_count);
}

// Counts tokens of raw text, scanning `threads` whitespace-aligned slices in
// parallel. The merged counts do not depend on the thread count.
inline std::unordered_map<std::string, std::uint64_t> count_tokens(std::string_view text,
                                                                   unsigned threads = 1) {
  auto slices = detail::split_on_whitespace(text, threads);
  std::vector<std::unordered_map<std::string, std::uint64_t>> partial(slices.size());
  auto work = [&](std::size_t s) {
    auto& counts = partial[s];
    for_each_token(slices[s], [&](std::string_view t) {
      auto it = counts.find(std::string(t));
      if (it == counts.end()) {
        counts.emplace(std::string(t), 1);
      } else {
        ++it->second;
      }
    });
  };
  if (slices.size() <= 1) {
    if (!slices.empty()) work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t s = 0; s < slices.size(); ++s) pool.emplace_back(work, s);
  }
  std::unordered_map<std::string, std::uint64_t> merged;
  for (auto& part : partial) {
    if (merged.empty()) {
      merged = std::move(part);
      continue;
    }
    for (auto& [token, count] : part) merged[token] += count;
  }
  return merged;
}

inline Vocabulary build_vocab(std::string_view text, std::uint64_t min_count, unsigned threads = 1) {
  return Vocabulary::from_counts(count_tokens(text, threads), min_count);
}

// Corpus encoded as word ids; out-of-vocabulary tokens are dropped.
struct TokenStream {
  std::vector<WordId> ids;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
};

inline TokenStream encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
  TokenStream out;
  out.ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = vocab.id(t)) out.ids.push_back(*id);
  }
  return out;
}

inline TokenStream encode(std::string_view text, const Vocabulary& vocab, unsigned threads = 1) {
  auto slices = detail::split_on_whitespace(text, threads);
  std::vector<std::vector<WordId>> partial(slices.size());
  auto work = [&](std::size_t s) {
    for_each_token(slices[s], [&](std::string_view t) {
      if (auto id = vocab.id(t)) partial[s].push_back(*id);
    });
  };
  if (slices.size() <= 1) {
    if (!slices.empty()) work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t s = 0; s < slices.size(); ++s) pool.emplace_back(work, s);
  }
  TokenStream out;
  for (auto& p : partial) out.ids.insert(out.ids.end(), p.begin(), p.end());
  return out;
}

// Maps ids back to tokens.
inline std::vector<std::string> decode(const TokenStream& stream, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(stream.size());
  for (WordId id : stream.ids) out.push_back(vocab.token(id));
  return out;
}

// Reads and concatenates corpus files in order. A newline separates files so
// the last token of one file never fuses with the first of the next.
inline std::string read_corpus(std::span<const std::string> paths) {
  std::string text;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    text.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading corpus file: " + path);
    text.push_back('\n');
  }
  return text;
}

// One `token count` line per entry, in id order.
inline void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& e : vocab.entries()) out << e.token << ' ' << e.count << '\n';
  if (!out) throw IoError("error writing: " + path);
}

inline Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary: " + path);
  std::vector<VocabEntry> entries;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto sep = line.find(' ');
    if (sep == std::string::npos || sep == 0 || sep + 1 == line.size()) {
      throw FormatError("malformed vocabulary line " + std::to_string(line_no), line_no);
    }
    const std::string count_str = line.substr(sep + 1);
    if (!std::all_of(count_str.begin(), count_str.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw FormatError("bad count on vocabulary line " + std::to_string(line_no), line_no);
    }
    entries.push_back({line.substr(0, sep), std::stoull(count_str)});
  }
  try {
    return Vocabulary(std::move(entries));
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("vocabulary file ") + path + ": " + e.what(), line_no);
  }
}

}  // namespace glovesgns
