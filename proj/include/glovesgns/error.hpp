#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace glovesgns {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (bad config, empty input, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Two objects that must agree on vocabulary size or dimension do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data. `offset` is the byte offset (binary files) or the
// 1-based line number (text files) where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Queried a (word, context) cell that was never observed.
class UnobservedCellError : public Error {
 public:
  UnobservedCellError(std::uint32_t word, std::uint32_t context)
      : Error("cell (" + std::to_string(word) + ", " + std::to_string(context) +
              ") was never observed"),
        word_(word),
        context_(context) {}

  std::uint32_t word() const noexcept { return word_; }
  std::uint32_t context() const noexcept { return context_; }

 private:
  std::uint32_t word_;
  std::uint32_t context_;
};

// A marginal (or the grand total) that must be positive is zero.
class ZeroMarginalError : public Error {
 public:
  using Error::Error;
};

// A training update produced NaN or Inf.
class NumericError : public Error {
 public:
  NumericError(std::uint32_t word, std::uint32_t context, int epoch)
      : Error("non-finite update at cell (" + std::to_string(word) + ", " +
              std::to_string(context) + ") in epoch " + std::to_string(epoch)),
        word_(word),
        context_(context),
        epoch_(epoch) {}

  std::uint32_t word() const noexcept { return word_; }
  std::uint32_t context() const noexcept { return context_; }
  int epoch() const noexcept { return epoch_; }

 private:
  std::uint32_t word_;
  std::uint32_t context_;
  int epoch_;
};

}  // namespace glovesgns
