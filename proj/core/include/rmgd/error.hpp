#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmgd {

/// Non-finite values reached a place that requires finite input (gradients,
/// losses). Carries the flat index of the first offending entry when known.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::int64_t index = -1)
      : std::runtime_error(what), index_(index) {}
  std::int64_t index() const noexcept { return index_; }

 private:
  std::int64_t index_;
};

/// Malformed binary input. `offset` is the byte position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Parameter vector does not match the layout a model expects.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rmgd
