#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cws::utf8 {

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Splits into one string per code point. Throws DecodeError on malformed input
/// (overlongs, surrogates, truncated sequences and out-of-range values included).
std::vector<std::string> split(std::string_view text);

bool is_valid(std::string_view text);

/// The code point of a string holding exactly one code point, else nullopt.
std::optional<char32_t> single_code_point(std::string_view ch);

/// ASCII whitespace and U+3000 IDEOGRAPHIC SPACE.
bool is_space(std::string_view ch);

}  // namespace cws::utf8
