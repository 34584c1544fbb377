#include "cws/utf8.h"

namespace cws::utf8 {
namespace {

// Returns the byte length of the sequence starting at `pos`, or 0 if malformed.
std::size_t sequence_length(std::string_view s, std::size_t pos, char32_t* out) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  std::size_t len;
  char32_t cp;
  if (lead < 0x80) {
    *out = lead;
    return 1;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (c & 0x3F);
  }
  static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMinForLength[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  *out = cp;
  return len;
}

}  // namespace

std::vector<std::string> split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = sequence_length(text, pos, &cp);
    if (len == 0) throw DecodeError("invalid UTF-8 at byte " + std::to_string(pos), pos);
    out.emplace_back(text.substr(pos, len));
    pos += len;
  }
  return out;
}

bool is_valid(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = sequence_length(text, pos, &cp);
    if (len == 0) return false;
    pos += len;
  }
  return true;
}

std::optional<char32_t> single_code_point(std::string_view ch) {
  if (ch.empty()) return std::nullopt;
  char32_t cp;
  const std::size_t len = sequence_length(ch, 0, &cp);
  if (len == 0 || len != ch.size()) return std::nullopt;
  return cp;
}

bool is_space(std::string_view ch) {
  const auto cp = single_code_point(ch);
  if (!cp) return false;
  return *cp == U' ' || *cp == U'\t' || *cp == U'\n' || *cp == U'\r' || *cp == U'\v' ||
         *cp == U'\f' || *cp == 0x3000;
}

}  // namespace cws::utf8
