#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cws {

/// BMES labels. The integer ids are part of the model file format.
enum class Tag : std::uint8_t { B = 0, M = 1, E = 2, S = 3 };

inline constexpr std::size_t kNumTags = 4;
/// Pseudo-tag indices used by transition tables: rows/cols K and K+1.
inline constexpr int kStartTag = 4;
inline constexpr int kEndTag = 5;

using TagSequence = std::vector<Tag>;
/// One word as its characters. Replacement tokens such as <ENG> count as one character.
using Word = std::vector<std::string>;
using Segmentation = std::vector<Word>;

char tag_char(Tag tag);
Tag tag_from_char(char c);
std::string to_string(const TagSequence& tags);
/// Parses "BESBME"-style strings.
TagSequence parse_tags(std::string_view text);

std::vector<int> tag_ids(const TagSequence& tags);
TagSequence tags_from_ids(std::span<const int> ids);

TagSequence encode_tags(const Segmentation& seg);

/// Groups characters into words. Total over all tag sequences: invalid input is
/// repaired by starting a word at every B or S, ending one after every E or S,
/// and closing any open word at the end.
Segmentation decode_tags(std::span<const std::string> chars, const TagSequence& tags);

/// Lengths of the words decode_tags would produce.
std::vector<std::size_t> word_lengths(const TagSequence& tags);

/// `from` is a tag id or kStartTag; `to` is a tag id or kEndTag.
bool transition_allowed(int from, int to);

/// True iff tags match (B M* E | S)*.
bool is_valid(const TagSequence& tags);

}  // namespace cws
