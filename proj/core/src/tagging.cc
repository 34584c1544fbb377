#include "cws/tagging.h"

#include <stdexcept>

namespace cws {

char tag_char(Tag tag) {
  static constexpr char kChars[] = {'B', 'M', 'E', 'S'};
  return kChars[static_cast<int>(tag)];
}

Tag tag_from_char(char c) {
  switch (c) {
    case 'B': return Tag::B;
    case 'M': return Tag::M;
    case 'E': return Tag::E;
    case 'S': return Tag::S;
  }
  throw std::invalid_argument(std::string("not a BMES tag: '") + c + "'");
}

std::string to_string(const TagSequence& tags) {
  std::string out;
  out.reserve(tags.size());
  for (Tag t : tags) out.push_back(tag_char(t));
  return out;
}

TagSequence parse_tags(std::string_view text) {
  TagSequence tags;
  tags.reserve(text.size());
  for (char c : text) tags.push_back(tag_from_char(c));
  return tags;
}

std::vector<int> tag_ids(const TagSequence& tags) {
  std::vector<int> ids;
  ids.reserve(tags.size());
  for (Tag t : tags) ids.push_back(static_cast<int>(t));
  return ids;
}

TagSequence tags_from_ids(std::span<const int> ids) {
  TagSequence tags;
  tags.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= static_cast<int>(kNumTags)) {
      throw std::invalid_argument("tag id out of range: " + std::to_string(id));
    }
    tags.push_back(static_cast<Tag>(id));
  }
  return tags;
}

TagSequence encode_tags(const Segmentation& seg) {
  TagSequence tags;
  for (const Word& word : seg) {
    if (word.empty()) throw std::invalid_argument("encode_tags: empty word");
    if (word.size() == 1) {
      tags.push_back(Tag::S);
      continue;
    }
    tags.push_back(Tag::B);
    tags.insert(tags.end(), word.size() - 2, Tag::M);
    tags.push_back(Tag::E);
  }
  return tags;
}

std::vector<std::size_t> word_lengths(const TagSequence& tags) {
  std::vector<std::size_t> lengths;
  std::size_t current = 0;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const bool starts = tags[t] == Tag::B || tags[t] == Tag::S;
    const bool after_end = t > 0 && (tags[t - 1] == Tag::E || tags[t - 1] == Tag::S);
    if (current > 0 && (starts || after_end)) {
      lengths.push_back(current);
      current = 0;
    }
    ++current;
  }
  if (current > 0) lengths.push_back(current);
  return lengths;
}

Segmentation decode_tags(std::span<const std::string> chars, const TagSequence& tags) {
  if (chars.size() != tags.size()) {
    throw std::invalid_argument("decode_tags: " + std::to_string(chars.size()) +
                                " characters but " + std::to_string(tags.size()) + " tags");
  }
  Segmentation seg;
  std::size_t pos = 0;
  for (std::size_t len : word_lengths(tags)) {
    seg.emplace_back(chars.begin() + pos, chars.begin() + pos + len);
    pos += len;
  }
  return seg;
}

bool transition_allowed(int from, int to) {
  const bool to_start = to == static_cast<int>(Tag::B) || to == static_cast<int>(Tag::S);
  const bool to_inside = to == static_cast<int>(Tag::M) || to == static_cast<int>(Tag::E);
  switch (from) {
    case kStartTag:
      return to_start;
    case static_cast<int>(Tag::B):
    case static_cast<int>(Tag::M):
      return to_inside;
    case static_cast<int>(Tag::E):
    case static_cast<int>(Tag::S):
      return to_start || to == kEndTag;
    default:
      return false;
  }
}

bool is_valid(const TagSequence& tags) {
  if (tags.empty()) return true;
  int prev = kStartTag;
  for (Tag t : tags) {
    if (!transition_allowed(prev, static_cast<int>(t))) return false;
    prev = static_cast<int>(t);
  }
  return transition_allowed(prev, kEndTag);
}

}  // namespace cws
