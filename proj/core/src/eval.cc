#include "cws/eval.h"

#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>

#include "cws/corpus.h"
#include "cws/model.h"
#include "cws/utf8.h"

namespace cws {
namespace {

struct SegmentedLine {
  std::string chars;  // non-whitespace characters, concatenated
  std::vector<std::size_t> lengths;
};

SegmentedLine parse_segmented(const std::string& line, std::size_t line_no, const char* which) {
  SegmentedLine out;
  std::vector<std::string> chars;
  try {
    chars = utf8::split(line);
  } catch (const utf8::DecodeError& e) {
    throw FormatError(std::string(which) + ": " + e.what(), line_no);
  }
  std::size_t current = 0;
  for (const auto& ch : chars) {
    if (utf8::is_space(ch)) {
      if (current > 0) out.lengths.push_back(current);
      current = 0;
      continue;
    }
    out.chars += ch;
    ++current;
  }
  if (current > 0) out.lengths.push_back(current);
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return true;
}

}  // namespace

SpanSet lengths_to_spans(const std::vector<std::size_t>& word_lengths) {
  SpanSet out;
  for (std::size_t len : word_lengths) {
    out.spans.push_back({out.length, out.length + len});
    out.length += len;
  }
  return out;
}

SpanSet tags_to_spans(const TagSequence& tags) { return lengths_to_spans(word_lengths(tags)); }

MatchCounts match_spans(const SpanSet& gold, const SpanSet& pred) {
  if (gold.length != pred.length) {
    throw std::invalid_argument("span sets cover different lengths: " + std::to_string(gold.length) +
                                " vs " + std::to_string(pred.length));
  }
  MatchCounts c{0, pred.spans.size(), gold.spans.size()};
  std::size_t i = 0, j = 0;
  while (i < gold.spans.size() && j < pred.spans.size()) {
    if (gold.spans[i] == pred.spans[j]) {
      ++c.correct;
      ++i;
      ++j;
    } else if (gold.spans[i] < pred.spans[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return c;
}

Prf score(const MatchCounts& c) {
  Prf out;
  if (c.predicted > 0) out.precision = static_cast<double>(c.correct) / static_cast<double>(c.predicted);
  if (c.gold > 0) out.recall = static_cast<double>(c.correct) / static_cast<double>(c.gold);
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

Prf prf1(const SpanSet& gold, const SpanSet& pred) { return score(match_spans(gold, pred)); }

MatchCounts corpus_counts(const Model& model, const Corpus& corpus) {
  MatchCounts total;
  for (const auto& sentence : corpus.sentences) {
    total += match_spans(tags_to_spans(sentence.tags), tags_to_spans(decode(model, sentence.symbols)));
  }
  return total;
}

Prf evaluate_corpus(const Model& model, const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("evaluate_corpus: empty corpus");
  return score(corpus_counts(model, corpus));
}

MatchCounts compare_segmentations(std::istream& gold, std::istream& pred) {
  MatchCounts total;
  std::string gline, pline;
  std::size_t line_no = 0;
  while (true) {
    const bool has_gold = next_line(gold, gline);
    const bool has_pred = next_line(pred, pline);
    if (!has_gold && !has_pred) break;
    ++line_no;
    if (has_gold != has_pred) {
      throw FormatError(std::string(has_gold ? "prediction" : "gold") + " file ends early", line_no);
    }
    const auto g = parse_segmented(gline, line_no, "gold");
    const auto p = parse_segmented(pline, line_no, "prediction");
    if (g.chars != p.chars) throw FormatError("gold and prediction characters differ", line_no);
    total += match_spans(lengths_to_spans(g.lengths), lengths_to_spans(p.lengths));
  }
  return total;
}

Prf evaluate_files(const std::filesystem::path& gold, const std::filesystem::path& pred) {
  std::ifstream g(gold, std::ios::binary), p(pred, std::ios::binary);
  if (!g) throw FormatError("cannot open " + gold.string());
  if (!p) throw FormatError("cannot open " + pred.string());
  return score(compare_segmentations(g, p));
}

}  // namespace cws
