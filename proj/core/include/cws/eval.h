#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cws/tagging.h"

namespace cws {

struct Corpus;
struct Model;

/// Half-open character interval [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  auto operator<=>(const Span&) const = default;
};

/// Sorted, non-overlapping spans partitioning [0, length).
struct SpanSet {
  std::size_t length = 0;
  std::vector<Span> spans;

  bool operator==(const SpanSet&) const = default;
};

SpanSet tags_to_spans(const TagSequence& tags);
SpanSet lengths_to_spans(const std::vector<std::size_t>& word_lengths);

struct MatchCounts {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    correct += o.correct;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Exact-interval matches between two span sets over the same sentence.
MatchCounts match_spans(const SpanSet& gold, const SpanSet& pred);
/// Ratios from counts, with 0/0 taken as 0.
Prf score(const MatchCounts& counts);
Prf prf1(const SpanSet& gold, const SpanSet& pred);

/// Micro-averaged word P/R/F1 of the model's constrained decodes against the
/// gold tags of `corpus`.
MatchCounts corpus_counts(const Model& model, const Corpus& corpus);
Prf evaluate_corpus(const Model& model, const Corpus& corpus);

/// Scores two bakeoff-format streams line by line. Lines are compared by
/// their non-whitespace characters, which must agree.
MatchCounts compare_segmentations(std::istream& gold, std::istream& pred);
Prf evaluate_files(const std::filesystem::path& gold, const std::filesystem::path& pred);

}  // namespace cws
