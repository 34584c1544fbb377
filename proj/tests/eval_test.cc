#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cws/corpus.h"
#include "cws/eval.h"
#include "oracles.h"

namespace cws {
namespace {

SpanSet spans(std::size_t length, std::vector<Span> s) { return {length, std::move(s)}; }

TEST(Spans, FromTags) {
  EXPECT_EQ(tags_to_spans(parse_tags("BESBMEBEBE")),
            spans(10, {{0, 2}, {2, 3}, {3, 6}, {6, 8}, {8, 10}}));
  EXPECT_EQ(tags_to_spans(parse_tags("S")), spans(1, {{0, 1}}));
  EXPECT_EQ(tags_to_spans({}), spans(0, {}));
  EXPECT_EQ(lengths_to_spans({2, 1}), spans(3, {{0, 2}, {2, 3}}));
}

TEST(Prf1, HandDerivedFixture) {
  const SpanSet gold = spans(3, {{0, 2}, {2, 3}});
  const SpanSet pred = spans(3, {{0, 1}, {1, 2}, {2, 3}});
  const MatchCounts c = match_spans(gold, pred);
  EXPECT_EQ(c.correct, 1u);
  EXPECT_EQ(c.predicted, 3u);
  EXPECT_EQ(c.gold, 2u);
  const Prf prf = prf1(gold, pred);
  EXPECT_DOUBLE_EQ(prf.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(prf.recall, 0.5);
  EXPECT_DOUBLE_EQ(prf.f1, 0.4);
}

TEST(Prf1, IdenticalIsPerfect) {
  const SpanSet s = spans(4, {{0, 1}, {1, 4}});
  const Prf prf = prf1(s, s);
  EXPECT_EQ(prf.precision, 1.0);
  EXPECT_EQ(prf.recall, 1.0);
  EXPECT_EQ(prf.f1, 1.0);
}

TEST(Prf1, DisjointIsZero) {
  const Prf prf = prf1(spans(2, {{0, 2}}), spans(2, {{0, 1}, {1, 2}}));
  EXPECT_EQ(prf.precision, 0.0);
  EXPECT_EQ(prf.recall, 0.0);
  EXPECT_EQ(prf.f1, 0.0);
  const Prf empty = score({});
  EXPECT_EQ(empty.f1, 0.0);
}

TEST(Prf1, LengthMismatchThrows) {
  EXPECT_THROW(match_spans(spans(2, {{0, 2}}), spans(3, {{0, 3}})), std::invalid_argument);
}

TEST(MicroAverage, HandDerivedFixture) {
  MatchCounts total;
  total += MatchCounts{1, 2, 2};
  total += MatchCounts{1, 1, 2};
  const Prf prf = score(total);
  EXPECT_DOUBLE_EQ(prf.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(prf.recall, 0.5);
  EXPECT_DOUBLE_EQ(prf.f1, 4.0 / 7.0);
}

TEST(MicroAverage, SingleSentenceEqualsPerSentence) {
  const SpanSet gold = spans(3, {{0, 2}, {2, 3}});
  const SpanSet pred = spans(3, {{0, 1}, {1, 2}, {2, 3}});
  MatchCounts total;
  total += match_spans(gold, pred);
  const Prf a = score(total), b = prf1(gold, pred);
  EXPECT_EQ(a.precision, b.precision);
  EXPECT_EQ(a.recall, b.recall);
  EXPECT_EQ(a.f1, b.f1);
}

TEST(CompareSegmentations, MicroAveragesLines) {
  std::istringstream gold("中国 人民\n我 爱 你\n\n");
  std::istringstream pred("中国人民\n我 爱 你\n\n");
  const MatchCounts c = compare_segmentations(gold, pred);
  EXPECT_EQ(c.correct, 3u);
  EXPECT_EQ(c.predicted, 4u);
  EXPECT_EQ(c.gold, 5u);
}

TEST(CompareSegmentations, CharacterMismatchThrows) {
  std::istringstream gold("中国\n");
  std::istringstream pred("中华\n");
  EXPECT_THROW(compare_segmentations(gold, pred), FormatError);
  std::istringstream gold2("中国\n人\n");
  std::istringstream pred2("中国\n");
  EXPECT_THROW(compare_segmentations(gold2, pred2), FormatError);
}

TEST(EvaluateFiles, ReadsBothFiles) {
  oracle::TempDir dir("eval");
  std::ofstream(dir / "g.txt") << "中国 向 全世界\n";
  std::ofstream(dir / "p.txt") << "中国 向 全 世界\n";
  const Prf prf = evaluate_files(dir / "g.txt", dir / "p.txt");
  EXPECT_DOUBLE_EQ(prf.precision, 0.5);
  EXPECT_DOUBLE_EQ(prf.recall, 2.0 / 3.0);
}

}  // namespace
}  // namespace cws
