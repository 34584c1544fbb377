#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cws/crf.h"
#include "oracles.h"

namespace cws {
namespace {

using oracle::random_matrix;

auto bmes_allowed = [](int from, int to) { return transition_allowed(from, to); };

TEST(SequenceScore, ZeroTransitionsSingleCharacter) {
  std::mt19937_64 gen(1);
  const Matrix p = random_matrix(1, 4, gen);
  const Matrix a(6, 6);
  for (int y = 0; y < 4; ++y) {
    const std::vector<int> tags{y};
    EXPECT_EQ(sequence_score(p, a, tags), p(0, static_cast<std::size_t>(y)));
  }
}

TEST(SequenceScore, ZeroEmissionsSumsTransitions) {
  std::mt19937_64 gen(2);
  const Matrix p(2, 4);
  const Matrix a = random_matrix(6, 6, gen);
  const int b = static_cast<int>(Tag::B), e = static_cast<int>(Tag::E);
  const std::vector<int> tags{b, e};
  EXPECT_DOUBLE_EQ(sequence_score(p, a, tags), a(4, 0) + a(0, 2) + a(2, 5));
}

TEST(SequenceScore, MatchesHandSummation) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 5;
    const Matrix p = random_matrix(n, 4, gen);
    const Matrix a = random_matrix(6, 6, gen);
    std::vector<int> y(n);
    for (auto& t : y) t = static_cast<int>(gen() % 4);
    EXPECT_EQ(sequence_score(p, a, y), oracle::path_score(p, a, y));
  }
}

TEST(SequenceScore, RejectsBadInput) {
  const Matrix p(2, 4), a(6, 6);
  EXPECT_THROW(sequence_score(p, a, std::vector<int>{0}), std::invalid_argument);
  EXPECT_THROW(sequence_score(p, a, std::vector<int>{0, 4}), std::invalid_argument);
  EXPECT_THROW(sequence_score(p, Matrix(5, 5), std::vector<int>{0, 1}), ShapeError);
}

TEST(LogPartition, ZeroTransitionsFactorize) {
  std::mt19937_64 gen(4);
  const Matrix p = random_matrix(5, 4, gen);
  double expected = 0.0;
  for (std::size_t t = 0; t < p.rows(); ++t) expected += logsumexp(p.row(t));
  EXPECT_NEAR(log_partition(p, Matrix(6, 6)), expected, 1e-12);
}

TEST(LogPartition, SingleTagSinglePosition) {
  const Matrix p{{0.7}};
  const Matrix a{{0.0, 0.0, 0.3}, {1.5, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  EXPECT_DOUBLE_EQ(log_partition(p, a), 1.5 + 0.7 + 0.3);
}

TEST(LogPartition, MatchesBruteForce) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 6;
    const Matrix p = random_matrix(n, 4, gen);
    const Matrix a = random_matrix(6, 6, gen);
    EXPECT_NEAR(log_partition(p, a), oracle::enumerate(p, a).log_z, 1e-8);
  }
}

TEST(LogPartition, MaskedMatchesFilteredBruteForce) {
  std::mt19937_64 gen(6);
  const TransitionMask mask = TransitionMask::bmes();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 6;
    const Matrix p = random_matrix(n, 4, gen);
    const Matrix a = random_matrix(6, 6, gen);
    EXPECT_NEAR(log_partition(p, a, &mask), oracle::enumerate(p, a, bmes_allowed).log_z, 1e-8);
  }
}

TEST(LogPartition, FullyMaskedThrows) {
  TransitionMask mask(4);
  for (std::size_t j = 0; j < 4; ++j) mask.set(4, j, false);
  EXPECT_THROW(log_partition(Matrix(2, 4), Matrix(6, 6), &mask), std::domain_error);
}

TEST(Nll, SingleTagHasZeroLossAndGradients) {
  std::mt19937_64 gen(7);
  const Matrix p = random_matrix(3, 1, gen);
  const Matrix a = random_matrix(3, 3, gen);
  const CrfLoss out = nll_and_grads(p, a, std::vector<int>{0, 0, 0});
  EXPECT_NEAR(out.loss, 0.0, 1e-12);
  for (double g : out.d_emissions.values()) EXPECT_NEAR(g, 0.0, 1e-12);
  for (double g : out.d_transitions.values()) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(Nll, MarginalsNormalizeAndMatchBruteForce) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + gen() % 5;
    const Matrix p = random_matrix(n, 4, gen);
    const Matrix a = random_matrix(6, 6, gen);
    std::vector<int> gold(n);
    for (auto& y : gold) y = static_cast<int>(gen() % 4);
    const CrfLoss out = nll_and_grads(p, a, gold);
    const auto brute = oracle::enumerate(p, a);
    EXPECT_NEAR(out.loss, brute.log_z - oracle::path_score(p, a, gold), 1e-9);
    for (std::size_t t = 0; t < n; ++t) {
      double total = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        total += out.marginals(t, k);
        EXPECT_NEAR(out.marginals(t, k), brute.marginals[t][k], 1e-10);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

void check_crf_gradients(const TransitionMask* mask, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (std::size_t n = 1; n <= 4; ++n) {
    const Matrix p = random_matrix(n, 4, gen);
    const Matrix a = random_matrix(6, 6, gen);
    std::vector<int> gold;
    if (mask != nullptr) {
      // A grammatical gold path: words of random length.
      while (gold.size() < n) {
        const std::size_t len = std::min<std::size_t>(1 + gen() % 3, n - gold.size());
        if (len == 1) {
          gold.push_back(3);
        } else {
          gold.push_back(0);
          for (std::size_t i = 2; i < len; ++i) gold.push_back(1);
          gold.push_back(2);
        }
      }
    } else {
      for (std::size_t t = 0; t < n; ++t) gold.push_back(static_cast<int>(gen() % 4));
    }
    const CrfLoss out = nll_and_grads(p, a, gold, mask);
    std::vector<double> point(p.values().begin(), p.values().end());
    point.insert(point.end(), a.values().begin(), a.values().end());
    std::vector<double> analytic(out.d_emissions.values().begin(), out.d_emissions.values().end());
    analytic.insert(analytic.end(), out.d_transitions.values().begin(), out.d_transitions.values().end());
    auto f = [&](std::span<const double> flat) {
      Matrix pp(n, 4), aa(6, 6);
      std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(pp.size()), pp.values().begin());
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pp.size()), flat.end(), aa.values().begin());
      return log_partition(pp, aa, mask) - sequence_score(pp, aa, gold);
    };
    // Under the mask some marginals sit near 1e-5, where central differences
    // carry about 1e-10 of round-off. A floor of 1e-3 turns the bound into an
    // absolute tolerance of 1e-9 on those entries.
    EXPECT_LT(grad_check(f, analytic, point, 1e-5, mask ? 1e-3 : 1e-8), 1e-6) << "n=" << n;
  }
}

TEST(Nll, GradientsMatchFiniteDifferences) { check_crf_gradients(nullptr, 9); }

TEST(Nll, MaskedGradientsMatchFiniteDifferences) {
  const TransitionMask mask = TransitionMask::bmes();
  check_crf_gradients(&mask, 10);
}

TEST(Nll, MaskedGoldPathThrows) {
  const TransitionMask mask = TransitionMask::bmes();
  EXPECT_THROW(nll_and_grads(Matrix(2, 4), Matrix(6, 6), std::vector<int>{0, 0}, &mask),
               std::invalid_argument);
}

TEST(Viterbi, ZeroTransitionsIsPerPositionArgmax) {
  std::mt19937_64 gen(11);
  const Matrix p = random_matrix(6, 4, gen);
  const auto result = viterbi(p, Matrix(6, 6));
  for (std::size_t t = 0; t < p.rows(); ++t) {
    const auto row = p.row(t);
    EXPECT_EQ(result.path[t], std::max_element(row.begin(), row.end()) - row.begin());
  }
}

TEST(Viterbi, MaskedSingleCharacterIsS) {
  const TransitionMask mask = TransitionMask::bmes();
  const auto result = viterbi(Matrix(1, 4), Matrix(6, 6), &mask);
  EXPECT_EQ(result.path, std::vector<int>{static_cast<int>(Tag::S)});
}

TEST(Viterbi, TiesGoToLowestTagId) {
  const auto result = viterbi(Matrix(3, 4), Matrix(6, 6));
  EXPECT_EQ(result.path, (std::vector<int>{0, 0, 0}));
  const TransitionMask mask = TransitionMask::bmes();
  // All grammatical paths tie at zero. The last tag is the lowest feasible
  // final tag (E) and each backpointer takes the lowest tied predecessor.
  EXPECT_EQ(viterbi(Matrix(3, 4), Matrix(6, 6), &mask).path, (std::vector<int>{3, 0, 2}));
}

TEST(Viterbi, MatchesBruteForce) {
  std::mt19937_64 gen(12);
  const TransitionMask mask = TransitionMask::bmes();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 6;
    const Matrix p = random_matrix(n, 4, gen);
    const Matrix a = random_matrix(6, 6, gen);
    const auto brute = oracle::enumerate(p, a);
    const auto got = viterbi(p, a);
    EXPECT_EQ(got.score, brute.best_score);
    EXPECT_EQ(got.path, brute.best_path);
    EXPECT_EQ(sequence_score(p, a, got.path), got.score);

    const auto masked_brute = oracle::enumerate(p, a, bmes_allowed);
    const auto masked = viterbi(p, a, &mask);
    EXPECT_EQ(masked.score, masked_brute.best_score);
    EXPECT_EQ(masked.path, masked_brute.best_path);
    EXPECT_TRUE(is_valid(tags_from_ids(masked.path)));
  }
}

TEST(Viterbi, InfeasibleThrows) {
  TransitionMask mask(4);
  for (std::size_t j = 0; j < 4; ++j) mask.set(j, 5, false);
  EXPECT_THROW(viterbi(Matrix(2, 4), Matrix(6, 6), &mask), std::domain_error);
}

}  // namespace
}  // namespace cws
