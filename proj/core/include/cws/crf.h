#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cws/numerics.h"
#include "cws/tagging.h"

namespace cws {

/// Allowed transitions over K tags plus Start (index K) and End (index K+1).
class TransitionMask {
 public:
  /// Everything allowed.
  explicit TransitionMask(std::size_t num_tags);
  /// The BMES grammar: Start→{B,S}, B→{M,E}, M→{M,E}, E/S→{B,S,End}.
  static TransitionMask bmes();

  std::size_t num_tags() const { return num_tags_; }
  bool allowed(std::size_t from, std::size_t to) const { return allowed_[from * (num_tags_ + 2) + to] != 0; }
  void set(std::size_t from, std::size_t to, bool allowed);

 private:
  std::size_t num_tags_;
  std::vector<char> allowed_;
};

/// Transition scores A, (K+2) × (K+2). Rows index the source tag, columns the
/// target; row K is Start and column K+1 is End. Column K and row K+1 are unused.
struct CrfParams {
  Matrix transitions;

  static CrfParams zeros(std::size_t num_tags = kNumTags);
  std::size_t num_tags() const { return transitions.rows() - 2; }
};

/// A[Start,y₁] + Σ A[y_t,y_{t+1}] + A[y_n,End] + Σ P[t,y_t], accumulated
/// left to right in the same order Viterbi uses.
double sequence_score(const Matrix& emissions, const Matrix& transitions, std::span<const int> tags);

/// log Σ_y exp(score(y)) by the forward algorithm in log space. Masked
/// transitions are excluded; throws if no path survives the mask.
double log_partition(const Matrix& emissions, const Matrix& transitions,
                     const TransitionMask* mask = nullptr);

struct CrfLoss {
  double loss = 0.0;  // log Z − score(gold)
  Matrix d_emissions;
  Matrix d_transitions;
  Matrix marginals;   // n × K posterior tag marginals
};

CrfLoss nll_and_grads(const Matrix& emissions, const Matrix& transitions, std::span<const int> gold,
                      const TransitionMask* mask = nullptr);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

/// Highest-scoring path. Ties resolve to the lowest tag id at each step.
ViterbiResult viterbi(const Matrix& emissions, const Matrix& transitions,
                      const TransitionMask* mask = nullptr);

}  // namespace cws
