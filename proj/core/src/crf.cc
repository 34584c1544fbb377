#include "cws/crf.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cws {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t validate(const Matrix& emissions, const Matrix& transitions, const TransitionMask* mask) {
  const std::size_t k = emissions.cols();
  if (emissions.rows() == 0 || k == 0) throw ShapeError("CRF: emissions must be non-empty");
  if (transitions.rows() != k + 2 || transitions.cols() != k + 2) {
    throw ShapeError("CRF: transitions " + transitions.shape_string() + " do not match " +
                     std::to_string(k) + " tags from emissions " + emissions.shape_string());
  }
  if (mask != nullptr && mask->num_tags() != k) {
    throw ShapeError("CRF: mask over " + std::to_string(mask->num_tags()) + " tags, emissions have " +
                     std::to_string(k));
  }
  return k;
}

// Transition score with masked entries mapped to -inf.
class Transitions {
 public:
  Transitions(const Matrix& a, const TransitionMask* mask) : a_(a), mask_(mask) {}
  double operator()(std::size_t from, std::size_t to) const {
    if (mask_ != nullptr && !mask_->allowed(from, to)) return kNegInf;
    return a_(from, to);
  }

 private:
  const Matrix& a_;
  const TransitionMask* mask_;
};

Matrix forward_scores(const Matrix& p, const Transitions& trans, std::size_t k) {
  const std::size_t n = p.rows();
  Matrix alpha(n, k);
  for (std::size_t j = 0; j < k; ++j) alpha(0, j) = trans(k, j) + p(0, j);
  std::vector<double> terms(k);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) terms[i] = alpha(t - 1, i) + trans(i, j);
      alpha(t, j) = logsumexp(terms) + p(t, j);
    }
  }
  return alpha;
}

double finish_partition(const Matrix& alpha, const Transitions& trans, std::size_t k) {
  std::vector<double> terms(k);
  const std::size_t last = alpha.rows() - 1;
  for (std::size_t j = 0; j < k; ++j) terms[j] = alpha(last, j) + trans(j, k + 1);
  const double z = logsumexp(terms);
  if (z == kNegInf) throw std::domain_error("CRF: every tag path is masked out");
  return z;
}

}  // namespace

TransitionMask::TransitionMask(std::size_t num_tags)
    : num_tags_(num_tags), allowed_((num_tags + 2) * (num_tags + 2), 1) {}

TransitionMask TransitionMask::bmes() {
  TransitionMask mask(kNumTags);
  for (std::size_t from = 0; from < kNumTags + 2; ++from) {
    for (std::size_t to = 0; to < kNumTags + 2; ++to) {
      mask.set(from, to, transition_allowed(static_cast<int>(from), static_cast<int>(to)));
    }
  }
  return mask;
}

void TransitionMask::set(std::size_t from, std::size_t to, bool allowed) {
  if (from >= num_tags_ + 2 || to >= num_tags_ + 2) throw std::out_of_range("TransitionMask::set");
  allowed_[from * (num_tags_ + 2) + to] = allowed ? 1 : 0;
}

CrfParams CrfParams::zeros(std::size_t num_tags) { return {Matrix(num_tags + 2, num_tags + 2)}; }

double sequence_score(const Matrix& emissions, const Matrix& transitions, std::span<const int> tags) {
  const std::size_t k = validate(emissions, transitions, nullptr);
  if (tags.size() != emissions.rows()) {
    throw std::invalid_argument("sequence_score: " + std::to_string(tags.size()) + " tags for " +
                                std::to_string(emissions.rows()) + " positions");
  }
  for (int y : tags) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw std::invalid_argument("sequence_score: tag id " + std::to_string(y) + " out of range");
    }
  }
  auto at = [&](std::size_t t) { return static_cast<std::size_t>(tags[t]); };
  double score = transitions(k, at(0)) + emissions(0, at(0));
  for (std::size_t t = 1; t < tags.size(); ++t) {
    score = score + transitions(at(t - 1), at(t));
    score = score + emissions(t, at(t));
  }
  return score + transitions(at(tags.size() - 1), k + 1);
}

double log_partition(const Matrix& emissions, const Matrix& transitions, const TransitionMask* mask) {
  const std::size_t k = validate(emissions, transitions, mask);
  const Transitions trans(transitions, mask);
  return finish_partition(forward_scores(emissions, trans, k), trans, k);
}

CrfLoss nll_and_grads(const Matrix& emissions, const Matrix& transitions, std::span<const int> gold,
                      const TransitionMask* mask) {
  const std::size_t k = validate(emissions, transitions, mask);
  const std::size_t n = emissions.rows();
  const double gold_score = sequence_score(emissions, transitions, gold);
  if (mask != nullptr) {
    std::size_t prev = k;
    for (int y : gold) {
      if (!mask->allowed(prev, static_cast<std::size_t>(y))) {
        throw std::invalid_argument("nll_and_grads: gold path uses a masked transition");
      }
      prev = static_cast<std::size_t>(y);
    }
    if (!mask->allowed(prev, k + 1)) {
      throw std::invalid_argument("nll_and_grads: gold path uses a masked transition");
    }
  }

  const Transitions trans(transitions, mask);
  const Matrix alpha = forward_scores(emissions, trans, k);
  const double log_z = finish_partition(alpha, trans, k);

  Matrix beta(n, k);
  for (std::size_t i = 0; i < k; ++i) beta(n - 1, i) = trans(i, k + 1);
  std::vector<double> terms(k);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) terms[j] = trans(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      beta(t, i) = logsumexp(terms);
    }
  }

  CrfLoss out;
  out.loss = log_z - gold_score;
  out.marginals = Matrix(n, k);
  out.d_emissions = Matrix(n, k);
  out.d_transitions = Matrix(k + 2, k + 2);
  Matrix& da = out.d_transitions;

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const double m = std::exp(alpha(t, j) + beta(t, j) - log_z);
      out.marginals(t, j) = m;
      out.d_emissions(t, j) = m;
    }
    out.d_emissions(t, static_cast<std::size_t>(gold[t])) -= 1.0;
  }
  for (std::size_t j = 0; j < k; ++j) {
    da(k, j) += out.marginals(0, j);
    da(j, k + 1) += out.marginals(n - 1, j);
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double logp = alpha(t - 1, i) + trans(i, j) + emissions(t, j) + beta(t, j) - log_z;
        da(i, j) += std::exp(logp);
      }
    }
  }
  da(k, static_cast<std::size_t>(gold.front())) -= 1.0;
  da(static_cast<std::size_t>(gold.back()), k + 1) -= 1.0;
  for (std::size_t t = 1; t < n; ++t) {
    da(static_cast<std::size_t>(gold[t - 1]), static_cast<std::size_t>(gold[t])) -= 1.0;
  }
  return out;
}

ViterbiResult viterbi(const Matrix& emissions, const Matrix& transitions, const TransitionMask* mask) {
  const std::size_t k = validate(emissions, transitions, mask);
  const std::size_t n = emissions.rows();
  const Transitions trans(transitions, mask);

  Matrix delta(n, k);
  std::vector<int> back((n - 1) * k);
  for (std::size_t j = 0; j < k; ++j) delta(0, j) = trans(k, j) + emissions(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const double cand = delta(t - 1, i) + trans(i, j);
        if (cand > best) {
          best = cand;
          arg = static_cast<int>(i);
        }
      }
      delta(t, j) = best + emissions(t, j);
      back[(t - 1) * k + j] = arg;
    }
  }

  double best = kNegInf;
  int last = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double cand = delta(n - 1, j) + trans(j, k + 1);
    if (cand > best) {
      best = cand;
      last = static_cast<int>(j);
    }
  }
  if (best == kNegInf) throw std::domain_error("viterbi: no feasible tag path");

  ViterbiResult out;
  out.score = best;
  out.path.resize(n);
  out.path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) {
    out.path[t - 1] = back[(t - 1) * k + static_cast<std::size_t>(out.path[t])];
  }
  return out;
}

}  // namespace cws
