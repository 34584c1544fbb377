#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cws/corpus.h"
#include "cws/eval.h"
#include "cws/model.h"
#include "cws/numerics.h"
#include "cws/train_config.h"

namespace cws {

/// Per-parameter sums of squared gradients, in Parameters::for_each_tensor order.
struct AdagradState {
  std::vector<std::vector<double>> accumulators;

  static AdagradState for_params(const Parameters& params);
};

/// G += g⊙g;  param −= lr · g / (sqrt(G) + eps).
void adagrad_update(std::span<double> param, std::span<const double> grad,
                    std::span<double> accumulator, double learning_rate, double epsilon);

/// Inverted dropout: each entry is 0 with probability p, else 1/(1−p).
/// A null rng means evaluation mode and yields all ones.
Vector dropout_mask(std::size_t n, double p, Rng* rng);

struct EpochStats {
  double mean_nll = 0.0;
  /// Constrained-Viterbi accuracy of the training-mode emissions seen during the epoch.
  double tag_accuracy = 0.0;
  std::size_t sentences = 0;
  std::size_t batches = 0;
};

/// One pass over `data`: shuffle, batch, and one AdaGrad step per batch on the
/// mean gradient. Throws NumericError naming the batch on a non-finite loss.
EpochStats train_epoch(Model& model, std::span<const EncodedSentence> data, AdagradState& state,
                       Rng& rng);
EpochStats train_epoch(Model& model, const Corpus& corpus, AdagradState& state, Rng& rng);

/// Evaluation-mode tag accuracy of constrained decodes.
double tag_accuracy(const Model& model, const Corpus& corpus);

struct EpochRecord {
  std::size_t epoch = 0;
  double nll = 0.0;
  double tag_accuracy = 0.0;
  Prf dev;
};

struct FitResult {
  Model best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Trains for config.epochs epochs, scoring dev after each, and returns the
/// parameters of the epoch with the highest dev F1 (earliest on ties).
FitResult fit(Model model, const Corpus& train, const Corpus& dev,
              const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace cws
