#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cws/corpus.h"
#include "cws/crf.h"
#include "cws/encoder.h"
#include "cws/numerics.h"
#include "cws/tagging.h"
#include "cws/train_config.h"

namespace cws {

/// Everything that is learned: embeddings, encoder weights and the CRF
/// transition matrix.
struct Parameters {
  Matrix unigram;
  Matrix bigram;  // 0 × 0 when the bigram channel is off
  EncoderParams encoder;
  Matrix transitions;

  Parameters zeros_like() const;
  std::size_t count() const;

  /// f(name, values, shape) for every tensor, in serialization order.
  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    auto mat = [&](const char* name, auto& m) {
      f(std::string(name), m.values(), std::vector<std::size_t>{m.rows(), m.cols()});
    };
    mat("embed.unigram", self.unigram);
    if (self.bigram.size() > 0) mat("embed.bigram", self.bigram);
    self.encoder.for_each_tensor(f);
    mat("crf.transitions", self.transitions);
  }
};

struct Model {
  TrainConfig config;
  Vocab vocab;
  Vocab bigram_vocab;
  Parameters params;

  EncoderConfig encoder_config() const;
};

/// Builds a freshly initialized model. Pretrained tables, when given, must
/// have one row per vocabulary entry.
Model make_model(const TrainConfig& config, Vocab vocab, Vocab bigram_vocab, Rng& rng,
                 const Matrix* pretrained_unigram = nullptr,
                 const Matrix* pretrained_bigram = nullptr);

/// A sentence mapped to model ids.
struct EncodedSentence {
  std::vector<int> ids;
  std::vector<int> bigram_ids;  // empty when the bigram channel is off
  std::vector<int> gold;        // tag ids; empty for unlabeled input
};

EncodedSentence encode_symbols(const Model& model, std::span<const std::string> symbols);
EncodedSentence encode_sentence(const Model& model, const Sentence& sentence);

std::vector<Vector> model_inputs(const Model& model, const EncodedSentence& sentence);

/// Evaluation-mode emissions (no dropout).
Matrix compute_emissions(const Model& model, const EncodedSentence& sentence);

struct SentenceLoss {
  double loss = 0.0;
  Matrix emissions;
};

/// Forward and backward pass for one labeled sentence. Adds `scale` times the
/// gradient of its negative log-likelihood into `grads`.
SentenceLoss accumulate_gradients(const Model& model, const EncodedSentence& sentence,
                                  const MaskSource* dropout, Parameters& grads, double scale = 1.0);

/// NLL of one labeled sentence without gradients.
double sentence_nll(const Model& model, const EncodedSentence& sentence);

/// Viterbi decoding, BMES-constrained unless the config disables it.
TagSequence decode(const Model& model, const EncodedSentence& sentence);
TagSequence decode(const Model& model, std::span<const std::string> symbols);

/// Rounds every parameter to binary32, the precision models are stored at.
void round_to_storage_precision(Parameters& params);

}  // namespace cws
