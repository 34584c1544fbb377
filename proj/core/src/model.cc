#include "cws/model.h"

#include <stdexcept>

namespace cws {
namespace {

const TransitionMask& bmes_mask() {
  static const TransitionMask mask = TransitionMask::bmes();
  return mask;
}

// Adds the gradient of the featurized inputs back into the embedding rows
// they were gathered from.
void scatter_input_grads(const Model& model, const EncodedSentence& s,
                         const std::vector<Vector>& d_inputs, Parameters& grads) {
  const std::size_t dim = model.config.emb_dim;
  const std::size_t window = model.config.window;
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto n = static_cast<std::ptrdiff_t>(s.ids.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto& dx = d_inputs[static_cast<std::size_t>(t)];
    std::size_t offset = 0;
    for (std::ptrdiff_t k = t - half; k <= t + half; ++k, offset += dim) {
      const int id = (k < 0 || k >= n) ? kPadId : s.ids[static_cast<std::size_t>(k)];
      axpy(1.0, dx.values().subspan(offset, dim), grads.unigram.row(static_cast<std::size_t>(id)));
    }
    if (!s.bigram_ids.empty()) {
      const std::size_t bdim = grads.bigram.cols();
      axpy(1.0, dx.values().subspan(offset, bdim),
           grads.bigram.row(static_cast<std::size_t>(s.bigram_ids[static_cast<std::size_t>(t)])));
    }
  }
}

const TransitionMask* loss_mask(const Model& model) {
  return model.config.train_mask ? &bmes_mask() : nullptr;
}

}  // namespace

Parameters Parameters::zeros_like() const {
  Parameters z;
  z.unigram = Matrix(unigram.rows(), unigram.cols());
  z.bigram = Matrix(bigram.rows(), bigram.cols());
  z.encoder = encoder.zeros_like();
  z.transitions = Matrix(transitions.rows(), transitions.cols());
  return z;
}

std::size_t Parameters::count() const {
  std::size_t total = 0;
  for_each_tensor([&](const std::string&, std::span<const double> v, const auto&) { total += v.size(); });
  return total;
}

EncoderConfig Model::encoder_config() const {
  EncoderConfig ec;
  ec.input_dim = config.input_dim();
  ec.hidden = config.hidden;
  ec.attn_dim = config.effective_attn_dim();
  ec.extra_layers = config.extra_layers;
  ec.num_tags = kNumTags;
  return ec;
}

Model make_model(const TrainConfig& config, Vocab vocab, Vocab bigram_vocab, Rng& rng,
                 const Matrix* pretrained_unigram, const Matrix* pretrained_bigram) {
  config.validate();
  Model model{config, std::move(vocab), std::move(bigram_vocab), {}};
  auto table = [&](const Matrix* pretrained, std::size_t rows, std::size_t dim, const char* what) {
    if (pretrained == nullptr) return random_embeddings(rows, dim, rng);
    if (pretrained->rows() != rows || pretrained->cols() != dim) {
      throw ShapeError(std::string(what) + " embeddings " + pretrained->shape_string() +
                       " do not match vocabulary size " + std::to_string(rows) + " and dim " +
                       std::to_string(dim));
    }
    return *pretrained;
  };
  model.params.unigram = table(pretrained_unigram, model.vocab.size(), config.emb_dim, "unigram");
  if (config.bigram) {
    model.params.bigram =
        table(pretrained_bigram, model.bigram_vocab.size(), config.effective_bigram_dim(), "bigram");
  }
  model.params.encoder = EncoderParams::init(model.encoder_config(), rng);
  model.params.transitions = CrfParams::zeros(kNumTags).transitions;
  return model;
}

EncodedSentence encode_symbols(const Model& model, std::span<const std::string> symbols) {
  EncodedSentence s;
  s.ids = model.vocab.encode(symbols);
  if (model.config.bigram) s.bigram_ids = model.bigram_vocab.encode(bigram_symbols(symbols));
  return s;
}

EncodedSentence encode_sentence(const Model& model, const Sentence& sentence) {
  EncodedSentence s = encode_symbols(model, sentence.symbols);
  s.gold = tag_ids(sentence.tags);
  return s;
}

std::vector<Vector> model_inputs(const Model& model, const EncodedSentence& sentence) {
  return featurize(sentence.ids, model.params.unigram, sentence.bigram_ids,
                   model.config.bigram ? &model.params.bigram : nullptr, model.config.window);
}

Matrix compute_emissions(const Model& model, const EncodedSentence& sentence) {
  ForwardOptions opts;
  opts.memory_span = model.config.memory_span;
  return bilstm_forward(model_inputs(model, sentence), model.params.encoder, opts);
}

SentenceLoss accumulate_gradients(const Model& model, const EncodedSentence& sentence,
                                  const MaskSource* dropout, Parameters& grads, double scale) {
  if (sentence.gold.size() != sentence.ids.size()) {
    throw std::invalid_argument("accumulate_gradients: sentence lacks gold tags");
  }
  ForwardOptions opts;
  opts.memory_span = model.config.memory_span;
  opts.dropout = dropout;
  EncoderCache cache;
  const auto inputs = model_inputs(model, sentence);
  Matrix emissions = bilstm_forward(inputs, model.params.encoder, opts, &cache);

  CrfLoss crf = nll_and_grads(emissions, model.params.transitions, sentence.gold, loss_mask(model));
  axpy(scale, crf.d_transitions.values(), grads.transitions.values());
  for (double& g : crf.d_emissions.values()) g *= scale;
  const auto d_inputs = encoder_backward(model.params.encoder, cache, crf.d_emissions, grads.encoder);
  scatter_input_grads(model, sentence, d_inputs, grads);
  return {crf.loss, std::move(emissions)};
}

double sentence_nll(const Model& model, const EncodedSentence& sentence) {
  const Matrix emissions = compute_emissions(model, sentence);
  return log_partition(emissions, model.params.transitions, loss_mask(model)) -
         sequence_score(emissions, model.params.transitions, sentence.gold);
}

TagSequence decode(const Model& model, const EncodedSentence& sentence) {
  if (sentence.ids.empty()) return {};
  const Matrix emissions = compute_emissions(model, sentence);
  const TransitionMask* mask = model.config.decode_mask ? &bmes_mask() : nullptr;
  return tags_from_ids(viterbi(emissions, model.params.transitions, mask).path);
}

TagSequence decode(const Model& model, std::span<const std::string> symbols) {
  return decode(model, encode_symbols(model, symbols));
}

void round_to_storage_precision(Parameters& params) {
  params.for_each_tensor([](const std::string&, std::span<double> v, const auto&) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  });
}

}  // namespace cws
