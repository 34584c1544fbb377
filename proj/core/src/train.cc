#include "cws/train.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cws {
namespace {

std::vector<std::span<double>> tensor_spans(Parameters& params) {
  std::vector<std::span<double>> out;
  params.for_each_tensor([&](const std::string&, std::span<double> v, const auto&) { out.push_back(v); });
  return out;
}

const TransitionMask& bmes_mask() {
  static const TransitionMask mask = TransitionMask::bmes();
  return mask;
}

std::size_t count_correct(const std::vector<int>& predicted, const std::vector<int>& gold) {
  std::size_t correct = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) correct += predicted[t] == gold[t] ? 1 : 0;
  return correct;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(adagrad_epsilon > 0.0)) fail("adagrad_epsilon must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (hidden == 0) fail("hidden must be positive");
  if (emb_dim == 0) fail("emb_dim must be positive");
  if (extra_layers > 2) fail("extra_layers must be 0, 1 or 2");
  if (window == 0 || window % 2 == 0) fail("window must be odd and positive");
  if (max_grad_norm < 0.0) fail("max_grad_norm must be non-negative");
}

AdagradState AdagradState::for_params(const Parameters& params) {
  AdagradState state;
  params.for_each_tensor([&](const std::string&, std::span<const double> v, const auto&) {
    state.accumulators.emplace_back(v.size(), 0.0);
  });
  return state;
}

void adagrad_update(std::span<double> param, std::span<const double> grad,
                    std::span<double> accumulator, double learning_rate, double epsilon) {
  if (param.size() != grad.size() || param.size() != accumulator.size()) {
    throw ShapeError("adagrad_update: param " + std::to_string(param.size()) + ", grad " +
                     std::to_string(grad.size()) + ", accumulator " + std::to_string(accumulator.size()));
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    accumulator[i] += g * g;
    param[i] -= learning_rate * g / (std::sqrt(accumulator[i]) + epsilon);
  }
}

Vector dropout_mask(std::size_t n, double p, Rng* rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  Vector mask(n, 1.0);
  if (rng == nullptr || p == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng->uniform() < p ? 0.0 : keep_scale;
  return mask;
}

EpochStats train_epoch(Model& model, std::span<const EncodedSentence> data, AdagradState& state,
                       Rng& rng) {
  if (data.empty()) throw std::invalid_argument("train_epoch: empty training set");
  const TrainConfig& config = model.config;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  Parameters grads = model.params.zeros_like();
  auto param_spans = tensor_spans(model.params);
  auto grad_spans = tensor_spans(grads);
  if (state.accumulators.size() != param_spans.size()) {
    throw ShapeError("train_epoch: AdaGrad state does not match the model");
  }
  const TransitionMask* decode_mask = config.decode_mask ? &bmes_mask() : nullptr;

  EpochStats stats;
  double total_loss = 0.0;
  std::size_t correct = 0, positions = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    const double scale = 1.0 / static_cast<double>(end - begin);
    for (auto g : grad_spans) std::fill(g.begin(), g.end(), 0.0);

    for (std::size_t k = begin; k < end; ++k) {
      const EncodedSentence& sentence = data[order[k]];
      Rng dropout_rng(rng.next());
      const MaskSource masks = [&](std::size_t n) { return dropout_mask(n, config.dropout, &dropout_rng); };
      const SentenceLoss result =
          accumulate_gradients(model, sentence, config.dropout > 0.0 ? &masks : nullptr, grads, scale);
      if (!std::isfinite(result.loss)) {
        throw NumericError("non-finite loss in batch " + std::to_string(stats.batches) + " (sentence " +
                           std::to_string(order[k]) + ", length " + std::to_string(sentence.ids.size()) + ")");
      }
      total_loss += result.loss;
      const auto predicted = viterbi(result.emissions, model.params.transitions, decode_mask).path;
      correct += count_correct(predicted, sentence.gold);
      positions += sentence.gold.size();
    }

    if (config.max_grad_norm > 0.0) {
      double sq = 0.0;
      for (auto g : grad_spans) sq += dot(g, g);
      const double norm = std::sqrt(sq);
      if (norm > config.max_grad_norm) {
        const double shrink = config.max_grad_norm / norm;
        for (auto g : grad_spans) {
          for (double& x : g) x *= shrink;
        }
      }
    }
    for (std::size_t i = 0; i < param_spans.size(); ++i) {
      adagrad_update(param_spans[i], grad_spans[i], state.accumulators[i], config.learning_rate,
                     config.adagrad_epsilon);
    }
    ++stats.batches;
  }
  stats.sentences = data.size();
  stats.mean_nll = total_loss / static_cast<double>(data.size());
  stats.tag_accuracy = positions ? static_cast<double>(correct) / static_cast<double>(positions) : 0.0;
  return stats;
}

EpochStats train_epoch(Model& model, const Corpus& corpus, AdagradState& state, Rng& rng) {
  std::vector<EncodedSentence> data;
  data.reserve(corpus.size());
  for (const auto& s : corpus.sentences) data.push_back(encode_sentence(model, s));
  return train_epoch(model, data, state, rng);
}

double tag_accuracy(const Model& model, const Corpus& corpus) {
  std::size_t correct = 0, positions = 0;
  for (const auto& s : corpus.sentences) {
    const TagSequence predicted = decode(model, s.symbols);
    for (std::size_t t = 0; t < s.tags.size(); ++t) correct += predicted[t] == s.tags[t] ? 1 : 0;
    positions += s.tags.size();
  }
  return positions ? static_cast<double>(correct) / static_cast<double>(positions) : 0.0;
}

FitResult fit(Model model, const Corpus& train, const Corpus& dev,
              const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train.empty() || dev.empty()) throw std::invalid_argument("fit: train and dev corpora must be non-empty");
  std::vector<EncodedSentence> data;
  data.reserve(train.size());
  for (const auto& s : train.sentences) data.push_back(encode_sentence(model, s));

  AdagradState state = AdagradState::for_params(model.params);
  Rng rng(mix_seed(model.config.seed, 1));
  FitResult result{model, 0, {}};
  double best_f1 = -1.0;
  for (std::size_t epoch = 1; epoch <= model.config.epochs; ++epoch) {
    const EpochStats stats = train_epoch(model, data, state, rng);
    EpochRecord record{epoch, stats.mean_nll, stats.tag_accuracy, evaluate_corpus(model, dev)};
    result.history.push_back(record);
    if (record.dev.f1 > best_f1) {
      best_f1 = record.dev.f1;
      result.best = model;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace cws
