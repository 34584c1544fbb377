#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cws/corpus.h"
#include "cws/model.h"
#include "cws/train.h"

namespace cws {
namespace {

TEST(Adagrad, ZeroGradientLeavesEverythingUnchanged) {
  std::vector<double> p{0.5, -1.0}, g{0.0, 0.0}, acc{0.2, 0.0};
  adagrad_update(p, g, acc, 0.1, 1e-6);
  EXPECT_EQ(p, (std::vector<double>{0.5, -1.0}));
  EXPECT_EQ(acc, (std::vector<double>{0.2, 0.0}));
}

TEST(Adagrad, FirstStepArithmetic) {
  std::vector<double> p{1.0}, g{0.3}, acc{0.0};
  adagrad_update(p, g, acc, 0.1, 1e-6);
  EXPECT_DOUBLE_EQ(1.0 - p[0], 0.1 * 0.3 / (0.3 + 1e-6));
  EXPECT_NEAR(1.0 - p[0], 0.0999997, 1e-7);
  EXPECT_DOUBLE_EQ(acc[0], 0.09);
}

TEST(Adagrad, RepeatedGradientTakesSmallerSteps) {
  std::vector<double> p{0.0}, g{0.3}, acc{0.0};
  adagrad_update(p, g, acc, 0.1, 1e-6);
  const double first = -p[0];
  adagrad_update(p, g, acc, 0.1, 1e-6);
  const double second = -p[0] - first;
  EXPECT_LT(std::abs(second), std::abs(first));
  EXPECT_THROW(adagrad_update(p, std::vector<double>{1, 2}, acc, 0.1, 1e-6), ShapeError);
}

TEST(Dropout, ZeroRateIsAllOnes) {
  Rng rng(1);
  EXPECT_EQ(dropout_mask(10, 0.0, &rng), Vector(10, 1.0));
  EXPECT_EQ(dropout_mask(10, 0.5, nullptr), Vector(10, 1.0));
  EXPECT_THROW(dropout_mask(3, 1.0, &rng), std::invalid_argument);
  EXPECT_THROW(dropout_mask(3, -0.1, &rng), std::invalid_argument);
}

TEST(Dropout, InvertedScalingHasUnitMean) {
  Rng rng(2);
  const Vector m = dropout_mask(1'000'000, 0.5, &rng);
  double total = 0.0;
  for (double x : m) {
    ASSERT_TRUE(x == 0.0 || x == 2.0);
    total += x;
  }
  EXPECT_NEAR(total / static_cast<double>(m.size()), 1.0, 0.01);
}

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

TrainConfig small_config() {
  TrainConfig c;
  c.hidden = 8;
  c.attn_dim = 6;
  c.emb_dim = 5;
  c.batch_size = 2;
  c.epochs = 3;
  c.dropout = 0.0;
  return c;
}

Model small_model(const Corpus& corpus, TrainConfig config = small_config()) {
  Rng rng(mix_seed(config.seed, 0));
  Vocab bigrams = config.bigram ? build_bigram_vocab(corpus) : Vocab{};
  return make_model(config, build_vocab(corpus), std::move(bigrams), rng);
}

std::vector<double> flatten(const Parameters& p) {
  std::vector<double> out;
  p.for_each_tensor([&](const std::string&, std::span<const double> v, const auto&) {
    out.insert(out.end(), v.begin(), v.end());
  });
  return out;
}

TEST(Config, ValidatesRanges) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.batch_size, 50u);
  EXPECT_EQ(c.hidden, 150u);
  EXPECT_EQ(c.emb_dim, 100u);
  EXPECT_EQ(c.effective_attn_dim(), 150u);
  EXPECT_EQ(c.input_dim(), 300u);
  c.window = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Model, EmbeddingRowsOutsideSentenceGetNoGradient) {
  const Corpus corpus = parse("我 爱 北京\n天安门\n");
  TrainConfig cfg = small_config();
  cfg.bigram = true;
  const Model model = small_model(corpus, cfg);
  const EncodedSentence s = encode_sentence(model, corpus.sentences[0]);
  Parameters grads = model.params.zeros_like();
  accumulate_gradients(model, s, nullptr, grads);
  std::set<int> used(s.ids.begin(), s.ids.end());
  used.insert(kPadId);
  for (std::size_t r = 0; r < grads.unigram.rows(); ++r) {
    bool nonzero = false;
    for (double g : grads.unigram.row(r)) nonzero |= g != 0.0;
    EXPECT_EQ(nonzero, used.count(static_cast<int>(r)) > 0) << model.vocab.token(static_cast<int>(r));
  }
  const std::set<int> used_bigrams(s.bigram_ids.begin(), s.bigram_ids.end());
  for (std::size_t r = 0; r < grads.bigram.rows(); ++r) {
    bool nonzero = false;
    for (double g : grads.bigram.row(r)) nonzero |= g != 0.0;
    EXPECT_EQ(nonzero, used_bigrams.count(static_cast<int>(r)) > 0);
  }
}

TEST(Model, FullGradientMatchesFiniteDifferences) {
  const Corpus corpus = parse("我 爱 北京\n天 安门\n");
  TrainConfig cfg = small_config();
  cfg.bigram = true;
  cfg.bigram_dim = 3;
  cfg.extra_layers = 1;
  cfg.train_mask = true;
  Model model = small_model(corpus, cfg);
  Rng rng(5);
  model.params.for_each_tensor([&](const std::string&, std::span<double> v, const auto&) {
    for (double& x : v) x = rng.uniform(-0.5, 0.5);
  });
  const EncodedSentence s = encode_sentence(model, corpus.sentences[0]);
  Parameters grads = model.params.zeros_like();
  accumulate_gradients(model, s, nullptr, grads);
  Model probe = model;
  auto f = [&](std::span<const double> flat) {
    std::size_t offset = 0;
    probe.params.for_each_tensor([&](const std::string&, std::span<double> v, const auto&) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                flat.begin() + static_cast<std::ptrdiff_t>(offset + v.size()), v.begin());
      offset += v.size();
    });
    return sentence_nll(probe, s);
  };
  EXPECT_LT(grad_check(f, flatten(grads), flatten(model.params), 1e-4, 1e-7), 1e-4);
}

TEST(TrainEpoch, ZeroLearningRateChangesNothing) {
  const Corpus corpus = parse("中国 向 全世界 发出 倡议\n");
  Model model = small_model(corpus);
  model.config.learning_rate = 0.0;
  const auto before = flatten(model.params);
  AdagradState state = AdagradState::for_params(model.params);
  Rng rng(1);
  std::vector<double> nll;
  for (int epoch = 0; epoch < 3; ++epoch) nll.push_back(train_epoch(model, corpus, state, rng).mean_nll);
  EXPECT_EQ(flatten(model.params), before);
  EXPECT_EQ(nll[0], nll[1]);
  EXPECT_EQ(nll[1], nll[2]);
}

TEST(TrainEpoch, ReducesLossAndCountsBatches) {
  const Corpus corpus = load_corpus(CWS_TOY_CORPUS);
  Model model = small_model(corpus);
  model.config.batch_size = 5;
  AdagradState state = AdagradState::for_params(model.params);
  Rng rng(3);
  const EpochStats first = train_epoch(model, corpus, state, rng);
  EXPECT_EQ(first.batches, 7u);  // 32 sentences, the last batch holds 2
  EXPECT_EQ(first.sentences, 32u);
  EpochStats last = first;
  for (int i = 0; i < 10; ++i) last = train_epoch(model, corpus, state, rng);
  EXPECT_LT(last.mean_nll, first.mean_nll);
}

TEST(TrainEpoch, GradientClippingBoundsTheNorm) {
  const Corpus corpus = parse("中国 向 全世界 发出 倡议\n");
  TrainConfig cfg = small_config();
  cfg.max_grad_norm = 1e-3;
  Model model = small_model(corpus, cfg);
  AdagradState state = AdagradState::for_params(model.params);
  Rng rng(1);
  train_epoch(model, corpus, state, rng);
  // After one batch the accumulators hold the squared clipped gradient.
  double sq = 0.0;
  for (const auto& acc : state.accumulators) {
    for (double g2 : acc) sq += g2;
  }
  EXPECT_NEAR(std::sqrt(sq), 1e-3, 1e-12);
}

TEST(TrainEpoch, FixedSeedIsDeterministic) {
  const Corpus corpus = load_corpus(CWS_TOY_CORPUS);
  TrainConfig cfg = small_config();
  cfg.dropout = 0.2;
  auto run = [&] {
    Model model = small_model(corpus, cfg);
    AdagradState state = AdagradState::for_params(model.params);
    Rng rng(9);
    std::vector<double> stats;
    for (int e = 0; e < 2; ++e) {
      const auto s = train_epoch(model, corpus, state, rng);
      stats.push_back(s.mean_nll);
      stats.push_back(s.tag_accuracy);
    }
    return std::make_pair(stats, flatten(model.params));
  };
  EXPECT_EQ(run(), run());
}

TEST(Fit, SingleEpochKeepsThatModel) {
  const Corpus corpus = load_corpus(CWS_TOY_CORPUS);
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const FitResult r = fit(small_model(corpus, cfg), corpus, corpus);
  EXPECT_EQ(r.best_epoch, 1u);
  ASSERT_EQ(r.history.size(), 1u);

  Model manual = small_model(corpus, cfg);
  AdagradState state = AdagradState::for_params(manual.params);
  Rng rng(mix_seed(cfg.seed, 1));
  train_epoch(manual, corpus, state, rng);
  EXPECT_EQ(flatten(r.best.params), flatten(manual.params));
}

TEST(Fit, HistoryHasOneRecordPerEpoch) {
  const Corpus corpus = load_corpus(CWS_TOY_CORPUS);
  TrainConfig cfg = small_config();
  cfg.epochs = 4;
  std::size_t calls = 0;
  const FitResult r = fit(small_model(corpus, cfg), corpus, corpus, [&](const EpochRecord& rec) {
    EXPECT_EQ(rec.epoch, ++calls);
  });
  EXPECT_EQ(r.history.size(), 4u);
  EXPECT_EQ(calls, 4u);
  double best = -1.0;
  for (const auto& rec : r.history) best = std::max(best, rec.dev.f1);
  EXPECT_EQ(r.history[r.best_epoch - 1].dev.f1, best);
}

TEST(Fit, OverfitsToyCorpus) {
  const Corpus corpus = load_corpus(CWS_TOY_CORPUS);
  TrainConfig cfg;
  cfg.hidden = 32;
  cfg.emb_dim = 16;
  cfg.batch_size = 4;
  cfg.epochs = 60;
  FitResult r = fit(small_model(corpus, cfg), corpus, corpus);
  EXPECT_EQ(r.history[r.best_epoch - 1].dev.f1, 1.0);
  EXPECT_EQ(tag_accuracy(r.best, corpus), 1.0);
}

}  // namespace
}  // namespace cws
