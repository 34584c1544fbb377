#include "cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cws/corpus.h"
#include "cws/eval.h"
#include "cws/model.h"
#include "cws/serialize.h"
#include "cws/train.h"
#include "cws/utf8.h"

namespace cws::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

struct TrainArgs {
  std::string train_path, dev_path, embeddings_path, bigram_embeddings_path, idioms_path, out_dir;
  double dev_fraction = 0.1;
  TrainConfig config;
};

struct SegmentArgs {
  std::string model_dir, input_path, output_path, idioms_path;
};

struct EvalArgs {
  std::string gold_path, pred_path;
};

std::optional<IdiomLexicon> maybe_lexicon(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return IdiomLexicon::load(path);
}

int run_train(const TrainArgs& args, bool emb_dim_given, std::ostream& out, std::ostream& err) {
  TrainConfig config = args.config;
  const auto lexicon = maybe_lexicon(args.idioms_path);
  const IdiomLexicon* lex = lexicon ? &*lexicon : nullptr;

  Corpus all = load_corpus(args.train_path, lex);
  Corpus train, dev;
  if (args.dev_path.empty()) {
    std::tie(train, dev) = split_train_dev(all, args.dev_fraction, config.seed);
    const auto dev_pct = std::lround(args.dev_fraction * 100.0);
    err << "split " << (100 - dev_pct) << "/" << dev_pct << ": train=" << train.size()
        << " dev=" << dev.size() << " sentences\n";
  } else {
    train = std::move(all);
    dev = load_corpus(args.dev_path, lex);
  }

  Vocab vocab = build_vocab(train);
  Vocab bigram_vocab = config.bigram ? build_bigram_vocab(train) : Vocab{};

  std::optional<Matrix> unigram, bigram;
  if (!args.embeddings_path.empty()) {
    unigram = load_embeddings(args.embeddings_path, vocab, mix_seed(config.seed, 2));
    if (unigram->cols() != config.emb_dim) {
      if (emb_dim_given) {
        throw std::invalid_argument("--emb-dim " + std::to_string(config.emb_dim) +
                                    " disagrees with embedding file dimension " +
                                    std::to_string(unigram->cols()));
      }
      config.emb_dim = unigram->cols();
    }
  }
  if (config.bigram && !args.bigram_embeddings_path.empty()) {
    bigram = load_embeddings(args.bigram_embeddings_path, bigram_vocab, mix_seed(config.seed, 3));
    config.bigram_dim = bigram->cols();
  }

  err << "config batch=" << config.batch_size << " hidden=" << config.hidden
      << " emb=" << config.emb_dim << " attn=" << config.effective_attn_dim()
      << " extra_layers=" << config.extra_layers << " window=" << config.window
      << " bigram=" << (config.bigram ? 1 : 0) << " dropout=" << config.dropout
      << " lr=" << config.learning_rate << " epochs=" << config.epochs << " seed=" << config.seed
      << "\n";
  err << "vocab=" << vocab.size() << (config.bigram ? " bigrams=" + std::to_string(bigram_vocab.size()) : "")
      << "\n";

  Rng rng(mix_seed(config.seed, 0));
  Model model = make_model(config, std::move(vocab), std::move(bigram_vocab), rng,
                           unigram ? &*unigram : nullptr, bigram ? &*bigram : nullptr);

  FitResult result = fit(std::move(model), train, dev, [&](const EpochRecord& r) {
    out << "epoch=" << r.epoch << " nll=" << fixed(r.nll, 6) << " p=" << fixed(r.dev.precision, 4)
        << " r=" << fixed(r.dev.recall, 4) << " f1=" << fixed(r.dev.f1, 4) << std::endl;
  });
  round_to_storage_precision(result.best.params);
  save_model(result.best, args.out_dir);
  err << "best epoch " << result.best_epoch << " f1="
      << fixed(result.history[result.best_epoch - 1].dev.f1, 4) << "; model written to "
      << args.out_dir << "\n";
  return 0;
}

int run_segment(const SegmentArgs& args, std::ostream& out, std::ostream& err) {
  const Model model = load_model(args.model_dir);
  const auto lexicon = maybe_lexicon(args.idioms_path);
  const IdiomLexicon* lex = lexicon ? &*lexicon : nullptr;

  std::ifstream in(args.input_path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + args.input_path);
  std::unique_ptr<std::ofstream> file;
  std::ostream* sink = &out;
  if (!args.output_path.empty()) {
    file = std::make_unique<std::ofstream>(args.output_path, std::ios::binary | std::ios::trunc);
    if (!*file) throw FormatError("cannot write " + args.output_path);
    sink = file.get();
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    std::vector<std::string> chars;
    try {
      chars = utf8::split(line);
    } catch (const utf8::DecodeError& e) {
      throw FormatError(e.what(), line_no);
    }
    std::erase_if(chars, [](const std::string& ch) { return utf8::is_space(ch); });
    const auto tokens = preprocess(chars, lex);
    std::vector<std::string> symbols;
    for (const auto& t : tokens) symbols.push_back(t.symbol);

    std::string segmented;
    std::size_t pos = 0;
    for (std::size_t len : word_lengths(decode(model, symbols))) {
      if (!segmented.empty()) segmented += ' ';
      for (std::size_t i = pos; i < pos + len; ++i) segmented += tokens[i].surface;
      pos += len;
    }
    *sink << segmented << '\n';
  }
  sink->flush();
  err << "segmented " << line_no << " lines\n";
  return 0;
}

int run_eval(const EvalArgs& args, std::ostream& out) {
  const Prf prf = evaluate_files(args.gold_path, args.pred_path);
  out << "p=" << fixed(prf.precision, 4) << " r=" << fixed(prf.recall, 4) << " f1=" << fixed(prf.f1, 4)
      << "\n";
  return 0;
}

int run_gradcheck(const GradcheckOptions& options, std::ostream& out) {
  const double err = model_gradient_check(options);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", err);
  out << "max_rel_error=" << buf << "\n";
  return err < kGradcheckThreshold ? 0 : 1;
}

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
  auto& c = a.config;
  cmd->add_option("--train", a.train_path, "Training corpus (bakeoff format)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dev", a.dev_path, "Development corpus; omitted means a random split of --train")
      ->check(CLI::ExistingFile);
  cmd->add_option("--dev-fraction", a.dev_fraction, "Held-out fraction when --dev is omitted")
      ->capture_default_str();
  cmd->add_option("--embeddings", a.embeddings_path, "Pretrained character vectors (\"count dim\" text format)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--bigram-embeddings", a.bigram_embeddings_path, "Pretrained bigram vectors")
      ->check(CLI::ExistingFile);
  cmd->add_option("--idioms", a.idioms_path, "Idiom lexicon, one per line")->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out_dir, "Model output directory")->required();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--epochs", c.epochs)->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--learning-rate", c.learning_rate)->capture_default_str();
  cmd->add_option("--adagrad-epsilon", c.adagrad_epsilon)->capture_default_str();
  cmd->add_option("--dropout", c.dropout)->capture_default_str();
  cmd->add_option("--hidden", c.hidden)->capture_default_str();
  cmd->add_option("--attn-dim", c.attn_dim, "Attention size; 0 means --hidden")->capture_default_str();
  cmd->add_option("--emb-dim", c.emb_dim)->capture_default_str();
  cmd->add_option("--extra-layers", c.extra_layers, "Stacked BiLSTMN layers above the first (0-2)")
      ->capture_default_str();
  cmd->add_option("--window", c.window, "Context window (odd)")->capture_default_str();
  cmd->add_flag("--bigram", c.bigram, "Append a bigram embedding channel");
  cmd->add_option("--bigram-dim", c.bigram_dim, "Bigram embedding size; 0 means --emb-dim")
      ->capture_default_str();
  cmd->add_option("--memory-span", c.memory_span, "Attention window cap; 0 is unbounded")
      ->capture_default_str();
  cmd->add_option("--max-grad-norm", c.max_grad_norm, "Clip the batch gradient norm; 0 disables")
      ->capture_default_str();
  cmd->add_flag("--train-mask", c.train_mask, "Apply the BMES mask inside the training loss");
  cmd->add_flag("!--no-decode-mask", c.decode_mask, "Decode without the BMES mask");
}

}  // namespace

double model_gradient_check(const GradcheckOptions& options) {
  TrainConfig config;
  config.hidden = 5;
  config.attn_dim = 4;
  config.emb_dim = 6;
  config.window = options.window;
  config.extra_layers = options.extra_layers;
  config.memory_span = options.memory_span;
  config.bigram = options.bigram;
  config.bigram_dim = 3;
  config.dropout = 0.0;
  config.seed = options.seed;

  Rng rng(options.seed);
  Vocab vocab;
  for (int i = 0; i < 6; ++i) vocab.add("c" + std::to_string(i));
  Vocab bigram_vocab;
  if (options.bigram) {
    for (int i = 0; i < 5; ++i) bigram_vocab.add("b" + std::to_string(i));
  }
  Model model = make_model(config, std::move(vocab), std::move(bigram_vocab), rng);
  // Larger than the training init so every path carries a visible gradient.
  for (double& x : model.params.unigram.values()) x = rng.uniform(-0.5, 0.5);
  for (double& x : model.params.bigram.values()) x = rng.uniform(-0.5, 0.5);
  for (double& x : model.params.transitions.values()) x = rng.uniform(-0.5, 0.5);

  std::vector<EncodedSentence> batch(options.sentences);
  for (auto& s : batch) {
    for (std::size_t t = 0; t < options.length; ++t) {
      s.ids.push_back(static_cast<int>(rng.below(model.vocab.size())));
      s.gold.push_back(static_cast<int>(rng.below(kNumTags)));
      if (options.bigram) s.bigram_ids.push_back(static_cast<int>(rng.below(model.bigram_vocab.size())));
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());

  Parameters grads = model.params.zeros_like();
  for (const auto& s : batch) accumulate_gradients(model, s, nullptr, grads, scale);

  std::vector<double> point, analytic;
  model.params.for_each_tensor([&](const std::string&, std::span<const double> v, const auto&) {
    point.insert(point.end(), v.begin(), v.end());
  });
  grads.for_each_tensor([&](const std::string&, std::span<const double> v, const auto&) {
    analytic.insert(analytic.end(), v.begin(), v.end());
  });
  if (options.corrupt_gradient) {
    auto it = std::max_element(analytic.begin(), analytic.end(),
                               [](double a, double b) { return std::abs(a) < std::abs(b); });
    *it *= 2.0;
  }

  Model probe = model;
  auto loss = [&](std::span<const double> flat) {
    std::size_t offset = 0;
    probe.params.for_each_tensor([&](const std::string&, std::span<double> v, const auto&) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                flat.begin() + static_cast<std::ptrdiff_t>(offset + v.size()), v.begin());
      offset += v.size();
    });
    double total = 0.0;
    for (const auto& s : batch) total += sentence_nll(probe, s);
    return total * scale;
  };
  return grad_check(loss, analytic, point, options.step, options.floor);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chinese word segmentation with a bidirectional attention-LSTM and CRF decoder", "cws"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a segmentation model");
  add_train_flags(train, train_args);

  SegmentArgs seg_args;
  auto* segment = app.add_subcommand("segment", "Segment raw sentences, one per line");
  segment->add_option("--model", seg_args.model_dir, "Model directory")->required()->check(CLI::ExistingDirectory);
  segment->add_option("--input", seg_args.input_path, "Raw text, one sentence per line")
      ->required()
      ->check(CLI::ExistingFile);
  segment->add_option("--output", seg_args.output_path, "Output file; standard output if omitted");
  segment->add_option("--idioms", seg_args.idioms_path, "Idiom lexicon used at training time")
      ->check(CLI::ExistingFile);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Word-level precision/recall/F1 of a segmentation");
  eval->add_option("--gold", eval_args.gold_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", eval_args.pred_path)->required()->check(CLI::ExistingFile);

  GradcheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the model gradients");
  gradcheck->add_option("--seed", gc.seed)->capture_default_str();
  gradcheck->add_option("--extra-layers", gc.extra_layers)->capture_default_str();
  gradcheck->add_option("--memory-span", gc.memory_span)->capture_default_str();
  gradcheck->add_option("--step", gc.step)->capture_default_str();
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt_gradient, "Test hook: perturb the analytic gradient");

  std::vector<const char*> argv{"cws"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) {
      return run_train(train_args, train->get_option("--emb-dim")->count() > 0, out, err);
    }
    if (*segment) return run_segment(seg_args, out, err);
    if (*eval) return run_eval(eval_args, out);
    if (*gradcheck) return run_gradcheck(gc, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cws::cli
