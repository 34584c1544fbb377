#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cws/numerics.h"
#include "cws/tagging.h"

namespace cws {

inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kEngToken = "<ENG>";
inline constexpr std::string_view kNumToken = "<NUM>";
inline constexpr std::string_view kIdiomToken = "<IDIOM>";

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kEngId = 2;
inline constexpr int kNumId = 3;

/// Error in an input file. Carries the 1-based line number when one applies.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class Vocab {
 public:
  /// A vocabulary holding only the reserved tokens.
  Vocab();

  /// Rebuilds from an id-ordered token list; the reserved prefix must be present.
  static Vocab from_tokens(std::vector<std::string> tokens);

  int add(std::string_view token);
  /// Id of `token`, or kUnkId when absent.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Idioms to collapse into a single <IDIOM> token, matched longest-first.
class IdiomLexicon {
 public:
  IdiomLexicon() = default;
  static IdiomLexicon load(const std::filesystem::path& path);

  void add(std::string_view idiom);
  bool empty() const { return by_length_.empty(); }
  /// Length in characters of the longest idiom starting at `pos`, or 0.
  std::size_t match(std::span<const std::string> chars, std::size_t pos) const;

 private:
  // Keyed by character count, longest first when iterated in reverse.
  std::vector<std::pair<std::size_t, std::vector<std::vector<std::string>>>> by_length_;
};

/// A preprocessed token: `symbol` is what the model sees, `surface` the original text.
struct Token {
  std::string symbol;
  std::string surface;

  bool operator==(const Token&) const = default;
};

/// Collapses maximal Latin-letter runs to <ENG>, digit runs to <NUM> and
/// lexicon idioms to <IDIOM>. Everything else passes through.
std::vector<Token> preprocess(std::span<const std::string> chars,
                              const IdiomLexicon* idioms = nullptr);
std::vector<std::string> preprocess_symbols(std::span<const std::string> chars,
                                            const IdiomLexicon* idioms = nullptr);

struct Sentence {
  std::vector<std::string> symbols;
  std::vector<std::string> surfaces;
  TagSequence tags;
};

struct Corpus {
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

/// Parses bakeoff-format text: one sentence per line, whitespace between words.
Corpus parse_corpus(std::istream& in, const IdiomLexicon* idioms = nullptr);
Corpus load_corpus(const std::filesystem::path& path, const IdiomLexicon* idioms = nullptr);

/// Deterministic shuffle then split; dev receives round(dev_fraction * N) sentences.
std::pair<Corpus, Corpus> split_train_dev(const Corpus& corpus, double dev_fraction,
                                          std::uint64_t seed);

/// Vocabulary over the symbols of `corpus`, in first-occurrence order.
Vocab build_vocab(const Corpus& corpus);

/// (c_t, c_{t+1}) pairs; the last position pairs with <PAD>.
std::vector<std::string> bigram_symbols(std::span<const std::string> symbols);
Vocab build_bigram_vocab(const Corpus& corpus);

Matrix random_embeddings(std::size_t rows, std::size_t dim, Rng& rng);

/// Reads the textual "count dim" embedding format. Rows for vocabulary tokens
/// missing from the file are drawn uniformly from [-0.05, 0.05] using `seed`.
Matrix parse_embeddings(std::istream& in, const Vocab& vocab, std::uint64_t seed);
Matrix load_embeddings(const std::filesystem::path& path, const Vocab& vocab,
                       std::uint64_t seed);

/// Per-position input vectors: the window of unigram embeddings centered on t
/// (padded with the <PAD> row), optionally followed by the bigram embedding.
/// Pass an empty `bigram_ids` to disable the bigram channel.
std::vector<Vector> featurize(std::span<const int> ids, const Matrix& table,
                              std::span<const int> bigram_ids, const Matrix* bigram_table,
                              std::size_t window);

}  // namespace cws
