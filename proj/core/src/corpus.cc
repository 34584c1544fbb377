#include "cws/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "cws/utf8.h"

namespace cws {
namespace {

bool is_latin_letter(char32_t cp) {
  return (cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z') ||
         (cp >= 0xFF21 && cp <= 0xFF3A) || (cp >= 0xFF41 && cp <= 0xFF5A);
}

bool is_digit(char32_t cp) { return (cp >= U'0' && cp <= U'9') || (cp >= 0xFF10 && cp <= 0xFF19); }

enum class CharClass { kOther, kLetter, kDigit };

CharClass classify(const std::string& ch) {
  const auto cp = utf8::single_code_point(ch);
  if (!cp) return CharClass::kOther;
  if (is_latin_letter(*cp)) return CharClass::kLetter;
  if (is_digit(*cp)) return CharClass::kDigit;
  return CharClass::kOther;
}

std::vector<std::string> split_ascii_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) fields.emplace_back(line.substr(start, pos - start));
  }
  return fields;
}

void strip_line_ending(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() {
  for (std::string_view t : {kPadToken, kUnkToken, kEngToken, kNumToken}) add(t);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  const std::string_view reserved[] = {kPadToken, kUnkToken, kEngToken, kNumToken};
  if (tokens.size() < std::size(reserved)) throw FormatError("vocabulary lacks reserved tokens");
  for (std::size_t i = 0; i < std::size(reserved); ++i) {
    if (tokens[i] != reserved[i]) {
      throw FormatError("vocabulary id " + std::to_string(i) + " must be " +
                        std::string(reserved[i]) + ", found " + tokens[i]);
    }
  }
  for (std::size_t i = std::size(reserved); i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw FormatError("duplicate vocabulary token " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

int Vocab::add(std::string_view token) {
  const std::string key(token);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(key);
  index_.emplace(key, id);
  return id;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

// ---------------------------------------------------------------------------
// IdiomLexicon

IdiomLexicon IdiomLexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  IdiomLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_ending(line);
    if (!utf8::is_valid(line)) throw FormatError("invalid UTF-8 in idiom lexicon", line_no);
    std::string idiom;
    for (const auto& ch : utf8::split(line)) {
      if (!utf8::is_space(ch)) idiom += ch;
    }
    if (!idiom.empty()) lex.add(idiom);
  }
  return lex;
}

void IdiomLexicon::add(std::string_view idiom) {
  auto chars = utf8::split(idiom);
  if (chars.empty()) return;
  const std::size_t len = chars.size();
  auto it = std::lower_bound(by_length_.begin(), by_length_.end(), len,
                             [](const auto& entry, std::size_t n) { return entry.first < n; });
  if (it == by_length_.end() || it->first != len) it = by_length_.insert(it, {len, {}});
  auto& bucket = it->second;
  if (std::find(bucket.begin(), bucket.end(), chars) == bucket.end()) {
    bucket.push_back(std::move(chars));
  }
}

std::size_t IdiomLexicon::match(std::span<const std::string> chars, std::size_t pos) const {
  for (auto it = by_length_.rbegin(); it != by_length_.rend(); ++it) {
    const std::size_t len = it->first;
    if (pos + len > chars.size()) continue;
    for (const auto& idiom : it->second) {
      if (std::equal(idiom.begin(), idiom.end(), chars.begin() + pos)) return len;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Preprocessing

std::vector<Token> preprocess(std::span<const std::string> chars, const IdiomLexicon* idioms) {
  std::vector<Token> out;
  std::size_t pos = 0;
  while (pos < chars.size()) {
    if (idioms != nullptr && !idioms->empty()) {
      if (const std::size_t len = idioms->match(chars, pos); len > 0) {
        Token tok{std::string(kIdiomToken), {}};
        for (std::size_t i = pos; i < pos + len; ++i) tok.surface += chars[i];
        out.push_back(std::move(tok));
        pos += len;
        continue;
      }
    }
    const CharClass cls = classify(chars[pos]);
    if (cls == CharClass::kOther) {
      out.push_back({chars[pos], chars[pos]});
      ++pos;
      continue;
    }
    Token tok{std::string(cls == CharClass::kLetter ? kEngToken : kNumToken), {}};
    while (pos < chars.size() && classify(chars[pos]) == cls) tok.surface += chars[pos++];
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> preprocess_symbols(std::span<const std::string> chars,
                                            const IdiomLexicon* idioms) {
  std::vector<std::string> symbols;
  for (auto& tok : preprocess(chars, idioms)) symbols.push_back(std::move(tok.symbol));
  return symbols;
}

// ---------------------------------------------------------------------------
// Corpus loading

Corpus parse_corpus(std::istream& in, const IdiomLexicon* idioms) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_ending(line);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    std::vector<std::string> chars;
    try {
      chars = utf8::split(line);
    } catch (const utf8::DecodeError& e) {
      throw FormatError(e.what(), line_no);
    }

    Sentence sentence;
    Segmentation seg;
    std::vector<std::string> word;
    auto flush_word = [&] {
      if (word.empty()) return;
      Word symbols;
      for (auto& tok : preprocess(word, idioms)) {
        symbols.push_back(tok.symbol);
        sentence.symbols.push_back(std::move(tok.symbol));
        sentence.surfaces.push_back(std::move(tok.surface));
      }
      seg.push_back(std::move(symbols));
      word.clear();
    };
    for (auto& ch : chars) {
      if (utf8::is_space(ch)) {
        flush_word();
      } else {
        word.push_back(std::move(ch));
      }
    }
    flush_word();
    if (seg.empty()) continue;
    sentence.tags = encode_tags(seg);
    corpus.sentences.push_back(std::move(sentence));
  }
  if (corpus.empty()) throw FormatError("corpus contains no sentences");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const IdiomLexicon* idioms) {
  auto in = open_or_throw(path);
  try {
    return parse_corpus(in, idioms);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::pair<Corpus, Corpus> split_train_dev(const Corpus& corpus, double dev_fraction,
                                          std::uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw std::invalid_argument("dev fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = corpus.size();
  const auto dev_count = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(n)));
  if (dev_count == 0 || dev_count >= n) {
    throw std::invalid_argument("corpus of " + std::to_string(n) +
                                " sentences is too small for a non-empty split");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  Corpus train, dev;
  for (std::size_t k = 0; k < n; ++k) {
    (k < dev_count ? dev : train).sentences.push_back(corpus.sentences[order[k]]);
  }
  return {std::move(train), std::move(dev)};
}

Vocab build_vocab(const Corpus& corpus) {
  Vocab vocab;
  for (const auto& s : corpus.sentences) {
    for (const auto& sym : s.symbols) vocab.add(sym);
  }
  return vocab;
}

std::vector<std::string> bigram_symbols(std::span<const std::string> symbols) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t t = 0; t < symbols.size(); ++t) {
    out.push_back(symbols[t] + (t + 1 < symbols.size() ? symbols[t + 1] : std::string(kPadToken)));
  }
  return out;
}

Vocab build_bigram_vocab(const Corpus& corpus) {
  Vocab vocab;
  for (const auto& s : corpus.sentences) {
    for (const auto& bg : bigram_symbols(s.symbols)) vocab.add(bg);
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Embeddings

Matrix random_embeddings(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix table(rows, dim);
  for (double& x : table.values()) x = rng.uniform(-0.05, 0.05);
  return table;
}

Matrix parse_embeddings(std::istream& in, const Vocab& vocab, std::uint64_t seed) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing \"count dim\" header", 1);
  strip_line_ending(line);
  const auto header = split_ascii_fields(line);
  auto parse_count = [](const std::string& s, std::size_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  };
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || !parse_count(header[0], count) || !parse_count(header[1], dim) ||
      dim == 0) {
    throw FormatError("malformed header, expected \"count dim\"", 1);
  }

  Rng rng(seed);
  Matrix table = random_embeddings(vocab.size(), dim, rng);

  std::size_t line_no = 1, rows_read = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_ending(line);
    const auto fields = split_ascii_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1) {
      throw FormatError("expected token and " + std::to_string(dim) + " values, found " +
                            std::to_string(fields.size() - 1) + " values",
                        line_no);
    }
    ++rows_read;
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const std::string& f = fields[j + 1];
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), row[j]);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(row[j])) {
        throw FormatError("non-numeric value \"" + f + "\"", line_no);
      }
    }
    if (!vocab.contains(fields[0])) continue;
    std::copy(row.begin(), row.end(), table.row(static_cast<std::size_t>(vocab.id(fields[0]))).begin());
  }
  if (rows_read != count) {
    throw FormatError("header declares " + std::to_string(count) + " vectors but file has " +
                      std::to_string(rows_read), 1);
  }
  return table;
}

Matrix load_embeddings(const std::filesystem::path& path, const Vocab& vocab, std::uint64_t seed) {
  auto in = open_or_throw(path);
  try {
    return parse_embeddings(in, vocab, seed);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<Vector> featurize(std::span<const int> ids, const Matrix& table,
                              std::span<const int> bigram_ids, const Matrix* bigram_table,
                              std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw std::invalid_argument("context window must be odd and positive, got " +
                                std::to_string(window));
  }
  const bool use_bigram = !bigram_ids.empty();
  if (use_bigram && (bigram_table == nullptr || bigram_ids.size() != ids.size())) {
    throw ShapeError("featurize: bigram ids must align with characters and have a table");
  }
  const std::size_t dim = table.cols();
  const std::size_t bigram_dim = use_bigram ? bigram_table->cols() : 0;
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto n = static_cast<std::ptrdiff_t>(ids.size());

  auto lookup = [](const Matrix& m, int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.rows()) {
      throw std::out_of_range("embedding id " + std::to_string(id) + " outside table " +
                              m.shape_string());
    }
    return m.row(static_cast<std::size_t>(id));
  };

  std::vector<Vector> out;
  out.reserve(ids.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    Vector x(window * dim + bigram_dim);
    auto dst = x.begin();
    for (std::ptrdiff_t k = t - half; k <= t + half; ++k) {
      const int id = (k < 0 || k >= n) ? kPadId : ids[static_cast<std::size_t>(k)];
      const auto row = lookup(table, id);
      dst = std::copy(row.begin(), row.end(), dst);
    }
    if (use_bigram) {
      const auto row = lookup(*bigram_table, bigram_ids[static_cast<std::size_t>(t)]);
      std::copy(row.begin(), row.end(), dst);
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace cws
