#include "cws/serialize.h"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace cws {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json config_to_json(const TrainConfig& c) {
  return {
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"adagrad_epsilon", c.adagrad_epsilon},
      {"dropout", c.dropout},
      {"epochs", c.epochs},
      {"seed", c.seed},
      {"hidden", c.hidden},
      {"attn_dim", c.effective_attn_dim()},
      {"emb_dim", c.emb_dim},
      {"extra_layers", c.extra_layers},
      {"window", c.window},
      {"bigram", c.bigram},
      {"bigram_dim", c.effective_bigram_dim()},
      {"memory_span", c.memory_span},
      {"max_grad_norm", c.max_grad_norm},
      {"train_mask", c.train_mask},
      {"decode_mask", c.decode_mask},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adagrad_epsilon = j.at("adagrad_epsilon").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.attn_dim = j.at("attn_dim").get<std::size_t>();
  c.emb_dim = j.at("emb_dim").get<std::size_t>();
  c.extra_layers = j.at("extra_layers").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.bigram = j.at("bigram").get<bool>();
  c.bigram_dim = j.at("bigram_dim").get<std::size_t>();
  c.memory_span = j.at("memory_span").get<std::size_t>();
  c.max_grad_norm = j.at("max_grad_norm").get<double>();
  c.train_mask = j.at("train_mask").get<bool>();
  c.decode_mask = j.at("decode_mask").get<bool>();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError("cannot write " + path.string());
  out << text;
  if (!out) throw ModelFormatError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("missing model file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_vocab(const fs::path& path, const Vocab& vocab) {
  std::string text;
  for (const auto& t : vocab.tokens()) text += t + "\n";
  write_text(path, text);
}

Vocab read_vocab(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  try {
    return Vocab::from_tokens(std::move(tokens));
  } catch (const std::exception& e) {
    throw ModelFormatError(path.string() + ": " + e.what());
  }
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

std::string checksum_hex(const std::string& bytes) {
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()),
                          static_cast<uInt>(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace

void save_model(const Model& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ModelFormatError("cannot create " + dir.string() + ": " + ec.message());

  std::string bytes;
  json tensors = json::array();
  model.params.for_each_tensor(
      [&](const std::string& name, std::span<const double> values, const std::vector<std::size_t>& shape) {
        tensors.push_back({{"name", name}, {"shape", shape}, {"offset", bytes.size()}});
        for (double v : values) {
          const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
          char raw[4];
          std::memcpy(raw, &bits, 4);
          bytes.append(raw, 4);
        }
      });

  json meta = {
      {"format_version", kModelFormatVersion},
      {"config", config_to_json(model.config)},
      {"tags", {{"B", 0}, {"M", 1}, {"E", 2}, {"S", 3}}},
      {"vocab_size", model.vocab.size()},
      {"bigram_vocab_size", model.config.bigram ? model.bigram_vocab.size() : 0},
  };
  json manifest = {
      {"format_version", kModelFormatVersion},
      {"params_file", "params.bin"},
      {"dtype", "float32-le"},
      {"byte_size", bytes.size()},
      {"checksum", {{"algorithm", "crc32"}, {"value", checksum_hex(bytes)}}},
      {"tensors", tensors},
  };

  write_text(dir / "model.json", meta.dump(2) + "\n");
  write_vocab(dir / "vocab.txt", model.vocab);
  if (model.config.bigram) write_vocab(dir / "bigram_vocab.txt", model.bigram_vocab);
  write_text(dir / "params.bin", bytes);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Model load_model(const fs::path& dir) {
  json meta, manifest;
  try {
    meta = json::parse(read_text(dir / "model.json"));
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw ModelFormatError("malformed model metadata in " + dir.string() + ": " + e.what());
  }

  try {
    const int version = meta.at("format_version").get<int>();
    if (version != kModelFormatVersion || manifest.at("format_version").get<int>() != version) {
      throw ModelFormatError("unknown model format version " + std::to_string(version));
    }
    const json expected_tags = {{"B", 0}, {"M", 1}, {"E", 2}, {"S", 3}};
    if (meta.at("tags") != expected_tags) throw ModelFormatError("unexpected tag-id table");

    const TrainConfig config = config_from_json(meta.at("config"));
    config.validate();
    Vocab vocab = read_vocab(dir / "vocab.txt");
    Vocab bigram_vocab;
    if (config.bigram) bigram_vocab = read_vocab(dir / "bigram_vocab.txt");
    if (vocab.size() != meta.at("vocab_size").get<std::size_t>() ||
        (config.bigram && bigram_vocab.size() != meta.at("bigram_vocab_size").get<std::size_t>())) {
      throw ModelFormatError("vocabulary size disagrees with model.json");
    }

    Rng rng(0);
    Model model = make_model(config, std::move(vocab), std::move(bigram_vocab), rng);

    const std::string bytes = read_text(dir / manifest.at("params_file").get<std::string>());
    if (bytes.size() != manifest.at("byte_size").get<std::size_t>()) {
      throw ModelFormatError("params.bin has " + std::to_string(bytes.size()) + " bytes, manifest says " +
                             std::to_string(manifest.at("byte_size").get<std::size_t>()));
    }
    const auto& checksum = manifest.at("checksum");
    if (checksum.at("algorithm").get<std::string>() != "crc32" ||
        checksum.at("value").get<std::string>() != checksum_hex(bytes)) {
      throw ModelFormatError("params.bin checksum mismatch");
    }

    const json& tensors = manifest.at("tensors");
    std::size_t index = 0, offset = 0;
    model.params.for_each_tensor(
        [&](const std::string& name, std::span<double> values, const std::vector<std::size_t>& shape) {
          if (index >= tensors.size()) throw ModelFormatError("manifest lacks tensor " + name);
          const json& entry = tensors[index++];
          if (entry.at("name").get<std::string>() != name ||
              entry.at("shape").get<std::vector<std::size_t>>() != shape ||
              entry.at("offset").get<std::size_t>() != offset) {
            throw ModelFormatError("manifest entry " + std::to_string(index - 1) + " (" +
                                   entry.at("name").get<std::string>() + ") does not match expected " + name);
          }
          if (offset + 4 * values.size() > bytes.size()) throw ModelFormatError("params.bin truncated at " + name);
          for (double& v : values) {
            std::uint32_t bits;
            std::memcpy(&bits, bytes.data() + offset, 4);
            v = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
            offset += 4;
          }
        });
    if (index != tensors.size() || offset != bytes.size()) {
      throw ModelFormatError("manifest lists tensors the model does not have");
    }
    return model;
  } catch (const json::exception& e) {
    throw ModelFormatError("malformed model metadata in " + dir.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("invalid model configuration: ") + e.what());
  }
}

}  // namespace cws
