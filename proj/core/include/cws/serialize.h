#pragma once

#include <filesystem>
#include <stdexcept>

#include "cws/model.h"

namespace cws {

inline constexpr int kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the model directory:
///   model.json     format version, every TrainConfig field, tag-id table
///   vocab.txt      one token per line in id order
///   bigram_vocab.txt  (bigram models only) same layout
///   params.bin     tensors as little-endian binary32, row-major, concatenated
///   manifest.json  [{name, shape, offset}] plus a CRC-32 of params.bin
void save_model(const Model& model, const std::filesystem::path& dir);

/// Reads a directory written by save_model. Throws ModelFormatError on any
/// version, shape, size or checksum mismatch.
Model load_model(const std::filesystem::path& dir);

}  // namespace cws
