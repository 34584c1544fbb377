#pragma once

#include <cstddef>
#include <cstdint>

namespace cws {

/// Hyperparameters for model construction and training. Defaults follow the
/// reference setup: batch 50, hidden 150, embedding 100, one BiLSTMN layer.
struct TrainConfig {
  std::size_t batch_size = 50;
  double learning_rate = 0.1;
  double adagrad_epsilon = 1e-6;
  double dropout = 0.2;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;

  std::size_t hidden = 150;
  /// 0 means "same as hidden".
  std::size_t attn_dim = 0;
  std::size_t emb_dim = 100;
  std::size_t extra_layers = 0;
  std::size_t window = 3;
  bool bigram = false;
  /// 0 means "same as emb_dim".
  std::size_t bigram_dim = 0;
  /// Attention window cap; 0 is unbounded.
  std::size_t memory_span = 0;
  /// Global gradient-norm clip per batch; 0 disables.
  double max_grad_norm = 0.0;
  /// Apply the BMES mask inside the training loss.
  bool train_mask = false;
  /// Apply the BMES mask when decoding.
  bool decode_mask = true;

  std::size_t effective_attn_dim() const { return attn_dim == 0 ? hidden : attn_dim; }
  std::size_t effective_bigram_dim() const { return bigram ? (bigram_dim == 0 ? emb_dim : bigram_dim) : 0; }
  std::size_t input_dim() const { return window * emb_dim + effective_bigram_dim(); }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

}  // namespace cws
