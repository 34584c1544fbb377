#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cws/numerics.h"
#include "cws/tagging.h"

namespace cws {

/// Attention over the previous hidden tape:
///   a_i = vᵀ tanh(W_h h_i + W_x x_t + W_h̃ h̃_{t-1}),  s = softmax(a).
struct AttentionParams {
  Matrix w_h;       // attn × hidden
  Matrix w_x;       // attn × input
  Matrix w_htilde;  // attn × hidden
  Vector v;         // attn
};

/// Gate block W · [h̃_t, x_t] + bias, rows ordered (i, f, o, ĉ).
struct CellParams {
  Matrix w;     // 4·hidden × (hidden + input)
  Vector bias;  // 4·hidden
};

struct LstmnParams {
  AttentionParams attention;
  CellParams cell;

  /// Glorot-uniform weights; forget-gate bias 1, other biases 0.
  static LstmnParams init(std::size_t input_dim, std::size_t hidden, std::size_t attn_dim,
                          Rng& rng);
  static LstmnParams zeros(std::size_t input_dim, std::size_t hidden, std::size_t attn_dim);

  std::size_t hidden_dim() const { return cell.w.rows() / 4; }
  std::size_t input_dim() const { return attention.w_x.cols(); }
  std::size_t attn_dim() const { return attention.v.size(); }
};

/// Hidden and memory tapes of one LSTMN run, plus the previous summary h̃_{t-1}.
class LstmnState {
 public:
  /// memory_span == 0 means the attention sees the whole tape.
  explicit LstmnState(std::size_t hidden, std::size_t memory_span = 0);

  std::size_t length() const { return hidden_tape_.size(); }
  std::size_t hidden_dim() const { return hidden_; }
  std::size_t memory_span() const { return memory_span_; }

  const std::vector<Vector>& hidden_tape() const { return hidden_tape_; }
  const std::vector<Vector>& memory_tape() const { return memory_tape_; }
  const Vector& previous_summary() const { return previous_summary_; }

  /// First tape index visible to the next step's attention.
  std::size_t window_begin() const;
  std::size_t window_size() const { return length() - window_begin(); }

  void append(Vector h, Vector c, Vector summary);

 private:
  std::size_t hidden_;
  std::size_t memory_span_;
  std::vector<Vector> hidden_tape_;
  std::vector<Vector> memory_tape_;
  Vector previous_summary_;
};

/// Attention distribution of the next step over the visible tape window.
/// Empty when the tape is empty.
Vector attention_weights(const Vector& x, const LstmnState& state, const AttentionParams& params);

/// (h̃_t, c̃_t) as the weighted sums of the visible window. Empty weights give zeros.
std::pair<Vector, Vector> summarize(const LstmnState& state, const Vector& weights);

struct StepOutput {
  Vector h;
  Vector c;
};

/// One LSTMN update; appends (h_t, c_t) to the tapes of `state`.
StepOutput lstmn_step(const Vector& x, LstmnState& state, const AttentionParams& attention,
                      const CellParams& cell);

struct EncoderConfig {
  std::size_t input_dim = 0;
  std::size_t hidden = 150;
  std::size_t attn_dim = 150;
  /// Stacked bidirectional layers above the first.
  std::size_t extra_layers = 0;
  std::size_t num_tags = kNumTags;
};

struct BiLayerParams {
  LstmnParams forward;
  LstmnParams backward;
};

struct EncoderParams {
  std::vector<BiLayerParams> layers;
  Matrix w_fy;  // tags × hidden
  Matrix w_by;  // tags × hidden
  Vector b_y;   // tags

  static EncoderParams init(const EncoderConfig& config, Rng& rng);
  EncoderParams zeros_like() const;

  std::size_t hidden_dim() const { return w_fy.cols(); }
  std::size_t num_tags() const { return w_fy.rows(); }
  std::size_t input_dim() const;

  /// Calls f(name, values, shape) for every tensor in a fixed order.
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
  static void visit(Self& self, F& f);
};

/// Supplies a dropout mask of the requested length. Absent means evaluation mode.
using MaskSource = std::function<Vector(std::size_t)>;

struct ForwardOptions {
  /// Attention window cap; 0 for unbounded.
  std::size_t memory_span = 0;
  /// Masks for the input vectors and for the concatenated top-layer outputs.
  const MaskSource* dropout = nullptr;
};

/// Intermediates recorded by bilstm_forward for encoder_backward.
struct EncoderCache {
  struct Step {
    std::size_t window_begin = 0;
    Vector htilde_prev;
    Matrix z;  // window × attn, tanh of the attention pre-activations
    Vector weights;
    Vector htilde, ctilde;
    Vector in_gate, forget_gate, out_gate, candidate;
    Vector tanh_c;
  };
  struct Direction {
    std::vector<Vector> inputs;  // in processing order
    std::vector<Vector> h, c;    // tapes in processing order
    std::vector<Step> steps;
  };
  struct Layer {
    Direction forward, backward;
  };

  bool valid = false;
  std::size_t memory_span = 0;
  std::vector<Vector> input_masks;
  std::vector<Vector> output_masks;
  std::vector<Layer> layers;
  std::vector<Vector> top;  // [h⃗_t; h⃖_t] after dropout

  void clear() { *this = EncoderCache{}; }
};

/// Emissions (n × tags). The backward direction runs the same cell over the
/// reversed sequence with its own parameters; both start from empty tapes.
Matrix bilstm_forward(std::span<const Vector> inputs, const EncoderParams& params,
                      const ForwardOptions& options = {}, EncoderCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` and returns the gradient with
/// respect to each input vector (before input dropout was applied).
std::vector<Vector> encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                                     const Matrix& d_emissions, EncoderParams& grads);

// ---------------------------------------------------------------------------

template <class Self, class F>
void EncoderParams::visit(Self& self, F& f) {
  auto mat = [&](const std::string& name, auto& m) {
    f(name, m.values(), std::vector<std::size_t>{m.rows(), m.cols()});
  };
  auto vec = [&](const std::string& name, auto& v) {
    f(name, v.values(), std::vector<std::size_t>{v.size()});
  };
  auto lstmn = [&](const std::string& prefix, auto& p) {
    mat(prefix + ".attn.w_h", p.attention.w_h);
    mat(prefix + ".attn.w_x", p.attention.w_x);
    mat(prefix + ".attn.w_htilde", p.attention.w_htilde);
    vec(prefix + ".attn.v", p.attention.v);
    mat(prefix + ".cell.w", p.cell.w);
    vec(prefix + ".cell.bias", p.cell.bias);
  };
  for (std::size_t l = 0; l < self.layers.size(); ++l) {
    const std::string prefix = "encoder.layer" + std::to_string(l);
    lstmn(prefix + ".fwd", self.layers[l].forward);
    lstmn(prefix + ".bwd", self.layers[l].backward);
  }
  mat("encoder.out.w_fy", self.w_fy);
  mat("encoder.out.w_by", self.w_by);
  vec("encoder.out.b_y", self.b_y);
}

}  // namespace cws
