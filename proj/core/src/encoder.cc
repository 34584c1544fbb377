#include "cws/encoder.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cws {
namespace {

void glorot(Matrix& m, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& x : m.values()) x = rng.uniform(-r, r);
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                     std::to_string(got));
  }
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// Attention query W_x x + W_h̃ h̃_{t-1}.
Vector attention_query(const Vector& x, const Vector& htilde_prev, const AttentionParams& p) {
  Vector q = matvec(p.w_x, x.values());
  const Vector qh = matvec(p.w_htilde, htilde_prev.values());
  for (std::size_t a = 0; a < q.size(); ++a) q[a] += qh[a];
  return q;
}

// Scores vᵀ tanh(key_i + q) for each key; optionally keeps the tanh rows.
Vector attention_scores(std::span<const Vector> keys, const Vector& q, const Vector& v,
                        Matrix* z_out) {
  Vector scores(keys.size());
  if (z_out != nullptr) *z_out = Matrix(keys.size(), q.size());
  Vector z(q.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t a = 0; a < q.size(); ++a) z[a] = std::tanh(keys[i][a] + q[a]);
    scores[i] = dot(v.values(), z.values());
    if (z_out != nullptr) std::copy(z.begin(), z.end(), z_out->row(i).begin());
  }
  return scores;
}

std::pair<Vector, Vector> weighted_sums(std::span<const Vector> h, std::span<const Vector> c,
                                        const Vector& weights, std::size_t hidden) {
  Vector htilde(hidden), ctilde(hidden);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    axpy(weights[i], h[i].values(), htilde.values());
    axpy(weights[i], c[i].values(), ctilde.values());
  }
  return {std::move(htilde), std::move(ctilde)};
}

void check_params(const AttentionParams& a, const CellParams& cell) {
  const std::size_t hidden = cell.w.rows() / 4;
  const std::size_t attn = a.v.size();
  const std::size_t input = a.w_x.cols();
  if (a.w_h.rows() != attn || a.w_h.cols() != hidden || a.w_x.rows() != attn ||
      a.w_htilde.rows() != attn || a.w_htilde.cols() != hidden ||
      cell.w.rows() != 4 * hidden || cell.w.cols() != hidden + input ||
      cell.bias.size() != 4 * hidden) {
    throw ShapeError("inconsistent LSTMN parameter shapes: w_h " + a.w_h.shape_string() +
                     ", w_x " + a.w_x.shape_string() + ", w_htilde " +
                     a.w_htilde.shape_string() + ", cell " + cell.w.shape_string());
  }
}

void check_params(const LstmnParams& p) { check_params(p.attention, p.cell); }

// One step over precomputed keys for the visible window. Shared by lstmn_step
// and the cached sequence runner so the two paths agree bit for bit.
StepOutput step_impl(const Vector& x, std::span<const Vector> window_keys, LstmnState& state,
                     const AttentionParams& attention, const CellParams& cell,
                     EncoderCache::Step* trace) {
  const std::size_t hidden = cell.w.rows() / 4;
  check_size(x.size(), attention.w_x.cols(), "LSTMN input");
  check_size(state.hidden_dim(), hidden, "LSTMN state");
  const std::size_t begin = state.window_begin();
  const std::size_t count = state.length() - begin;
  check_size(window_keys.size(), count, "attention keys");

  Vector weights;
  Matrix z;
  if (count > 0) {
    const Vector q = attention_query(x, state.previous_summary(), attention);
    weights = softmax(attention_scores(window_keys, q, attention.v, trace ? &z : nullptr));
  }
  const std::span<const Vector> h_window(state.hidden_tape().data() + begin, count);
  const std::span<const Vector> c_window(state.memory_tape().data() + begin, count);
  auto [htilde, ctilde] = weighted_sums(h_window, c_window, weights, hidden);

  Vector gates = matvec(cell.w, concat(htilde, x).values());
  for (std::size_t r = 0; r < gates.size(); ++r) gates[r] += cell.bias[r];

  Vector in_gate(hidden), forget_gate(hidden), out_gate(hidden), candidate(hidden);
  Vector c(hidden), tanh_c(hidden), h(hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    in_gate[k] = sigmoid(gates[k]);
    forget_gate[k] = sigmoid(gates[hidden + k]);
    out_gate[k] = sigmoid(gates[2 * hidden + k]);
    candidate[k] = std::tanh(gates[3 * hidden + k]);
    c[k] = forget_gate[k] * ctilde[k] + in_gate[k] * candidate[k];
    tanh_c[k] = std::tanh(c[k]);
    h[k] = out_gate[k] * tanh_c[k];
  }

  if (trace != nullptr) {
    trace->window_begin = begin;
    trace->htilde_prev = state.previous_summary();
    trace->z = std::move(z);
    trace->weights = std::move(weights);
    trace->htilde = htilde;
    trace->ctilde = std::move(ctilde);
    trace->in_gate = std::move(in_gate);
    trace->forget_gate = std::move(forget_gate);
    trace->out_gate = std::move(out_gate);
    trace->candidate = std::move(candidate);
    trace->tanh_c = std::move(tanh_c);
  }
  state.append(h, c, std::move(htilde));
  return {std::move(h), std::move(c)};
}

// Runs one direction over inputs given in processing order.
std::vector<Vector> run_direction(const std::vector<Vector>& inputs, const LstmnParams& p,
                                  std::size_t memory_span, EncoderCache::Direction* trace) {
  LstmnState state(p.hidden_dim(), memory_span);
  std::vector<Vector> keys;
  std::vector<Vector> outputs;
  keys.reserve(inputs.size());
  outputs.reserve(inputs.size());
  if (trace != nullptr) trace->steps.resize(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const std::size_t begin = state.window_begin();
    const std::span<const Vector> window(keys.data() + begin, keys.size() - begin);
    StepOutput out = step_impl(inputs[t], window, state, p.attention, p.cell,
                               trace ? &trace->steps[t] : nullptr);
    keys.push_back(matvec(p.attention.w_h, out.h.values()));
    outputs.push_back(std::move(out.h));
  }
  if (trace != nullptr) {
    trace->inputs = inputs;
    trace->h = state.hidden_tape();
    trace->c = state.memory_tape();
  }
  return outputs;
}

// BPTT through one direction. `d_h` holds upstream gradients per step in
// processing order; returns gradients for the direction's inputs.
std::vector<Vector> backprop_direction(const LstmnParams& p, const EncoderCache::Direction& dir,
                                       std::vector<Vector> d_h, LstmnParams& g) {
  const std::size_t n = dir.steps.size();
  const std::size_t hidden = p.hidden_dim();
  const std::size_t attn = p.attn_dim();
  std::vector<Vector> d_c(n, Vector(hidden));
  std::vector<Vector> d_htilde(n, Vector(hidden));
  std::vector<Vector> d_x(n, Vector(p.input_dim()));

  Vector d_gates(4 * hidden);
  Vector d_ctilde(hidden);
  for (std::size_t t = n; t-- > 0;) {
    const auto& st = dir.steps[t];
    for (std::size_t k = 0; k < hidden; ++k) {
      const double dh = d_h[t][k];
      const double o = st.out_gate[k];
      const double d_cell = d_c[t][k] + dh * o * (1.0 - st.tanh_c[k] * st.tanh_c[k]);
      const double i = st.in_gate[k], f = st.forget_gate[k], cand = st.candidate[k];
      d_ctilde[k] = d_cell * f;
      d_gates[k] = d_cell * cand * i * (1.0 - i);
      d_gates[hidden + k] = d_cell * st.ctilde[k] * f * (1.0 - f);
      d_gates[2 * hidden + k] = dh * st.tanh_c[k] * o * (1.0 - o);
      d_gates[3 * hidden + k] = d_cell * i * (1.0 - cand * cand);
    }
    axpy(1.0, d_gates.values(), g.cell.bias.values());
    const Vector cell_in = concat(st.htilde, dir.inputs[t]);
    outer_acc(g.cell.w, d_gates.values(), cell_in.values());
    Vector d_cell_in(cell_in.size());
    matvec_transposed_acc(p.cell.w, d_gates.values(), d_cell_in.values());

    Vector& d_ht = d_htilde[t];
    for (std::size_t k = 0; k < hidden; ++k) d_ht[k] += d_cell_in[k];
    for (std::size_t k = 0; k < p.input_dim(); ++k) d_x[t][k] += d_cell_in[hidden + k];

    const std::size_t count = st.weights.size();
    if (count == 0) continue;

    // Summary h̃ = Σ s_i h_i, c̃ = Σ s_i c_i.
    Vector d_weights(count);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t i = st.window_begin + j;
      axpy(st.weights[j], d_ht.values(), d_h[i].values());
      axpy(st.weights[j], d_ctilde.values(), d_c[i].values());
      d_weights[j] = dot(d_ht.values(), dir.h[i].values()) + dot(d_ctilde.values(), dir.c[i].values());
    }
    // Softmax.
    const double mean = dot(st.weights.values(), d_weights.values());
    // Scores a_i = vᵀ tanh(W_h h_i + q).
    Vector d_query(attn);
    Vector d_u(attn);
    for (std::size_t j = 0; j < count; ++j) {
      const double d_score = st.weights[j] * (d_weights[j] - mean);
      if (d_score == 0.0) continue;
      const auto z = st.z.row(j);
      axpy(d_score, z, g.attention.v.values());
      for (std::size_t a = 0; a < attn; ++a) {
        d_u[a] = d_score * p.attention.v[a] * (1.0 - z[a] * z[a]);
      }
      const std::size_t i = st.window_begin + j;
      outer_acc(g.attention.w_h, d_u.values(), dir.h[i].values());
      matvec_transposed_acc(p.attention.w_h, d_u.values(), d_h[i].values());
      axpy(1.0, d_u.values(), d_query.values());
    }
    outer_acc(g.attention.w_x, d_query.values(), dir.inputs[t].values());
    matvec_transposed_acc(p.attention.w_x, d_query.values(), d_x[t].values());
    outer_acc(g.attention.w_htilde, d_query.values(), st.htilde_prev.values());
    if (t > 0) matvec_transposed_acc(p.attention.w_htilde, d_query.values(), d_htilde[t - 1].values());
  }
  return d_x;
}

std::vector<Vector> reversed(std::vector<Vector> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

LstmnParams LstmnParams::zeros(std::size_t input_dim, std::size_t hidden, std::size_t attn_dim) {
  LstmnParams p;
  p.attention.w_h = Matrix(attn_dim, hidden);
  p.attention.w_x = Matrix(attn_dim, input_dim);
  p.attention.w_htilde = Matrix(attn_dim, hidden);
  p.attention.v = Vector(attn_dim);
  p.cell.w = Matrix(4 * hidden, hidden + input_dim);
  p.cell.bias = Vector(4 * hidden);
  return p;
}

LstmnParams LstmnParams::init(std::size_t input_dim, std::size_t hidden, std::size_t attn_dim,
                              Rng& rng) {
  LstmnParams p = zeros(input_dim, hidden, attn_dim);
  glorot(p.attention.w_h, rng);
  glorot(p.attention.w_x, rng);
  glorot(p.attention.w_htilde, rng);
  const double rv = std::sqrt(6.0 / static_cast<double>(attn_dim + 1));
  for (double& x : p.attention.v) x = rng.uniform(-rv, rv);
  glorot(p.cell.w, rng);
  for (std::size_t k = 0; k < hidden; ++k) p.cell.bias[hidden + k] = 1.0;
  return p;
}

LstmnState::LstmnState(std::size_t hidden, std::size_t memory_span)
    : hidden_(hidden), memory_span_(memory_span), previous_summary_(hidden) {}

std::size_t LstmnState::window_begin() const {
  if (memory_span_ == 0 || length() <= memory_span_) return 0;
  return length() - memory_span_;
}

void LstmnState::append(Vector h, Vector c, Vector summary) {
  check_size(h.size(), hidden_, "hidden tape entry");
  check_size(c.size(), hidden_, "memory tape entry");
  check_size(summary.size(), hidden_, "summary");
  hidden_tape_.push_back(std::move(h));
  memory_tape_.push_back(std::move(c));
  previous_summary_ = std::move(summary);
}

Vector attention_weights(const Vector& x, const LstmnState& state, const AttentionParams& params) {
  check_size(x.size(), params.w_x.cols(), "attention input");
  if (params.w_h.cols() != state.hidden_dim() || params.w_htilde.cols() != state.hidden_dim()) {
    throw ShapeError("attention parameters " + params.w_h.shape_string() +
                     " do not match hidden size " + std::to_string(state.hidden_dim()));
  }
  const std::size_t begin = state.window_begin();
  if (state.length() == begin) return {};
  std::vector<Vector> keys;
  for (std::size_t i = begin; i < state.length(); ++i) {
    keys.push_back(matvec(params.w_h, state.hidden_tape()[i].values()));
  }
  const Vector q = attention_query(x, state.previous_summary(), params);
  return softmax(attention_scores(keys, q, params.v, nullptr));
}

std::pair<Vector, Vector> summarize(const LstmnState& state, const Vector& weights) {
  const std::size_t begin = state.window_begin();
  const std::size_t count = state.length() - begin;
  if (weights.size() != count) {
    throw ShapeError("summarize: " + std::to_string(weights.size()) + " weights for a window of " +
                     std::to_string(count));
  }
  return weighted_sums({state.hidden_tape().data() + begin, count},
                       {state.memory_tape().data() + begin, count}, weights, state.hidden_dim());
}

StepOutput lstmn_step(const Vector& x, LstmnState& state, const AttentionParams& attention,
                      const CellParams& cell) {
  check_params(attention, cell);
  std::vector<Vector> keys;
  for (std::size_t i = state.window_begin(); i < state.length(); ++i) {
    keys.push_back(matvec(attention.w_h, state.hidden_tape()[i].values()));
  }
  return step_impl(x, keys, state, attention, cell, nullptr);
}

// ---------------------------------------------------------------------------

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
  if (config.input_dim == 0 || config.hidden == 0 || config.attn_dim == 0 || config.num_tags == 0) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  EncoderParams p;
  for (std::size_t l = 0; l <= config.extra_layers; ++l) {
    const std::size_t in = l == 0 ? config.input_dim : 2 * config.hidden;
    BiLayerParams layer;
    layer.forward = LstmnParams::init(in, config.hidden, config.attn_dim, rng);
    layer.backward = LstmnParams::init(in, config.hidden, config.attn_dim, rng);
    p.layers.push_back(std::move(layer));
  }
  p.w_fy = Matrix(config.num_tags, config.hidden);
  p.w_by = Matrix(config.num_tags, config.hidden);
  glorot(p.w_fy, rng);
  glorot(p.w_by, rng);
  p.b_y = Vector(config.num_tags);
  return p;
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z;
  for (const auto& layer : layers) {
    const auto& f = layer.forward;
    z.layers.push_back({LstmnParams::zeros(f.input_dim(), f.hidden_dim(), f.attn_dim()),
                        LstmnParams::zeros(f.input_dim(), f.hidden_dim(), f.attn_dim())});
  }
  z.w_fy = Matrix(w_fy.rows(), w_fy.cols());
  z.w_by = Matrix(w_by.rows(), w_by.cols());
  z.b_y = Vector(b_y.size());
  return z;
}

std::size_t EncoderParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().forward.input_dim();
}

Matrix bilstm_forward(std::span<const Vector> inputs, const EncoderParams& params,
                      const ForwardOptions& options, EncoderCache* cache) {
  if (inputs.empty()) throw std::invalid_argument("bilstm_forward: empty input sequence");
  if (params.layers.empty()) throw std::invalid_argument("bilstm_forward: encoder has no layers");
  for (const auto& layer : params.layers) {
    check_params(layer.forward);
    check_params(layer.backward);
  }
  const std::size_t n = inputs.size();
  const std::size_t hidden = params.hidden_dim();
  if (params.w_by.rows() != params.num_tags() || params.w_by.cols() != hidden ||
      params.b_y.size() != params.num_tags()) {
    throw ShapeError("output projection shapes disagree: w_fy " + params.w_fy.shape_string() +
                     ", w_by " + params.w_by.shape_string());
  }

  if (cache != nullptr) {
    cache->clear();
    cache->memory_span = options.memory_span;
    cache->layers.resize(params.layers.size());
  }

  std::vector<Vector> layer_in(inputs.begin(), inputs.end());
  for (auto& x : layer_in) check_size(x.size(), params.input_dim(), "encoder input");
  if (options.dropout != nullptr) {
    for (auto& x : layer_in) {
      Vector mask = (*options.dropout)(x.size());
      x = hadamard(x, mask);
      if (cache != nullptr) cache->input_masks.push_back(std::move(mask));
    }
  }

  std::vector<Vector> fwd, bwd;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto* trace = cache ? &cache->layers[l] : nullptr;
    fwd = run_direction(layer_in, params.layers[l].forward, options.memory_span,
                        trace ? &trace->forward : nullptr);
    bwd = reversed(run_direction(reversed(layer_in), params.layers[l].backward,
                                 options.memory_span, trace ? &trace->backward : nullptr));
    if (l + 1 < params.layers.size()) {
      for (std::size_t t = 0; t < n; ++t) layer_in[t] = concat(fwd[t], bwd[t]);
    }
  }

  Matrix emissions(n, params.num_tags());
  for (std::size_t t = 0; t < n; ++t) {
    Vector top = concat(fwd[t], bwd[t]);
    if (options.dropout != nullptr) {
      Vector mask = (*options.dropout)(top.size());
      top = hadamard(top, mask);
      if (cache != nullptr) cache->output_masks.push_back(std::move(mask));
    }
    const std::span<const double> hf(top.data(), hidden);
    const std::span<const double> hb(top.data() + hidden, hidden);
    for (std::size_t k = 0; k < params.num_tags(); ++k) {
      emissions(t, k) = dot(params.w_fy.row(k), hf) + dot(params.w_by.row(k), hb) + params.b_y[k];
    }
    if (cache != nullptr) cache->top.push_back(std::move(top));
  }
  if (cache != nullptr) cache->valid = true;
  return emissions;
}

std::vector<Vector> encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                                     const Matrix& d_emissions, EncoderParams& grads) {
  if (!cache.valid) throw std::logic_error("encoder_backward called without a cached forward pass");
  const std::size_t n = cache.top.size();
  const std::size_t hidden = params.hidden_dim();
  if (d_emissions.rows() != n || d_emissions.cols() != params.num_tags()) {
    throw ShapeError("encoder_backward: emission gradient " + d_emissions.shape_string() +
                     " for a sentence of length " + std::to_string(n));
  }
  if (grads.layers.size() != params.layers.size()) {
    throw ShapeError("encoder_backward: gradient buffer has a different layer count");
  }

  std::vector<Vector> d_fwd(n, Vector(hidden)), d_bwd(n, Vector(hidden));
  for (std::size_t t = 0; t < n; ++t) {
    const auto dy = d_emissions.row(t);
    const Vector& top = cache.top[t];
    const std::span<const double> hf(top.data(), hidden);
    const std::span<const double> hb(top.data() + hidden, hidden);
    axpy(1.0, dy, grads.b_y.values());
    outer_acc(grads.w_fy, dy, hf);
    outer_acc(grads.w_by, dy, hb);
    matvec_transposed_acc(params.w_fy, dy, d_fwd[t].values());
    matvec_transposed_acc(params.w_by, dy, d_bwd[t].values());
    if (!cache.output_masks.empty()) {
      const Vector& mask = cache.output_masks[t];
      for (std::size_t k = 0; k < hidden; ++k) {
        d_fwd[t][k] *= mask[k];
        d_bwd[t][k] *= mask[hidden + k];
      }
    }
  }

  std::vector<Vector> d_in;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = cache.layers[l];
    std::vector<Vector> d_in_f =
        backprop_direction(params.layers[l].forward, layer.forward, std::move(d_fwd),
                           grads.layers[l].forward);
    std::vector<Vector> d_in_b =
        reversed(backprop_direction(params.layers[l].backward, layer.backward,
                                    reversed(std::move(d_bwd)), grads.layers[l].backward));
    d_in = std::move(d_in_f);
    for (std::size_t t = 0; t < n; ++t) axpy(1.0, d_in_b[t].values(), d_in[t].values());
    if (l > 0) {
      d_fwd.assign(n, Vector(hidden));
      d_bwd.assign(n, Vector(hidden));
      for (std::size_t t = 0; t < n; ++t) {
        std::copy(d_in[t].begin(), d_in[t].begin() + static_cast<std::ptrdiff_t>(hidden), d_fwd[t].begin());
        std::copy(d_in[t].begin() + static_cast<std::ptrdiff_t>(hidden), d_in[t].end(), d_bwd[t].begin());
      }
    }
  }

  if (!cache.input_masks.empty()) {
    for (std::size_t t = 0; t < n; ++t) d_in[t] = hadamard(d_in[t], cache.input_masks[t]);
  }
  return d_in;
}

}  // namespace cws
