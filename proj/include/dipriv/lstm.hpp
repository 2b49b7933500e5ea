#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dipriv/matrix.hpp"
#include "dipriv/rng.hpp"

namespace dipriv {

// Gate order is fixed everywhere (forward, backward, flatten, serialization):
// forget, input gate, output gate, candidate input unit.
enum Gate : std::size_t { kForget = 0, kInputGate = 1, kOutputGate = 2, kCandidate = 3 };
constexpr std::size_t kNumGates = 4;

/// Parameters of one LSTM layer. For each gate u: input weights V^u
/// (hidden x input), recurrent weights K^u (hidden x hidden), bias b^u
/// (hidden x 1).
struct LstmLayerParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<Matrix, kNumGates> input_w;
  std::array<Matrix, kNumGates> recur_w;
  std::array<Matrix, kNumGates> bias;
};

struct LstmState {
  Matrix h;  // hidden x batch
  Matrix c;  // hidden x batch
};

enum class HeadKind { linear, softmax };

/// Stack of LSTM layers plus a per-time-step output head shared across t.
struct StackedNet {
  std::vector<LstmLayerParams> layers;
  Matrix head_w;  // out x hidden
  Matrix head_b;  // out x 1
  HeadKind head_kind = HeadKind::linear;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().input_dim; }
  std::size_t hidden_dim() const { return layers.empty() ? 0 : layers.back().hidden_dim; }
  std::size_t output_dim() const { return head_w.rows(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
      for (std::size_t u = 0; u < kNumGates; ++u)
        n += l.input_w[u].size() + l.recur_w[u].size() + l.bias[u].size();
    return n + head_w.size() + head_b.size();
  }

  /// Flatten order: per layer (in stack order), per gate (f, g, o, c):
  /// V row-major, K row-major, b; then head weights, head bias.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    for_each_const([&out](const Matrix& m) {
      out.insert(out.end(), m.data(), m.data() + m.size());
    });
    return out;
  }

  void unflatten(std::span<const double> flat) {
    detail::require(flat.size() == param_count(), "unflatten: parameter count mismatch");
    std::size_t pos = 0;
    for_each([&](Matrix& m) {
      std::copy(flat.begin() + pos, flat.begin() + pos + m.size(), m.data());
      pos += m.size();
    });
  }

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& l : layers)
      for (std::size_t u = 0; u < kNumGates; ++u) {
        fn(l.input_w[u]);
        fn(l.recur_w[u]);
        fn(l.bias[u]);
      }
    fn(head_w);
    fn(head_b);
  }

  template <typename Fn>
  void for_each_const(Fn&& fn) const {
    for (const auto& l : layers)
      for (std::size_t u = 0; u < kNumGates; ++u) {
        fn(l.input_w[u]);
        fn(l.recur_w[u]);
        fn(l.bias[u]);
      }
    fn(head_w);
    fn(head_b);
  }
};

/// Gradient record with the same structure as the parameters it refers to.
using NetGrads = StackedNet;

inline NetGrads zeros_like(const StackedNet& net) {
  NetGrads g;
  g.head_kind = net.head_kind;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& src = net.layers[l];
    auto& dst = g.layers[l];
    dst.input_dim = src.input_dim;
    dst.hidden_dim = src.hidden_dim;
    for (std::size_t u = 0; u < kNumGates; ++u) {
      dst.input_w[u] = Matrix(src.input_w[u].rows(), src.input_w[u].cols());
      dst.recur_w[u] = Matrix(src.recur_w[u].rows(), src.recur_w[u].cols());
      dst.bias[u] = Matrix(src.bias[u].rows(), src.bias[u].cols());
    }
  }
  g.head_w = Matrix(net.head_w.rows(), net.head_w.cols());
  g.head_b = Matrix(net.head_b.rows(), net.head_b.cols());
  return g;
}

/// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero except
/// the forget-gate bias which starts at 1 so early memory does not vanish.
inline LstmLayerParams make_lstm_layer(std::size_t input_dim, std::size_t hidden_dim,
                                       SeededRng& rng) {
  LstmLayerParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double rec_bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (std::size_t u = 0; u < kNumGates; ++u) {
    p.input_w[u] = Matrix(hidden_dim, input_dim);
    for (std::size_t i = 0; i < p.input_w[u].size(); ++i)
      p.input_w[u].data()[i] = rng.next_in(-in_bound, in_bound);
    p.recur_w[u] = Matrix(hidden_dim, hidden_dim);
    for (std::size_t i = 0; i < p.recur_w[u].size(); ++i)
      p.recur_w[u].data()[i] = rng.next_in(-rec_bound, rec_bound);
    p.bias[u] = Matrix(hidden_dim, 1, u == kForget ? 1.0 : 0.0);
  }
  return p;
}

inline StackedNet make_net(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_layers,
                           std::size_t output_dim, HeadKind head, SeededRng& rng) {
  detail::require(num_layers >= 1, "make_net: need at least one layer");
  StackedNet net;
  net.head_kind = head;
  net.layers.reserve(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l)
    net.layers.push_back(make_lstm_layer(l == 0 ? input_dim : hidden_dim, hidden_dim, rng));
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  net.head_w = Matrix(output_dim, hidden_dim);
  for (std::size_t i = 0; i < net.head_w.size(); ++i)
    net.head_w.data()[i] = rng.next_in(-bound, bound);
  net.head_b = Matrix(output_dim, 1);
  return net;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

/// Everything one cell step needs to replay itself backwards.
struct CellCache {
  Matrix x;       // layer input at t
  Matrix h_prev;  // state entering the step
  Matrix c_prev;
  Matrix f, g, o, cand;  // gate activations (post sigmoid/tanh)
  Matrix c;              // new cell state
  Matrix tanh_c;
  Matrix h;  // new hidden state
};

struct ForwardTape {
  std::vector<std::vector<CellCache>> cells;  // [t][layer]
  std::vector<Matrix> outputs;                // post-head output per t

  std::size_t seq_len() const { return cells.size(); }
};

/// One LSTM step:
///   f = sigma(b_f + K_f h + V_f w),  g = sigma(b_g + K_g h + V_g w)
///   o = sigma(b_o + K_o h + V_o w),  cand = tanh(b_c + K_c h + V_c w)
///   C_t = f .* C_{t-1} + g .* cand,  h_t = o .* tanh(C_t)
inline LstmState cell_forward(const LstmLayerParams& p, const Matrix& w_t, const LstmState& prev,
                              CellCache* cache = nullptr) {
  detail::require(w_t.rows() == p.input_dim, "cell_forward: input dim mismatch");
  detail::require(prev.h.rows() == p.hidden_dim && prev.c.rows() == p.hidden_dim,
                  "cell_forward: state dim mismatch");
  detail::require(prev.h.cols() == w_t.cols() && prev.c.cols() == w_t.cols(),
                  "cell_forward: batch size mismatch");

  std::array<Matrix, kNumGates> act;
  for (std::size_t u = 0; u < kNumGates; ++u) {
    Matrix pre = affine(p.input_w[u], w_t, p.bias[u]);
    matmul_acc(pre, p.recur_w[u], prev.h);
    act[u] = map_elementwise(pre, u == kCandidate ? Unary::tanh : Unary::sigmoid);
  }

  Matrix c = add(hadamard(act[kForget], prev.c), hadamard(act[kInputGate], act[kCandidate]));
  Matrix tanh_c = map_elementwise(c, Unary::tanh);
  Matrix h = hadamard(act[kOutputGate], tanh_c);

  if (cache) {
    cache->x = w_t;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->f = act[kForget];
    cache->g = act[kInputGate];
    cache->o = act[kOutputGate];
    cache->cand = act[kCandidate];
    cache->c = c;
    cache->tanh_c = tanh_c;
    cache->h = h;
  }
  return LstmState{std::move(h), std::move(c)};
}

inline Matrix apply_head(const StackedNet& net, const Matrix& h) {
  Matrix out = affine(net.head_w, h, net.head_b);
  if (net.head_kind == HeadKind::softmax) out = softmax_columns(out);
  return out;
}

/// Unrolls the stack over the whole sequence from zero initial states.
/// Outputs at time t depend only on inputs up to t.
inline ForwardTape net_forward(const StackedNet& net, const std::vector<Matrix>& inputs) {
  detail::require(!net.layers.empty(), "net_forward: empty net");
  const std::size_t seq_len = inputs.size();
  const std::size_t batch = seq_len ? inputs.front().cols() : 0;

  std::vector<LstmState> states;
  states.reserve(net.layers.size());
  for (const auto& layer : net.layers)
    states.push_back(LstmState{Matrix(layer.hidden_dim, batch), Matrix(layer.hidden_dim, batch)});

  ForwardTape tape;
  tape.cells.resize(seq_len);
  tape.outputs.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    detail::require(inputs[t].rows() == net.input_dim() && inputs[t].cols() == batch,
                    "net_forward: input shape mismatch at step " + std::to_string(t));
    tape.cells[t].resize(net.layers.size());
    const Matrix* x = &inputs[t];
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      states[l] = cell_forward(net.layers[l], *x, states[l], &tape.cells[t][l]);
      x = &tape.cells[t][l].h;
    }
    tape.outputs.push_back(apply_head(net, *x));
  }
  return tape;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

struct BackwardResult {
  NetGrads grads;
  std::vector<Matrix> d_inputs;  // gradient w.r.t. each input step
};

namespace detail {

inline Matrix head_backward(const StackedNet& net, const Matrix& output, const Matrix& d_output) {
  if (net.head_kind == HeadKind::linear) return d_output;
  // Softmax Jacobian: d_logit = p .* (dp - sum_col(p .* dp))
  Matrix d_logit(output.rows(), output.cols());
  for (std::size_t j = 0; j < output.cols(); ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < output.rows(); ++i) dot += output(i, j) * d_output(i, j);
    for (std::size_t i = 0; i < output.rows(); ++i)
      d_logit(i, j) = output(i, j) * (d_output(i, j) - dot);
  }
  return d_logit;
}

}  // namespace detail

/// Reverse accumulation through time and layers. `d_outputs[t]` holds the
/// derivative of the scalar loss w.r.t. the post-head output at step t
/// (probabilities for a softmax head). Returns parameter gradients and the
/// gradients w.r.t. the input sequence.
inline BackwardResult net_backward(const StackedNet& net, const ForwardTape& tape,
                                   const std::vector<Matrix>& d_outputs) {
  const std::size_t seq_len = tape.seq_len();
  const std::size_t num_layers = net.layers.size();
  detail::require(d_outputs.size() == seq_len, "net_backward: d_outputs length mismatch");
  detail::require(seq_len == 0 || tape.cells.front().size() == num_layers,
                  "net_backward: tape does not match net");

  BackwardResult res;
  res.grads = zeros_like(net);
  res.d_inputs.resize(seq_len);

  const std::size_t batch = seq_len ? tape.outputs.front().cols() : 0;
  std::vector<Matrix> dh_next(num_layers), dc_next(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    dh_next[l] = Matrix(net.layers[l].hidden_dim, batch);
    dc_next[l] = Matrix(net.layers[l].hidden_dim, batch);
  }

  for (std::size_t ti = seq_len; ti-- > 0;) {
    detail::require(d_outputs[ti].rows() == net.output_dim() && d_outputs[ti].cols() == batch,
                    "net_backward: d_output shape mismatch at step " + std::to_string(ti));
    // Head
    const Matrix d_logit = detail::head_backward(net, tape.outputs[ti], d_outputs[ti]);
    const Matrix& h_top = tape.cells[ti][num_layers - 1].h;
    matmul_nt_acc(res.grads.head_w, d_logit, h_top);
    add_in_place(res.grads.head_b, row_sums(d_logit));
    Matrix d_from_above = matmul_tn(net.head_w, d_logit);

    for (std::size_t l = num_layers; l-- > 0;) {
      const CellCache& cc = tape.cells[ti][l];
      const LstmLayerParams& p = net.layers[l];
      LstmLayerParams& gp = res.grads.layers[l];

      Matrix dh = add(d_from_above, dh_next[l]);
      Matrix dc = dc_next[l];

      // h = o .* tanh(c)
      // do_pre = dh .* tanh_c .* o .* (1-o);  dc += dh .* o .* (1 - tanh_c^2)
      const std::size_t n = dh.size();
      Matrix do_pre(dh.rows(), dh.cols());
      for (std::size_t i = 0; i < n; ++i) {
        const double o = cc.o.data()[i];
        const double tc = cc.tanh_c.data()[i];
        do_pre.data()[i] = dh.data()[i] * tc * o * (1.0 - o);
        dc.data()[i] += dh.data()[i] * o * (1.0 - tc * tc);
      }

      // c = f .* c_prev + g .* cand
      Matrix df_pre(dh.rows(), dh.cols());
      Matrix dg_pre(dh.rows(), dh.cols());
      Matrix dcand_pre(dh.rows(), dh.cols());
      Matrix dc_prev(dh.rows(), dh.cols());
      for (std::size_t i = 0; i < n; ++i) {
        const double dcv = dc.data()[i];
        const double f = cc.f.data()[i];
        const double g = cc.g.data()[i];
        const double cand = cc.cand.data()[i];
        df_pre.data()[i] = dcv * cc.c_prev.data()[i] * f * (1.0 - f);
        dg_pre.data()[i] = dcv * cand * g * (1.0 - g);
        dcand_pre.data()[i] = dcv * g * (1.0 - cand * cand);
        dc_prev.data()[i] = dcv * f;
      }

      const std::array<const Matrix*, kNumGates> d_pre = {&df_pre, &dg_pre, &do_pre, &dcand_pre};
      Matrix dx(p.input_dim, batch);
      Matrix dh_prev(p.hidden_dim, batch);
      for (std::size_t u = 0; u < kNumGates; ++u) {
        matmul_nt_acc(gp.input_w[u], *d_pre[u], cc.x);
        matmul_nt_acc(gp.recur_w[u], *d_pre[u], cc.h_prev);
        add_in_place(gp.bias[u], row_sums(*d_pre[u]));
        matmul_tn_acc(dx, p.input_w[u], *d_pre[u]);
        matmul_tn_acc(dh_prev, p.recur_w[u], *d_pre[u]);
      }

      dh_next[l] = std::move(dh_prev);
      dc_next[l] = std::move(dc_prev);
      d_from_above = std::move(dx);
    }
    res.d_inputs[ti] = std::move(d_from_above);
  }
  return res;
}

}  // namespace dipriv
