#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dipriv/errors.hpp"
#include "dipriv/lstm.hpp"

namespace dipriv {

/// Elementwise clamp of every gradient entry to [-c, +c].
inline void clip_values(std::span<double> values, double c) {
  if (!(c > 0.0)) throw DomainError("clip: clipping value must be > 0");
  for (double& v : values) v = std::min(std::max(v, -c), c);
}

inline void clip_gradients(NetGrads& grads, double c) {
  if (!(c > 0.0)) throw DomainError("clip_gradients: clipping value must be > 0");
  grads.for_each([c](Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
      m.data()[i] = std::min(std::max(m.data()[i], -c), c);
  });
}

/// Alternative global-norm clipping (config option, off by default):
/// scales the whole record so its L2 norm is at most c.
inline void clip_gradients_by_norm(NetGrads& grads, double c) {
  if (!(c > 0.0)) throw DomainError("clip_gradients_by_norm: clipping value must be > 0");
  double sq = 0.0;
  grads.for_each([&sq](Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) sq += m.data()[i] * m.data()[i];
  });
  const double norm = std::sqrt(sq);
  if (norm <= c) return;
  const double s = c / norm;
  grads.for_each([s](Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= s;
  });
}

/// RMSprop:  acc <- rho*acc + (1-rho)*g^2;  p <- p - lr * g / sqrt(acc + eps)
struct RmsPropState {
  RmsPropState(std::size_t param_count, double learning_rate = 1e-3, double decay = 0.9,
               double stabilizer = 1e-8)
      : acc(param_count, 0.0), rho(decay), lr(learning_rate), eps(stabilizer) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("RmsPropState: decay must be in (0,1)");
    if (!(lr >= 0.0)) throw DomainError("RmsPropState: learning rate must be >= 0");
    if (!(eps > 0.0)) throw DomainError("RmsPropState: stabilizer must be > 0");
  }

  std::vector<double> acc;
  double rho;
  double lr;
  double eps;
};

inline void rmsprop_step(RmsPropState& state, std::span<double> params,
                         std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.acc.size())
    throw ShapeError("rmsprop_step: parameter/gradient/state sizes differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.acc[i] = state.rho * state.acc[i] + (1.0 - state.rho) * g * g;
    params[i] -= state.lr * g / std::sqrt(state.acc[i] + state.eps);
  }
}

inline void rmsprop_step(RmsPropState& state, StackedNet& net, const NetGrads& grads) {
  std::vector<double> p = net.flatten();
  const std::vector<double> g = grads.flatten();
  rmsprop_step(state, p, g);
  net.unflatten(p);
}

/// Gradient of beta * sum_l sum_u ||K^u_l||_F^2, i.e. 2*beta*K for every
/// recurrent matrix. Input weights, biases and the head contribute nothing.
inline NetGrads recurrent_l2_gradient(const StackedNet& net, double beta) {
  if (!(beta >= 0.0)) throw DomainError("recurrent_l2_gradient: beta must be >= 0");
  NetGrads g = zeros_like(net);
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    for (std::size_t u = 0; u < kNumGates; ++u)
      g.layers[l].recur_w[u] = scale(net.layers[l].recur_w[u], 2.0 * beta);
  return g;
}

inline void add_gradients(NetGrads& dst, const NetGrads& src) {
  std::size_t i = 0;
  std::vector<const Matrix*> src_mats;
  src.for_each_const([&src_mats](const Matrix& m) { src_mats.push_back(&m); });
  dst.for_each([&](Matrix& m) { add_in_place(m, *src_mats[i++]); });
}

}  // namespace dipriv
