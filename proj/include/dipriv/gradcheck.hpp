#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

#include "dipriv/lstm.hpp"
#include "dipriv/rng.hpp"

namespace dipriv {

/// A scalar loss over the per-step outputs of a net, together with its
/// derivative w.r.t. those outputs. Both callables must be deterministic.
struct LossProbe {
  std::function<double(const std::vector<Matrix>&)> value;
  std::function<std::vector<Matrix>(const std::vector<Matrix>&)> grad;
};

/// Analytic gradient of `loss` w.r.t. all parameters, flattened.
inline std::vector<double> analytic_gradients(const StackedNet& net,
                                              const std::vector<Matrix>& inputs,
                                              const LossProbe& loss) {
  const ForwardTape tape = net_forward(net, inputs);
  const std::vector<Matrix> d_outputs = loss.grad(tape.outputs);
  return net_backward(net, tape, d_outputs).grads.flatten();
}

/// Central finite differences of `loss` at the given flat parameter indices.
inline std::vector<double> fd_gradients(const StackedNet& net, const std::vector<Matrix>& inputs,
                                        const LossProbe& loss, double eps,
                                        const std::vector<std::size_t>& indices) {
  StackedNet probe = net;
  std::vector<double> flat = probe.flatten();
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    const double orig = flat[idx];
    flat[idx] = orig + eps;
    probe.unflatten(flat);
    const double up = loss.value(net_forward(probe, inputs).outputs);
    flat[idx] = orig - eps;
    probe.unflatten(flat);
    const double down = loss.value(net_forward(probe, inputs).outputs);
    flat[idx] = orig;
    out.push_back((up - down) / (2.0 * eps));
  }
  probe.unflatten(flat);
  return out;
}

/// Relative error with an absolute floor in the denominator: differences on
/// near-zero gradients are dominated by finite-difference rounding noise
/// (~|loss|*1e-11 at eps=1e-5), so below the floor the comparison is
/// effectively absolute.
inline double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
  return std::abs(analytic - numeric) / denom;
}

/// Compares net_backward against central differences on a random subsample of
/// parameters (all of them when the net is small). Returns the worst relative
/// error seen.
inline double grad_check(const StackedNet& net, const std::vector<Matrix>& inputs,
                         const LossProbe& loss, double eps = 1e-5,
                         std::size_t sample_size = 256, std::uint64_t seed = 7) {
  const std::size_t n = net.param_count();
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  if (n > sample_size) {
    SeededRng rng(seed);
    rng.shuffle(indices);
    indices.resize(sample_size);
  }
  const std::vector<double> analytic = analytic_gradients(net, inputs, loss);
  const std::vector<double> numeric = fd_gradients(net, inputs, loss, eps, indices);
  double worst = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i)
    worst = std::max(worst, gradient_relative_error(analytic[indices[i]], numeric[i]));
  return worst;
}

}  // namespace dipriv
