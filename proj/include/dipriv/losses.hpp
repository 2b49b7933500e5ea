#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dipriv/errors.hpp"
#include "dipriv/matrix.hpp"

namespace dipriv {

/// Numerical guard inside log() of cross-entropy/entropy terms; keeps a
/// saturated softmax from producing -inf. Not part of the model.
constexpr double kLogFloor = 1e-12;

/// Labels for a batch of sequences, indexed [batch][t].
using LabelBatch = std::vector<std::vector<int>>;

namespace detail {

inline void require_same_seq(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                             const char* what) {
  if (a.size() != b.size()) throw ShapeError(std::string(what) + ": sequence lengths differ");
  for (std::size_t t = 0; t < a.size(); ++t)
    if (!a[t].same_shape(b[t])) throw ShapeError(std::string(what) + ": shape mismatch at step");
}

}  // namespace detail

/// Normalized squared error (1/T) sum_t ||z_t - y_t||^2, averaged over the
/// batch columns.
inline double distortion(const std::vector<Matrix>& z_seq, const std::vector<Matrix>& y_seq) {
  detail::require_same_seq(z_seq, y_seq, "distortion");
  if (z_seq.empty()) throw ShapeError("distortion: empty sequence");
  const std::size_t seq_len = z_seq.size();
  const std::size_t batch = z_seq.front().cols();
  double total = 0.0;
  for (std::size_t t = 0; t < seq_len; ++t)
    for (std::size_t i = 0; i < z_seq[t].size(); ++i) {
      const double d = z_seq[t].data()[i] - y_seq[t].data()[i];
      total += d * d;
    }
  return total / (static_cast<double>(seq_len) * static_cast<double>(batch));
}

/// d(distortion)/dz_t = 2 (z_t - y_t) / (T * batch)
inline std::vector<Matrix> distortion_grad(const std::vector<Matrix>& z_seq,
                                           const std::vector<Matrix>& y_seq) {
  detail::require_same_seq(z_seq, y_seq, "distortion_grad");
  const double s =
      2.0 / (static_cast<double>(z_seq.size()) * static_cast<double>(z_seq.front().cols()));
  std::vector<Matrix> out;
  out.reserve(z_seq.size());
  for (std::size_t t = 0; t < z_seq.size(); ++t) out.push_back(scale(sub(z_seq[t], y_seq[t]), s));
  return out;
}

/// Cross-entropy of the per-step predicted distributions against the true
/// labels: (1/T) sum_t E[-log p_t(x_t)], averaged over the batch.
inline double adversary_loss(const std::vector<Matrix>& pred_seq, const LabelBatch& labels) {
  if (pred_seq.empty()) throw ShapeError("adversary_loss: empty sequence");
  const std::size_t seq_len = pred_seq.size();
  const std::size_t batch = pred_seq.front().cols();
  if (labels.size() != batch) throw ShapeError("adversary_loss: batch size mismatch");
  const std::size_t alphabet = pred_seq.front().rows();
  double total = 0.0;
  for (std::size_t t = 0; t < seq_len; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      if (labels[b].size() != seq_len) throw ShapeError("adversary_loss: label length mismatch");
      const int x = labels[b][t];
      if (x < 0 || static_cast<std::size_t>(x) >= alphabet)
        throw DomainError("adversary_loss: label outside alphabet");
      total -= std::log(std::max(pred_seq[t](static_cast<std::size_t>(x), b), kLogFloor));
    }
  return total / (static_cast<double>(seq_len) * static_cast<double>(batch));
}

/// dL/dp at the true label: -1 / (T*batch*p); zero elsewhere.
inline std::vector<Matrix> adversary_loss_grad(const std::vector<Matrix>& pred_seq,
                                               const LabelBatch& labels) {
  const std::size_t seq_len = pred_seq.size();
  const std::size_t batch = pred_seq.front().cols();
  const double norm = static_cast<double>(seq_len) * static_cast<double>(batch);
  std::vector<Matrix> out;
  out.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    Matrix g(pred_seq[t].rows(), pred_seq[t].cols());
    for (std::size_t b = 0; b < batch; ++b) {
      const auto x = static_cast<std::size_t>(labels[b][t]);
      g(x, b) = -1.0 / (norm * std::max(pred_seq[t](x, b), kLogFloor));
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Shannon entropy of one probability column, natural log, 0*log(0) := 0.
inline double column_entropy(const Matrix& p, std::size_t col) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const double v = p(i, col);
    if (v > 0.0) h -= v * std::log(std::max(v, kLogFloor));
  }
  return h;
}

/// (1/T) sum_t H(p_t), averaged over the batch. Lies in [0, log|X|].
inline double conditional_entropy_term(const std::vector<Matrix>& pred_seq) {
  if (pred_seq.empty()) throw ShapeError("conditional_entropy_term: empty sequence");
  const std::size_t seq_len = pred_seq.size();
  const std::size_t batch = pred_seq.front().cols();
  double total = 0.0;
  for (std::size_t t = 0; t < seq_len; ++t)
    for (std::size_t b = 0; b < batch; ++b) total += column_entropy(pred_seq[t], b);
  return total / (static_cast<double>(seq_len) * static_cast<double>(batch));
}

/// d(entropy term)/dp = -(log p + 1) / (T*batch), entrywise.
inline std::vector<Matrix> conditional_entropy_grad(const std::vector<Matrix>& pred_seq) {
  const std::size_t seq_len = pred_seq.size();
  const std::size_t batch = pred_seq.front().cols();
  const double norm = static_cast<double>(seq_len) * static_cast<double>(batch);
  std::vector<Matrix> out;
  out.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    Matrix g(pred_seq[t].rows(), pred_seq[t].cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p = pred_seq[t].data()[i];
      g.data()[i] = p > 0.0 ? -(std::log(std::max(p, kLogFloor)) + 1.0) / norm : 0.0;
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Releaser objective: distortion(z, y) - lambda * entropy term. At lambda=0
/// this is the distortion, bit for bit.
inline double releaser_loss(const std::vector<Matrix>& z_seq, const std::vector<Matrix>& y_seq,
                            const std::vector<Matrix>& pred_seq, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("releaser_loss: lambda must be >= 0");
  const double d = distortion(z_seq, y_seq);
  if (lambda == 0.0) return d;
  return d - lambda * conditional_entropy_term(pred_seq);
}

/// Tractable privacy diagnostic: T*log|X| - sum_t H(p_t), batch-averaged.
/// Always >= 0; zero exactly when every prediction is uniform. The tiny
/// negative values that floating-point entropy can produce are clamped away.
inline double di_upper_bound(const std::vector<Matrix>& pred_seq, std::size_t alphabet_size) {
  if (pred_seq.empty()) throw ShapeError("di_upper_bound: empty sequence");
  if (alphabet_size < 1) throw DomainError("di_upper_bound: alphabet must be non-empty");
  const std::size_t seq_len = pred_seq.size();
  const double log_alpha = std::log(static_cast<double>(alphabet_size));
  const double bound =
      static_cast<double>(seq_len) * log_alpha -
      static_cast<double>(seq_len) * conditional_entropy_term(pred_seq);
  return std::max(0.0, bound);
}

}  // namespace dipriv
