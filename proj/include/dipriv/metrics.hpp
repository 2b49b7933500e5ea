#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dipriv/errors.hpp"

namespace dipriv {

/// sqrt( sum ||y - z||^2 / sum ||y||^2 ) over an evaluation set of paired
/// values (any flattening, as long as y and z are aligned).
inline double nrmse(const std::vector<double>& y, const std::vector<double>& z) {
  if (y.size() != z.size()) throw ShapeError("nrmse: size mismatch");
  if (y.empty()) throw ShapeError("nrmse: empty input");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - z[i];
    err += d * d;
    ref += y[i] * y[i];
  }
  if (ref == 0.0) throw DomainError("nrmse: reference signal is identically zero");
  return std::sqrt(err / ref);
}

/// Mean per-class recall in percent, over all time steps of all sequences.
/// Classes absent from the truth are excluded from the mean, so chance level
/// is 100/|present classes| regardless of class skew.
inline double balanced_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth,
                                int alphabet_size) {
  if (predicted.size() != truth.size()) throw ShapeError("balanced_accuracy: size mismatch");
  if (predicted.empty()) throw ShapeError("balanced_accuracy: empty input");
  if (alphabet_size < 1) throw DomainError("balanced_accuracy: bad alphabet size");
  std::vector<std::size_t> support(static_cast<std::size_t>(alphabet_size), 0);
  std::vector<std::size_t> hits(static_cast<std::size_t>(alphabet_size), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int c = truth[i];
    if (c < 0 || c >= alphabet_size) throw DomainError("balanced_accuracy: label out of range");
    if (predicted[i] < 0 || predicted[i] >= alphabet_size)
      throw DomainError("balanced_accuracy: prediction out of range");
    ++support[static_cast<std::size_t>(c)];
    if (predicted[i] == c) ++hits[static_cast<std::size_t>(c)];
  }
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (int c = 0; c < alphabet_size; ++c) {
    if (support[static_cast<std::size_t>(c)] == 0) continue;
    ++present;
    recall_sum += static_cast<double>(hits[static_cast<std::size_t>(c)]) /
                  static_cast<double>(support[static_cast<std::size_t>(c)]);
  }
  return 100.0 * recall_sum / static_cast<double>(present);
}

}  // namespace dipriv
