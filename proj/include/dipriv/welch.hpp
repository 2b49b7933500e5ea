#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dipriv/errors.hpp"

namespace dipriv {

enum class PsdWindow { hann, rectangular };

struct PsdResult {
  std::vector<double> freq;   // cycles per sample times sample_rate
  std::vector<double> power;  // one-sided density
};

namespace detail {

inline std::vector<double> make_window(PsdWindow kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == PsdWindow::hann && n > 1) {
    const double pi = std::acos(-1.0);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

}  // namespace detail

/// Welch's estimate: overlapping windowed segments, per-segment periodograms
/// (direct DFT, so any segment length is an exact bin grid), averaged and
/// window-power normalized. One-sided spectrum; no detrending, so a constant
/// signal puts all its power in the DC bin.
inline PsdResult welch_psd(std::span<const double> signal, std::size_t segment_len,
                           double overlap_fraction, PsdWindow window = PsdWindow::hann,
                           double sample_rate = 1.0) {
  if (segment_len < 2) throw DomainError("welch_psd: segment length must be >= 2");
  if (signal.size() < segment_len)
    throw ShapeError("welch_psd: signal shorter than one segment");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw DomainError("welch_psd: overlap fraction must be in [0,1)");
  if (!(sample_rate > 0.0)) throw DomainError("welch_psd: sample rate must be > 0");

  const std::size_t overlap = static_cast<std::size_t>(
      std::floor(static_cast<double>(segment_len) * overlap_fraction));
  const std::size_t hop = segment_len - overlap > 0 ? segment_len - overlap : 1;
  const std::size_t n_bins = segment_len / 2 + 1;

  const std::vector<double> win = detail::make_window(window, segment_len);
  double win_power = 0.0;
  for (double w : win) win_power += w * w;

  const double pi = std::acos(-1.0);
  std::vector<double> acc(n_bins, 0.0);
  std::vector<double> seg(segment_len);
  std::size_t n_segments = 0;
  for (std::size_t start = 0; start + segment_len <= signal.size(); start += hop) {
    for (std::size_t i = 0; i < segment_len; ++i) seg[i] = signal[start + i] * win[i];
    for (std::size_t k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      const double w0 = -2.0 * pi * static_cast<double>(k) / static_cast<double>(segment_len);
      for (std::size_t i = 0; i < segment_len; ++i) {
        const double ang = w0 * static_cast<double>(i);
        re += seg[i] * std::cos(ang);
        im += seg[i] * std::sin(ang);
      }
      double p = (re * re + im * im) / (sample_rate * win_power);
      const bool is_nyquist = segment_len % 2 == 0 && k == segment_len / 2;
      if (k != 0 && !is_nyquist) p *= 2.0;  // fold negative frequencies
      acc[k] += p;
    }
    ++n_segments;
  }

  PsdResult res;
  res.freq.resize(n_bins);
  res.power.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    res.freq[k] = static_cast<double>(k) * sample_rate / static_cast<double>(segment_len);
    res.power[k] = acc[k] / static_cast<double>(n_segments);
  }
  return res;
}

/// Total power recovered by integrating the one-sided density.
inline double integrated_power(const PsdResult& psd, double sample_rate = 1.0,
                               std::size_t segment_len = 0) {
  const std::size_t n_bins = psd.power.size();
  const std::size_t seg = segment_len ? segment_len : (n_bins - 1) * 2;
  const double df = sample_rate / static_cast<double>(seg);
  double total = 0.0;
  for (double p : psd.power) total += p * df;
  return total;
}

}  // namespace dipriv
