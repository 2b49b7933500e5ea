#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "dipriv/dataset.hpp"
#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/mechanism.hpp"
#include "dipriv/train.hpp"
#include "dipriv/welch.hpp"

namespace dipriv {

struct PsdReportOptions {
  std::size_t segment_len = 64;
  double overlap_fraction = 0.5;
  PsdWindow window = PsdWindow::hann;
  std::size_t n_realizations = 10;
};

struct PsdReport {
  std::vector<double> freq_cph;   // cycles per hour (hourly cadence)
  std::vector<double> input_psd;  // spectrum of the useful series
  std::vector<double> error_psd;  // spectrum of y - z, averaged over noise draws
};

namespace detail {

/// Concatenates the dataset's sequences chronologically per house (dataset
/// order within each house), returning one series per house.
inline std::map<int, std::vector<double>> concat_by_house(const Dataset& ds) {
  std::map<int, std::vector<double>> series;
  for (const auto& s : ds.samples) {
    auto& v = series[s.house_id];
    v.insert(v.end(), s.y.begin(), s.y.end());
  }
  return series;
}

inline void accumulate_psd(std::vector<double>& acc, const std::vector<double>& series,
                           const PsdReportOptions& opt, std::size_t& count) {
  if (series.size() < opt.segment_len) return;  // house too short for one segment
  const PsdResult psd = welch_psd(series, opt.segment_len, opt.overlap_fraction, opt.window);
  if (acc.empty()) acc.assign(psd.power.size(), 0.0);
  for (std::size_t k = 0; k < psd.power.size(); ++k) acc[k] += psd.power[k];
  ++count;
}

}  // namespace detail

/// Input and error-signal spectra of a frozen mechanism over a dataset:
/// per-house concatenated series, PSDs averaged across houses, and the error
/// spectrum additionally averaged over independent noise realizations.
inline PsdReport error_psd_report(const Releaser& releaser, const Dataset& data,
                                  const PsdReportOptions& opt, std::uint64_t seed,
                                  bool include_private_in_obs = false) {
  if (data.empty()) throw DataError("error_psd_report: empty dataset");
  if (opt.n_realizations < 1) throw ConfigError("error_psd_report: need >= 1 realization");

  const std::map<int, std::vector<double>> input_series = detail::concat_by_house(data);

  std::vector<double> input_acc;
  std::size_t input_count = 0;
  for (const auto& [house, series] : input_series)
    detail::accumulate_psd(input_acc, series, opt, input_count);
  if (input_count == 0)
    throw ShapeError("error_psd_report: every house series is shorter than one segment");

  // Index samples per house in dataset order so z lines up with y.
  std::map<int, std::vector<std::size_t>> house_samples;
  for (std::size_t i = 0; i < data.size(); ++i)
    house_samples[data.samples[i].house_id].push_back(i);

  std::vector<double> error_acc;
  std::size_t error_count = 0;
  SeededRng noise_root = SeededRng(seed).fork(stream::kEvalNoise);
  for (std::size_t r = 0; r < opt.n_realizations; ++r) {
    SeededRng noise_rng = noise_root.fork(r);
    for (const auto& [house, idx] : house_samples) {
      const BatchTensors batch = make_batch(data, idx, include_private_in_obs);
      const std::vector<Matrix> u =
          draw_noise(noise_rng, data.seq_len, releaser.noise_dim, idx.size());
      const std::vector<Matrix> z =
          net_forward(releaser.net, concat_obs_noise(batch.w, u)).outputs;
      // Error series in chronological order: sample by sample, step by step.
      std::vector<double> err;
      err.reserve(idx.size() * data.seq_len);
      for (std::size_t b = 0; b < idx.size(); ++b)
        for (std::size_t t = 0; t < data.seq_len; ++t)
          err.push_back(batch.y[t](0, b) - z[t](0, b));
      detail::accumulate_psd(error_acc, err, opt, error_count);
    }
  }

  PsdReport report;
  const double rate = 1.0;  // one sample per hour
  report.freq_cph.resize(input_acc.size());
  for (std::size_t k = 0; k < input_acc.size(); ++k)
    report.freq_cph[k] = static_cast<double>(k) * rate / static_cast<double>(opt.segment_len);
  report.input_psd.resize(input_acc.size());
  for (std::size_t k = 0; k < input_acc.size(); ++k)
    report.input_psd[k] = input_acc[k] / static_cast<double>(input_count);
  report.error_psd.resize(error_acc.size());
  for (std::size_t k = 0; k < error_acc.size(); ++k)
    report.error_psd[k] = error_acc[k] / static_cast<double>(error_count);
  return report;
}

inline void write_psd_csv(const std::string& path, const PsdReport& report) {
  std::ofstream os(path);
  if (!os) throw DataError("write_psd_csv: cannot open " + path);
  os << "frequency_cph,input_psd,error_psd\n";
  for (std::size_t k = 0; k < report.freq_cph.size(); ++k)
    os << format_double(report.freq_cph[k]) << "," << format_double(report.input_psd[k]) << ","
       << format_double(report.error_psd[k]) << "\n";
}

}  // namespace dipriv
