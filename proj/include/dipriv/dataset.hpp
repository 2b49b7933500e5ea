#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dipriv/errors.hpp"
#include "dipriv/matrix.hpp"
#include "dipriv/rng.hpp"

namespace dipriv {

/// One day of data: consumption series, sensitive labels, owning household.
struct SequenceSample {
  std::vector<double> y;  // kWh per hour (raw) or normalized values
  std::vector<int> x;     // labels in {0 .. alphabet-1}
  int house_id = 0;
  std::uint64_t uid = 0;  // unique within a dataset; survives splitting
};

enum class LabelSemantics {
  per_timestep,    // e.g. hourly occupancy
  per_sequence,    // constant within a day, e.g. household identity
};

struct Normalization {
  double y_min = 0.0;
  double y_max = 1.0;
};

struct Dataset {
  std::vector<SequenceSample> samples;
  std::size_t seq_len = 24;
  int alphabet_size = 2;
  LabelSemantics label_semantics = LabelSemantics::per_timestep;
  std::optional<Normalization> normalization;  // set once normalized

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// ---------------------------------------------------------------------------
// Synthetic households
// ---------------------------------------------------------------------------

/// Two-state occupancy chain plus a house-specific consumption profile:
///   y_t = base_h + gain_h * x_t + sin_amp * sin(2*pi*t/24 + phase_h) + noise
/// clipped at zero. Distinct (base, gain, phase) per house make household
/// identity learnable; the gain term makes occupancy learnable.
struct HmmParams {
  double p_stay = 0.9;           // P(x_{t+1} = x_t)
  double p_initial_occupied = 0.5;
  double base_min = 0.2;         // kWh
  double base_max = 0.5;
  double gain_min = 0.5;         // kWh added while occupied
  double gain_max = 1.5;
  double sin_amp = 0.3;          // daily rhythm amplitude
  double noise_sigma = 0.1;      // Gaussian noise before clipping

  void validate() const {
    if (!(p_stay >= 0.0 && p_stay <= 1.0))
      throw ConfigError("hmm: p_stay must be a probability");
    if (!(p_initial_occupied >= 0.0 && p_initial_occupied <= 1.0))
      throw ConfigError("hmm: p_initial_occupied must be a probability");
    if (base_min < 0.0 || base_max < base_min) throw ConfigError("hmm: bad base range");
    if (gain_min < 0.0 || gain_max < gain_min) throw ConfigError("hmm: bad gain range");
    if (noise_sigma < 0.0) throw ConfigError("hmm: noise_sigma must be >= 0");
  }
};

struct HouseProfile {
  double base = 0.0;
  double gain = 0.0;
  double phase = 0.0;
};

inline HouseProfile draw_house_profile(const HmmParams& p, SeededRng& rng) {
  HouseProfile prof;
  prof.base = rng.next_in(p.base_min, p.base_max);
  prof.gain = rng.next_in(p.gain_min, p.gain_max);
  prof.phase = rng.next_in(0.0, 2.0 * 3.14159265358979323846);
  return prof;
}

/// Advances the 2-state chain one step.
inline int occupancy_step(int state, double p_stay, SeededRng& rng) {
  return rng.next_double() < p_stay ? state : 1 - state;
}

/// Generates `days_per_house` daily sequences for each of `n_houses`
/// households. Label semantics pick what the sensitive variable is: the
/// hourly occupancy state, or the (constant) house index.
inline Dataset generate_synthetic(std::size_t n_houses, std::size_t days_per_house,
                                  const HmmParams& params, std::uint64_t seed,
                                  LabelSemantics semantics = LabelSemantics::per_timestep,
                                  std::size_t seq_len = 24) {
  params.validate();
  if (n_houses == 0 || days_per_house == 0)
    throw ConfigError("generate_synthetic: need at least one house and one day");

  Dataset ds;
  ds.seq_len = seq_len;
  ds.label_semantics = semantics;
  ds.alphabet_size = semantics == LabelSemantics::per_timestep ? 2 : static_cast<int>(n_houses);
  ds.samples.reserve(n_houses * days_per_house);

  SeededRng root(seed);
  std::uint64_t next_uid = 0;
  for (std::size_t h = 0; h < n_houses; ++h) {
    SeededRng house_rng = root.fork(h);
    const HouseProfile prof = draw_house_profile(params, house_rng);
    int state = house_rng.next_double() < params.p_initial_occupied ? 1 : 0;
    for (std::size_t d = 0; d < days_per_house; ++d) {
      SequenceSample s;
      s.house_id = static_cast<int>(h);
      s.uid = next_uid++;
      s.y.resize(seq_len);
      s.x.resize(seq_len);
      for (std::size_t t = 0; t < seq_len; ++t) {
        s.x[t] = semantics == LabelSemantics::per_timestep ? state : static_cast<int>(h);
        const double rhythm =
            params.sin_amp *
            std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(t % 24) / 24.0 +
                     prof.phase);
        const double noise = params.noise_sigma * house_rng.next_normal();
        s.y[t] = std::max(0.0, prof.base + prof.gain * state + rhythm + noise);
        state = occupancy_step(state, params.p_stay, house_rng);
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Reshaping, splitting, normalization, batching
// ---------------------------------------------------------------------------

/// Cuts an hourly per-house series into consecutive non-overlapping daily
/// windows; a trailing partial day is dropped.
inline std::vector<SequenceSample> reshape_daily(const std::vector<double>& y,
                                                 const std::vector<int>& x, int house_id,
                                                 std::size_t seq_len = 24) {
  if (y.size() != x.size()) throw ShapeError("reshape_daily: series lengths differ");
  std::vector<SequenceSample> out;
  const std::size_t days = y.size() / seq_len;
  out.reserve(days);
  for (std::size_t d = 0; d < days; ++d) {
    SequenceSample s;
    s.house_id = house_id;
    s.y.assign(y.begin() + d * seq_len, y.begin() + (d + 1) * seq_len);
    s.x.assign(x.begin() + d * seq_len, x.begin() + (d + 1) * seq_len);
    out.push_back(std::move(s));
  }
  return out;
}

struct SplitSpec {
  double train_ratio = 0.85;
  double val_fraction_of_train = 0.10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
      throw ConfigError("split: train_ratio must be in (0,1)");
    if (!(val_fraction_of_train > 0.0 && val_fraction_of_train < 1.0))
      throw ConfigError("split: val_fraction_of_train must be in (0,1)");
  }
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seed-deterministic shuffle split by sequence. Sizes are
/// floor(n*ratio*(1-valfrac)) / floor(n*ratio*valfrac) / remainder.
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  if (ds.empty()) throw DataError("split: empty dataset");
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng rng(spec.seed);
  rng.shuffle(order);

  const auto nd = static_cast<double>(n);
  const auto n_train =
      static_cast<std::size_t>(std::floor(nd * spec.train_ratio * (1.0 - spec.val_fraction_of_train)));
  const auto n_val =
      static_cast<std::size_t>(std::floor(nd * spec.train_ratio * spec.val_fraction_of_train));

  SplitResult res;
  for (Dataset* part : {&res.train, &res.val, &res.test}) {
    part->seq_len = ds.seq_len;
    part->alphabet_size = ds.alphabet_size;
    part->label_semantics = ds.label_semantics;
    part->normalization = ds.normalization;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const SequenceSample& s = ds.samples[order[i]];
    if (i < n_train)
      res.train.samples.push_back(s);
    else if (i < n_train + n_val)
      res.val.samples.push_back(s);
    else
      res.test.samples.push_back(s);
  }
  return res;
}

/// Min-max constants fitted on the training split only.
inline Normalization normalize_fit(const Dataset& train) {
  if (train.empty()) throw DataError("normalize_fit: empty training set");
  double lo = train.samples.front().y.front();
  double hi = lo;
  for (const auto& s : train.samples)
    for (double v : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi == lo) throw DataError("normalize_fit: constant training series (max == min)");
  return Normalization{lo, hi};
}

/// Maps y to (y - min) / (max - min). Values outside the training range are
/// allowed to leave [0,1]; nothing is clipped.
inline void normalize_apply(Dataset& ds, const Normalization& norm) {
  const double range = norm.y_max - norm.y_min;
  for (auto& s : ds.samples)
    for (double& v : s.y) v = (v - norm.y_min) / range;
  ds.normalization = norm;
}

/// Fits on `train`, applies to every dataset passed.
inline Normalization normalize_fit_apply(Dataset& train, std::vector<Dataset*> others) {
  const Normalization norm = normalize_fit(train);
  normalize_apply(train, norm);
  for (Dataset* d : others) normalize_apply(*d, norm);
  return norm;
}

/// True when no sample identifier appears in both datasets; the worst-case
/// evaluation contract requires test sequences the mechanism never trained on.
inline bool disjoint_uids(const Dataset& a, const Dataset& b) {
  std::vector<std::uint64_t> ids;
  ids.reserve(a.size());
  for (const auto& s : a.samples) ids.push_back(s.uid);
  std::sort(ids.begin(), ids.end());
  for (const auto& s : b.samples)
    if (std::binary_search(ids.begin(), ids.end(), s.uid)) return false;
  return true;
}

/// Seed-deterministic shuffled minibatch plan for one epoch: every sample
/// index appears exactly once; the final batch may be short.
inline std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size,
                                                         SeededRng& rng) {
  if (batch_size < 1) throw ConfigError("minibatches: batch size must be >= 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Batch assembly for the networks (one column per sequence)
// ---------------------------------------------------------------------------

struct BatchTensors {
  std::vector<Matrix> y;                     // 1 x batch per step: useful series
  std::vector<Matrix> w;                     // obs_dim x batch per step: observations
  std::vector<std::vector<int>> labels;      // [batch][t]
};

/// Gathers the selected samples into per-step matrices. When
/// `include_private_in_obs` is set the observation is (y_t, x_t), otherwise
/// just y_t.
inline BatchTensors make_batch(const Dataset& ds, const std::vector<std::size_t>& indices,
                               bool include_private_in_obs = false) {
  if (indices.empty()) throw ShapeError("make_batch: empty index set");
  const std::size_t seq_len = ds.seq_len;
  const std::size_t batch = indices.size();
  BatchTensors out;
  out.y.assign(seq_len, Matrix(1, batch));
  out.w.assign(seq_len, Matrix(include_private_in_obs ? 2 : 1, batch));
  out.labels.assign(batch, std::vector<int>(seq_len));
  for (std::size_t b = 0; b < batch; ++b) {
    const SequenceSample& s = ds.samples[indices[b]];
    if (s.y.size() != seq_len || s.x.size() != seq_len)
      throw ShapeError("make_batch: sample length deviates from dataset seq_len");
    for (std::size_t t = 0; t < seq_len; ++t) {
      out.y[t](0, b) = s.y[t];
      out.w[t](0, b) = s.y[t];
      if (include_private_in_obs) out.w[t](1, b) = static_cast<double>(s.x[t]);
      out.labels[b][t] = s.x[t];
    }
  }
  return out;
}

}  // namespace dipriv
