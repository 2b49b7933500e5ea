#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dipriv/dataset.hpp"
#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/losses.hpp"
#include "dipriv/mechanism.hpp"
#include "dipriv/metrics.hpp"
#include "dipriv/optim.hpp"

namespace dipriv {

struct NetSpec {
  std::size_t layers = 1;
  std::size_t cells = 16;
};

struct TrainConfig {
  std::size_t batch_size = 128;      // B
  std::size_t adversary_steps = 4;   // k: adversary updates per releaser update
  double clip = 1.0;                 // C: elementwise gradient clip
  double l2_recurrent = 1.5;         // beta: recurrent ridge weight (releaser)
  double lambda = 0.0;               // privacy weight
  std::size_t noise_dim = 8;         // m
  std::size_t epochs = 50;
  std::size_t attacker_epochs = 30;
  std::size_t attacker_patience = 5;  // early stopping on validation loss
  double lr_releaser = 1e-3;
  double lr_adversary = 1e-3;
  double lr_attacker = 1e-3;
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
  std::uint64_t seed = 1;
  NetSpec releaser_spec{2, 32};
  NetSpec adversary_spec{1, 16};
  NetSpec attacker_spec{1, 16};
  bool clip_by_norm = false;            // alternative clipping, off by default
  bool entropy_via_adversary_ce = false;  // ablation: maximize adversary CE
  bool include_private_in_obs = false;    // W = (Y, X) instead of W = Y
  bool keep_best_validation = true;       // restore best-val releaser at the end

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (adversary_steps < 1) throw ConfigError("train: adversary_steps (k) must be >= 1");
    if (!(clip > 0.0)) throw ConfigError("train: clip value must be > 0");
    if (!(l2_recurrent >= 0.0)) throw ConfigError("train: l2_recurrent must be >= 0");
    if (!(lambda >= 0.0)) throw ConfigError("train: lambda must be >= 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (attacker_epochs < 1) throw ConfigError("train: attacker_epochs must be >= 1");
    if (!(lr_releaser > 0.0 && lr_adversary > 0.0 && lr_attacker > 0.0))
      throw ConfigError("train: learning rates must be > 0");
    if (releaser_spec.layers < 1 || adversary_spec.layers < 1 || attacker_spec.layers < 1)
      throw ConfigError("train: every network needs at least one layer");
  }
};

struct IterationRecord {
  std::size_t iteration = 0;
  double adversary_loss = 0.0;  // last adversary step of the group
  double releaser_loss = 0.0;
  double distortion = 0.0;
  double entropy_term = 0.0;
  double di_bound = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double val_nrmse = 0.0;
  double val_adversary_loss = 0.0;
  double val_releaser_loss = 0.0;
  double val_entropy_term = 0.0;
};

struct TrainHistory {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
};

/// Training aborted on a non-finite loss; carries everything recorded so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainHistory history)
      : Error(what), history_(std::move(history)) {}
  const TrainHistory& history() const { return history_; }

 private:
  TrainHistory history_;
};

struct TrainResult {
  Releaser releaser;
  Adversary adversary;
  TrainHistory history;
};

// Derived-seed stream tags; every random decision in a run hangs off
// config.seed through one of these.
namespace stream {
constexpr std::uint64_t kReleaserInit = 1;
constexpr std::uint64_t kAdversaryInit = 2;
constexpr std::uint64_t kTrainNoise = 3;
constexpr std::uint64_t kShuffle = 4;
constexpr std::uint64_t kAttackerInit = 5;
constexpr std::uint64_t kAttackerNoise = 6;
constexpr std::uint64_t kAttackerShuffle = 7;
constexpr std::uint64_t kValNoise = 8;
constexpr std::uint64_t kEvalNoise = 9;
}  // namespace stream

namespace detail {

inline void require_finite_loss(double v, const char* what, const TrainHistory& history) {
  if (!std::isfinite(v))
    throw DivergenceError(std::string("training diverged: non-finite ") + what, history);
}

/// One optimizer update from d_outputs through the net; returns nothing but
/// mutates net and opt state. Clipping happens before the accumulator sees
/// the gradient.
inline void apply_update(StackedNet& net, const ForwardTape& tape,
                         const std::vector<Matrix>& d_outputs, RmsPropState& opt,
                         const TrainConfig& cfg, const NetGrads* extra = nullptr) {
  BackwardResult back = net_backward(net, tape, d_outputs);
  if (extra) add_gradients(back.grads, *extra);
  if (cfg.clip_by_norm)
    clip_gradients_by_norm(back.grads, cfg.clip);
  else
    clip_gradients(back.grads, cfg.clip);
  rmsprop_step(opt, net, back.grads);
}

struct ValMetrics {
  double nrmse = 0.0;
  double adversary_loss = 0.0;
  double releaser_loss = 0.0;
  double entropy_term = 0.0;
};

/// Frozen-parameter pass over a dataset: release with a derived noise stream,
/// score with the adversary. Processed in bounded batches.
inline ValMetrics validation_metrics(const Releaser& releaser, const Adversary& adversary,
                                     const Dataset& data, const TrainConfig& cfg,
                                     SeededRng noise_rng) {
  ValMetrics m;
  std::vector<double> y_flat, z_flat;
  double dist_sum = 0.0, adv_sum = 0.0, ent_sum = 0.0;
  std::size_t n = 0;
  const std::size_t chunk = 256;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(data.size(), start + chunk); ++i) idx.push_back(i);
    const BatchTensors batch = make_batch(data, idx, cfg.include_private_in_obs);
    const std::vector<Matrix> u =
        draw_noise(noise_rng, data.seq_len, releaser.noise_dim, idx.size());
    const std::vector<Matrix> z =
        net_forward(releaser.net, concat_obs_noise(batch.w, u)).outputs;
    const std::vector<Matrix> preds = net_forward(adversary.net, z).outputs;
    dist_sum += distortion(z, batch.y) * static_cast<double>(idx.size());
    adv_sum += adversary_loss(preds, batch.labels) * static_cast<double>(idx.size());
    ent_sum += conditional_entropy_term(preds) * static_cast<double>(idx.size());
    n += idx.size();
    for (std::size_t t = 0; t < z.size(); ++t)
      for (std::size_t b = 0; b < idx.size(); ++b) {
        y_flat.push_back(batch.y[t](0, b));
        z_flat.push_back(z[t](0, b));
      }
  }
  const double dist = dist_sum / static_cast<double>(n);
  m.entropy_term = ent_sum / static_cast<double>(n);
  m.adversary_loss = adv_sum / static_cast<double>(n);
  m.releaser_loss = cfg.lambda == 0.0 ? dist : dist - cfg.lambda * m.entropy_term;
  m.nrmse = nrmse(y_flat, z_flat);
  return m;
}

}  // namespace detail

/// Adversarial training: k adversary updates (cross-entropy, clipped RMSprop)
/// alternating with one releaser update (distortion - lambda*entropy, gradient
/// flowing through the frozen adversary, plus recurrent ridge). Batches come
/// off a reshuffled-per-epoch stream in groups of k+1; a trailing group
/// smaller than k+1 is dropped (the next epoch reshuffles everything anyway).
inline TrainResult train_adversarial(const TrainConfig& cfg, const Dataset& train,
                                     const Dataset& val,
                                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty() || val.empty()) throw DataError("train_adversarial: empty split");

  const std::size_t obs_dim = cfg.include_private_in_obs ? 2 : 1;
  const auto alphabet = static_cast<std::size_t>(train.alphabet_size);

  SeededRng root(cfg.seed);
  SeededRng releaser_init = root.fork(stream::kReleaserInit);
  SeededRng adversary_init = root.fork(stream::kAdversaryInit);

  TrainResult res;
  res.releaser.noise_dim = cfg.noise_dim;
  res.releaser.net = make_net(obs_dim + cfg.noise_dim, cfg.releaser_spec.cells,
                              cfg.releaser_spec.layers, 1, HeadKind::linear, releaser_init);
  res.adversary.alphabet = alphabet;
  res.adversary.net = make_net(1, cfg.adversary_spec.cells, cfg.adversary_spec.layers, alphabet,
                               HeadKind::softmax, adversary_init);

  RmsPropState releaser_opt(res.releaser.net.param_count(), cfg.lr_releaser, cfg.rms_decay,
                            cfg.rms_eps);
  RmsPropState adversary_opt(res.adversary.net.param_count(), cfg.lr_adversary, cfg.rms_decay,
                             cfg.rms_eps);

  SeededRng noise_root = root.fork(stream::kTrainNoise);
  SeededRng shuffle_root = root.fork(stream::kShuffle);
  SeededRng val_noise_root = root.fork(stream::kValNoise);

  std::vector<double> best_params;
  double best_val_loss = std::numeric_limits<double>::infinity();

  std::size_t iteration = 0;
  std::uint64_t noise_counter = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SeededRng shuffle_rng = shuffle_root.fork(epoch);
    const auto batches = minibatches(train.size(), cfg.batch_size, shuffle_rng);
    const std::size_t group = cfg.adversary_steps + 1;

    for (std::size_t g = 0; g + group <= batches.size() || (g == 0 && batches.size() < group);
         g += group) {
      // When the whole epoch has fewer than k+1 batches, recycle it as one
      // group so tiny datasets still train.
      auto batch_at = [&](std::size_t j) -> const std::vector<std::size_t>& {
        return batches[(g + j) % batches.size()];
      };

      // --- k adversary steps, releaser frozen ---
      double adv_loss = 0.0;
      for (std::size_t s = 0; s < cfg.adversary_steps; ++s) {
        const BatchTensors batch =
            make_batch(train, batch_at(s), cfg.include_private_in_obs);
        SeededRng noise_rng = noise_root.fork(noise_counter++);
        const std::vector<Matrix> u =
            draw_noise(noise_rng, train.seq_len, cfg.noise_dim, batch_at(s).size());
        const std::vector<Matrix> z =
            net_forward(res.releaser.net, concat_obs_noise(batch.w, u)).outputs;
        const ForwardTape adv_tape = net_forward(res.adversary.net, z);
        adv_loss = adversary_loss(adv_tape.outputs, batch.labels);
        detail::require_finite_loss(adv_loss, "adversary loss", res.history);
        detail::apply_update(res.adversary.net, adv_tape,
                             adversary_loss_grad(adv_tape.outputs, batch.labels), adversary_opt,
                             cfg);
      }

      // --- one releaser step, adversary frozen ---
      const auto& ridx = batch_at(cfg.adversary_steps);
      const BatchTensors batch = make_batch(train, ridx, cfg.include_private_in_obs);
      SeededRng noise_rng = noise_root.fork(noise_counter++);
      const std::vector<Matrix> u =
          draw_noise(noise_rng, train.seq_len, cfg.noise_dim, ridx.size());
      const ForwardTape rel_tape =
          net_forward(res.releaser.net, concat_obs_noise(batch.w, u));
      const std::vector<Matrix>& z = rel_tape.outputs;
      const ForwardTape adv_tape = net_forward(res.adversary.net, z);

      const double dist = distortion(z, batch.y);
      const double entropy = conditional_entropy_term(adv_tape.outputs);
      const double rel_loss =
          cfg.entropy_via_adversary_ce
              ? dist - cfg.lambda * adversary_loss(adv_tape.outputs, batch.labels)
              : releaser_loss(z, batch.y, adv_tape.outputs, cfg.lambda);
      detail::require_finite_loss(rel_loss, "releaser loss", res.history);

      std::vector<Matrix> dz = distortion_grad(z, batch.y);
      if (cfg.lambda > 0.0) {
        std::vector<Matrix> dpred =
            cfg.entropy_via_adversary_ce
                ? adversary_loss_grad(adv_tape.outputs, batch.labels)
                : conditional_entropy_grad(adv_tape.outputs);
        for (Matrix& m : dpred)
          for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= -cfg.lambda;
        const BackwardResult through_adv = net_backward(res.adversary.net, adv_tape, dpred);
        for (std::size_t t = 0; t < dz.size(); ++t) add_in_place(dz[t], through_adv.d_inputs[t]);
      }
      const NetGrads ridge = recurrent_l2_gradient(res.releaser.net, cfg.l2_recurrent);
      detail::apply_update(res.releaser.net, rel_tape, dz, releaser_opt, cfg, &ridge);

      IterationRecord rec;
      rec.iteration = iteration++;
      rec.adversary_loss = adv_loss;
      rec.releaser_loss = rel_loss;
      rec.distortion = dist;
      rec.entropy_term = entropy;
      rec.di_bound = di_upper_bound(adv_tape.outputs, alphabet);
      res.history.iterations.push_back(rec);

      if (batches.size() < group) break;  // recycled tiny epoch: one group only
    }

    const detail::ValMetrics vm = detail::validation_metrics(
        res.releaser, res.adversary, val, cfg, val_noise_root.fork(epoch));
    detail::require_finite_loss(vm.releaser_loss, "validation loss", res.history);
    EpochRecord er;
    er.epoch = epoch;
    er.val_nrmse = vm.nrmse;
    er.val_adversary_loss = vm.adversary_loss;
    er.val_releaser_loss = vm.releaser_loss;
    er.val_entropy_term = vm.entropy_term;
    res.history.epochs.push_back(er);
    if (on_epoch) on_epoch(er);

    if (cfg.keep_best_validation && vm.releaser_loss < best_val_loss) {
      best_val_loss = vm.releaser_loss;
      best_params = res.releaser.net.flatten();
    }
  }

  if (cfg.keep_best_validation && !best_params.empty())
    res.releaser.net.unflatten(best_params);
  return res;
}

/// Post-hoc worst-case attacker: trained on (z, x) pairs generated from the
/// full training set through the frozen releaser, fresh noise every epoch,
/// early stopping on validation cross-entropy with the best checkpoint kept.
inline Attacker train_attacker(const Releaser& releaser, const Dataset& train, const Dataset& val,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) throw DataError("train_attacker: empty split");

  SeededRng root(cfg.seed);
  SeededRng init = root.fork(stream::kAttackerInit);
  Attacker attacker;
  attacker.alphabet = static_cast<std::size_t>(train.alphabet_size);
  attacker.net = make_net(1, cfg.attacker_spec.cells, cfg.attacker_spec.layers, attacker.alphabet,
                          HeadKind::softmax, init);
  RmsPropState opt(attacker.net.param_count(), cfg.lr_attacker, cfg.rms_decay, cfg.rms_eps);

  SeededRng noise_root = root.fork(stream::kAttackerNoise);
  SeededRng shuffle_root = root.fork(stream::kAttackerShuffle);
  SeededRng val_noise_root = root.fork(stream::kValNoise);

  std::vector<double> best_params = attacker.net.flatten();
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::uint64_t noise_counter = 0;
  TrainHistory scratch;  // divergence context only

  for (std::size_t epoch = 0; epoch < cfg.attacker_epochs; ++epoch) {
    SeededRng shuffle_rng = shuffle_root.fork(epoch);
    for (const auto& idx : minibatches(train.size(), cfg.batch_size, shuffle_rng)) {
      const BatchTensors batch = make_batch(train, idx, cfg.include_private_in_obs);
      SeededRng noise_rng = noise_root.fork(noise_counter++);
      const std::vector<Matrix> u =
          draw_noise(noise_rng, train.seq_len, releaser.noise_dim, idx.size());
      const std::vector<Matrix> z =
          net_forward(releaser.net, concat_obs_noise(batch.w, u)).outputs;
      const ForwardTape tape = net_forward(attacker.net, z);
      const double loss = adversary_loss(tape.outputs, batch.labels);
      detail::require_finite_loss(loss, "attacker loss", scratch);
      detail::apply_update(attacker.net, tape, adversary_loss_grad(tape.outputs, batch.labels),
                           opt, cfg);
    }

    // Validation cross-entropy with per-epoch derived noise.
    const Adversary as_adv{attacker.net, attacker.alphabet};
    const detail::ValMetrics vm = detail::validation_metrics(
        releaser, as_adv, val, cfg, val_noise_root.fork(1000 + epoch));
    detail::require_finite_loss(vm.adversary_loss, "attacker validation loss", scratch);
    if (vm.adversary_loss < best_val - 1e-9) {
      best_val = vm.adversary_loss;
      best_params = attacker.net.flatten();
      since_best = 0;
    } else if (++since_best > cfg.attacker_patience) {
      break;
    }
  }
  attacker.net.unflatten(best_params);
  return attacker;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalSummary {
  double nrmse = 0.0;
  double attacker_balanced_accuracy_pct = 0.0;
  double di_bound_mean = 0.0;  // mean per-sequence diagnostic from the attacker
  // For per-sequence-constant labels: accuracy of the per-sequence majority vote.
  std::optional<double> majority_vote_accuracy_pct;
};

/// Frozen mechanism vs. trained attacker on held-out data. Deterministic
/// given `seed` (one noise realization per sequence).
inline EvalSummary evaluate(const Releaser& releaser, const Attacker& attacker,
                            const Dataset& test, std::uint64_t seed,
                            bool include_private_in_obs = false) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  SeededRng noise_rng = SeededRng(seed).fork(stream::kEvalNoise);

  std::vector<double> y_flat, z_flat;
  std::vector<int> pred_flat, truth_flat;
  std::vector<int> seq_pred, seq_truth;
  double di_sum = 0.0;
  std::size_t n = 0;

  const std::size_t chunk = 256;
  for (std::size_t start = 0; start < test.size(); start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(test.size(), start + chunk); ++i) idx.push_back(i);
    const BatchTensors batch = make_batch(test, idx, include_private_in_obs);
    const std::vector<Matrix> u =
        draw_noise(noise_rng, test.seq_len, releaser.noise_dim, idx.size());
    const std::vector<Matrix> z =
        net_forward(releaser.net, concat_obs_noise(batch.w, u)).outputs;
    const std::vector<Matrix> preds = net_forward(attacker.net, z).outputs;
    di_sum += di_upper_bound(preds, attacker.alphabet) * static_cast<double>(idx.size());
    n += idx.size();

    std::vector<std::vector<std::size_t>> votes(
        idx.size(), std::vector<std::size_t>(attacker.alphabet, 0));
    for (std::size_t t = 0; t < test.seq_len; ++t)
      for (std::size_t b = 0; b < idx.size(); ++b) {
        y_flat.push_back(batch.y[t](0, b));
        z_flat.push_back(z[t](0, b));
        std::size_t argmax = 0;
        for (std::size_t c = 1; c < attacker.alphabet; ++c)
          if (preds[t](c, b) > preds[t](argmax, b)) argmax = c;
        pred_flat.push_back(static_cast<int>(argmax));
        truth_flat.push_back(batch.labels[b][t]);
        ++votes[b][argmax];
      }
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::size_t winner = 0;
      for (std::size_t c = 1; c < attacker.alphabet; ++c)
        if (votes[b][c] > votes[b][winner]) winner = c;
      seq_pred.push_back(static_cast<int>(winner));
      seq_truth.push_back(batch.labels[b][0]);
    }
  }

  EvalSummary summary;
  summary.nrmse = nrmse(y_flat, z_flat);
  summary.attacker_balanced_accuracy_pct =
      balanced_accuracy(pred_flat, truth_flat, static_cast<int>(attacker.alphabet));
  summary.di_bound_mean = di_sum / static_cast<double>(n);
  if (test.label_semantics == LabelSemantics::per_sequence)
    summary.majority_vote_accuracy_pct =
        balanced_accuracy(seq_pred, seq_truth, static_cast<int>(attacker.alphabet));
  return summary;
}

// ---------------------------------------------------------------------------
// History files
// ---------------------------------------------------------------------------

inline void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream os(path);
  if (!os) throw DataError("write_history_csv: cannot open " + path);
  os << "iteration,adversary_loss,releaser_loss,distortion,entropy_term,di_bound\n";
  for (const auto& r : history.iterations)
    os << r.iteration << "," << format_double(r.adversary_loss) << ","
       << format_double(r.releaser_loss) << "," << format_double(r.distortion) << ","
       << format_double(r.entropy_term) << "," << format_double(r.di_bound) << "\n";
}

inline void write_validation_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream os(path);
  if (!os) throw DataError("write_validation_csv: cannot open " + path);
  os << "epoch,val_nrmse,val_adversary_loss,val_releaser_loss,val_entropy_term\n";
  for (const auto& r : history.epochs)
    os << r.epoch << "," << format_double(r.val_nrmse) << ","
       << format_double(r.val_adversary_loss) << "," << format_double(r.val_releaser_loss) << ","
       << format_double(r.val_entropy_term) << "\n";
}

}  // namespace dipriv
