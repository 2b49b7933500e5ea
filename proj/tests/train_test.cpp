#include "dipriv/train.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dipriv/config.hpp"

namespace dipriv {
namespace {

// Small-but-real training setups. Sizes are chosen so each test runs in a
// few seconds; the full desk-scale runs live in the acceptance suite.

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.adversary_steps = 2;
  cfg.clip = 1.0;
  cfg.l2_recurrent = 0.01;
  cfg.lambda = 0.0;
  cfg.noise_dim = 2;
  cfg.epochs = 3;
  cfg.attacker_epochs = 3;
  cfg.lr_releaser = 3e-3;
  cfg.releaser_spec = {1, 12};
  cfg.adversary_spec = {1, 8};
  cfg.attacker_spec = {1, 8};
  cfg.seed = 21;
  return cfg;
}

SplitResult tiny_data(std::uint64_t seed = 2, std::size_t houses = 4, std::size_t days = 25,
                      LabelSemantics semantics = LabelSemantics::per_timestep) {
  Dataset raw = generate_synthetic(houses, days, HmmParams{}, seed, semantics);
  SplitSpec spec;
  spec.seed = 3;
  SplitResult splits = split(raw, spec);
  normalize_fit_apply(splits.train, {&splits.val, &splits.test});
  return splits;
}

TEST(TrainAdversarial, RejectsZeroAdversarySteps) {
  TrainConfig cfg = tiny_config();
  cfg.adversary_steps = 0;  // k = 0 disallowed
  const SplitResult data = tiny_data();
  EXPECT_THROW(train_adversarial(cfg, data.train, data.val), ConfigError);
}

TEST(TrainAdversarial, RejectsInvalidKnobs) {
  const SplitResult data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.clip = 0.0;
  EXPECT_THROW(train_adversarial(cfg, data.train, data.val), ConfigError);
  cfg = tiny_config();
  cfg.lambda = -1.0;
  EXPECT_THROW(train_adversarial(cfg, data.train, data.val), ConfigError);
  cfg = tiny_config();
  cfg.batch_size = 0;
  EXPECT_THROW(train_adversarial(cfg, data.train, data.val), ConfigError);
}

TEST(TrainAdversarial, HistoryIsBitIdenticalAcrossRuns) {
  const TrainConfig cfg = tiny_config();
  const SplitResult data = tiny_data();
  const TrainResult a = train_adversarial(cfg, data.train, data.val);
  const TrainResult b = train_adversarial(cfg, data.train, data.val);
  ASSERT_EQ(a.history.iterations.size(), b.history.iterations.size());
  for (std::size_t i = 0; i < a.history.iterations.size(); ++i) {
    EXPECT_EQ(a.history.iterations[i].adversary_loss, b.history.iterations[i].adversary_loss);
    EXPECT_EQ(a.history.iterations[i].releaser_loss, b.history.iterations[i].releaser_loss);
    EXPECT_EQ(a.history.iterations[i].distortion, b.history.iterations[i].distortion);
    EXPECT_EQ(a.history.iterations[i].entropy_term, b.history.iterations[i].entropy_term);
    EXPECT_EQ(a.history.iterations[i].di_bound, b.history.iterations[i].di_bound);
  }
  EXPECT_EQ(a.releaser.net.flatten(), b.releaser.net.flatten());
  EXPECT_EQ(a.adversary.net.flatten(), b.adversary.net.flatten());
}

TEST(TrainAdversarial, DistortionOnlyRunLearnsRegression) {
  // lambda = 0: the releaser is a pure regressor onto y; the training
  // distortion must drop by a large factor.
  TrainConfig cfg = tiny_config();
  cfg.epochs = 12;
  const SplitResult data = tiny_data(5, 6, 40);
  const TrainResult res = train_adversarial(cfg, data.train, data.val);
  const double first = res.history.iterations.front().distortion;
  const double last_val = res.history.epochs.back().val_nrmse;
  EXPECT_LT(last_val, 0.35);
  EXPECT_LT(res.history.iterations.back().distortion, first * 0.5);
}

TEST(TrainAdversarial, DiBoundNonNegativeAtEveryIteration) {
  TrainConfig cfg = tiny_config();
  cfg.lambda = 1.0;
  const SplitResult data = tiny_data();
  const TrainResult res = train_adversarial(cfg, data.train, data.val);
  for (const auto& r : res.history.iterations) EXPECT_GE(r.di_bound, 0.0);
}

TEST(TrainAdversarial, DivergenceAbortsWithHistory) {
  TrainConfig cfg = tiny_config();
  // One enormous step puts the head weights around 1e160, so the next
  // iteration's squared-error loss overflows to inf.
  cfg.lr_releaser = 1e160;
  cfg.lr_adversary = 1e160;
  cfg.clip = 1e300;
  cfg.epochs = 50;
  const SplitResult data = tiny_data();
  try {
    train_adversarial(cfg, data.train, data.val);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
  }
}

TEST(TrainAdversarial, AlternationKeepsTheOtherNetworkFrozen) {
  // With one epoch and one (k adversary steps + 1 releaser step) group:
  //  - the adversary trains before the releaser's only update, so its final
  //    parameters cannot depend on the releaser learning rate;
  //  - at lambda=0 the releaser's gradient ignores the adversary entirely,
  //    so its final parameters cannot depend on the adversary learning rate.
  // Any cross-contamination of parameters during the alternation would break
  // one of these equalities bit-wise.
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.batch_size = 32;
  cfg.lambda = 0.0;
  cfg.keep_best_validation = false;
  const SplitResult data = tiny_data();

  TrainConfig fast_rel = cfg, slow_rel = cfg;
  fast_rel.lr_releaser = 5e-2;
  slow_rel.lr_releaser = 1e-5;
  const TrainResult a = train_adversarial(fast_rel, data.train, data.val);
  const TrainResult b = train_adversarial(slow_rel, data.train, data.val);
  EXPECT_EQ(a.adversary.net.flatten(), b.adversary.net.flatten());
  EXPECT_NE(a.releaser.net.flatten(), b.releaser.net.flatten());

  TrainConfig fast_adv = cfg, slow_adv = cfg;
  fast_adv.lr_adversary = 5e-2;
  slow_adv.lr_adversary = 1e-5;
  const TrainResult c = train_adversarial(fast_adv, data.train, data.val);
  const TrainResult d = train_adversarial(slow_adv, data.train, data.val);
  EXPECT_EQ(c.releaser.net.flatten(), d.releaser.net.flatten());
  EXPECT_NE(c.adversary.net.flatten(), d.adversary.net.flatten());
}

TEST(TrainAttacker, ChanceLevelOnUninformativeReleaser) {
  // A releaser that outputs pure noise carries no label information, so the
  // attacker must stay near chance (50% for the binary task).
  const SplitResult data = tiny_data(7, 6, 40);
  Releaser noise_only;
  noise_only.noise_dim = 1;
  SeededRng init(123);
  noise_only.net = make_net(2, 8, 1, 1, HeadKind::linear, init);
  // Zero out the observation column of every first-layer input weight so z
  // depends on the seed noise alone.
  for (std::size_t u = 0; u < kNumGates; ++u)
    for (std::size_t i = 0; i < noise_only.net.layers[0].input_w[u].rows(); ++i)
      noise_only.net.layers[0].input_w[u](i, 0) = 0.0;

  TrainConfig cfg = tiny_config();
  cfg.noise_dim = 1;
  cfg.attacker_epochs = 6;
  const Attacker attacker = train_attacker(noise_only, data.train, data.val, cfg);
  const EvalSummary summary = evaluate(noise_only, attacker, data.test, cfg.seed);
  EXPECT_NEAR(summary.attacker_balanced_accuracy_pct, 50.0, 5.0);
}

TEST(TrainAttacker, ReadsOccupancyThroughIdentityReleaser) {
  // Pass-through mechanism: occupancy is readable from consumption, so a
  // trained attacker beats 85% balanced accuracy.
  const SplitResult data = tiny_data(9, 8, 50);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 20;
  cfg.attacker_epochs = 16;
  cfg.lr_attacker = 3e-3;
  const TrainResult res = train_adversarial(cfg, data.train, data.val);
  const Attacker attacker = train_attacker(res.releaser, data.train, data.val, cfg);
  const EvalSummary summary = evaluate(res.releaser, attacker, data.test, cfg.seed);
  EXPECT_GT(summary.attacker_balanced_accuracy_pct, 85.0);
}

TEST(Evaluate, MajorityVoteReportedForPerSequenceLabels) {
  const SplitResult data = tiny_data(11, 5, 30, LabelSemantics::per_sequence);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  const TrainResult res = train_adversarial(cfg, data.train, data.val);
  const Attacker attacker = train_attacker(res.releaser, data.train, data.val, cfg);
  const EvalSummary summary = evaluate(res.releaser, attacker, data.test, cfg.seed);
  EXPECT_TRUE(summary.majority_vote_accuracy_pct.has_value());
}

TEST(Evaluate, DeterministicGivenSeed) {
  const SplitResult data = tiny_data();
  TrainConfig cfg = tiny_config();
  const TrainResult res = train_adversarial(cfg, data.train, data.val);
  const Attacker attacker = train_attacker(res.releaser, data.train, data.val, cfg);
  const EvalSummary a = evaluate(res.releaser, attacker, data.test, 42);
  const EvalSummary b = evaluate(res.releaser, attacker, data.test, 42);
  EXPECT_EQ(a.nrmse, b.nrmse);
  EXPECT_EQ(a.attacker_balanced_accuracy_pct, b.attacker_balanced_accuracy_pct);
  EXPECT_EQ(a.di_bound_mean, b.di_bound_mean);
}

TEST(HistoryCsv, WritesIterationAndEpochTables) {
  const SplitResult data = tiny_data();
  const TrainResult res = train_adversarial(tiny_config(), data.train, data.val);
  const std::string hpath = std::string(::testing::TempDir()) + "history.csv";
  const std::string vpath = std::string(::testing::TempDir()) + "validation.csv";
  write_history_csv(hpath, res.history);
  write_validation_csv(vpath, res.history);
  std::ifstream h(hpath), v(vpath);
  std::string line;
  std::getline(h, line);
  EXPECT_EQ(line, "iteration,adversary_loss,releaser_loss,distortion,entropy_term,di_bound");
  std::size_t rows = 0;
  while (std::getline(h, line)) ++rows;
  EXPECT_EQ(rows, res.history.iterations.size());
  std::getline(v, line);
  EXPECT_EQ(line, "epoch,val_nrmse,val_adversary_loss,val_releaser_loss,val_entropy_term");
  std::remove(hpath.c_str());
  std::remove(vpath.c_str());
}

}  // namespace
}  // namespace dipriv
