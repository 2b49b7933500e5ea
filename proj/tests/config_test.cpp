#include "dipriv/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace dipriv {
namespace {

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config_text(is);
}

TEST(Config, ParsesSectionsAndTypes) {
  const RunConfig cfg = parse(
      "# comment\n"
      "[data]\n"
      "source = synthetic\n"
      "task = identity\n"
      "houses = 5\n"
      "p_stay = 0.8\n"
      "\n"
      "[train]\n"
      "batch_size = 16\n"
      "lambda = 2.5\n"
      "seed = 99\n"
      "clip_by_norm = true\n"
      "[sweep]\n"
      "lambdas = 0,0.5,1\n"
      "workers = 2\n"
      "[output]\n"
      "dir = /tmp/xyz\n");
  EXPECT_EQ(cfg.task, TaskKind::identity);
  EXPECT_EQ(cfg.houses, 5u);
  EXPECT_DOUBLE_EQ(cfg.hmm.p_stay, 0.8);
  EXPECT_EQ(cfg.train.batch_size, 16u);
  EXPECT_DOUBLE_EQ(cfg.train.lambda, 2.5);
  EXPECT_EQ(cfg.train.seed, 99u);
  EXPECT_TRUE(cfg.train.clip_by_norm);
  EXPECT_EQ(cfg.lambdas, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(cfg.workers, 2u);
  EXPECT_EQ(cfg.out_dir, "/tmp/xyz");
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse("[data]\nno_such_key = 1\n"), ConfigError);
  EXPECT_THROW(parse("[nonsense]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse("key_outside_section = 1\n"), ConfigError);
}

TEST(Config, RejectsMalformedValues) {
  EXPECT_THROW(parse("[train]\nbatch_size = many\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nlambda = 1.2.3\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nclip_by_norm = maybe\n"), ConfigError);
  EXPECT_THROW(parse("[sweep]\nlambdas = \n"), ConfigError);
  EXPECT_THROW(parse("[data\nsource = synthetic\n"), ConfigError);
}

TEST(Config, OccupancyPaperPresetPinsPublishedValues) {
  RunConfig cfg;
  apply_preset(cfg, "occupancy-paper");
  EXPECT_EQ(cfg.train.batch_size, 128u);     // B
  EXPECT_EQ(cfg.train.adversary_steps, 4u);  // k
  EXPECT_EQ(cfg.train.noise_dim, 8u);        // m
  EXPECT_DOUBLE_EQ(cfg.train.l2_recurrent, 1.5);
  EXPECT_EQ(cfg.train.releaser_spec.layers, 4u);
  EXPECT_EQ(cfg.train.releaser_spec.cells, 64u);
  EXPECT_EQ(cfg.train.adversary_spec.layers, 2u);
  EXPECT_EQ(cfg.train.adversary_spec.cells, 32u);
  EXPECT_EQ(cfg.train.attacker_spec.layers, 3u);
}

TEST(Config, IdentityPaperPresetPinsPublishedValues) {
  RunConfig cfg;
  apply_preset(cfg, "identity-paper");
  EXPECT_EQ(cfg.train.batch_size, 128u);     // B
  EXPECT_EQ(cfg.train.adversary_steps, 5u);  // k
  EXPECT_EQ(cfg.train.noise_dim, 3u);        // m
  EXPECT_DOUBLE_EQ(cfg.train.l2_recurrent, 2.0);
  EXPECT_EQ(cfg.train.releaser_spec.layers, 6u);
  EXPECT_EQ(cfg.train.releaser_spec.cells, 128u);
  EXPECT_EQ(cfg.train.adversary_spec.layers, 4u);
  EXPECT_EQ(cfg.train.attacker_spec.layers, 4u);
  EXPECT_EQ(cfg.houses, 5u);
  EXPECT_EQ(cfg.task, TaskKind::identity);
}

TEST(Config, UnknownPresetRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_preset(cfg, "galactic"), ConfigError);
}

TEST(Config, EchoRoundTripsThroughParser) {
  RunConfig cfg;
  apply_preset(cfg, "desk-identity");
  cfg.train.lambda = 0.75;
  cfg.lambdas = {0.0, 0.25, 3.0};
  cfg.out_dir = "/tmp/echo";
  std::ostringstream os;
  write_config(os, cfg);
  const RunConfig back = parse(os.str());
  EXPECT_EQ(back.task, cfg.task);
  EXPECT_EQ(back.train.batch_size, cfg.train.batch_size);
  EXPECT_DOUBLE_EQ(back.train.lambda, 0.75);
  EXPECT_EQ(back.lambdas, cfg.lambdas);
  EXPECT_EQ(back.out_dir, "/tmp/echo");
  EXPECT_EQ(back.train.releaser_spec.cells, cfg.train.releaser_spec.cells);
}

TEST(Config, LaterKeysOverrideEarlier) {
  const RunConfig cfg = parse(
      "[train]\n"
      "preset = desk-occupancy\n"
      "batch_size = 8\n");  // overrides the preset's value
  EXPECT_EQ(cfg.train.batch_size, 8u);
  EXPECT_EQ(cfg.train.releaser_spec.cells, 32u);  // preset value retained
}

TEST(Config, PrepareDataProducesNormalizedSplits) {
  RunConfig cfg;
  apply_preset(cfg, "desk-occupancy");
  cfg.houses = 4;
  cfg.days_per_house = 20;
  const PreparedData data = prepare_data(cfg);
  EXPECT_EQ(data.splits.train.size() + data.splits.val.size() + data.splits.test.size(), 80u);
  ASSERT_TRUE(data.splits.train.normalization.has_value());
  double lo = 1e300, hi = -1e300;
  for (const auto& s : data.splits.train.samples)
    for (double v : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  EXPECT_NEAR(lo, 0.0, 1e-12);
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_TRUE(disjoint_uids(data.splits.train, data.splits.test));
}

TEST(Config, CsvSourceRequiresPath) {
  RunConfig cfg;
  cfg.source = DataSource::csv;
  EXPECT_THROW(load_raw_dataset(cfg), ConfigError);
}

}  // namespace
}  // namespace dipriv
