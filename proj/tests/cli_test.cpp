#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dipriv/config.hpp"
#include "dipriv/csv.hpp"
#include "dipriv/sweep.hpp"

namespace dipriv {
namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DIPRIV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_tiny_config(const fs::path& path, const std::string& extra = "") {
  std::ofstream os(path);
  os << "[data]\n"
        "source = synthetic\n"
        "task = occupancy\n"
        "houses = 3\n"
        "days_per_house = 30\n"
        "[train]\n"
        "batch_size = 16\n"
        "adversary_steps = 1\n"
        "l2_recurrent = 0.01\n"
        "noise_dim = 1\n"
        "epochs = 2\n"
        "attacker_epochs = 2\n"
        "releaser_layers = 1\n"
        "releaser_cells = 8\n"
        "adversary_layers = 1\n"
        "adversary_cells = 6\n"
        "attacker_layers = 1\n"
        "attacker_cells = 6\n"
        "seed = 5\n"
     << extra;
}

TEST(CliGenData, WritesExpectedRowCountAndSequences) {
  const fs::path dir = fresh_dir("gen_counts");
  const fs::path cfg = dir / "cfg.ini";
  std::ofstream(cfg) << "[data]\nsource = synthetic\nhouses = 5\ndays_per_house = 100\n";
  ASSERT_EQ(run_cli("gen-data --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
  const Dataset ds = load_csv((dir / "out" / "dataset.csv").string());
  EXPECT_EQ(ds.size(), 500u);  // 5 houses x 100 days
  std::ifstream is(dir / "out" / "dataset.csv");
  std::size_t lines = 0;
  std::string line;
  while (std::getline(is, line)) ++lines;
  EXPECT_EQ(lines, 12001u);  // header + 12000 rows
  EXPECT_TRUE(fs::exists(dir / "out" / "effective_config.ini"));
}

TEST(CliGenData, ByteIdenticalForSameSeed) {
  const fs::path dir = fresh_dir("gen_det");
  const fs::path cfg = dir / "cfg.ini";
  std::ofstream(cfg) << "[data]\nsource = synthetic\nhouses = 2\ndays_per_house = 5\n";
  ASSERT_EQ(run_cli("gen-data --config " + cfg.string() + " --seed 7 --out " +
                    (dir / "a").string()),
            0);
  ASSERT_EQ(run_cli("gen-data --config " + cfg.string() + " --seed 7 --out " +
                    (dir / "b").string()),
            0);
  EXPECT_EQ(read_file(dir / "a" / "dataset.csv"), read_file(dir / "b" / "dataset.csv"));
}

TEST(CliGenData, InvalidProbabilityRejectedBeforeWriting) {
  const fs::path dir = fresh_dir("gen_bad");
  const fs::path cfg = dir / "cfg.ini";
  std::ofstream(cfg) << "[data]\nsource = synthetic\np_stay = 1.5\n";
  EXPECT_EQ(run_cli("gen-data --config " + cfg.string() + " --out " + (dir / "out").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "out" / "dataset.csv"));
}

TEST(CliExitCodes, DistinctPerErrorClass) {
  const fs::path dir = fresh_dir("exit_codes");
  // Config error: unknown key.
  const fs::path bad_cfg = dir / "bad.ini";
  std::ofstream(bad_cfg) << "[train]\nnot_a_knob = 1\n";
  EXPECT_EQ(run_cli("train --config " + bad_cfg.string()), 2);
  // Config error: unknown preset.
  EXPECT_EQ(run_cli("train --preset galactic"), 2);
  // Data error: missing csv.
  const fs::path csv_cfg = dir / "csv.ini";
  std::ofstream(csv_cfg) << "[data]\nsource = csv\ncsv_path = /nonexistent/x.csv\n";
  EXPECT_EQ(run_cli("train --config " + csv_cfg.string() + " --out " + (dir / "o1").string()), 3);
  // Divergence: absurd learning rate.
  const fs::path div_cfg = dir / "div.ini";
  write_tiny_config(div_cfg,
                    "lr_releaser = 1e160\nlr_adversary = 1e160\nclip = 1e300\nepochs = 40\n");
  EXPECT_EQ(run_cli("train --config " + div_cfg.string() + " --out " + (dir / "o2").string()), 4);
  // Partial history still saved on divergence.
  EXPECT_TRUE(fs::exists(dir / "o2" / "history.csv"));
  // CLI usage error maps to the config exit code.
  EXPECT_EQ(run_cli("psd"), 2);  // --bundle required
}

TEST(CliTrain, WritesBundleHistoryAndSummary) {
  const fs::path dir = fresh_dir("train_artifacts");
  const fs::path cfg = dir / "cfg.ini";
  write_tiny_config(cfg);
  ASSERT_EQ(run_cli("train --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "bundle.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "attacker.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "history.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "validation.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  const MechanismBundle bundle = load_bundle((dir / "out" / "bundle.txt").string());
  EXPECT_EQ(bundle.releaser.noise_dim, 1u);
  EXPECT_EQ(bundle.alphabet, 2u);
}

TEST(CliEval, ByteEqualsDirectModuleCalls) {
  const fs::path dir = fresh_dir("eval_byte");
  const fs::path cfg_path = dir / "cfg.ini";
  write_tiny_config(cfg_path);
  ASSERT_EQ(run_cli("train --config " + cfg_path.string() + " --out " + (dir / "t").string()), 0);
  ASSERT_EQ(run_cli("eval --config " + cfg_path.string() + " --bundle " +
                    (dir / "t" / "bundle.txt").string() + " --out " + (dir / "e").string()),
            0);

  // Same pipeline through direct library calls.
  RunConfig cfg = load_config(cfg_path.string());
  const MechanismBundle bundle = load_bundle((dir / "t" / "bundle.txt").string());
  Dataset raw = load_raw_dataset(cfg);
  SplitSpec spec = cfg.split_spec;
  spec.seed = SeededRng::derive_seed(cfg.train.seed, 0xDA7AULL);
  SplitResult splits = split(raw, spec);
  const Normalization norm{bundle.y_min, bundle.y_max};
  normalize_apply(splits.train, norm);
  normalize_apply(splits.val, norm);
  normalize_apply(splits.test, norm);
  const Attacker attacker = train_attacker(bundle.releaser, splits.train, splits.val, cfg.train);
  const EvalSummary s = evaluate(bundle.releaser, attacker, splits.test, cfg.train.seed,
                                 cfg.train.include_private_in_obs);

  std::string expected = "nrmse,attacker_balanced_accuracy_pct,di_bound_mean\n" +
                         format_double(s.nrmse) + "," +
                         format_double(s.attacker_balanced_accuracy_pct) + "," +
                         format_double(s.di_bound_mean) + "\n";
  EXPECT_EQ(read_file(dir / "e" / "eval_summary.csv"), expected);
}

TEST(CliSweep, SingleLambdaOneRow) {
  const fs::path dir = fresh_dir("sweep_single");
  const fs::path cfg = dir / "cfg.ini";
  write_tiny_config(cfg);
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --lambda 0.5 --out " +
                    (dir / "out").string()),
            0);
  const auto points = read_tradeoff_csv((dir / "out" / "tradeoff.csv").string());
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points[0].lambda, 0.5);
}

TEST(CliSweep, ResumeSkipsCompletedPoints) {
  const fs::path dir = fresh_dir("sweep_resume");
  const fs::path cfg = dir / "cfg.ini";
  write_tiny_config(cfg, "[sweep]\nlambdas = 0,1\n");
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
  const fs::path csv = dir / "out" / "tradeoff.csv";
  auto points = read_tradeoff_csv(csv.string());
  ASSERT_EQ(points.size(), 2u);

  // Plant a sentinel in the finished table; a resumed run must keep it
  // (proving the points were not retrained) while adding the new lambda.
  points[0].nrmse = 0.123456789;
  write_tradeoff_csv(csv.string(), points);
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --lambda 0,1,2 --out " +
                    (dir / "out").string()),
            0);
  const auto merged = read_tradeoff_csv(csv.string());
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged[0].nrmse, 0.123456789);  // untouched row
  EXPECT_EQ(merged[2].lambda, 2.0);
}

TEST(CliPsd, WritesSpectraTable) {
  const fs::path dir = fresh_dir("psd_out");
  const fs::path cfg = dir / "cfg.ini";
  // Enough days that each house's test series fits several segments.
  write_tiny_config(cfg, "[psd]\nsegment = 48\nrealizations = 3\n");
  std::ofstream(cfg, std::ios::app) << "[data]\ndays_per_house = 60\n";
  ASSERT_EQ(run_cli("train --config " + cfg.string() + " --out " + (dir / "t").string()), 0);
  ASSERT_EQ(run_cli("psd --config " + cfg.string() + " --bundle " +
                    (dir / "t" / "bundle.txt").string() + " --out " + (dir / "p").string()),
            0);
  std::ifstream is(dir / "p" / "psd.csv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "frequency_cph,input_psd,error_psd");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 48u / 2 + 1);
}

TEST(CliPsd, DeterministicMechanismCollapsesRealizations) {
  // noise_dim = 0: every realization is identical, so 1 vs 5 realizations
  // average to the same table.
  const fs::path dir = fresh_dir("psd_det");
  const fs::path cfg1 = dir / "one.ini";
  write_tiny_config(cfg1, "noise_dim = 0\n[psd]\nsegment = 48\nrealizations = 1\n");
  std::ofstream(cfg1, std::ios::app) << "[data]\ndays_per_house = 60\n";
  const fs::path cfg5 = dir / "five.ini";
  write_tiny_config(cfg5, "noise_dim = 0\n[psd]\nsegment = 48\nrealizations = 5\n");
  std::ofstream(cfg5, std::ios::app) << "[data]\ndays_per_house = 60\n";

  ASSERT_EQ(run_cli("train --config " + cfg1.string() + " --out " + (dir / "t").string()), 0);
  ASSERT_EQ(run_cli("psd --config " + cfg1.string() + " --bundle " +
                    (dir / "t" / "bundle.txt").string() + " --out " + (dir / "p1").string()),
            0);
  ASSERT_EQ(run_cli("psd --config " + cfg5.string() + " --bundle " +
                    (dir / "t" / "bundle.txt").string() + " --out " + (dir / "p5").string()),
            0);
  // The five identical realizations average back to the single-realization
  // table (up to summation rounding in the last ulp).
  std::ifstream a(dir / "p1" / "psd.csv"), b(dir / "p5" / "psd.csv");
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  EXPECT_EQ(la, lb);  // header
  while (std::getline(a, la) && std::getline(b, lb)) {
    double fa, ia, ea, fb, ib, eb;
    char c;
    std::istringstream(la) >> fa >> c >> ia >> c >> ea;
    std::istringstream(lb) >> fb >> c >> ib >> c >> eb;
    EXPECT_EQ(fa, fb);
    EXPECT_EQ(ia, ib);
    EXPECT_NEAR(ea, eb, 1e-12 * std::max(1.0, std::abs(ea)));
  }
}

}  // namespace
}  // namespace dipriv
