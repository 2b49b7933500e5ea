// Command-line front end: wires config files to the data pipeline, the
// adversarial trainer, the sweep driver and the spectra/metrics reports.
// Every number emitted here is produced by a library call; this file only
// parses arguments and moves bytes to disk.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dipriv/dipriv.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string preset;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "path to a run config file");
  cmd->add_option("--out", flags.out_dir, "output directory (overrides [output] dir)");
  cmd->add_option("--preset", flags.preset,
                  "named preset (occupancy-paper, identity-paper, desk-occupancy, desk-identity)");
  cmd->add_option("--seed", flags.seed, "base seed (overrides [train] seed)");
}

dipriv::RunConfig make_config(const CommonFlags& flags) {
  dipriv::RunConfig cfg;
  if (!flags.config_path.empty()) cfg = dipriv::load_config(flags.config_path);
  // Flags override file values.
  if (!flags.preset.empty()) dipriv::apply_preset(cfg, flags.preset);
  if (flags.seed) cfg.train.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  return cfg;
}

std::filesystem::path prepare_out_dir(const dipriv::RunConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw dipriv::DataError("cannot create output directory " + dir.string());
  dipriv::write_config((dir / "effective_config.ini").string(), cfg);
  return dir;
}

// Normalizes prepared splits with the constants stored in a bundle instead of
// refitting, so a mechanism can be evaluated on data it was not fitted on.
dipriv::SplitResult prepare_splits_for_bundle(const dipriv::RunConfig& cfg,
                                              const dipriv::MechanismBundle& bundle) {
  dipriv::Dataset raw = dipriv::load_raw_dataset(cfg);
  if (static_cast<std::size_t>(raw.alphabet_size) != bundle.alphabet)
    throw dipriv::DataError("bundle alphabet (" + std::to_string(bundle.alphabet) +
                            ") does not match dataset alphabet (" +
                            std::to_string(raw.alphabet_size) + ")");
  dipriv::SplitSpec spec = cfg.split_spec;
  spec.seed = dipriv::SeededRng::derive_seed(cfg.train.seed, 0xDA7AULL);
  dipriv::SplitResult splits = dipriv::split(raw, spec);
  const dipriv::Normalization norm{bundle.y_min, bundle.y_max};
  dipriv::normalize_apply(splits.train, norm);
  dipriv::normalize_apply(splits.val, norm);
  dipriv::normalize_apply(splits.test, norm);
  return splits;
}

std::string summary_csv_text(const dipriv::EvalSummary& s) {
  std::string header = "nrmse,attacker_balanced_accuracy_pct,di_bound_mean";
  std::string row = dipriv::format_double(s.nrmse) + "," +
                    dipriv::format_double(s.attacker_balanced_accuracy_pct) + "," +
                    dipriv::format_double(s.di_bound_mean);
  if (s.majority_vote_accuracy_pct) {
    header += ",majority_vote_accuracy_pct";
    row += "," + dipriv::format_double(*s.majority_vote_accuracy_pct);
  }
  return header + "\n" + row + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw dipriv::DataError("cannot open " + path.string());
  os << text;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const dipriv::RunConfig& cfg) {
  if (cfg.source != dipriv::DataSource::synthetic)
    throw dipriv::ConfigError("gen-data: requires data.source = synthetic");
  // Generate (and validate parameters) before any file is touched.
  const dipriv::Dataset ds = dipriv::load_raw_dataset(cfg);
  const std::filesystem::path dir = prepare_out_dir(cfg);
  dipriv::save_csv((dir / "dataset.csv").string(), ds);
  std::cout << "gen-data: wrote " << ds.size() << " sequences (" << ds.size() * ds.seq_len
            << " rows) to " << (dir / "dataset.csv").string() << "\n";
  return kExitOk;
}

int cmd_train(const dipriv::RunConfig& cfg) {
  const std::filesystem::path dir = prepare_out_dir(cfg);
  const dipriv::PreparedData data = dipriv::prepare_data(cfg);

  try {
    const dipriv::TrainResult trained = dipriv::train_adversarial(
        cfg.train, data.splits.train, data.splits.val, [](const dipriv::EpochRecord& er) {
          std::cout << "epoch " << er.epoch << ": val_nrmse=" << dipriv::format_double(er.val_nrmse)
                    << " val_adversary_loss=" << dipriv::format_double(er.val_adversary_loss)
                    << "\n";
        });

    dipriv::MechanismBundle bundle;
    bundle.releaser = trained.releaser;
    bundle.alphabet = static_cast<std::size_t>(data.splits.train.alphabet_size);
    bundle.y_min = data.normalization.y_min;
    bundle.y_max = data.normalization.y_max;
    dipriv::save_bundle((dir / "bundle.txt").string(), bundle);
    dipriv::write_history_csv((dir / "history.csv").string(), trained.history);
    dipriv::write_validation_csv((dir / "validation.csv").string(), trained.history);

    const dipriv::Attacker attacker =
        dipriv::train_attacker(trained.releaser, data.splits.train, data.splits.val, cfg.train);
    dipriv::save_net((dir / "attacker.txt").string(), attacker.net);

    const dipriv::EvalSummary summary =
        dipriv::evaluate(trained.releaser, attacker, data.splits.test, cfg.train.seed,
                         cfg.train.include_private_in_obs);
    write_text_file(dir / "summary.csv", summary_csv_text(summary));
    std::cout << "train: nrmse=" << dipriv::format_double(summary.nrmse)
              << " attacker_balanced_accuracy_pct="
              << dipriv::format_double(summary.attacker_balanced_accuracy_pct)
              << " di_bound_mean=" << dipriv::format_double(summary.di_bound_mean) << "\n";
    return kExitOk;
  } catch (const dipriv::DivergenceError& e) {
    dipriv::write_history_csv((dir / "history.csv").string(), e.history());
    std::cerr << "train: " << e.what() << " (partial history saved)\n";
    return kExitDivergence;
  }
}

int cmd_sweep(dipriv::RunConfig cfg, const std::string& lambda_list) {
  if (!lambda_list.empty())
    cfg.lambdas = dipriv::detail::parse_double_list(lambda_list, "--lambda");
  const std::filesystem::path dir = prepare_out_dir(cfg);
  const std::string csv_path = (dir / "tradeoff.csv").string();
  const dipriv::PreparedData data = dipriv::prepare_data(cfg);

  // Resume: lambdas already present in the output are not retrained.
  std::vector<dipriv::TradeoffPoint> have = dipriv::read_tradeoff_csv(csv_path);
  std::vector<std::size_t> todo_positions;
  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
    bool found = false;
    for (const auto& p : have) found = found || p.lambda == cfg.lambdas[i];
    if (!found) todo_positions.push_back(i);
  }

  // Seeds derive from each lambda's position in the configured list, so a
  // resumed sweep trains exactly the nets it would have trained originally.
  std::vector<dipriv::SweepPointResult> fresh(todo_positions.size());
  if (!todo_positions.empty()) {
    std::atomic<std::size_t> cursor{0};
    auto run_points = [&]() {
      for (;;) {
        const std::size_t j = cursor.fetch_add(1);
        if (j >= todo_positions.size()) return;
        const std::size_t pos = todo_positions[j];
        dipriv::SweepPointResult& res = fresh[j];
        res.lambda = cfg.lambdas[pos];
        try {
          res.point = dipriv::run_tradeoff_point(cfg.train, cfg.lambdas[pos],
                                                 dipriv::sweep_point_seed(cfg.train.seed, pos),
                                                 data.splits);
        } catch (const std::exception& e) {
          res.error = e.what();
        }
      }
    };
    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(cfg.workers, todo_positions.size()));
    if (n_workers == 1) {
      run_points();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(run_points);
      for (auto& t : pool) t.join();
    }
  }

  // Merge in configured order and rewrite the table.
  std::vector<dipriv::TradeoffPoint> rows;
  bool any_failure = false;
  for (double l : cfg.lambdas) {
    bool written = false;
    for (const auto& p : have)
      if (p.lambda == l && !written) {
        rows.push_back(p);
        written = true;
      }
    for (const auto& r : fresh)
      if (r.lambda == l && !written) {
        if (r.point) {
          rows.push_back(*r.point);
        } else {
          std::cerr << "sweep: lambda=" << dipriv::format_double(l) << " failed: " << r.error
                    << "\n";
          any_failure = true;
        }
        written = true;
      }
  }
  dipriv::write_tradeoff_csv(csv_path, rows);
  std::cout << "sweep: " << rows.size() << " of " << cfg.lambdas.size() << " points in "
            << csv_path << "\n";
  return any_failure ? kExitOther : kExitOk;
}

int cmd_psd(const dipriv::RunConfig& cfg, const std::string& bundle_path) {
  const dipriv::MechanismBundle bundle = dipriv::load_bundle(bundle_path);
  const dipriv::SplitResult splits = prepare_splits_for_bundle(cfg, bundle);
  const std::filesystem::path dir = prepare_out_dir(cfg);
  const dipriv::PsdReport report =
      dipriv::error_psd_report(bundle.releaser, splits.test, cfg.psd, cfg.train.seed,
                               cfg.train.include_private_in_obs);
  dipriv::write_psd_csv((dir / "psd.csv").string(), report);
  std::cout << "psd: wrote " << report.freq_cph.size() << " bins to "
            << (dir / "psd.csv").string() << "\n";
  return kExitOk;
}

int cmd_eval(const dipriv::RunConfig& cfg, const std::string& bundle_path,
             const std::string& attacker_path) {
  const dipriv::MechanismBundle bundle = dipriv::load_bundle(bundle_path);
  const dipriv::SplitResult splits = prepare_splits_for_bundle(cfg, bundle);
  const std::filesystem::path dir = prepare_out_dir(cfg);

  dipriv::Attacker attacker;
  if (!attacker_path.empty()) {
    attacker.net = dipriv::load_net(attacker_path);
    attacker.alphabet = attacker.net.output_dim();
    if (attacker.alphabet != bundle.alphabet)
      throw dipriv::DataError("eval: attacker alphabet does not match bundle");
  } else {
    attacker = dipriv::train_attacker(bundle.releaser, splits.train, splits.val, cfg.train);
  }

  const dipriv::EvalSummary summary = dipriv::evaluate(
      bundle.releaser, attacker, splits.test, cfg.train.seed, cfg.train.include_private_in_obs);
  write_text_file(dir / "eval_summary.csv", summary_csv_text(summary));
  std::cout << "eval: nrmse=" << dipriv::format_double(summary.nrmse)
            << " attacker_balanced_accuracy_pct="
            << dipriv::format_double(summary.attacker_balanced_accuracy_pct)
            << " di_bound_mean=" << dipriv::format_double(summary.di_bound_mean);
  if (summary.majority_vote_accuracy_pct)
    std::cout << " majority_vote_accuracy_pct="
              << dipriv::format_double(*summary.majority_vote_accuracy_pct);
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarially trained privacy-preserving release of metered time series"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, sweep_flags, psd_flags, eval_flags;
  std::string sweep_lambdas, psd_bundle, eval_bundle, eval_attacker;
  std::size_t sweep_workers = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  add_common(gen, gen_flags);

  CLI::App* train = app.add_subcommand("train", "train a mechanism and its worst-case attacker");
  add_common(train, train_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "trace the privacy-utility trade-off over lambda");
  add_common(sweep, sweep_flags);
  sweep->add_option("--lambda", sweep_lambdas, "comma-separated lambda values");
  sweep->add_option("--workers", sweep_workers, "parallel training jobs");

  CLI::App* psd = app.add_subcommand("psd", "input and error-signal spectra of a trained bundle");
  add_common(psd, psd_flags);
  psd->add_option("--bundle", psd_bundle, "mechanism bundle file")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a trained bundle on held-out data");
  add_common(eval, eval_flags);
  eval->add_option("--bundle", eval_bundle, "mechanism bundle file")->required();
  eval->add_option("--attacker", eval_attacker, "reuse a saved attacker network");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(make_config(gen_flags));
    if (train->parsed()) return cmd_train(make_config(train_flags));
    if (sweep->parsed()) {
      dipriv::RunConfig cfg = make_config(sweep_flags);
      if (sweep_workers > 0) cfg.workers = sweep_workers;
      return cmd_sweep(std::move(cfg), sweep_lambdas);
    }
    if (psd->parsed()) return cmd_psd(make_config(psd_flags), psd_bundle);
    if (eval->parsed()) return cmd_eval(make_config(eval_flags), eval_bundle, eval_attacker);
  } catch (const dipriv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dipriv::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const dipriv::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
