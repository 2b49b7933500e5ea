#pragma once

#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dipriv/dataset.hpp"
#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/train.hpp"

namespace dipriv {

struct TradeoffPoint {
  double lambda = 0.0;
  double nrmse = 0.0;
  double attacker_balanced_accuracy_pct = 0.0;
  double di_bound_mean = 0.0;
  std::uint64_t seed = 0;  // the derived per-point seed
};

struct SweepPointResult {
  double lambda = 0.0;
  std::optional<TradeoffPoint> point;  // empty on failure
  std::string error;
};

/// Per-point seed: derived from the base seed and the point's index in the
/// sweep, so points are independent and the whole sweep is reproducible.
inline std::uint64_t sweep_point_seed(std::uint64_t base_seed, std::size_t point_index) {
  return SeededRng::derive_seed(base_seed, 0x5eedULL + point_index);
}

/// Runs the full pipeline for one lambda: adversarial training, worst-case
/// attacker, held-out evaluation.
inline TradeoffPoint run_tradeoff_point(TrainConfig cfg, double lambda, std::uint64_t point_seed,
                                        const SplitResult& data) {
  cfg.lambda = lambda;
  cfg.seed = point_seed;
  const TrainResult trained = train_adversarial(cfg, data.train, data.val);
  const Attacker attacker = train_attacker(trained.releaser, data.train, data.val, cfg);
  const EvalSummary summary =
      evaluate(trained.releaser, attacker, data.test, point_seed, cfg.include_private_in_obs);
  TradeoffPoint point;
  point.lambda = lambda;
  point.nrmse = summary.nrmse;
  point.attacker_balanced_accuracy_pct = summary.attacker_balanced_accuracy_pct;
  point.di_bound_mean = summary.di_bound_mean;
  point.seed = point_seed;
  return point;
}

/// Maps out the privacy-utility trade-off: one independent training pipeline
/// per lambda, optionally fanned out over a bounded worker pool. A failing
/// point is reported and the sweep continues. Results are deterministic and
/// independent of the worker count.
inline std::vector<SweepPointResult> sweep_lambda(
    const TrainConfig& base, const std::vector<double>& lambdas, const SplitResult& data,
    std::size_t workers = 1, const std::function<void(const SweepPointResult&)>& on_point = {}) {
  if (lambdas.empty()) throw ConfigError("sweep: need at least one lambda");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ConfigError("sweep: lambda values must be >= 0");
  if (!disjoint_uids(data.train, data.test) || !disjoint_uids(data.val, data.test))
    throw DataError("sweep: test split shares sequences with training data");

  std::vector<SweepPointResult> results(lambdas.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= lambdas.size()) return;
      SweepPointResult& res = results[i];
      res.lambda = lambdas[i];
      try {
        res.point = run_tradeoff_point(base, lambdas[i], sweep_point_seed(base.seed, i), data);
      } catch (const std::exception& e) {
        res.error = e.what();
      }
      if (on_point) {
        std::lock_guard<std::mutex> lock(report_mutex);
        on_point(res);
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(workers, lambdas.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

// ---------------------------------------------------------------------------
// tradeoff.csv
// ---------------------------------------------------------------------------

inline std::string tradeoff_csv_header() {
  return "lambda,nrmse,attacker_balanced_accuracy_pct,di_bound_mean,seed";
}

inline std::string tradeoff_csv_row(const TradeoffPoint& p) {
  std::ostringstream os;
  os << format_double(p.lambda) << "," << format_double(p.nrmse) << ","
     << format_double(p.attacker_balanced_accuracy_pct) << ","
     << format_double(p.di_bound_mean) << "," << p.seed;
  return os.str();
}

inline void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffPoint>& points) {
  std::ofstream os(path);
  if (!os) throw DataError("write_tradeoff_csv: cannot open " + path);
  os << tradeoff_csv_header() << "\n";
  for (const auto& p : points) os << tradeoff_csv_row(p) << "\n";
}

/// Reads back a tradeoff.csv (used to resume sweeps). Unknown files yield an
/// empty list; a malformed known header is an error.
inline std::vector<TradeoffPoint> read_tradeoff_csv(const std::string& path) {
  std::ifstream is(path);
  std::vector<TradeoffPoint> points;
  if (!is) return points;
  std::string line;
  if (!std::getline(is, line)) return points;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != tradeoff_csv_header())
    throw DataError("read_tradeoff_csv: unrecognized header in " + path);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    TradeoffPoint p;
    char c1, c2, c3, c4;
    if (!(row >> p.lambda >> c1 >> p.nrmse >> c2 >> p.attacker_balanced_accuracy_pct >> c3 >>
          p.di_bound_mean >> c4 >> p.seed) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw DataError("read_tradeoff_csv: bad row at line " + std::to_string(line_no));
    points.push_back(p);
  }
  return points;
}

}  // namespace dipriv
