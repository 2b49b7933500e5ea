#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dipriv/csv.hpp"
#include "dipriv/dataset.hpp"
#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/psd_report.hpp"
#include "dipriv/train.hpp"

namespace dipriv {

// Plain-text config: `[section]` headers, `key = value` lines, `#` comments.
// Unknown sections or keys are rejected outright; command-line flags override
// file values; the effective config is echoed into the output directory.

enum class DataSource { synthetic, csv };
enum class TaskKind { occupancy, identity };

struct RunConfig {
  // [data]
  DataSource source = DataSource::synthetic;
  TaskKind task = TaskKind::occupancy;
  std::string csv_path;
  std::size_t houses = 20;
  std::size_t days_per_house = 100;
  HmmParams hmm;
  SplitSpec split_spec;
  // [train]
  TrainConfig train;
  std::string preset;  // applied before file keys; flags still win
  // [sweep]
  std::vector<double> lambdas{0.0};
  std::size_t workers = 1;
  // [psd]
  PsdReportOptions psd;
  // [output]
  std::string out_dir = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number '" + v + "' for " + key);
  }
}

inline std::size_t parse_size(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("config: bad non-negative integer '" + v + "' for " + key);
  }
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned integer '" + v + "' for " + key);
  }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + key);
}

inline std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config: empty item in list for " + key);
    out.push_back(parse_double(item, key));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

}  // namespace detail

/// Named presets. The two paper-scale presets pin the published
/// hyperparameters; the desk presets are sized to train in minutes on a
/// laptop core and are what the test suites use.
inline void apply_preset(RunConfig& cfg, const std::string& name) {
  if (name == "occupancy-paper") {
    cfg.task = TaskKind::occupancy;
    cfg.train.releaser_spec = {4, 64};
    cfg.train.adversary_spec = {2, 32};
    cfg.train.attacker_spec = {3, 32};  // paper fixes 3 layers, cell count unstated
    cfg.train.batch_size = 128;
    cfg.train.adversary_steps = 4;
    cfg.train.noise_dim = 8;
    cfg.train.l2_recurrent = 1.5;
  } else if (name == "identity-paper") {
    cfg.task = TaskKind::identity;
    cfg.train.releaser_spec = {6, 128};
    cfg.train.adversary_spec = {4, 32};
    cfg.train.attacker_spec = {4, 32};
    cfg.train.batch_size = 128;
    cfg.train.adversary_steps = 5;
    cfg.train.noise_dim = 3;
    cfg.train.l2_recurrent = 2.0;
    cfg.houses = 5;
  } else if (name == "desk-occupancy") {
    cfg.task = TaskKind::occupancy;
    cfg.train.releaser_spec = {2, 32};
    cfg.train.adversary_spec = {1, 16};
    cfg.train.attacker_spec = {1, 16};
    cfg.train.batch_size = 32;
    cfg.train.adversary_steps = 2;
    cfg.train.noise_dim = 2;
    cfg.train.l2_recurrent = 0.01;
    cfg.train.epochs = 40;
    cfg.train.attacker_epochs = 30;
    cfg.houses = 20;
    cfg.days_per_house = 100;
  } else if (name == "desk-identity") {
    cfg.task = TaskKind::identity;
    cfg.train.releaser_spec = {2, 32};
    cfg.train.adversary_spec = {1, 16};
    cfg.train.attacker_spec = {1, 16};
    cfg.train.batch_size = 32;
    cfg.train.adversary_steps = 2;
    cfg.train.noise_dim = 3;
    cfg.train.l2_recurrent = 0.01;
    cfg.train.epochs = 40;
    cfg.train.attacker_epochs = 30;
    cfg.houses = 5;
    cfg.days_per_house = 400;
  } else {
    throw ConfigError("config: unknown preset '" + name + "'");
  }
  cfg.preset = name;
}

inline void set_config_key(RunConfig& cfg, const std::string& section, const std::string& key,
                           const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_double_list;
  using detail::parse_size;
  using detail::parse_u64;
  const std::string full = section + "." + key;

  if (section == "data") {
    if (key == "source") {
      if (value == "synthetic")
        cfg.source = DataSource::synthetic;
      else if (value == "csv")
        cfg.source = DataSource::csv;
      else
        throw ConfigError("config: data.source must be synthetic or csv, got '" + value + "'");
    } else if (key == "task") {
      if (value == "occupancy")
        cfg.task = TaskKind::occupancy;
      else if (value == "identity")
        cfg.task = TaskKind::identity;
      else
        throw ConfigError("config: data.task must be occupancy or identity, got '" + value + "'");
    } else if (key == "csv_path")
      cfg.csv_path = value;
    else if (key == "houses")
      cfg.houses = parse_size(value, full);
    else if (key == "days_per_house")
      cfg.days_per_house = parse_size(value, full);
    else if (key == "p_stay")
      cfg.hmm.p_stay = parse_double(value, full);
    else if (key == "p_initial_occupied")
      cfg.hmm.p_initial_occupied = parse_double(value, full);
    else if (key == "base_min")
      cfg.hmm.base_min = parse_double(value, full);
    else if (key == "base_max")
      cfg.hmm.base_max = parse_double(value, full);
    else if (key == "gain_min")
      cfg.hmm.gain_min = parse_double(value, full);
    else if (key == "gain_max")
      cfg.hmm.gain_max = parse_double(value, full);
    else if (key == "sin_amp")
      cfg.hmm.sin_amp = parse_double(value, full);
    else if (key == "noise_sigma")
      cfg.hmm.noise_sigma = parse_double(value, full);
    else if (key == "train_ratio")
      cfg.split_spec.train_ratio = parse_double(value, full);
    else if (key == "val_fraction_of_train")
      cfg.split_spec.val_fraction_of_train = parse_double(value, full);
    else
      throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "train") {
    if (key == "preset")
      apply_preset(cfg, value);
    else if (key == "batch_size")
      cfg.train.batch_size = parse_size(value, full);
    else if (key == "adversary_steps")
      cfg.train.adversary_steps = parse_size(value, full);
    else if (key == "clip")
      cfg.train.clip = parse_double(value, full);
    else if (key == "l2_recurrent")
      cfg.train.l2_recurrent = parse_double(value, full);
    else if (key == "lambda")
      cfg.train.lambda = parse_double(value, full);
    else if (key == "noise_dim")
      cfg.train.noise_dim = parse_size(value, full);
    else if (key == "epochs")
      cfg.train.epochs = parse_size(value, full);
    else if (key == "attacker_epochs")
      cfg.train.attacker_epochs = parse_size(value, full);
    else if (key == "attacker_patience")
      cfg.train.attacker_patience = parse_size(value, full);
    else if (key == "lr_releaser")
      cfg.train.lr_releaser = parse_double(value, full);
    else if (key == "lr_adversary")
      cfg.train.lr_adversary = parse_double(value, full);
    else if (key == "lr_attacker")
      cfg.train.lr_attacker = parse_double(value, full);
    else if (key == "rms_decay")
      cfg.train.rms_decay = parse_double(value, full);
    else if (key == "rms_eps")
      cfg.train.rms_eps = parse_double(value, full);
    else if (key == "seed")
      cfg.train.seed = parse_u64(value, full);
    else if (key == "releaser_layers")
      cfg.train.releaser_spec.layers = parse_size(value, full);
    else if (key == "releaser_cells")
      cfg.train.releaser_spec.cells = parse_size(value, full);
    else if (key == "adversary_layers")
      cfg.train.adversary_spec.layers = parse_size(value, full);
    else if (key == "adversary_cells")
      cfg.train.adversary_spec.cells = parse_size(value, full);
    else if (key == "attacker_layers")
      cfg.train.attacker_spec.layers = parse_size(value, full);
    else if (key == "attacker_cells")
      cfg.train.attacker_spec.cells = parse_size(value, full);
    else if (key == "clip_by_norm")
      cfg.train.clip_by_norm = parse_bool(value, full);
    else if (key == "entropy_via_adversary_ce")
      cfg.train.entropy_via_adversary_ce = parse_bool(value, full);
    else if (key == "include_private_in_obs")
      cfg.train.include_private_in_obs = parse_bool(value, full);
    else if (key == "keep_best_validation")
      cfg.train.keep_best_validation = parse_bool(value, full);
    else
      throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "sweep") {
    if (key == "lambdas")
      cfg.lambdas = parse_double_list(value, full);
    else if (key == "workers")
      cfg.workers = parse_size(value, full);
    else
      throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "psd") {
    if (key == "segment")
      cfg.psd.segment_len = parse_size(value, full);
    else if (key == "overlap")
      cfg.psd.overlap_fraction = parse_double(value, full);
    else if (key == "window") {
      if (value == "hann")
        cfg.psd.window = PsdWindow::hann;
      else if (value == "rectangular")
        cfg.psd.window = PsdWindow::rectangular;
      else
        throw ConfigError("config: psd.window must be hann or rectangular, got '" + value + "'");
    } else if (key == "realizations")
      cfg.psd.n_realizations = parse_size(value, full);
    else
      throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "output") {
    if (key == "dir")
      cfg.out_dir = value;
    else
      throw ConfigError("config: unknown key '" + full + "'");
  } else {
    throw ConfigError("config: unknown section '[" + section + "]'");
  }
}

inline RunConfig parse_config_text(std::istream& is, RunConfig cfg = {}) {
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": key outside any section");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    set_config_key(cfg, section, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  return parse_config_text(is, std::move(base));
}

/// Echo of the full effective configuration, parseable by load_config.
inline void write_config(std::ostream& os, const RunConfig& cfg) {
  os << "[data]\n";
  os << "source = " << (cfg.source == DataSource::synthetic ? "synthetic" : "csv") << "\n";
  os << "task = " << (cfg.task == TaskKind::occupancy ? "occupancy" : "identity") << "\n";
  if (!cfg.csv_path.empty()) os << "csv_path = " << cfg.csv_path << "\n";
  os << "houses = " << cfg.houses << "\n";
  os << "days_per_house = " << cfg.days_per_house << "\n";
  os << "p_stay = " << format_double(cfg.hmm.p_stay) << "\n";
  os << "p_initial_occupied = " << format_double(cfg.hmm.p_initial_occupied) << "\n";
  os << "base_min = " << format_double(cfg.hmm.base_min) << "\n";
  os << "base_max = " << format_double(cfg.hmm.base_max) << "\n";
  os << "gain_min = " << format_double(cfg.hmm.gain_min) << "\n";
  os << "gain_max = " << format_double(cfg.hmm.gain_max) << "\n";
  os << "sin_amp = " << format_double(cfg.hmm.sin_amp) << "\n";
  os << "noise_sigma = " << format_double(cfg.hmm.noise_sigma) << "\n";
  os << "train_ratio = " << format_double(cfg.split_spec.train_ratio) << "\n";
  os << "val_fraction_of_train = " << format_double(cfg.split_spec.val_fraction_of_train) << "\n";
  os << "\n[train]\n";
  os << "batch_size = " << cfg.train.batch_size << "\n";
  os << "adversary_steps = " << cfg.train.adversary_steps << "\n";
  os << "clip = " << format_double(cfg.train.clip) << "\n";
  os << "l2_recurrent = " << format_double(cfg.train.l2_recurrent) << "\n";
  os << "lambda = " << format_double(cfg.train.lambda) << "\n";
  os << "noise_dim = " << cfg.train.noise_dim << "\n";
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "attacker_epochs = " << cfg.train.attacker_epochs << "\n";
  os << "attacker_patience = " << cfg.train.attacker_patience << "\n";
  os << "lr_releaser = " << format_double(cfg.train.lr_releaser) << "\n";
  os << "lr_adversary = " << format_double(cfg.train.lr_adversary) << "\n";
  os << "lr_attacker = " << format_double(cfg.train.lr_attacker) << "\n";
  os << "rms_decay = " << format_double(cfg.train.rms_decay) << "\n";
  os << "rms_eps = " << format_double(cfg.train.rms_eps) << "\n";
  os << "seed = " << cfg.train.seed << "\n";
  os << "releaser_layers = " << cfg.train.releaser_spec.layers << "\n";
  os << "releaser_cells = " << cfg.train.releaser_spec.cells << "\n";
  os << "adversary_layers = " << cfg.train.adversary_spec.layers << "\n";
  os << "adversary_cells = " << cfg.train.adversary_spec.cells << "\n";
  os << "attacker_layers = " << cfg.train.attacker_spec.layers << "\n";
  os << "attacker_cells = " << cfg.train.attacker_spec.cells << "\n";
  os << "clip_by_norm = " << (cfg.train.clip_by_norm ? "true" : "false") << "\n";
  os << "entropy_via_adversary_ce = " << (cfg.train.entropy_via_adversary_ce ? "true" : "false")
     << "\n";
  os << "include_private_in_obs = " << (cfg.train.include_private_in_obs ? "true" : "false")
     << "\n";
  os << "keep_best_validation = " << (cfg.train.keep_best_validation ? "true" : "false") << "\n";
  os << "\n[sweep]\n";
  os << "lambdas = ";
  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i)
    os << (i ? "," : "") << format_double(cfg.lambdas[i]);
  os << "\n";
  os << "workers = " << cfg.workers << "\n";
  os << "\n[psd]\n";
  os << "segment = " << cfg.psd.segment_len << "\n";
  os << "overlap = " << format_double(cfg.psd.overlap_fraction) << "\n";
  os << "window = " << (cfg.psd.window == PsdWindow::hann ? "hann" : "rectangular") << "\n";
  os << "realizations = " << cfg.psd.n_realizations << "\n";
  os << "\n[output]\n";
  os << "dir = " << cfg.out_dir << "\n";
}

inline void write_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw DataError("write_config: cannot open " + path);
  write_config(os, cfg);
}

// ---------------------------------------------------------------------------
// Data pipeline from a RunConfig: raw dataset -> split -> normalized splits.
// ---------------------------------------------------------------------------

inline Dataset load_raw_dataset(const RunConfig& cfg) {
  Dataset ds;
  if (cfg.source == DataSource::synthetic) {
    ds = generate_synthetic(cfg.houses, cfg.days_per_house, cfg.hmm, cfg.train.seed,
                            cfg.task == TaskKind::occupancy ? LabelSemantics::per_timestep
                                                            : LabelSemantics::per_sequence);
  } else {
    if (cfg.csv_path.empty()) throw ConfigError("config: data.source=csv needs data.csv_path");
    ds = load_csv(cfg.csv_path);
    ds.label_semantics = cfg.task == TaskKind::occupancy ? LabelSemantics::per_timestep
                                                         : LabelSemantics::per_sequence;
  }
  return ds;
}

struct PreparedData {
  SplitResult splits;
  Normalization normalization;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  Dataset raw = load_raw_dataset(cfg);
  SplitSpec spec = cfg.split_spec;
  spec.seed = SeededRng::derive_seed(cfg.train.seed, 0xDA7AULL);
  PreparedData out;
  out.splits = split(raw, spec);
  out.normalization =
      normalize_fit_apply(out.splits.train, {&out.splits.val, &out.splits.test});
  return out;
}

}  // namespace dipriv
