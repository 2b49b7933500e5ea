#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/lstm.hpp"
#include "dipriv/rng.hpp"
#include "dipriv/serialize.hpp"

namespace dipriv {

/// Sanitizing network: observation (plus seed noise) in, release out.
/// Linear head; z_t depends only on observations and noise up to t.
struct Releaser {
  StackedNet net;
  std::size_t noise_dim = 0;

  std::size_t obs_dim() const { return net.input_dim() - noise_dim; }
};

/// Per-step classifier over the sensitive alphabet; softmax head.
struct Adversary {
  StackedNet net;
  std::size_t alphabet = 2;
};

/// The post-hoc evaluation network. Structurally an Adversary; trained
/// separately, after the releaser is frozen, from its own initialization.
using Attacker = Adversary;

/// Seed noise: u_t ~ U[0,1)^m, i.i.d. across time and batch.
inline std::vector<Matrix> draw_noise(SeededRng& rng, std::size_t seq_len, std::size_t noise_dim,
                                      std::size_t batch) {
  std::vector<Matrix> u;
  u.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) u.push_back(draw_uniform(rng, noise_dim, batch));
  return u;
}

/// Stacks observation and noise into the releaser's per-step input.
inline std::vector<Matrix> concat_obs_noise(const std::vector<Matrix>& w_seq,
                                            const std::vector<Matrix>& u_seq) {
  if (w_seq.size() != u_seq.size()) throw ShapeError("concat_obs_noise: lengths differ");
  std::vector<Matrix> inputs;
  inputs.reserve(w_seq.size());
  for (std::size_t t = 0; t < w_seq.size(); ++t) inputs.push_back(vstack(w_seq[t], u_seq[t]));
  return inputs;
}

struct ReleaseResult {
  std::vector<Matrix> z;  // out_dim x batch per step
  std::vector<Matrix> u;  // noise actually used, kept for reproducibility
};

/// Runs the mechanism over a sequence: draws fresh noise, feeds (w_t, u_t)
/// through the network. With noise_dim = 0 the mechanism is deterministic.
inline ReleaseResult release(const Releaser& releaser, const std::vector<Matrix>& w_seq,
                             SeededRng& rng) {
  if (w_seq.empty()) throw ShapeError("release: empty sequence");
  if (w_seq.front().rows() != releaser.obs_dim())
    throw ShapeError("release: observation dim mismatch");
  ReleaseResult res;
  res.u = draw_noise(rng, w_seq.size(), releaser.noise_dim, w_seq.front().cols());
  res.z = net_forward(releaser.net, concat_obs_noise(w_seq, res.u)).outputs;
  return res;
}

// ---------------------------------------------------------------------------
// Mechanism bundle: everything needed to run a trained releaser on raw data.
// ---------------------------------------------------------------------------

struct MechanismBundle {
  Releaser releaser;
  std::size_t alphabet = 2;
  double y_min = 0.0;  // min-max constants fitted on the training split
  double y_max = 1.0;
};

inline void save_bundle(const std::string& path, const MechanismBundle& bundle) {
  std::ofstream os(path);
  if (!os) throw DataError("save_bundle: cannot open " + path);
  os << "dipriv-bundle v1\n";
  os << "noise_dim " << bundle.releaser.noise_dim << "\n";
  os << "alphabet " << bundle.alphabet << "\n";
  os << "y_min " << format_double(bundle.y_min) << "\n";
  os << "y_max " << format_double(bundle.y_max) << "\n";
  save_net(os, bundle.releaser.net);
  if (!os) throw DataError("save_bundle: write failed for " + path);
}

inline MechanismBundle load_bundle(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("load_bundle: cannot open " + path);
  detail::expect_token(is, "dipriv-bundle");
  detail::expect_token(is, "v1");
  MechanismBundle bundle;
  detail::expect_token(is, "noise_dim");
  bundle.releaser.noise_dim = detail::next_size(is, "noise_dim");
  detail::expect_token(is, "alphabet");
  bundle.alphabet = detail::next_size(is, "alphabet");
  detail::expect_token(is, "y_min");
  if (!(is >> bundle.y_min)) throw DataError("bundle: bad y_min");
  detail::expect_token(is, "y_max");
  if (!(is >> bundle.y_max)) throw DataError("bundle: bad y_max");
  bundle.releaser.net = load_net(is);
  if (bundle.releaser.net.input_dim() < bundle.releaser.noise_dim)
    throw DataError("bundle: noise_dim exceeds network input dim");
  return bundle;
}

}  // namespace dipriv
