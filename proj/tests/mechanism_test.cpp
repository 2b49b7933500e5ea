#include "dipriv/mechanism.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "dipriv/gradcheck.hpp"
#include "dipriv/losses.hpp"

namespace dipriv {
namespace {

Releaser make_test_releaser(std::size_t obs_dim, std::size_t noise_dim, std::uint64_t seed) {
  SeededRng rng(seed);
  Releaser r;
  r.noise_dim = noise_dim;
  r.net = make_net(obs_dim + noise_dim, 6, 2, 1, HeadKind::linear, rng);
  return r;
}

std::vector<Matrix> random_obs(std::size_t seq_len, std::size_t batch, SeededRng& rng) {
  std::vector<Matrix> w;
  for (std::size_t t = 0; t < seq_len; ++t) {
    Matrix m(1, batch);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_double();
    w.push_back(std::move(m));
  }
  return w;
}

TEST(Release, DeterministicWithoutNoise) {
  const Releaser r = make_test_releaser(1, 0, 60);
  SeededRng data_rng(61);
  const std::vector<Matrix> w = random_obs(5, 2, data_rng);
  SeededRng rng1(1), rng2(99);
  const ReleaseResult a = release(r, w, rng1);
  const ReleaseResult b = release(r, w, rng2);
  ASSERT_EQ(a.z.size(), b.z.size());
  for (std::size_t t = 0; t < a.z.size(); ++t) EXPECT_EQ(a.z[t], b.z[t]);
}

TEST(Release, FixedSeedReproducesNoiseAndRelease) {
  const Releaser r = make_test_releaser(1, 3, 62);
  SeededRng data_rng(63);
  const std::vector<Matrix> w = random_obs(6, 3, data_rng);
  SeededRng rng1(7), rng2(7);
  const ReleaseResult a = release(r, w, rng1);
  const ReleaseResult b = release(r, w, rng2);
  for (std::size_t t = 0; t < a.z.size(); ++t) {
    EXPECT_EQ(a.z[t], b.z[t]);
    EXPECT_EQ(a.u[t], b.u[t]);
  }
}

TEST(Release, CausalityUnderObservationPerturbation) {
  const Releaser r = make_test_releaser(1, 2, 64);
  SeededRng data_rng(65);
  std::vector<Matrix> w = random_obs(12, 2, data_rng);
  SeededRng rng1(5), rng2(5);
  const ReleaseResult base = release(r, w, rng1);
  w[10](0, 1) += 0.2;  // perturb t=10
  const ReleaseResult pert = release(r, w, rng2);
  for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(base.z[t], pert.z[t]);
  EXPECT_NE(base.z[10], pert.z[10]);
}

TEST(Release, NoiseUniformRange) {
  const Releaser r = make_test_releaser(1, 4, 66);
  SeededRng data_rng(67);
  const std::vector<Matrix> w = random_obs(8, 5, data_rng);
  SeededRng rng(3);
  const ReleaseResult res = release(r, w, rng);
  for (const Matrix& u : res.u) {
    ASSERT_EQ(u.rows(), 4u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      EXPECT_GE(u.data()[i], 0.0);
      EXPECT_LT(u.data()[i], 1.0);
    }
  }
}

TEST(Release, ObservationDimMismatchThrows) {
  const Releaser r = make_test_releaser(1, 2, 68);
  std::vector<Matrix> wrong{Matrix(3, 2)};
  SeededRng rng(1);
  EXPECT_THROW(release(r, wrong, rng), ShapeError);
}

TEST(ReleaserGradients, FlowThroughFrozenAdversary) {
  // End-to-end: distortion + entropy-through-adversary, differentiated w.r.t.
  // releaser parameters against central differences.
  SeededRng rng(69);
  Releaser releaser;
  releaser.noise_dim = 2;
  releaser.net = make_net(3, 5, 2, 1, HeadKind::linear, rng);
  Adversary adversary;
  adversary.alphabet = 2;
  adversary.net = make_net(1, 4, 1, 2, HeadKind::softmax, rng);

  SeededRng data_rng(70);
  const std::vector<Matrix> w = random_obs(4, 3, data_rng);
  SeededRng noise_rng(71);
  const std::vector<Matrix> u = draw_noise(noise_rng, 4, 2, 3);
  const std::vector<Matrix> inputs = concat_obs_noise(w, u);
  const double lambda = 1.3;

  // Loss over releaser outputs; the adversary is folded into the probe.
  LossProbe probe;
  probe.value = [&](const std::vector<Matrix>& z) {
    const ForwardTape adv = net_forward(adversary.net, z);
    return releaser_loss(z, w, adv.outputs, lambda);
  };
  probe.grad = [&](const std::vector<Matrix>& z) {
    const ForwardTape adv = net_forward(adversary.net, z);
    std::vector<Matrix> dpred = conditional_entropy_grad(adv.outputs);
    for (Matrix& m : dpred)
      for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= -lambda;
    const BackwardResult adv_back = net_backward(adversary.net, adv, dpred);
    std::vector<Matrix> dz = distortion_grad(z, w);
    for (std::size_t t = 0; t < dz.size(); ++t) add_in_place(dz[t], adv_back.d_inputs[t]);
    return dz;
  };

  EXPECT_LT(grad_check(releaser.net, inputs, probe, 1e-5, 250, 42), 1e-4);
}

TEST(Bundle, RoundTrip) {
  MechanismBundle bundle;
  bundle.releaser = make_test_releaser(1, 3, 72);
  bundle.alphabet = 5;
  bundle.y_min = 0.125;
  bundle.y_max = 2.75;
  const std::string path = std::string(::testing::TempDir()) + "bundle_roundtrip.txt";
  save_bundle(path, bundle);
  const MechanismBundle loaded = load_bundle(path);
  EXPECT_EQ(loaded.releaser.noise_dim, 3u);
  EXPECT_EQ(loaded.alphabet, 5u);
  EXPECT_EQ(loaded.y_min, 0.125);
  EXPECT_EQ(loaded.y_max, 2.75);
  EXPECT_EQ(loaded.releaser.net.flatten(), bundle.releaser.net.flatten());
  std::remove(path.c_str());
}

TEST(Bundle, MissingFileThrows) {
  EXPECT_THROW(load_bundle("/nonexistent/bundle.txt"), DataError);
}

}  // namespace
}  // namespace dipriv
