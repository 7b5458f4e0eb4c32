#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "eftlab/adam.hpp"
#include "eftlab/network.hpp"
#include "eftlab/rng.hpp"
#include "testutil.hpp"

using namespace eftlab;

TEST(SeededRng, SameSeedSameSequence) {
  SeededRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
  SeededRng c(42), d(43);
  bool differs = false;
  for (int i = 0; i < 10 && !differs; ++i) differs = c.next_u64() != d.next_u64();
  EXPECT_TRUE(differs);
}

TEST(SeededRng, GaussianMoments) {
  SeededRng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = rng.gaussian();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(DenseNetwork, ZeroNetworkGivesTanhZero) {
  DenseNetwork net({3, 4, 2}, Activation::kRelu, Activation::kTanh);
  auto out = net.forward(std::vector<double>{0.3, -0.2, 0.9});
  EXPECT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(DenseNetwork, SingleAffineLayer) {
  DenseNetwork net({1, 1}, Activation::kRelu, Activation::kIdentity);
  net.params()[0] = 2.0;  // W
  net.params()[1] = 1.0;  // b
  auto out = net.forward(std::vector<double>{3.0});
  EXPECT_DOUBLE_EQ(out[0], 7.0);
}

TEST(DenseNetwork, TanhOutputInOpenUnitInterval) {
  SeededRng rng(3);
  auto net = DenseNetwork::random_init({4, 8, 8, 2}, Activation::kRelu,
                                       Activation::kTanh, rng);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-5.0, 5.0);
    for (double o : net.forward(x)) {
      EXPECT_GT(o, -1.0);
      EXPECT_LT(o, 1.0);
    }
  }
}

// Independent straight-line re-evaluation of the same parameters.
TEST(DenseNetwork, ForwardMatchesIndependentReEvaluation) {
  SeededRng rng(11);
  const std::vector<int> sizes = {4, 8, 8, 2};
  auto net = DenseNetwork::random_init(sizes, Activation::kRelu,
                                       Activation::kTanh, rng);
  std::vector<double> x = {0.25, -0.5, 0.75, -1.0};

  std::vector<double> cur = x;
  auto params = net.params();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in_n = sizes[l], out_n = sizes[l + 1];
    std::vector<double> next(out_n);
    for (int i = 0; i < out_n; ++i) {
      double z = params[off + static_cast<std::size_t>(out_n) * in_n + i];
      for (int j = 0; j < in_n; ++j)
        z += params[off + static_cast<std::size_t>(i) * in_n + j] * cur[j];
      next[i] = (l + 2 < sizes.size()) ? std::max(z, 0.0) : std::tanh(z);
    }
    off += static_cast<std::size_t>(out_n) * in_n + out_n;
    cur = std::move(next);
  }

  auto out = net.forward(x);
  ASSERT_EQ(out.size(), cur.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    EXPECT_NEAR(out[i], cur[i], 1e-12);
}

TEST(DenseNetwork, ForwardRejectsWrongInputSize) {
  DenseNetwork net({3, 2}, Activation::kRelu, Activation::kIdentity);
  EXPECT_THROW(net.forward(std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(DenseNetwork, ZeroOutputGradGivesZeroGradients) {
  SeededRng rng(5);
  auto net = DenseNetwork::random_init({3, 5, 2}, Activation::kRelu,
                                       Activation::kTanh, rng);
  auto [pg, ig] = net.backward(std::vector<double>{0.1, 0.2, 0.3},
                               std::vector<double>{0.0, 0.0});
  for (double g : pg) EXPECT_EQ(g, 0.0);
  for (double g : ig) EXPECT_EQ(g, 0.0);
}

TEST(DenseNetwork, BackwardMatchesFiniteDifferences) {
  SeededRng rng(123);
  for (int probe = 0; probe < 5; ++probe) {
    std::vector<double> x;
    auto net = testutil::random_network_away_from_kinks(
        {4, 8, 6, 2}, Activation::kTanh, rng, x);
    std::vector<double> gout = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    auto [pg, ig] = net.backward(x, gout);

    auto scalar = [&](const std::vector<double>& params) {
      DenseNetwork copy = net;
      std::copy(params.begin(), params.end(), copy.params().begin());
      auto out = copy.forward(x);
      return out[0] * gout[0] + out[1] * gout[1];
    };
    std::vector<double> p(net.params().begin(), net.params().end());
    for (std::size_t k = 0; k < p.size(); k += 7) {
      double fd = testutil::central_diff(scalar, p, k);
      EXPECT_LE(testutil::relative_error(pg[k], fd), 1e-5)
          << "param " << k << " probe " << probe;
    }
    auto scalar_x = [&](const std::vector<double>& input) {
      auto out = net.forward(input);
      return out[0] * gout[0] + out[1] * gout[1];
    };
    for (std::size_t k = 0; k < x.size(); ++k) {
      double fd = testutil::central_diff(scalar_x, x, k);
      EXPECT_LE(testutil::relative_error(ig[k], fd), 1e-5)
          << "input " << k << " probe " << probe;
    }
  }
}

TEST(DenseNetwork, BackwardDoesNotMutateNetwork) {
  SeededRng rng(9);
  auto net = DenseNetwork::random_init({3, 4, 1}, Activation::kRelu,
                                       Activation::kIdentity, rng);
  std::vector<double> before(net.params().begin(), net.params().end());
  (void)net.backward(std::vector<double>{0.5, -0.5, 0.2},
                     std::vector<double>{1.0});
  std::vector<double> after(net.params().begin(), net.params().end());
  EXPECT_EQ(before, after);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  std::vector<double> params = {1.0, -2.0, 3.0};
  std::vector<double> grads = {0.0, 0.0, 0.0};
  AdamState state(params.size(), 1e-3);
  adam_step(params, grads, state);
  EXPECT_EQ(params, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(state.step_count, 1);
}

// First bias-corrected step moves by ~lr*sign(g).
TEST(Adam, FirstStepIsLearningRateSized) {
  std::vector<double> params = {0.5};
  std::vector<double> grads = {2.0};
  AdamState state(1, 1e-3);
  adam_step(params, grads, state);
  const double step = 1e-3 * 2.0 / (2.0 + 1e-8);
  EXPECT_NEAR(params[0], 0.5 - step, 1e-15);
}

TEST(Adam, DeterministicAcrossIdenticalStates) {
  std::vector<double> p1 = {0.1, 0.2}, p2 = {0.1, 0.2};
  std::vector<double> g = {0.3, -0.4};
  AdamState s1(2, 1e-2), s2(2, 1e-2);
  for (int i = 0; i < 10; ++i) {
    adam_step(p1, g, s1);
    adam_step(p2, g, s2);
  }
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(s1.first_moment, s2.first_moment);
}

TEST(Adam, RejectsNonFiniteGradients) {
  std::vector<double> params = {1.0};
  std::vector<double> grads = {std::nan("")};
  AdamState state(1);
  EXPECT_THROW(adam_step(params, grads, state), NonFiniteError);
}

TEST(SoftUpdate, TauOneCopiesSource) {
  SeededRng rng(1);
  auto src = DenseNetwork::random_init({2, 3, 1}, Activation::kRelu,
                                       Activation::kIdentity, rng);
  auto dst = DenseNetwork::random_init({2, 3, 1}, Activation::kRelu,
                                       Activation::kIdentity, rng);
  soft_update(dst, src, 1.0);
  for (std::size_t i = 0; i < src.param_count(); ++i)
    EXPECT_EQ(dst.params()[i], src.params()[i]);
}

TEST(SoftUpdate, HalfwayBlend) {
  DenseNetwork src({1, 1}, Activation::kRelu, Activation::kIdentity);
  DenseNetwork dst({1, 1}, Activation::kRelu, Activation::kIdentity);
  for (auto& p : src.params()) p = 2.0;
  soft_update(dst, src, 0.5);
  for (double p : dst.params()) EXPECT_DOUBLE_EQ(p, 1.0);
}

// Two tau-updates against a fixed source equal one update with 1-(1-tau)^2.
TEST(SoftUpdate, TwoSmallStepsComposeAlgebraically) {
  SeededRng rng(2);
  auto src = DenseNetwork::random_init({3, 4, 2}, Activation::kRelu,
                                       Activation::kTanh, rng);
  auto a = DenseNetwork::random_init({3, 4, 2}, Activation::kRelu,
                                     Activation::kTanh, rng);
  auto b = a;
  const double tau = 1e-3;
  soft_update(a, src, tau);
  soft_update(a, src, tau);
  soft_update(b, src, 1.0 - (1.0 - tau) * (1.0 - tau));
  for (std::size_t i = 0; i < a.param_count(); ++i)
    EXPECT_NEAR(a.params()[i], b.params()[i], 1e-15);
}

TEST(SoftUpdate, RejectsArchitectureMismatch) {
  DenseNetwork a({2, 2}, Activation::kRelu, Activation::kIdentity);
  DenseNetwork b({2, 3}, Activation::kRelu, Activation::kIdentity);
  EXPECT_THROW(soft_update(a, b, 0.5), ShapeError);
}
