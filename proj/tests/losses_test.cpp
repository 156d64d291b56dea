#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "xfdd/errors.hpp"
#include "xfdd/losses.hpp"
#include "xfdd/nn.hpp"

namespace xfdd {
namespace {

using oracle::naive_reconstruction;
using oracle::naive_cross_entropy;
using oracle::naive_l2;
using testing::random_labels;
using testing::random_matrix;
using testing::random_probs;

TEST(ReconstructionLoss, Examples) {
  const Matrix x{{1.0, 0.0}};
  EXPECT_EQ(reconstruction_loss(x, x), 0.0);
  EXPECT_DOUBLE_EQ(reconstruction_loss(x, Matrix{{0.0, 0.0}}), 0.5);
  EXPECT_THROW(reconstruction_loss(x, Matrix(1, 3)), ShapeError);
}

TEST(ReconstructionLoss, MatchesScalarOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = dim(rng) + (t == 0 ? 30 : 0);
    const std::size_t d = dim(rng);
    const Matrix x = random_matrix(n, d, rng);
    const Matrix xh = random_matrix(n, d, rng);
    EXPECT_NEAR(reconstruction_loss(x, xh), naive_reconstruction(x, xh), 1e-12);
  }
}

TEST(CrossEntropy, Examples) {
  const Matrix y{{0.0, 1.0}, {1.0, 0.0}};
  EXPECT_EQ(softmax_cross_entropy(y, y), 0.0);
  const Matrix half{{0.5, 0.5}, {0.5, 0.5}};
  EXPECT_NEAR(softmax_cross_entropy(half, y), std::log(2.0), 1e-15);
  // Confident wrong prediction is clamped, not infinite.
  const Matrix wrong{{1.0, 0.0}};
  EXPECT_NEAR(softmax_cross_entropy(wrong, Matrix{{0.0, 1.0}}), -std::log(1e-12), 1e-9);
}

TEST(CrossEntropy, RejectsNonOneHotTargets) {
  const Matrix p{{0.5, 0.5}};
  EXPECT_THROW(softmax_cross_entropy(p, Matrix{{0.5, 0.5}}), LabelError);
  EXPECT_THROW(softmax_cross_entropy(p, Matrix{{1.0, 1.0}}), LabelError);
  EXPECT_THROW(softmax_cross_entropy(p, Matrix{{0.0, 0.0}}), LabelError);
  EXPECT_THROW(one_hot(std::vector<int>{0, 2}, 2), LabelError);
}

TEST(CrossEntropy, MatchesScalarOracle) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> dim(1, 50);
  std::uniform_int_distribution<std::size_t> classes(2, 20);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = dim(rng);
    const std::size_t m = classes(rng);
    const Matrix p = random_probs(n, m, rng);
    const auto y = random_labels(n, m, rng);
    EXPECT_NEAR(softmax_cross_entropy(p, one_hot(y, m)), naive_cross_entropy(p, y, 1.0), 1e-12);
  }
}

TEST(WeightedCrossEntropy, Examples) {
  const Matrix p{{0.5, 0.5}};
  EXPECT_NEAR(weighted_binary_cross_entropy(p, Matrix{{1.0, 0.0}}, 2.0), 2.0 * std::log(2.0),
              1e-15);
  std::mt19937_64 rng(3);
  const Matrix pr = random_probs(9, 2, rng);
  const Matrix y = one_hot(random_labels(9, 2, rng), 2);
  EXPECT_EQ(weighted_binary_cross_entropy(pr, y, 1.0), softmax_cross_entropy(pr, y));
  EXPECT_THROW(weighted_binary_cross_entropy(random_probs(3, 3, rng),
                                             one_hot(std::vector<int>{0, 1, 2}, 3), 2.0),
               ConfigError);
}

TEST(WeightedCrossEntropy, MatchesScalarOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> dim(1, 50);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = dim(rng);
    const Matrix p = random_probs(n, 2, rng);
    const auto y = random_labels(n, 2, rng);
    EXPECT_NEAR(weighted_binary_cross_entropy(p, one_hot(y, 2), 3.0), naive_cross_entropy(p, y, 3.0),
                1e-12);
  }
}

TEST(WeightedCrossEntropy, NondecreasingInDelta) {
  std::mt19937_64 rng(5);
  const Matrix p = random_probs(12, 2, rng);
  const Matrix y = one_hot(random_labels(12, 2, rng), 2);
  double prev = 0.0;
  for (double delta : {0.25, 0.5, 1.0, 2.0, 4.0, 16.0}) {
    const double v = weighted_binary_cross_entropy(p, y, delta);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(L2Penalty, Examples) {
  auto m = init_model(NetworkSpec::mirrored(1, {1}, 2, 0));
  m.params.for_each([](const std::string&, DenseLayer& l) {
    std::fill(l.weights.data().begin(), l.weights.data().end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 3.0);
  });
  EXPECT_EQ(l2_penalty(m.params), 0.0);
  m.params.encoder[0].weights(0, 0) = 2.0;
  EXPECT_EQ(l2_penalty(m.params), 4.0);
}

TEST(L2Penalty, MatchesScalarOracle) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  for (int t = 0; t < 50; ++t) {
    const auto spec = NetworkSpec::mirrored(dim(rng), {dim(rng), dim(rng)}, 2 + dim(rng) % 5, t);
    const auto m = testing::random_model(spec, rng);
    EXPECT_NEAR(l2_penalty(m.params), naive_l2(m), 1e-12 * std::max(1.0, naive_l2(m)));
  }
}

TEST(CompositeLoss, ReconstructionOnlyIsTwiceTheHalfMeanSquare) {
  std::mt19937_64 rng(7);
  const auto m = testing::random_model(NetworkSpec::mirrored(5, {3}, 2, 0), rng);
  const Matrix x = random_matrix(8, 5, rng);
  const auto cache = forward(m, x);
  const Matrix y = one_hot(random_labels(8, 2, rng), 2);
  const auto loss = composite_loss(m, x, cache, y, {1.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(loss.total, 2.0 * reconstruction_loss(x, cache.reconstruction()), 1e-12);
  const auto loss3 = composite_loss(m, x, cache, y, {3.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(loss3.total, 3.0 * 2.0 * reconstruction_loss(x, cache.reconstruction()), 1e-12);
}

TEST(CompositeLoss, PerfectClassificationIsZero) {
  auto m = init_model(NetworkSpec::mirrored(2, {2}, 2, 0));
  m.params.classifier.weights = Matrix(2, 2);
  m.params.classifier.bias = {50.0, -50.0};
  const Matrix x{{0.1, 0.2}, {0.3, 0.4}};
  const auto loss = composite_loss(m, x, forward(m, x), Matrix{{1.0, 0.0}, {1.0, 0.0}},
                                   {0.0, 1.0, 0.0, 1.0});
  EXPECT_NEAR(loss.total, 0.0, 1e-20);
}

TEST(CompositeLoss, TermsAddUpAndMatchOracles) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto m = testing::random_model(NetworkSpec::mirrored(6, {4, 3}, 2, t), rng);
    const Matrix x = random_matrix(10, 6, rng);
    const auto y = random_labels(10, 2, rng);
    const auto cache = forward(m, x);
    const CompositeLossConfig cfg{0.3, 1.7, 0.05, 2.5};
    const auto loss = composite_loss(m, x, cache, one_hot(y, 2), cfg);
    EXPECT_NEAR(loss.recon + loss.cls + loss.l2, loss.total, 1e-12);
    EXPECT_NEAR(loss.recon, 0.3 * 2.0 * naive_reconstruction(x, cache.reconstruction()), 1e-12);
    EXPECT_NEAR(loss.cls, 1.7 * naive_cross_entropy(cache.probs, y, 2.5), 1e-12);
    EXPECT_NEAR(loss.l2, 0.05 * naive_l2(m) / 10.0, 1e-12);
    EXPECT_GE(loss.recon, 0.0);
    EXPECT_GE(loss.cls, 0.0);
    EXPECT_GE(loss.l2, 0.0);
  }
}

TEST(CompositeLoss, PermutationInvariant) {
  std::mt19937_64 rng(9);
  const auto m = testing::random_model(NetworkSpec::mirrored(4, {3}, 3, 0), rng);
  const Matrix x = random_matrix(9, 4, rng);
  const auto y = random_labels(9, 3, rng);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const Matrix xp = x.select_rows(perm);
  std::vector<int> yp;
  for (auto i : perm) yp.push_back(y[i]);
  const CompositeLossConfig cfg{0.5, 1.0, 0.1, 1.0};
  const auto a = composite_loss(m, x, forward(m, x), one_hot(y, 3), cfg);
  const auto b = composite_loss(m, xp, forward(m, xp), one_hot(yp, 3), cfg);
  EXPECT_NEAR(a.total, b.total, 1e-12);
}

TEST(CompositeLoss, RejectsBadWeights) {
  EXPECT_THROW((CompositeLossConfig{-1.0, 1.0, 0.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((CompositeLossConfig{1.0, 1.0, 0.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((CompositeLossConfig{1.0, std::nan(""), 0.0, 1.0}.validate()), ConfigError);
  std::mt19937_64 rng(10);
  const auto m = testing::random_model(NetworkSpec::mirrored(4, {3}, 3, 0), rng);
  const Matrix x = random_matrix(3, 4, rng);
  EXPECT_THROW(composite_loss(m, x, forward(m, x), one_hot(std::vector<int>{0, 1, 2}, 3),
                              {1.0, 1.0, 0.0, 2.0}),
               ConfigError);
}

}  // namespace
}  // namespace xfdd
