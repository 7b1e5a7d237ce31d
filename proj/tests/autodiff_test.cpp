#include <gtest/gtest.h>

#include <cmath>

#include "noisylab/autodiff.hpp"
#include "noisylab/losses.hpp"
#include "noisylab/mlp.hpp"
#include "support/gradcheck.hpp"

using namespace noisylab;

namespace {

Mlp single_layer(Tensor weight, Tensor bias) {
  std::vector<DenseLayer> layers;
  layers.push_back({std::move(weight), std::move(bias)});
  return Mlp(std::move(layers));
}

}  // namespace

TEST(Backward, ConstantLossGivesZeroGradients) {
  Mlp model({3, 4, 2}, 5);
  Graph g;
  forward(g, model, Tensor({2, 3}, 0.3));
  Var loss = g.mean(g.constant(Tensor::vector({1.0, 2.0})));
  g.backward(loss);
  for (const Tensor* p : std::as_const(model).parameters()) {
    ASSERT_TRUE(p->has_grad());
    for (double v : p->grad()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, LinearSquaredErrorMatchesHandGradient) {
  Mlp model = single_layer(Tensor::matrix(2, 3, {0.5, -1.0, 2.0, 0.1, 0.2, -0.3}), Tensor::vector({0.1, -0.2}));
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, -1, 0.5, 2});
  const Tensor target = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Graph g;
  Var pred = forward(g, model, x);
  g.backward(g.sum_squared_error(pred, target));

  // err = pred - target; dW = 2 err^T x, db = 2 sum_rows err
  const Tensor p = forward(std::as_const(model), x);
  const auto& layer = model.layers()[0];
  for (std::size_t o = 0; o < 2; ++o) {
    double db = 0.0;
    for (std::size_t r = 0; r < 2; ++r) db += 2.0 * (p.at(r, o) - target.at(r, o));
    EXPECT_NEAR(layer.bias.grad()[o], db, 1e-12);
    for (std::size_t i = 0; i < 3; ++i) {
      double dw = 0.0;
      for (std::size_t r = 0; r < 2; ++r) dw += 2.0 * (p.at(r, o) - target.at(r, o)) * x.at(r, i);
      EXPECT_NEAR(layer.weight.grad()[o * 3 + i], dw, 1e-12);
    }
  }
}

TEST(Backward, CrossEntropyAfterSoftmaxIsProbsMinusOneHot) {
  Mlp model = single_layer(Tensor::matrix(3, 2, {0.3, -0.2, 1.0, 0.5, -0.7, 0.1}), Tensor::vector({0.0, 0.2, -0.1}));
  const Tensor x = Tensor::matrix(1, 2, {0.8, -1.2});
  const std::vector<int> label{2};
  Graph g;
  Var probs = g.softmax(forward(g, model, x));
  g.backward(g.mean(g.soft_target_nll(probs, one_hot(label, 3))));
  const Tensor p = softmax(forward(std::as_const(model), x));
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(model.layers()[0].bias.grad()[c], p[c] - (c == 2 ? 1.0 : 0.0), 1e-12);
  }
}

TEST(Backward, SecondCallIsRejected) {
  Mlp model({2, 2}, 1);
  Graph g;
  Var loss = g.mean(g.soft_target_nll(g.softmax(forward(g, model, Tensor({1, 2}, 1.0))),
                                      Tensor::matrix(1, 2, {1, 0})));
  g.backward(loss);
  EXPECT_THROW(g.backward(loss), std::logic_error);
}

TEST(Backward, NonScalarLossIsRejected) {
  Graph g;
  Var v = g.constant(Tensor::vector({1.0, 2.0}));
  EXPECT_THROW(g.backward(v), std::invalid_argument);
}

class FiniteDifference : public ::testing::TestWithParam<gradcheck::Objective> {};

TEST_P(FiniteDifference, HundredRandomInstances) {
  const auto objective = GetParam();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const double err = gradcheck::random_instance_error(objective, seed * 1000 + static_cast<int>(objective));
    worst = std::max(worst, err);
    EXPECT_LT(err, 1e-4) << gradcheck::name(objective) << " seed " << seed;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

INSTANTIATE_TEST_SUITE_P(AllObjectives, FiniteDifference,
                         ::testing::ValuesIn(gradcheck::all_objectives()),
                         [](const auto& info) { return gradcheck::name(info.param); });
