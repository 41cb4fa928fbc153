#include <gtest/gtest.h>

#include <cmath>

#include "gradcases.hpp"
#include "t3s/ops.hpp"
#include "t3s/tensor.hpp"

using namespace t3s;
using t3s::testing::random_tensor;

TEST(Ops, AddElementwise) {
  const Tensor y = add(Tensor::vector({1, 2}), Tensor::vector({3, 4}));
  EXPECT_EQ(y.to_vector(), (std::vector<double>{4, 6}));
}

TEST(Ops, SoftmaxOfZerosIsUniform) {
  const Tensor y = softmax(Tensor::vector({0, 0, 0}), 0);
  for (double v : y.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Ops, MeanOfTwoByTwo) { EXPECT_DOUBLE_EQ(mean(Tensor({2, 2}, {1, 2, 3, 4})).item(), 2.5); }

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
  try {
    add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(2, 3)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(3, 2)"), std::string::npos) << msg;
  }
}

TEST(Ops, UnknownOpRejected) { EXPECT_THROW(forward_op("frobnicate", {Tensor::scalar(1)}), Error); }

TEST(Ops, ForwardOpMatchesDirectCall) {
  Rng rng(3);
  const Tensor a = random_tensor({2, 3}, rng), b = random_tensor({3, 2}, rng);
  EXPECT_EQ(forward_op("matmul", {a, b}).to_vector(), matmul(a, b).to_vector());
  OpAttrs attrs;
  attrs.axes = {1};
  EXPECT_EQ(forward_op("sum", {a}, attrs).to_vector(), sum(a, {1}).to_vector());
}

TEST(Ops, ForwardIsBitDeterministic) {
  Rng rng(5);
  const Tensor x = random_tensor({2, 6, 6}, rng), w = random_tensor({3, 2, 3, 3}, rng);
  EXPECT_EQ(conv2d(x, w).to_vector(), conv2d(x, w).to_vector());
  EXPECT_EQ(softmax(x, 0).to_vector(), softmax(x, 0).to_vector());
}

// Direct loop oracle for a 3x3 same-padded convolution.
TEST(Ops, Conv2dMatchesLoopOracle) {
  Rng rng(11);
  const std::size_t cin = 2, cout = 3, h = 5, w = 4;
  const Tensor x = random_tensor({cin, h, w}, rng), k = random_tensor({cout, cin, 3, 3}, rng);
  const Tensor y = conv2d(x, k);
  ASSERT_EQ(y.shape(), (Shape{cout, h, w}));
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < cin; ++i)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int rr = static_cast<int>(r) + dy, cc = static_cast<int>(c) + dx;
              if (rr < 0 || cc < 0 || rr >= static_cast<int>(h) || cc >= static_cast<int>(w)) continue;
              acc += x.at((i * h + rr) * w + cc) * k.at(((o * cin + i) * 3 + (dy + 1)) * 3 + (dx + 1));
            }
        EXPECT_NEAR(y.at((o * h + r) * w + c), acc, 1e-12);
      }
}

TEST(Ops, UpsampleOfConstantIsConstant) {
  const Tensor y = upsample2(Tensor::full({1, 3, 2}, 4.0));
  EXPECT_EQ(y.shape(), (Shape{1, 6, 4}));
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(Ops, AvgPoolAveragesBlocks) {
  const Tensor y = avg_pool2(Tensor({1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(y.to_vector(), (std::vector<double>{3.5, 5.5}));
}

TEST(Ops, LogSoftmaxIsStableForLargeLogits) {
  const Tensor y = log_softmax(Tensor::vector({1000.0, 0.0}), 0);
  EXPECT_NEAR(y.at(0), 0.0, 1e-12);
  EXPECT_NEAR(y.at(1), -1000.0, 1e-9);
}

TEST(Ops, NonFiniteResultRaisesNumericError) {
  EXPECT_THROW(log(Tensor::vector({-1.0})), NumericError);
}

TEST(Backward, SumGradientIsOnes) {
  Tensor x = Tensor::vector({1, 2, 3}, true);
  backward(sum(x));
  EXPECT_EQ(x.grad_tensor().to_vector(), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SumOfSquaresGradientIsTwoX) {
  Tensor x = Tensor::vector({1, 2, 3}, true);
  backward(sum(mul(x, x)));
  EXPECT_EQ(x.grad_tensor().to_vector(), (std::vector<double>{2, 4, 6}));
}

TEST(Backward, MeanGradientIsUniform) {
  Tensor x = Tensor::vector({5, 6, 7, 8}, true);
  backward(mean(x));
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(Backward, NonScalarLossRejected) {
  Tensor x = Tensor::vector({1, 2}, true);
  EXPECT_THROW(backward(mul(x, x)), ShapeError);
}

TEST(Backward, DetachedLossFlagsAndLeavesNoGradient) {
  Tensor x = Tensor::vector({1, 2});
  const BackwardResult r = backward(sum(x));
  EXPECT_TRUE(r.detached);
  EXPECT_FALSE(x.has_grad());
  const Tensor g0 = x.grad_tensor();
  for (double g : g0.data()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  // y = x*x + x*x reuses x along four paths; dy/dx = 4x.
  Tensor x = Tensor::vector({1.5, -2.0}, true);
  const Tensor sq = mul(x, x);
  backward(sum(add(sq, sq)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -8.0);
}

// Two algebraically equal constructions must give the same gradient.
TEST(Backward, EquivalentGraphsAgree) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x0 = random_tensor({3, 4}, rng);
    const Tensor w = random_tensor({4, 2}, rng);
    Tensor a = x0.clone_leaf(true), b = x0.clone_leaf(true);
    // sum(x W) * 2  versus  sum(x W + x W)
    backward(mul(sum(matmul(a, w)), Tensor::scalar(2.0)));
    const Tensor xw = matmul(b, w);
    backward(sum(add(xw, xw)));
    for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.grad()[i], b.grad()[i], 1e-12);
  }
}

TEST(Backward, NoGradGuardBuildsNoGraph) {
  Tensor x = Tensor::vector({1, 2}, true);
  Tensor y;
  {
    NoGradGuard g;
    EXPECT_FALSE(grad_enabled());
    y = sum(mul(x, x));
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(Graph::trace(y).empty());
}

TEST(Backward, GraphTraceListsOps) {
  Tensor x = Tensor::vector({1, 2}, true);
  const Graph g = Graph::trace(sum(exp(x)));
  ASSERT_EQ(g.entries().size(), 2u);
  EXPECT_EQ(g.entries()[0].op, "exp");
  EXPECT_EQ(g.entries()[1].op, "sum");
}

TEST(GradCheck, SumOfSquaresIsExactToRounding) {
  const double err = grad_check([](const Tensor& x) { return sum(mul(x, x)); }, Tensor::vector({1, -1}));
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
  const double err = grad_check([](const Tensor& x) { return mul(sum(x), Tensor::scalar(0.0)); },
                                Tensor::vector({3, 4}));
  EXPECT_EQ(err, 0.0);
}

TEST(GradCheck, NonFiniteProbeNamesCoordinate) {
  try {
    // log(x) at x = (1, 5e-5): the probe at 5e-5 - 1e-4 leaves the domain.
    grad_check([](const Tensor& x) { return sum(log(x)); }, Tensor::vector({1.0, 5e-5}));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos) << e.what();
  }
}

TEST(GradCheck, EveryPrimitiveAtTenRandomPoints) {
  Rng rng(derive_seed(2024, "gradcheck-unit"));
  for (const auto& c : t3s::testing::primitive_cases()) {
    for (int p = 0; p < 10; ++p) EXPECT_LT(c.check(rng), 1e-4) << c.name << " point " << p;
  }
}

TEST(GradCheck, EveryRegisteredOpHasACase) {
  const auto cases = t3s::testing::primitive_cases();
  for (auto name : op_names()) {
    bool found = false;
    for (const auto& c : cases) found |= c.name.rfind(std::string(name), 0) == 0;
    EXPECT_TRUE(found) << name;
  }
}
