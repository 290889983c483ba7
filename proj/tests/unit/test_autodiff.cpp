#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace streamtf;
using testutil::random_tensor;

TEST(Tensor, ShapeMatchesData) {
    Tensor t({2, 3});
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_THROW(Tensor({2, 2}, std::vector<Scalar>{1, 2, 3}), ShapeError);
    EXPECT_THROW(Tensor::from({3}, {1, 2}), ShapeError);
}

TEST(Tensor, AllFinite) {
    Tensor t = Tensor::from({2}, {1, 2});
    EXPECT_TRUE(t.all_finite());
    t[1] = std::numeric_limits<Scalar>::infinity();
    EXPECT_FALSE(t.all_finite());
}

TEST(Tape, NonFiniteForwardIsAnError) {
    Tape tape;
    Var x = tape.leaf(Tensor::from({2}, {1, std::numeric_limits<Scalar>::max()}), true);
    EXPECT_THROW(ops::scale(x, Scalar(10)), NumericError);
}

TEST(Tape, GradientsAccumulateOverMultipleUses) {
    Tape tape;
    Var x = tape.leaf(Tensor::from({3}, {1, -2, 3}), true);
    Var y = ops::sum(ops::add(x, ops::scale(x, 3)));
    tape.backward(y);
    for (Scalar g : x.grad().values()) EXPECT_FLOAT_EQ(g, 4);
}

TEST(Tape, BackwardNeedsScalarRoot) {
    Tape tape;
    Var x = tape.leaf(Tensor::from({2}, {1, 2}), true);
    EXPECT_THROW(tape.backward(ops::scale(x, 2)), ShapeError);
}

TEST(Tape, InputsPrecedeOutputs) {
    Tape tape;
    Var a = tape.leaf(Tensor::from({2}, {1, 2}), true);
    Var b = ops::scale(a, 2);
    Var c = ops::add(a, b);
    EXPECT_LT(a.id, b.id);
    EXPECT_LT(b.id, c.id);
    EXPECT_EQ(tape.size(), 3u);
}

TEST(Tape, ConstantInputsGetNoRule) {
    Tape tape;
    Var a = tape.constant(Tensor::from({2}, {1, 2}));
    Var b = ops::scale(a, 2);
    EXPECT_FALSE(b.requires_grad());
}

// Two-layer toy network differentiated by hand.
TEST(Tape, ChainMatchesHandDerivedGradients) {
    Rng rng(3);
    const Tensor x = random_tensor({1, 3}, rng);
    const Tensor w1 = random_tensor({4, 3}, rng), b1 = random_tensor({4}, rng);
    const Tensor w2 = random_tensor({2, 4}, rng);

    Tape tape;
    Var vx = tape.constant(x);
    Var vw1 = tape.leaf(w1, true), vb1 = tape.leaf(b1, true), vw2 = tape.leaf(w2, true);
    Var loss = ops::sum(ops::linear(ops::gelu(ops::linear(vx, vw1, vb1)), vw2));
    tape.backward(loss);

    double hpre[4], act[4], ga[4], gh[4];
    for (int i = 0; i < 4; ++i) {
        hpre[i] = b1[i];
        for (int j = 0; j < 3; ++j) hpre[i] += w1[i * 3 + j] * x[j];
        const double u = 0.7978845608028654 * (hpre[i] + 0.044715 * hpre[i] * hpre[i] * hpre[i]);
        act[i] = 0.5 * hpre[i] * (1 + std::tanh(u));
        const double du = 0.7978845608028654 * (1 + 3 * 0.044715 * hpre[i] * hpre[i]);
        const double dgelu = 0.5 * (1 + std::tanh(u)) + 0.5 * hpre[i] * (1 - std::tanh(u) * std::tanh(u)) * du;
        ga[i] = w2[i] + w2[4 + i];
        gh[i] = ga[i] * dgelu;
    }
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 4; ++i) EXPECT_NEAR(vw2.grad()[o * 4 + i], act[i], 1e-6);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(vb1.grad()[i], gh[i], 1e-5);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(vw1.grad()[i * 3 + j], gh[i] * x[j], 1e-5);
    }
}

TEST(MaskedSoftmax, SymmetricPair) {
    Tape tape;
    Var s = tape.constant(Tensor::from({1, 2}, {0, 0}));
    Tensor y = ops::masked_softmax(s, {true, true}).value();
    EXPECT_FLOAT_EQ(y[0], 0.5);
    EXPECT_FLOAT_EQ(y[1], 0.5);
}

TEST(MaskedSoftmax, MaskedEntryExcluded) {
    Tape tape;
    Var s = tape.constant(Tensor::from({1, 3}, {0, 7, 0}));
    Tensor y = ops::masked_softmax(s, {true, false, true}).value();
    EXPECT_FLOAT_EQ(y[0], 0.5);
    EXPECT_EQ(y[1], 0.0f);
    EXPECT_FLOAT_EQ(y[2], 0.5);
}

TEST(MaskedSoftmax, HandEvaluatedValues) {
    Tape tape;
    Var s = tape.constant(Tensor::from({1, 3}, {1, 2, 3}));
    Tensor y = ops::masked_softmax(s, {}).value();
    EXPECT_NEAR(y[0], 0.09003, 1e-4);
    EXPECT_NEAR(y[1], 0.24473, 1e-4);
    EXPECT_NEAR(y[2], 0.66524, 1e-4);
}

TEST(MaskedSoftmax, AllMaskedRowIsZeroAndFlagged) {
    Tape tape;
    Var s = tape.constant(Tensor::from({2, 2}, {1, 2, 3, 4}));
    std::size_t degenerate = 0;
    Tensor y = ops::masked_softmax(s, {false, false, true, true}, &degenerate).value();
    EXPECT_EQ(degenerate, 1u);
    EXPECT_EQ(y[0], 0.0f);
    EXPECT_EQ(y[1], 0.0f);
    EXPECT_NEAR(y[2] + y[3], 1.0, 1e-6);
}

TEST(MaskedSoftmax, LargeScoresAreStable) {
    Tape tape;
    Var s = tape.constant(Tensor::from({1, 2}, {1000, 1000}));
    Tensor y = ops::masked_softmax(s, {}).value();
    EXPECT_FLOAT_EQ(y[0], 0.5);
}

TEST(MaskedSoftmax, RowsSumToOneProperty) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 1 + rng.below(5), cols = 1 + rng.below(9);
        Tape tape;
        Var s = tape.constant(random_tensor({rows, cols}, rng, 20));
        std::vector<bool> mask(rows * cols);
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < 0.7;
        std::size_t degenerate = 0;
        Tensor y = ops::masked_softmax(s, mask, &degenerate).value();
        std::size_t empty_rows = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0;
            bool any = false;
            for (std::size_t c = 0; c < cols; ++c) {
                if (!mask[r * cols + c]) {
                    EXPECT_EQ(y[r * cols + c], 0.0f);
                } else {
                    any = true;
                }
                sum += y[r * cols + c];
            }
            if (any) {
                EXPECT_NEAR(sum, 1.0, 1e-6);
            } else {
                ++empty_rows;
                EXPECT_EQ(sum, 0.0);
            }
        }
        EXPECT_EQ(degenerate, empty_rows);
    }
}

TEST(Heaviside, ForwardAndSurrogate) {
    Tape tape;
    Var x = tape.leaf(Tensor::from({3}, {0.2f, -0.5f, 0.0f}), true);
    Var y = ops::heaviside_surrogate(x, 10);
    EXPECT_EQ(y.value()[0], 1.0f);
    EXPECT_EQ(y.value()[1], 0.0f);
    EXPECT_EQ(y.value()[2], 1.0f);
    tape.backward(ops::sum(y));
    EXPECT_NEAR(x.grad()[0], 1.0 / 9.0, 1e-6);
    EXPECT_NEAR(x.grad()[1], 1.0 / 36.0, 1e-6);
    EXPECT_NEAR(x.grad()[2], 1.0, 1e-6);
}

TEST(Heaviside, BinaryOutputAndClosedFormBackwardProperty) {
    Rng rng(5);
    Tape tape;
    const Tensor xs = random_tensor({200}, rng, 3);
    Var x = tape.leaf(xs, true);
    Var y = ops::heaviside_surrogate(x, 10);
    tape.backward(ops::sum(y));
    for (std::size_t i = 0; i < xs.numel(); ++i) {
        const Scalar v = y.value()[i];
        EXPECT_TRUE(v == 0.0f || v == 1.0f);
        const double expect = 1.0 / std::pow(1.0 + 10.0 * std::abs(xs[i]), 2);
        EXPECT_NEAR(x.grad()[i], expect, 1e-6);
    }
}

TEST(Conv1d, OutputLengths) {
    EXPECT_EQ(ops::conv_output_length(2000, 7, 5, 1), 400u);
    EXPECT_EQ(ops::conv_output_length(2000, 15, 13, 1), 153u);
    EXPECT_THROW(ops::conv_output_length(4, 7, 5, 1), ShapeError);
}

TEST(Conv1d, IdentityKernel) {
    Rng rng(2);
    Tape tape;
    const Tensor x = random_tensor({3, 10}, rng);
    Tensor w({3, 3, 1});
    for (std::size_t d = 0; d < 3; ++d) w[d * 3 + d] = 1;
    Var y = ops::conv1d_temporal(tape.constant(x), tape.constant(w), tape.constant(Tensor({3})), 1, 0);
    ASSERT_EQ(y.shape(), (Shape{3, 10}));
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.value()[i], x[i]);
}

TEST(Conv1d, PaddedCrossCorrelation) {
    // One channel, kernel [1 2 3], stride 2, pad 1 over [1 2 3 4 5]:
    // padded 0 1 2 3 4 5 0 -> windows at 0, 2, 4.
    Tape tape;
    Var x = tape.constant(Tensor::from({1, 5}, {1, 2, 3, 4, 5}));
    Var w = tape.constant(Tensor::from({1, 1, 3}, {1, 2, 3}));
    Var b = tape.constant(Tensor::from({1}, {0.5f}));
    Tensor y = ops::conv1d_temporal(x, w, b, 2, 1).value();
    ASSERT_EQ(y.shape(), (Shape{1, 3}));
    EXPECT_FLOAT_EQ(y[0], 0 * 1 + 1 * 2 + 2 * 3 + 0.5f);
    EXPECT_FLOAT_EQ(y[1], 2 * 1 + 3 * 2 + 4 * 3 + 0.5f);
    EXPECT_FLOAT_EQ(y[2], 4 * 1 + 5 * 2 + 0 * 3 + 0.5f);
}

TEST(Conv1d, TooShortInputThrows) {
    Tape tape;
    Var x = tape.constant(Tensor({2, 3}));
    Var w = tape.constant(Tensor({4, 2, 7}));
    EXPECT_THROW(ops::conv1d_temporal(x, w, tape.constant(Tensor({4})), 5, 1), ShapeError);
}

TEST(LayerNorm, Examples) {
    Tape tape;
    Var g = tape.constant(Tensor::from({2}, {1, 1}));
    Var o = tape.constant(Tensor::from({2}, {0, 0}));
    Tensor constant = ops::layer_norm(tape.constant(Tensor::from({1, 2}, {3, 3})), g, o).value();
    EXPECT_EQ(constant[0], 0.0f);
    EXPECT_EQ(constant[1], 0.0f);
    Tensor pair = ops::layer_norm(tape.constant(Tensor::from({1, 2}, {1, -1})), g, o).value();
    EXPECT_NEAR(pair[0], 1.0, 1e-4);
    EXPECT_NEAR(pair[1], -1.0, 1e-4);
    Var g0 = tape.constant(Tensor::from({2}, {0, 0}));
    Var b = tape.constant(Tensor::from({2}, {0.25f, -2}));
    Tensor off = ops::layer_norm(tape.constant(Tensor::from({2, 2}, {5, 1, -3, 8})), g0, b).value();
    for (std::size_t r = 0; r < 2; ++r) {
        EXPECT_EQ(off[r * 2], 0.25f);
        EXPECT_EQ(off[r * 2 + 1], -2.0f);
    }
}

TEST(Elementwise, GeluDropoutLosses) {
    Tape tape;
    EXPECT_EQ(ops::gelu(tape.constant(Tensor::from({1}, {0}))).value()[0], 0.0f);

    Rng rng(1);
    const Tensor xs = random_tensor({100}, rng);
    Tensor eval = ops::dropout(tape.constant(xs), 0.2f, false, rng).value();
    for (std::size_t i = 0; i < xs.numel(); ++i) EXPECT_EQ(eval[i], xs[i]);

    Tensor train = ops::dropout(tape.constant(xs), 0.2f, true, rng).value();
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < xs.numel(); ++i) {
        if (train[i] == 0.0f) {
            ++dropped;
        } else {
            EXPECT_FLOAT_EQ(train[i], xs[i] / 0.8f);
        }
    }
    EXPECT_GT(dropped, 0u);
    EXPECT_LT(dropped, 60u);

    EXPECT_FLOAT_EQ(ops::l1_loss(tape.constant(Tensor::from({2}, {1, 2})), tape.constant(Tensor::from({2}, {0, 0})))
                        .value()
                        .item(),
                    1.5f);
    EXPECT_FLOAT_EQ(ops::l2_norm(tape.constant(Tensor::from({2}, {3, 4}))).value().item(), 5.0f);
    std::vector<Var> parts{tape.constant(Tensor::from({1}, {3})), tape.constant(Tensor::from({2}, {0, 4}))};
    EXPECT_FLOAT_EQ(ops::l2_norm(parts).value().item(), 5.0f);
}

TEST(Elementwise, DropoutRejectsBadProbability) {
    Tape tape;
    Rng rng(1);
    EXPECT_THROW(ops::dropout(tape.constant(Tensor({2})), 1.0f, true, rng), ConfigError);
}

TEST(Upsample, DuplicationSemantics) {
    Tape tape;
    Var tokens = tape.constant(Tensor::from({2, 1}, {4, 9}));
    Tensor y = ops::upsample_tokens(tokens, 3, 6).value();
    ASSERT_EQ(y.shape(), (Shape{1, 6}));
    const Scalar expect[6] = {4, 4, 4, 9, 9, 9};
    for (int i = 0; i < 6; ++i) EXPECT_EQ(y[i], expect[i]);

    Tensor cut = ops::upsample_tokens(tokens, 3, 4).value();
    EXPECT_EQ(cut.shape(), (Shape{1, 4}));
    EXPECT_EQ(cut[3], 9.0f);

    Tensor longer = ops::upsample_tokens(tokens, 3, 8).value();
    const Scalar expect_long[8] = {4, 4, 4, 4, 4, 9, 9, 9};
    for (int i = 0; i < 8; ++i) EXPECT_EQ(longer[i], expect_long[i]);
}
