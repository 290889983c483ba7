#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "streamtf/checkpoint.hpp"

using namespace streamtf;
using testutil::random_tensor;
using testutil::small_config;

namespace {

void zero_block_weights(Model& m) {
    for (auto& p : m.parameters())
        if (p.name.rfind("block", 0) == 0) p.value.fill(0);
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("streamtf_test_" + name);
}

}  // namespace

TEST(ModelConfig, DerivedQuantities) {
    ModelConfig c;
    EXPECT_EQ(c.stride(), 5u);
    EXPECT_DOUBLE_EQ(c.tau_min(), 0.0035);
    EXPECT_DOUBLE_EQ(c.tau_memory(), 0.375);
    c.kernel = 2;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ModelConfig{};
    c.memory = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfig, JsonRoundTrip) {
    ModelConfig c = small_config(Variant::sparseB, 15, 9);
    ModelConfig back = model_config_from_json(nlohmann::json::parse(canonical_json(c)));
    EXPECT_EQ(canonical_json(back), canonical_json(c));
    EXPECT_THROW(model_config_from_json(nlohmann::json{{"no_such_key", 1}}), ConfigError);
    EXPECT_THROW(parse_variant("medium"), ConfigError);
}

TEST(Model, PaperParameterCounts) {
    ModelConfig c;
    // Hand sum: conv 64*16*7+64, Q/K/V 3*256*64, W_O 64*256+64, two LNs 4*64,
    // FNN 128*64+128 and 64*128+64, regression 5*64+5.
    EXPECT_EQ(Model(c, 0).parameter_count(), 89989u);
    EXPECT_EQ(expected_parameter_count(c), 89989u);
    c.variant = Variant::sparseA;
    // No ln1, bias-free spiking layers.
    EXPECT_EQ(Model(c, 0).parameter_count(), 89669u);
    c.variant = Variant::sparseB;
    EXPECT_EQ(Model(c, 0).parameter_count(), 89669u);
}

TEST(Model, ParameterCountProperty) {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        ModelConfig c;
        c.channels = 1 + rng.below(5);
        c.embed_dim = 1 + rng.below(9);
        c.attn_dim = 1 + rng.below(5);
        c.heads = 1 + rng.below(3);
        c.hidden = 1 + rng.below(9);
        c.blocks = 1 + rng.below(2);
        c.kernel = 3 + rng.below(10);
        c.variant = static_cast<Variant>(rng.below(3));
        EXPECT_EQ(Model(c, i).parameter_count(), expected_parameter_count(c));
    }
}

TEST(Model, InitIsSeeded) {
    ModelConfig c = small_config(Variant::dense);
    Model a(c, 5), b(c, 5), d(c, 6);
    EXPECT_EQ(a.weight(0).values(), b.weight(0).values());
    EXPECT_NE(a.weight(0).values(), d.weight(0).values());
    const double bound = std::sqrt(1.0 / (c.channels * c.kernel));
    for (Scalar w : a.weight(a.layout().embed_w).values()) EXPECT_LE(std::abs(w), bound);
}

TEST(Embed, TokenCountsAndBinary) {
    Rng rng(2);
    for (auto v : {Variant::dense, Variant::sparseA}) {
        ModelConfig c = small_config(v);
        Model m(c, 1);
        Tape tape;
        auto params = bind_parameters(tape, m, false);
        Var e = embed(m, params, tape.constant(random_tensor({c.channels, 2000}, rng)));
        EXPECT_EQ(e.shape(), (Shape{400, c.embed_dim}));
        if (v == Variant::sparseA) {
            for (Scalar x : e.value().values()) EXPECT_TRUE(x == 0.0f || x == 1.0f);
        }
    }
}

TEST(Embed, ZeroWeightsGiveZeroTokens) {
    ModelConfig c = small_config(Variant::dense);
    Model m(c, 1);
    m.find("embed.weight").value.fill(0);
    m.find("embed.bias").value.fill(0);
    Rng rng(3);
    Tape tape;
    auto params = bind_parameters(tape, m, false);
    for (Scalar x : embed(m, params, tape.constant(random_tensor({c.channels, 50}, rng))).value().values())
        EXPECT_EQ(x, 0.0f);
}

TEST(Encoder, ZeroWeightsAreResidualIdentity) {
    for (auto v : {Variant::dense, Variant::sparseA, Variant::sparseB}) {
        ModelConfig c = small_config(v);
        Model m(c, 2);
        zero_block_weights(m);
        Rng rng(4);
        Tape tape;
        auto params = bind_parameters(tape, m, false);
        const Tensor x = random_tensor({10, c.embed_dim}, rng);
        Tensor z = encoder_block(m, params, 0, tape.constant(x), {}).value();
        EXPECT_EQ(z.values(), x.values()) << to_string(v);
    }
}

TEST(Encoder, SparseQkvAreBinary) {
    Rng rng(5);
    for (auto v : {Variant::sparseA, Variant::sparseB}) {
        ModelConfig c = small_config(v);
        Model m(c, 3);
        Tape tape;
        auto params = bind_parameters(tape, m, false);
        ParallelOutput out = forward_parallel(m, params, tape.constant(random_tensor({c.channels, 300}, rng, 3)));
        std::size_t ones = 0, total = 0;
        for (Var t : {out.blocks[0].q, out.blocks[0].k, out.blocks[0].v, out.blocks[0].ffl1, out.embedding})
            for (Scalar x : t.value().values()) {
                EXPECT_TRUE(x == 0.0f || x == 1.0f);
                ones += x == 1.0f;
                ++total;
            }
        EXPECT_GT(ones, 0u);
        EXPECT_LT(ones, total);
    }
}

TEST(Regression, ConstantBiasPrediction) {
    ModelConfig c = small_config(Variant::dense);
    Model m(c, 1);
    m.find("regression.weight").value.fill(0);
    Tensor& b = m.find("regression.bias").value;
    for (std::size_t i = 0; i < c.n_doa; ++i) b[i] = static_cast<Scalar>(i) - 2;
    Rng rng(6);
    Tensor y = predict_parallel(m, random_tensor({c.channels, 123}, rng));
    ASSERT_EQ(y.shape(), (Shape{c.n_doa, 123}));
    for (std::size_t r = 0; r < c.n_doa; ++r)
        for (std::size_t t = 0; t < 123; ++t) EXPECT_EQ(y.at(r, t), b[r]);
}

TEST(Regression, LengthAlignment) {
    ModelConfig c = small_config(Variant::dense);
    Model m(c, 1);
    Rng rng(7);
    for (std::size_t T : {7u, 30u, 2000u, 2003u}) {
        Tensor y = predict_parallel(m, random_tensor({c.channels, T}, rng));
        EXPECT_EQ(y.dim(1), T);
    }
}

TEST(Streaming, MatchesParallelAllVariants) {
    Rng rng(8);
    for (auto v : {Variant::dense, Variant::sparseA, Variant::sparseB})
        for (std::size_t k : {7u, 15u})
            for (std::size_t M : {4u, 16u}) {
                ModelConfig c = small_config(v, k, M);
                Model m(c, rng.next_u64());
                const Tensor x = random_tensor({c.channels, 400}, rng, 3);
                const Tensor par = predict_parallel(m, x);
                const Tensor str = stream_recording(m, x);
                ASSERT_EQ(par.shape(), str.shape());
                EXPECT_LE(max_abs_diff(par, str), 1e-5) << to_string(v) << " k=" << k << " M=" << M;
            }
}

TEST(Streaming, TwoBlocksMatchParallel) {
    Rng rng(9);
    ModelConfig c = small_config(Variant::sparseB);
    c.blocks = 2;
    Model m(c, 4);
    const Tensor x = random_tensor({c.channels, 200}, rng, 3);
    EXPECT_LE(max_abs_diff(predict_parallel(m, x), stream_recording(m, x)), 1e-5);
}

TEST(Streaming, FirstOutputTiming) {
    ModelConfig c = small_config(Variant::dense, 7);
    Model m(c, 1);
    StreamingSession s(m);
    std::vector<Scalar> sample(c.channels, 0.5f);
    // One leading pad sample: the first window closes on raw sample 6,
    // inside the 3.5 ms (7 samples at 2 kHz) minimum latency.
    for (int t = 1; t <= 5; ++t) EXPECT_TRUE(s.push(sample).empty()) << t;
    auto first = s.push(sample);
    EXPECT_EQ(first.size(), c.stride() * c.n_doa);
    EXPECT_LE(6.0 / c.sample_rate_hz, c.tau_min());
    EXPECT_TRUE(s.push(sample).empty());
    EXPECT_TRUE(s.finish().empty());  // 7 samples -> 1 token
    EXPECT_EQ(s.tokens_emitted(), 1u);
}

TEST(Streaming, SevenSamplesGiveFivePredictions) {
    ModelConfig c;  // paper config, k = 7
    Model m(c, 1);
    Rng rng(10);
    Tensor y = stream_recording(m, random_tensor({c.channels, 7}, rng));
    EXPECT_EQ(y.dim(1), 7u);
    Tensor tokens = stream_token_outputs(m, random_tensor({c.channels, 7}, rng));
    EXPECT_EQ(tokens.dim(0) * c.stride(), 5u);
}

TEST(Streaming, RejectsWrongChannelCount) {
    ModelConfig c = small_config(Variant::dense);
    Model m(c, 1);
    StreamingSession s(m);
    std::vector<Scalar> bad(c.channels + 1);
    EXPECT_THROW(s.push(bad), ShapeError);
}

TEST(Checkpoint, RoundTrip) {
    ModelConfig c = small_config(Variant::sparseA, 15, 9);
    Model m(c, 77);
    const auto path = temp_path("roundtrip.stfc");
    save_checkpoint(path, m);
    Model back = load_checkpoint(path, c);
    ASSERT_EQ(back.parameters().size(), m.parameters().size());
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
        EXPECT_EQ(back.parameters()[i].name, m.parameters()[i].name);
        EXPECT_EQ(back.parameters()[i].value.values(), m.parameters()[i].value.values());
    }
    std::filesystem::remove(path);
}

TEST(Checkpoint, ConfigMismatchAndCorruption) {
    ModelConfig c = small_config(Variant::dense);
    const auto path = temp_path("mismatch.stfc");
    save_checkpoint(path, Model(c, 1));
    ModelConfig other = c;
    other.memory += 1;
    EXPECT_THROW(load_checkpoint(path, other), CheckpointMismatch);

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 3);
    EXPECT_THROW(load_checkpoint(path), FormatError);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "not a checkpoint";
    }
    EXPECT_THROW(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
