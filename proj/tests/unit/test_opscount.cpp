#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "streamtf/opscount.hpp"

using namespace streamtf;

namespace {

// Independent integer evaluation of every accounting term for a dense
// configuration (all sparsities 0, d products per query-key pair).
std::int64_t dense_total_oracle(std::int64_t k, std::int64_t C, std::int64_t D, std::int64_t d, std::int64_t h,
                                std::int64_t H, std::int64_t M) {
    const std::int64_t embedding = k * C * D * 32;
    const std::int64_t attention = 3 * D * d * h * 32 + d * M * h * 32 + d * M * h * 32 + d * h * D * 32;
    return embedding + attention + D * H * 32 + H * D * 32 + D * 5 * 32;
}

}  // namespace

TEST(CountMacs, EmbeddingAndRegressionTerms) {
    ModelConfig c;
    MacReport r = count_macs(c, SparsityStats::dense(c));
    EXPECT_EQ(r.embedding, 229376);
    EXPECT_EQ(r.regression, 10240);
}

TEST(CountMacs, DensePaperGoldenTotal) {
    ModelConfig c;
    MacReport r = count_macs(c, SparsityStats::dense(c));
    EXPECT_EQ(r.total, dense_total_oracle(7, 16, 64, 32, 8, 128, 150));
    EXPECT_EQ(r.total, 5318656);
    EXPECT_EQ(r.qkv_projection, 1572864);
    EXPECT_EQ(r.qk_product, 1228800);
    EXPECT_EQ(r.v_product, 1228800);
    EXPECT_EQ(r.concat, 524288);
    EXPECT_EQ(r.total_attention, 4554752);
    EXPECT_EQ(r.ffl1, 262144);
    EXPECT_EQ(r.ffl2, 262144);
    EXPECT_EQ(r.total, r.embedding + r.total_attention + r.ffl1 + r.ffl2 + r.regression);
}

TEST(CountMacs, OtherGridPointsMatchOracle) {
    for (std::int64_t k : {7, 15, 20, 25, 30})
        for (std::int64_t M : {10, 30, 50, 70, 90, 110, 130, 150}) {
            ModelConfig c;
            c.kernel = static_cast<std::size_t>(k);
            c.memory = static_cast<std::size_t>(M);
            EXPECT_EQ(count_macs(c, SparsityStats::dense(c)).total, dense_total_oracle(k, 16, 64, 32, 8, 128, M));
        }
}

TEST(CountMacs, FullSparsityZeroesGatedTerms) {
    ModelConfig c;
    SparsityStats s;
    s.embedding_sparsity = s.v_sparsity = s.attention_sparsity = s.ffl1_sparsity = 1;
    s.qk_l1 = 0;
    MacReport r = count_macs(c, s);
    EXPECT_EQ(r.qkv_projection, 0);
    EXPECT_EQ(r.qk_product, 0);
    EXPECT_EQ(r.v_product, 0);
    EXPECT_EQ(r.concat, 0);
    EXPECT_EQ(r.ffl2, 0);
    EXPECT_EQ(r.total, r.embedding + r.ffl1 + r.regression);
}

TEST(CountMacs, MonotoneInSparsityProperty) {
    ModelConfig c;
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        SparsityStats a;
        a.embedding_sparsity = rng.uniform();
        a.v_sparsity = rng.uniform();
        a.attention_sparsity = rng.uniform();
        a.ffl1_sparsity = rng.uniform();
        a.qk_l1 = rng.uniform(0, 32);
        SparsityStats b = a;
        b.embedding_sparsity = std::min(1.0, a.embedding_sparsity + rng.uniform(0, 0.3));
        b.v_sparsity = std::min(1.0, a.v_sparsity + rng.uniform(0, 0.3));
        b.attention_sparsity = std::min(1.0, a.attention_sparsity + rng.uniform(0, 0.3));
        b.ffl1_sparsity = std::min(1.0, a.ffl1_sparsity + rng.uniform(0, 0.3));
        b.qk_l1 = std::max(0.0, a.qk_l1 - rng.uniform(0, 5));
        MacReport ra = count_macs(c, a), rb = count_macs(c, b);
        EXPECT_LE(rb.qkv_projection, ra.qkv_projection);
        EXPECT_LE(rb.qk_product, ra.qk_product);
        EXPECT_LE(rb.v_product, ra.v_product);
        EXPECT_LE(rb.concat, ra.concat);
        EXPECT_LE(rb.ffl2, ra.ffl2);
        EXPECT_LE(rb.total, ra.total);
        EXPECT_EQ(ra.total, ra.embedding + ra.total_attention + ra.ffl1 + ra.ffl2 + ra.regression);
    }
}

TEST(CountMacs, OutOfRangeSparsityRejected) {
    ModelConfig c;
    SparsityStats s = SparsityStats::dense(c);
    s.v_sparsity = 1.5;
    EXPECT_THROW(count_macs(c, s), std::invalid_argument);
    s.v_sparsity = -0.1;
    EXPECT_THROW(count_macs(c, s), std::invalid_argument);
    s = SparsityStats::dense(c);
    s.qk_l1 = static_cast<double>(c.attn_dim) + 1;
    EXPECT_THROW(count_macs(c, s), std::invalid_argument);
}

TEST(CountMacs, PerMacView) {
    ModelConfig c;
    MacReport r = count_macs(c, SparsityStats::dense(c)).per_mac();
    EXPECT_EQ(r.embedding, 7 * 16 * 64);
    EXPECT_EQ(r.total, 5318656 / 32);
}

TEST(Sparsity, CountingExample) {
    const std::vector<Scalar> v{0, 1, 0, 2, 3, 0, 4, 5};
    EXPECT_DOUBLE_EQ(sparsity_of(v), 0.375);
}

TEST(MeasureSparsity, DenseModelIsDense) {
    ModelConfig c = testutil::small_config(Variant::dense);
    Model m(c, 3);
    Rng rng(2);
    Recording r;
    r.emg = testutil::random_tensor({c.channels, 300}, rng);
    r.targets = Tensor({5, 300});
    SparsityStats s = measure_sparsity(m, {r});
    EXPECT_EQ(s.embedding_sparsity, 0.0);
    EXPECT_DOUBLE_EQ(s.qk_l1, static_cast<double>(c.attn_dim));
    EXPECT_EQ(s.tokens, 60u);
}

TEST(MeasureSparsity, SilentSparseModel) {
    ModelConfig c = testutil::small_config(Variant::sparseB);
    Model m(c, 3);
    m.find("embed.bias").value.fill(-1);
    Recording r;
    r.emg = Tensor({c.channels, 200});
    r.targets = Tensor({5, 200});
    SparsityStats s = measure_sparsity(m, {r});
    EXPECT_EQ(s.embedding_sparsity, 1.0);
    EXPECT_EQ(s.v_sparsity, 1.0);
    EXPECT_EQ(s.attention_sparsity, 1.0);
    EXPECT_EQ(s.qk_l1, 0.0);
}

TEST(MeasureSparsity, EmptyDatasetThrows) {
    Model m(testutil::small_config(Variant::dense), 1);
    EXPECT_THROW(measure_sparsity(m, {}), std::invalid_argument);
}

TEST(MacReportJson, SurfacesPublishedComparison) {
    ModelConfig c;
    auto j = mac_report_json(c, SparsityStats::dense(c));
    EXPECT_EQ(j["macs"]["total"].get<std::int64_t>(), 5318656);
    EXPECT_DOUBLE_EQ(j["published_mmac"].get<double>(), 5.3);
    EXPECT_NEAR(j["mmac_minus_published"].get<double>(), 0.018656, 1e-9);
    EXPECT_EQ(j["macs_without_x32"]["total"].get<std::int64_t>(), 166208);
}

TEST(MacCsv, GoldenHeaderAndRow) {
    ModelConfig c;
    EXPECT_EQ(std::string(kMacCsvHeader),
              "variant,embedding,qkv_projection,qk_product,v_product,concat,total_attention,ffl1,ffl2,regression,total,"
              "mmac");
    EXPECT_EQ(mac_csv_row(c, count_macs(c, SparsityStats::dense(c))),
              "dense,229376,1572864,1228800,1228800,524288,4554752,262144,262144,10240,5318656,5.318656");
}
