#include "streamtf/opscount.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

STREAMTF_NS_BEGIN

SparsityStats SparsityStats::dense(const ModelConfig& config) {
    SparsityStats s;
    s.qk_l1 = static_cast<double>(config.attn_dim);
    return s;
}

void SparsityStats::validate() const {
    const std::pair<const char*, double> fields[] = {{"embedding_sparsity", embedding_sparsity},
                                                     {"v_sparsity", v_sparsity},
                                                     {"attention_sparsity", attention_sparsity},
                                                     {"ffl1_sparsity", ffl1_sparsity}};
    for (const auto& [name, v] : fields) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
    if (!(qk_l1 >= 0.0) || !std::isfinite(qk_l1)) throw std::invalid_argument("qk_l1 must be finite and >= 0");
}

double qk_term_factor(const SparsityStats& stats) { return stats.qk_l1; }

namespace {

std::int64_t term(double v) { return static_cast<std::int64_t>(std::llround(v)); }

}  // namespace

MacReport count_macs(const ModelConfig& c, const SparsityStats& s) {
    c.validate();
    s.validate();
    if (s.qk_l1 > static_cast<double>(c.attn_dim)) throw std::invalid_argument("qk_l1 exceeds the attention dim");
    const double k = static_cast<double>(c.kernel), C = static_cast<double>(c.channels);
    const double D = static_cast<double>(c.embed_dim), d = static_cast<double>(c.attn_dim);
    const double h = static_cast<double>(c.heads), M = static_cast<double>(c.memory);
    const double H = static_cast<double>(c.hidden), R = static_cast<double>(c.n_doa);
    const auto blocks = static_cast<std::int64_t>(c.blocks);

    MacReport r;
    r.embedding = term(k * C * D * 32);
    r.qkv_projection = blocks * term((1 - s.embedding_sparsity) * 3 * D * d * h * 32);
    r.qk_product = blocks * term(qk_term_factor(s) * M * h * 32);
    r.v_product = blocks * term((1 - s.v_sparsity) * d * M * h * 32);
    r.concat = blocks * term((1 - s.attention_sparsity) * d * h * D * 32);
    r.total_attention = r.qkv_projection + r.qk_product + r.v_product + r.concat;
    r.ffl1 = blocks * term(D * H * 32);
    r.ffl2 = blocks * term((1 - s.ffl1_sparsity) * H * D * 32);
    r.regression = term(D * R * 32);
    r.total = r.embedding + r.total_attention + r.ffl1 + r.ffl2 + r.regression;
    return r;
}

MacReport MacReport::per_mac() const {
    auto div = [](std::int64_t v) { return static_cast<std::int64_t>(std::llround(static_cast<double>(v) / 32.0)); };
    MacReport r;
    r.embedding = div(embedding);
    r.qkv_projection = div(qkv_projection);
    r.qk_product = div(qk_product);
    r.v_product = div(v_product);
    r.concat = div(concat);
    r.total_attention = r.qkv_projection + r.qk_product + r.v_product + r.concat;
    r.ffl1 = div(ffl1);
    r.ffl2 = div(ffl2);
    r.regression = div(regression);
    r.total = r.embedding + r.total_attention + r.ffl1 + r.ffl2 + r.regression;
    return r;
}

double sparsity_of(std::span<const Scalar> values) {
    if (values.empty()) throw std::invalid_argument("sparsity_of: empty tensor");
    std::size_t zeros = 0;
    for (Scalar v : values) zeros += v == Scalar(0);
    return static_cast<double>(zeros) / static_cast<double>(values.size());
}

SparsityStats measure_sparsity(const Model& model, const std::vector<Recording>& recs) {
    if (recs.empty()) throw std::invalid_argument("measure_sparsity: empty dataset");
    struct Count {
        std::uint64_t zeros = 0, total = 0;
        void add(std::span<const Scalar> v) {
            for (Scalar x : v) zeros += x == Scalar(0);
            total += v.size();
        }
        double fraction() const { return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0; }
    };
    Count emb, v, att, ffl1;
    std::uint64_t qk_active = 0, qk_pairs = 0, tokens = 0;
    for (const auto& rec : recs) {
        StreamingSession session(model);
        session.set_observer([&](const TokenActivity& a) {
            emb.add(a.embedding);
            v.add(a.v);
            att.add(a.attention);
            ffl1.add(a.ffl1);
            qk_active += a.qk_active;
            qk_pairs += a.qk_pairs;
            ++tokens;
        });
        const std::size_t C = model.config().channels, T = rec.length();
        if (rec.emg.dim(0) != C) throw ShapeError("measure_sparsity: channel count mismatch");
        std::vector<Scalar> sample(C);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t ch = 0; ch < C; ++ch) sample[ch] = rec.emg[ch * T + t];
            session.push(sample);
        }
        session.finish();
    }
    if (tokens == 0) throw std::invalid_argument("measure_sparsity: recordings too short to produce a token");
    SparsityStats s;
    s.embedding_sparsity = emb.fraction();
    s.v_sparsity = v.fraction();
    s.attention_sparsity = att.fraction();
    s.ffl1_sparsity = ffl1.fraction();
    s.qk_l1 = qk_pairs ? static_cast<double>(qk_active) / static_cast<double>(qk_pairs) : 0.0;
    s.tokens = tokens;
    return s;
}

nlohmann::json to_json(const SparsityStats& s) {
    return {{"embedding_sparsity", s.embedding_sparsity}, {"v_sparsity", s.v_sparsity},
            {"attention_sparsity", s.attention_sparsity}, {"ffl1_sparsity", s.ffl1_sparsity},
            {"qk_l1", s.qk_l1},                           {"tokens", s.tokens}};
}

nlohmann::json to_json(const MacReport& r) {
    return {{"embedding", r.embedding}, {"qkv_projection", r.qkv_projection},
            {"qk_product", r.qk_product}, {"v_product", r.v_product},
            {"concat", r.concat},       {"total_attention", r.total_attention},
            {"ffl1", r.ffl1},           {"ffl2", r.ffl2},
            {"regression", r.regression}, {"total", r.total},
            {"mmac", r.mmac()}};
}

nlohmann::json mac_report_json(const ModelConfig& config, const SparsityStats& stats) {
    const MacReport raw = count_macs(config, stats);
    double published = kPublishedDenseMMac;
    if (config.variant == Variant::sparseA) published = kPublishedSparseAMMac;
    if (config.variant == Variant::sparseB) published = kPublishedSparseBMMac;
    const MacReport dense = count_macs(config, SparsityStats::dense(config));
    return {
        {"variant", std::string(to_string(config.variant))},
        {"config", to_json(config)},
        {"sparsity", to_json(stats)},
        {"macs", to_json(raw)},
        {"macs_without_x32", to_json(raw.per_mac())},
        {"dense_total", dense.total},
        {"reduction_vs_dense", raw.total ? static_cast<double>(dense.total) / static_cast<double>(raw.total) : 0.0},
        {"published_mmac", published},
        {"mmac_minus_published", raw.mmac() - published},
    };
}

std::string mac_csv_row(const ModelConfig& config, const MacReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%.6f",
                  std::string(to_string(config.variant)).c_str(), static_cast<long long>(r.embedding),
                  static_cast<long long>(r.qkv_projection), static_cast<long long>(r.qk_product),
                  static_cast<long long>(r.v_product), static_cast<long long>(r.concat),
                  static_cast<long long>(r.total_attention), static_cast<long long>(r.ffl1),
                  static_cast<long long>(r.ffl2), static_cast<long long>(r.regression), static_cast<long long>(r.total),
                  r.mmac());
    return buf;
}

STREAMTF_NS_END
