#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamtf/config.hpp"
#include "streamtf/data.hpp"
#include "streamtf/model.hpp"

STREAMTF_NS_BEGIN

// Activity measured over an evaluation run. Sparsity of a tensor is
// 1 - nonzero / elements.
struct SparsityStats {
    double embedding_sparsity = 0.0;
    double v_sparsity = 0.0;
    double attention_sparsity = 0.0;
    double ffl1_sparsity = 0.0;
    // Average number of index positions per query-key product where both
    // entries are nonzero, i.e. the multiplications a binary-aware engine
    // actually performs. A dense product has d of them.
    double qk_l1 = 0.0;
    std::uint64_t tokens = 0;

    // Every sparsity 0 and all d products performed.
    static SparsityStats dense(const ModelConfig& config);
    void validate() const;
};

// Per-token MAC counts. Each term keeps the uniform x32 factor of the
// accounting formulas; per_mac() divides it out.
struct MacReport {
    std::int64_t embedding = 0;
    std::int64_t qkv_projection = 0;
    std::int64_t qk_product = 0;
    std::int64_t v_product = 0;
    std::int64_t concat = 0;
    std::int64_t total_attention = 0;
    std::int64_t ffl1 = 0;
    std::int64_t ffl2 = 0;
    std::int64_t regression = 0;
    std::int64_t total = 0;

    double mmac() const { return static_cast<double>(total) / 1e6; }
    MacReport per_mac() const;
};

// Multiply factor of the QK product term; the single place that decides
// how qk_l1 is read.
double qk_term_factor(const SparsityStats& stats);

MacReport count_macs(const ModelConfig& config, const SparsityStats& stats);

// Streams every recording through a fresh session and accumulates
// per-token activity. Raises std::invalid_argument on an empty list.
SparsityStats measure_sparsity(const Model& model, const std::vector<Recording>& recs);

// Fraction of exact zeros.
double sparsity_of(std::span<const Scalar> values);

// Published per-inference totals, kept for side-by-side reporting only.
inline constexpr double kPublishedDenseMMac = 5.3;
inline constexpr double kPublishedSparseAMMac = 1.4;
inline constexpr double kPublishedSparseBMMac = 1.0;

nlohmann::json to_json(const SparsityStats& s);
nlohmann::json to_json(const MacReport& r);
// Full report: config, stats, raw and per-MAC views, comparison against the
// published figure for the variant.
nlohmann::json mac_report_json(const ModelConfig& config, const SparsityStats& stats);

inline constexpr const char* kMacCsvHeader =
    "variant,embedding,qkv_projection,qk_product,v_product,concat,total_attention,ffl1,ffl2,regression,total,mmac";
std::string mac_csv_row(const ModelConfig& config, const MacReport& r);

STREAMTF_NS_END
