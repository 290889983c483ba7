#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "streamtf/base.hpp"

STREAMTF_NS_BEGIN

enum class Variant {
    dense,    // continuous embedding, attention and FNN
    sparseA,  // binary embedding and Q/K/V, spiking FNN
    sparseB,  // binary embedding, spiking Q/K/V and FNN
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

struct ModelConfig {
    std::size_t channels = 16;
    std::size_t embed_dim = 64;
    std::size_t attn_dim = 32;
    std::size_t heads = 8;
    std::size_t hidden = 128;
    std::size_t blocks = 1;
    std::size_t kernel = 7;
    std::size_t padding = 1;
    std::size_t memory = 150;
    double dropout = 0.2;
    Variant variant = Variant::dense;
    double sample_rate_hz = 2000.0;
    std::size_t n_doa = 5;

    double lif_alpha = 0.95;
    double lif_beta = 0.9;
    double lif_theta = 1.0;
    double surrogate_beta = 10.0;

    // Two samples of overlap between consecutive conv windows.
    std::size_t stride() const { return kernel - 2; }
    bool sparse() const { return variant != Variant::dense; }

    // Raw-signal length consumed per inference step, in seconds.
    double tau_min() const { return static_cast<double>(kernel) / sample_rate_hz; }
    // Span of signal held in the attention memory, in seconds.
    double tau_memory() const { return static_cast<double>(memory * stride()) / sample_rate_hz; }

    void validate() const;
};

enum class SparsitySign {
    as_printed,  // L1 - lambda/2 (|x| + |QKV|)
    penalize,    // L1 + lambda/2 (|x| + |QKV|)
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch = 64;
    double lr = 1e-3;
    double lambda = 1.0;
    SparsitySign sparsity_sign = SparsitySign::as_printed;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t window = 2000;
    std::size_t duplicates = 64;
    std::size_t max_shift = 2000;
    // Off (0) by default; only for diagnosing divergence.
    double clip_grad_norm = 0.0;

    void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
// Unspecified keys keep their defaults; unknown keys raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// Canonical serialization: sorted keys, no whitespace.
std::string canonical_json(const ModelConfig& c);

STREAMTF_NS_END
