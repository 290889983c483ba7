#include "streamtf/config.hpp"

#include <set>
#include <string>

STREAMTF_NS_BEGIN

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::dense:
            return "dense";
        case Variant::sparseA:
            return "sparseA";
        case Variant::sparseB:
            return "sparseB";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    if (s == "dense") return Variant::dense;
    if (s == "sparseA") return Variant::sparseA;
    if (s == "sparseB") return Variant::sparseB;
    throw ConfigError("unknown variant '" + std::string(s) + "' (expected dense, sparseA or sparseB)");
}

namespace {

std::string_view to_string(SparsitySign s) { return s == SparsitySign::as_printed ? "as_printed" : "penalize"; }

SparsitySign parse_sign(const std::string& s) {
    if (s == "as_printed") return SparsitySign::as_printed;
    if (s == "penalize") return SparsitySign::penalize;
    throw ConfigError("unknown sparsity_sign '" + s + "' (expected as_printed or penalize)");
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* section) {
    if (!j.is_object()) throw ConfigError(std::string(section) + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (channels < 1) throw ConfigError("channels must be >= 1");
    if (embed_dim < 1 || attn_dim < 1 || heads < 1 || hidden < 1) throw ConfigError("layer sizes must be >= 1");
    if (blocks < 1) throw ConfigError("blocks must be >= 1");
    if (kernel < 3) throw ConfigError("kernel must be >= 3 so that the stride k-2 is >= 1");
    if (memory < 1) throw ConfigError("memory length M must be >= 1");
    if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must be in [0, 1)");
    if (!(sample_rate_hz > 0)) throw ConfigError("sample_rate_hz must be > 0");
    if (n_doa < 1) throw ConfigError("n_doa must be >= 1");
    if (!(lif_alpha > 0 && lif_alpha < 1) || !(lif_beta > 0 && lif_beta < 1)) {
        throw ConfigError("LIF alpha and beta must be in (0, 1)");
    }
    if (!(lif_theta > 0)) throw ConfigError("LIF theta must be > 0");
    if (!(surrogate_beta > 0)) throw ConfigError("surrogate_beta must be > 0");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (!(lr > 0)) throw ConfigError("lr must be > 0");
    if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
    if (window < 1 || duplicates < 1) throw ConfigError("window and duplicates must be >= 1");
    if (max_shift > window) throw ConfigError("max_shift must not exceed the window");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
        throw ConfigError("Adam betas must be in [0, 1)");
    }
    if (!(adam_eps > 0)) throw ConfigError("adam_eps must be > 0");
    if (!(clip_grad_norm >= 0)) throw ConfigError("clip_grad_norm must be >= 0");
}

nlohmann::json to_json(const ModelConfig& c) {
    return {
        {"channels", c.channels},       {"embed_dim", c.embed_dim},
        {"attn_dim", c.attn_dim},       {"heads", c.heads},
        {"hidden", c.hidden},           {"blocks", c.blocks},
        {"kernel", c.kernel},           {"padding", c.padding},
        {"memory", c.memory},           {"dropout", c.dropout},
        {"variant", to_string(c.variant)}, {"sample_rate_hz", c.sample_rate_hz},
        {"n_doa", c.n_doa},             {"lif_alpha", c.lif_alpha},
        {"lif_beta", c.lif_beta},       {"lif_theta", c.lif_theta},
        {"surrogate_beta", c.surrogate_beta},
    };
}

nlohmann::json to_json(const TrainConfig& c) {
    return {
        {"epochs", c.epochs},         {"batch", c.batch},
        {"lr", c.lr},                 {"lambda", c.lambda},
        {"sparsity_sign", to_string(c.sparsity_sign)}, {"seed", c.seed},
        {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
        {"adam_eps", c.adam_eps},     {"window", c.window},
        {"duplicates", c.duplicates}, {"max_shift", c.max_shift},
        {"clip_grad_norm", c.clip_grad_norm},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
    reject_unknown(j,
                   {"channels", "embed_dim", "attn_dim", "heads", "hidden", "blocks", "kernel", "padding", "memory",
                    "dropout", "variant", "sample_rate_hz", "n_doa", "lif_alpha", "lif_beta", "lif_theta",
                    "surrogate_beta"},
                   "model config");
    read(j, "channels", c.channels);
    read(j, "embed_dim", c.embed_dim);
    read(j, "attn_dim", c.attn_dim);
    read(j, "heads", c.heads);
    read(j, "hidden", c.hidden);
    read(j, "blocks", c.blocks);
    read(j, "kernel", c.kernel);
    read(j, "padding", c.padding);
    read(j, "memory", c.memory);
    read(j, "dropout", c.dropout);
    if (j.contains("variant")) {
        std::string v;
        read(j, "variant", v);
        c.variant = parse_variant(v);
    }
    read(j, "sample_rate_hz", c.sample_rate_hz);
    read(j, "n_doa", c.n_doa);
    read(j, "lif_alpha", c.lif_alpha);
    read(j, "lif_beta", c.lif_beta);
    read(j, "lif_theta", c.lif_theta);
    read(j, "surrogate_beta", c.surrogate_beta);
    c.validate();
    return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    reject_unknown(j,
                   {"epochs", "batch", "lr", "lambda", "sparsity_sign", "seed", "adam_beta1", "adam_beta2", "adam_eps",
                    "window", "duplicates", "max_shift", "clip_grad_norm"},
                   "train config");
    read(j, "epochs", c.epochs);
    read(j, "batch", c.batch);
    read(j, "lr", c.lr);
    read(j, "lambda", c.lambda);
    if (j.contains("sparsity_sign")) {
        std::string s;
        read(j, "sparsity_sign", s);
        c.sparsity_sign = parse_sign(s);
    }
    read(j, "seed", c.seed);
    read(j, "adam_beta1", c.adam_beta1);
    read(j, "adam_beta2", c.adam_beta2);
    read(j, "adam_eps", c.adam_eps);
    read(j, "window", c.window);
    read(j, "duplicates", c.duplicates);
    read(j, "max_shift", c.max_shift);
    read(j, "clip_grad_norm", c.clip_grad_norm);
    c.validate();
    return c;
}

std::string canonical_json(const ModelConfig& c) { return to_json(c).dump(); }

STREAMTF_NS_END
