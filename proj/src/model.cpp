#include "streamtf/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "streamtf/ops.hpp"

STREAMTF_NS_BEGIN

namespace {

struct InitSpec {
    enum Kind { uniform, ones, zeros } kind = uniform;
    std::size_t fan_in = 1;
};

LifParams lif_params(const ModelConfig& c, LifOutput output) {
    LifParams p;
    p.alpha = static_cast<Scalar>(c.lif_alpha);
    p.beta = static_cast<Scalar>(c.lif_beta);
    p.theta = static_cast<Scalar>(c.lif_theta);
    p.surrogate_beta = static_cast<Scalar>(c.surrogate_beta);
    p.output = output;
    return p;
}

}  // namespace

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    const auto& c = config_;
    const std::size_t D = c.embed_dim, hd = c.heads * c.attn_dim, H = c.hidden;

    std::vector<InitSpec> init;
    auto add = [&](std::string name, Shape shape, std::size_t& slot, InitSpec spec) {
        declare(std::move(name), std::move(shape), slot);
        init.push_back(spec);
    };

    add("embed.weight", {D, c.channels, c.kernel}, layout_.embed_w, {InitSpec::uniform, c.channels * c.kernel});
    add("embed.bias", {D}, layout_.embed_b, {InitSpec::uniform, c.channels * c.kernel});
    layout_.blocks.resize(c.blocks);
    for (std::size_t b = 0; b < c.blocks; ++b) {
        BlockLayout& L = layout_.blocks[b];
        const std::string p = "block" + std::to_string(b) + ".";
        if (!c.sparse()) {
            add(p + "ln1.gain", {D}, L.ln1_gain, {InitSpec::ones});
            add(p + "ln1.offset", {D}, L.ln1_offset, {InitSpec::zeros});
        }
        add(p + "attn.wq", {hd, D}, L.wq, {InitSpec::uniform, D});
        add(p + "attn.wk", {hd, D}, L.wk, {InitSpec::uniform, D});
        add(p + "attn.wv", {hd, D}, L.wv, {InitSpec::uniform, D});
        add(p + "attn.wo", {D, hd}, L.wo, {InitSpec::uniform, hd});
        add(p + "attn.bo", {D}, L.bo, {InitSpec::uniform, hd});
        add(p + "ln2.gain", {D}, L.ln2_gain, {InitSpec::ones});
        add(p + "ln2.offset", {D}, L.ln2_offset, {InitSpec::zeros});
        if (!c.sparse()) {
            add(p + "ffn.fc1.weight", {H, D}, L.fc1_w, {InitSpec::uniform, D});
            add(p + "ffn.fc1.bias", {H}, L.fc1_b, {InitSpec::uniform, D});
            add(p + "ffn.fc2.weight", {D, H}, L.fc2_w, {InitSpec::uniform, H});
            add(p + "ffn.fc2.bias", {D}, L.fc2_b, {InitSpec::uniform, H});
        } else {
            add(p + "snn.fc1.weight", {H, D}, L.fc1_w, {InitSpec::uniform, D});
            add(p + "snn.fc2.weight", {D, H}, L.fc2_w, {InitSpec::uniform, H});
        }
    }
    add("regression.weight", {c.n_doa, D}, layout_.reg_w, {InitSpec::uniform, D});
    add("regression.bias", {c.n_doa}, layout_.reg_b, {InitSpec::uniform, D});

    Rng rng(seed);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& t = params_[i].value;
        switch (init[i].kind) {
            case InitSpec::ones:
                t.fill(Scalar(1));
                break;
            case InitSpec::zeros:
                t.fill(Scalar(0));
                break;
            case InitSpec::uniform: {
                const double a = std::sqrt(1.0 / static_cast<double>(init[i].fan_in));
                for (auto& v : t.values()) v = static_cast<Scalar>(rng.uniform(-a, a));
                break;
            }
        }
    }
}

void Model::declare(std::string name, Shape shape, std::size_t& slot) {
    slot = params_.size();
    params_.push_back({std::move(name), Tensor(std::move(shape))});
}

Parameter& Model::find(std::string_view name) {
    for (auto& p : params_)
        if (p.name == name) return p;
    throw std::out_of_range("model has no parameter '" + std::string(name) + "'");
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
}

AttentionParams Model::attention_params(std::size_t block) const {
    const BlockLayout& L = layout_.blocks.at(block);
    AttentionParams p;
    p.heads = config_.heads;
    p.dim = config_.attn_dim;
    p.memory = config_.memory;
    p.wq = weight(L.wq);
    p.wk = weight(L.wk);
    p.wv = weight(L.wv);
    p.wo = weight(L.wo);
    p.bo = weight(L.bo);
    return p;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
    const std::size_t D = c.embed_dim, hd = c.heads * c.attn_dim, H = c.hidden;
    const std::size_t embedding = D * c.channels * c.kernel + D;
    std::size_t block = 3 * hd * D + (D * hd + D) + 2 * D;  // Q/K/V, output projection, ln2
    if (c.sparse()) {
        block += H * D + D * H;
    } else {
        block += 2 * D + (H * D + H) + (D * H + D);  // ln1, fc1, fc2
    }
    const std::size_t regression = c.n_doa * D + c.n_doa;
    return embedding + c.blocks * block + regression;
}

std::vector<Var> bind_parameters(Tape& tape, const Model& model, bool requires_grad) {
    std::vector<Var> vars;
    vars.reserve(model.parameters().size());
    for (const auto& p : model.parameters()) vars.push_back(tape.leaf(p.value, requires_grad));
    return vars;
}

// ---- parallel path ----------------------------------------------------------

Var embed(const Model& model, std::span<const Var> params, Var x) {
    const auto& c = model.config();
    const auto& L = model.layout();
    if (x.value().rank() != 2 || x.value().dim(0) != c.channels) {
        throw ShapeError("embed: input must be [" + std::to_string(c.channels) + " x T], got " + shape_str(x.shape()));
    }
    Var conv = ops::conv1d_temporal(x, params[L.embed_w], params[L.embed_b], c.stride(), c.padding);
    Var tokens = ops::transpose(conv);
    if (c.sparse()) tokens = binarize(tokens, static_cast<Scalar>(c.surrogate_beta));
    return tokens;
}

Var encoder_block(const Model& model, std::span<const Var> params, std::size_t block, Var x, const ForwardOptions& opts,
                  BlockTrace* trace) {
    const auto& c = model.config();
    const BlockLayout& L = model.layout().blocks.at(block);
    const Scalar sb = static_cast<Scalar>(c.surrogate_beta);

    Var a_in = c.sparse() ? x : ops::layer_norm(x, params[L.ln1_gain], params[L.ln1_offset]);
    Var q = ops::linear(a_in, params[L.wq]);
    Var k = ops::linear(a_in, params[L.wk]);
    Var v = ops::linear(a_in, params[L.wv]);
    if (c.variant == Variant::sparseA) {
        q = binarize(q, sb);
        k = binarize(k, sb);
        v = binarize(v, sb);
    } else if (c.variant == Variant::sparseB) {
        const LifParams spikes = lif_params(c, LifOutput::spikes);
        q = lif_sequence(q, spikes);
        k = lif_sequence(k, spikes);
        v = lif_sequence(v, spikes);
    }
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(c.attn_dim));
    Var att = unfold_sliding_attention(q, k, v, c.heads, c.memory, scale, opts.attention_macs);
    Var f = ops::add(x, ops::linear(att, params[L.wo], params[L.bo]));
    Var n2 = ops::layer_norm(f, params[L.ln2_gain], params[L.ln2_offset]);

    Var hidden, ffn;
    if (c.sparse()) {
        hidden = lif_sequence(ops::linear(n2, params[L.fc1_w]), lif_params(c, LifOutput::spikes));
        ffn = lif_sequence(ops::linear(hidden, params[L.fc2_w]), lif_params(c, LifOutput::membrane));
    } else {
        hidden = ops::gelu(ops::linear(n2, params[L.fc1_w], params[L.fc1_b]));
        Var dropped = hidden;
        if (opts.training && c.dropout > 0) {
            if (!opts.rng) throw std::invalid_argument("encoder_block: training with dropout needs an Rng");
            dropped = ops::dropout(hidden, static_cast<Scalar>(c.dropout), true, *opts.rng);
        }
        ffn = ops::linear(dropped, params[L.fc2_w], params[L.fc2_b]);
    }
    if (trace) *trace = BlockTrace{q, k, v, att, hidden};
    return ops::add(f, ffn);
}

Var regress_and_upsample(const Model& model, std::span<const Var> params, Var z, std::size_t length, Var* token_preds) {
    const auto& L = model.layout();
    Var r = ops::linear(z, params[L.reg_w], params[L.reg_b]);
    if (token_preds) *token_preds = r;
    return ops::upsample_tokens(r, model.config().stride(), length);
}

ParallelOutput forward_parallel(const Model& model, std::span<const Var> params, Var x, const ForwardOptions& opts) {
    if (params.size() != model.parameters().size()) throw std::invalid_argument("forward_parallel: parameter count");
    ParallelOutput out;
    out.embedding = embed(model, params, x);
    Var z = out.embedding;
    out.blocks.resize(model.config().blocks);
    for (std::size_t b = 0; b < model.config().blocks; ++b) z = encoder_block(model, params, b, z, opts, &out.blocks[b]);
    out.tokens = z;
    out.predictions = regress_and_upsample(model, params, z, x.value().dim(1), &out.token_preds);
    return out;
}

Tensor predict_parallel(const Model& model, const Tensor& emg) {
    Tape tape;
    auto params = bind_parameters(tape, model, false);
    return forward_parallel(model, params, tape.constant(emg)).predictions.value();
}

Tensor align_token_outputs(const Tensor& token_preds, std::size_t factor, std::size_t length) {
    Tape tape;
    return ops::upsample_tokens(tape.constant(token_preds), factor, length).value();
}

// ---- streaming path ---------------------------------------------------------

StreamingSession::StreamingSession(const Model& model) : model_(&model) {
    const auto& c = model.config();
    for (std::size_t b = 0; b < c.blocks; ++b) {
        attn_.push_back(model.attention_params(b));
        BlockState st{KVRingBuffer(c.heads, c.memory, c.attn_dim), {}, {}};
        if (c.variant == Variant::sparseB) st.qkv.assign(3, LifState(c.heads * c.attn_dim));
        if (c.sparse()) st.ffn = {LifState(c.hidden), LifState(c.embed_dim)};
        blocks_.push_back(std::move(st));
    }
    reset();
}

void StreamingSession::reset() {
    const auto& c = model_->config();
    for (auto& b : blocks_) {
        b.ring.reset();
        for (auto& s : b.qkv) s.reset();
        for (auto& s : b.ffn) s.reset();
    }
    window_.assign(c.kernel * c.channels, Scalar(0));
    padded_seen_ = 0;
    samples_seen_ = 0;
    tokens_emitted_ = 0;
    finished_ = false;
    out_.clear();
    // Leading zero padding.
    padded_seen_ = c.padding;
}

std::span<const Scalar> StreamingSession::push(std::span<const Scalar> sample) {
    const auto& c = model_->config();
    if (finished_) throw std::logic_error("StreamingSession: push after finish");
    if (sample.size() != c.channels) {
        throw ShapeError("StreamingSession: sample has " + std::to_string(sample.size()) + " channels, expected " +
                         std::to_string(c.channels));
    }
    std::copy(sample.begin(), sample.end(), window_.begin() + (padded_seen_ % c.kernel) * c.channels);
    ++padded_seen_;
    ++samples_seen_;
    out_.clear();
    if (padded_seen_ >= c.kernel && (padded_seen_ - c.kernel) % c.stride() == 0) return emit_token();
    return {};
}

std::span<const Scalar> StreamingSession::finish() {
    const auto& c = model_->config();
    if (finished_) return {};
    finished_ = true;
    out_.clear();
    std::vector<Scalar> released;
    for (std::size_t p = 0; p < c.padding; ++p) {
        std::fill_n(window_.begin() + (padded_seen_ % c.kernel) * c.channels, c.channels, Scalar(0));
        ++padded_seen_;
        if (padded_seen_ >= c.kernel && (padded_seen_ - c.kernel) % c.stride() == 0) {
            auto r = emit_token();
            released.insert(released.end(), r.begin(), r.end());
        }
    }
    out_ = std::move(released);
    return out_;
}

std::span<const Scalar> StreamingSession::emit_token() {
    const auto& c = model_->config();
    const auto& L = model_->layout();
    // Gather the last k padded samples into the [C x k] layout of the conv.
    std::vector<Scalar> win(c.channels * c.kernel);
    const std::size_t first = padded_seen_ - c.kernel;
    for (std::size_t j = 0; j < c.kernel; ++j) {
        const Scalar* s = window_.data() + ((first + j) % c.kernel) * c.channels;
        for (std::size_t ch = 0; ch < c.channels; ++ch) win[ch * c.kernel + j] = s[ch];
    }
    std::vector<Scalar> emb(c.embed_dim);
    kernels::conv_token(win, model_->weight(L.embed_w).data(), model_->weight(L.embed_b).span(), c.channels, c.kernel,
                        emb);
    if (c.sparse()) {
        for (auto& v : emb) v = kernels::heaviside(v);
    }
    return step_token(emb);
}

std::span<const Scalar> StreamingSession::encode_token(std::span<const Scalar> token) {
    const auto& c = model_->config();
    const auto& L = model_->layout();
    if (token.size() != c.embed_dim) throw ShapeError("encode_token: token width mismatch");
    const std::size_t D = c.embed_dim;

    TokenActivity activity;
    activity.embedding = token;
    z_.assign(token.begin(), token.end());
    for (std::size_t b = 0; b < c.blocks; ++b) {
        const auto& Lb = L.blocks[b];
        BlockState& st = blocks_[b];
        const AttentionParams& ap = attn_[b];

        std::vector<Scalar> a_in(D);
        if (c.sparse()) {
            a_in = z_;
        } else {
            kernels::layer_norm_row(z_, model_->weight(Lb.ln1_gain).span(), model_->weight(Lb.ln1_offset).span(),
                                    Scalar(1e-5), a_in);
        }
        Projection pr = multi_head_project(a_in, ap);
        if (c.variant == Variant::sparseA) {
            for (auto* vec : {&pr.q, &pr.k, &pr.v})
                for (auto& e : *vec) e = kernels::heaviside(e);
        } else if (c.variant == Variant::sparseB) {
            const LifParams spikes = lif_params(c, LifOutput::spikes);
            pr.q = lif_step(st.qkv[0], pr.q, spikes);
            pr.k = lif_step(st.qkv[1], pr.k, spikes);
            pr.v = lif_step(st.qkv[2], pr.v, spikes);
        }
        st.ring.update(pr.k, pr.v);
        AttentionStep att = online_attention_step(pr.q, st.ring, ap.scale());
        std::vector<Scalar> mha = concat_output(att.output, ap);
        std::vector<Scalar> f(D);
        for (std::size_t i = 0; i < D; ++i) f[i] = z_[i] + mha[i];

        std::vector<Scalar> n2(D);
        kernels::layer_norm_row(f, model_->weight(Lb.ln2_gain).span(), model_->weight(Lb.ln2_offset).span(),
                                Scalar(1e-5), n2);
        std::vector<Scalar> hidden(c.hidden), ffn(D);
        if (c.sparse()) {
            kernels::linear_row(n2, model_->weight(Lb.fc1_w).data(), {}, hidden);
            hidden = lif_step(st.ffn[0], hidden, lif_params(c, LifOutput::spikes));
            kernels::linear_row(hidden, model_->weight(Lb.fc2_w).data(), {}, ffn);
            ffn = lif_step(st.ffn[1], ffn, lif_params(c, LifOutput::membrane));
        } else {
            std::vector<Scalar> pre(c.hidden);
            kernels::linear_row(n2, model_->weight(Lb.fc1_w).data(), model_->weight(Lb.fc1_b).span(), pre);
            for (std::size_t i = 0; i < c.hidden; ++i) hidden[i] = kernels::gelu(pre[i]);
            kernels::linear_row(hidden, model_->weight(Lb.fc2_w).data(), model_->weight(Lb.fc2_b).span(), ffn);
        }
        for (std::size_t i = 0; i < D; ++i) z_[i] = f[i] + ffn[i];

        if (b == 0 && observer_) {
            const auto& ring = st.ring;
            for (std::size_t head = 0; head < c.heads; ++head) {
                const Scalar* q = pr.q.data() + head * c.attn_dim;
                for (std::size_t j = 0; j < ring.fill(); ++j) {
                    const Scalar* k = ring.key(head, ring.chronological_slot(j));
                    for (std::size_t i = 0; i < c.attn_dim; ++i) activity.qk_active += (q[i] != 0 && k[i] != 0);
                    ++activity.qk_pairs;
                }
            }
            activity.v = pr.v;
            activity.attention = att.output;
            activity.ffl1 = hidden;
            observer_(activity);
        }
    }
    return z_;
}

std::span<const Scalar> StreamingSession::step_token(std::span<const Scalar> embedding) {
    const auto& c = model_->config();
    const auto& L = model_->layout();
    encode_token(embedding);
    std::vector<Scalar> pred(c.n_doa);
    kernels::linear_row(z_, model_->weight(L.reg_w).data(), model_->weight(L.reg_b).span(), pred);
    out_.clear();
    for (std::size_t r = 0; r < c.stride(); ++r) out_.insert(out_.end(), pred.begin(), pred.end());
    ++tokens_emitted_;
    return out_;
}

Tensor stream_token_outputs(const Model& model, const Tensor& emg) {
    const auto& c = model.config();
    if (emg.rank() != 2 || emg.dim(0) != c.channels) throw ShapeError("stream_token_outputs: emg must be [C x T]");
    const std::size_t T = emg.dim(1);
    StreamingSession session(model);
    std::vector<Scalar> rows;
    std::vector<Scalar> sample(c.channels);
    auto collect = [&](std::span<const Scalar> released) {
        // Every token releases `stride` identical rows; keep one.
        for (std::size_t off = 0; off < released.size(); off += c.n_doa * c.stride()) {
            rows.insert(rows.end(), released.begin() + off, released.begin() + off + c.n_doa);
        }
    };
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t ch = 0; ch < c.channels; ++ch) sample[ch] = emg[ch * T + t];
        collect(session.push(sample));
    }
    collect(session.finish());
    const std::size_t n = rows.size() / c.n_doa;
    return Tensor({n, c.n_doa}, std::move(rows));
}

Tensor stream_recording(const Model& model, const Tensor& emg) {
    Tensor tokens = stream_token_outputs(model, emg);
    return align_token_outputs(tokens, model.config().stride(), emg.dim(1));
}

STREAMTF_NS_END
