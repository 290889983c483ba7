#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamtf/attention.hpp"
#include "streamtf/config.hpp"
#include "streamtf/rng.hpp"
#include "streamtf/spiking.hpp"
#include "streamtf/tape.hpp"

STREAMTF_NS_BEGIN

struct Parameter {
    std::string name;
    Tensor value;
};

inline constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

// Indices into Model::parameters(). kAbsent marks layers a variant drops.
struct BlockLayout {
    std::size_t ln1_gain = kAbsent, ln1_offset = kAbsent;
    std::size_t wq = kAbsent, wk = kAbsent, wv = kAbsent;
    std::size_t wo = kAbsent, bo = kAbsent;
    std::size_t ln2_gain = kAbsent, ln2_offset = kAbsent;
    std::size_t fc1_w = kAbsent, fc1_b = kAbsent;
    std::size_t fc2_w = kAbsent, fc2_b = kAbsent;
};

struct ModelLayout {
    std::size_t embed_w = kAbsent, embed_b = kAbsent;
    std::vector<BlockLayout> blocks;
    std::size_t reg_w = kAbsent, reg_b = kAbsent;
};

// Weights of one network. Parameters are kept in declaration order, which
// is also the checkpoint order.
class Model {
   public:
    // Uniform init in +-sqrt(1/fan_in); layer-norm gains 1, offsets 0.
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const ModelLayout& layout() const { return layout_; }

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    const Tensor& weight(std::size_t index) const { return params_.at(index).value; }
    Parameter& find(std::string_view name);

    std::size_t parameter_count() const;
    AttentionParams attention_params(std::size_t block) const;

   private:
    void declare(std::string name, Shape shape, std::size_t& slot);

    ModelConfig config_;
    ModelLayout layout_;
    std::vector<Parameter> params_;
};

// Shapes are a pure function of the config; this is the closed form.
std::size_t expected_parameter_count(const ModelConfig& config);

std::vector<Var> bind_parameters(Tape& tape, const Model& model, bool requires_grad);

struct ForwardOptions {
    bool training = false;  // enables dropout
    Rng* rng = nullptr;     // required when training with dropout
    kernels::MacCounter* attention_macs = nullptr;
};

// Intermediate activations the loss and sparsity accounting need.
struct BlockTrace {
    Var q, k, v;
    Var attention;  // concatenated heads, input of the output projection
    Var ffl1;       // hidden FNN activation (GeLU output or spikes)
};

struct ParallelOutput {
    Var embedding;  // [N x D], binary in sparse variants
    std::vector<BlockTrace> blocks;
    Var tokens;       // [N x D] encoder output
    Var token_preds;  // [N x n_doa]
    Var predictions;  // [n_doa x T]
};

// Conv embedding: x [C x T] -> tokens [N x D], binarized in sparse variants.
Var embed(const Model& model, std::span<const Var> params, Var x);
// One pre-norm encoder block over a whole window, attention unfolded over M.
Var encoder_block(const Model& model, std::span<const Var> params, std::size_t block, Var x, const ForwardOptions& opts,
                  BlockTrace* trace = nullptr);
// Token-wise regression then duplication by the stride, aligned to length T.
Var regress_and_upsample(const Model& model, std::span<const Var> params, Var z, std::size_t length,
                         Var* token_preds = nullptr);

ParallelOutput forward_parallel(const Model& model, std::span<const Var> params, Var x, const ForwardOptions& opts = {});

// Convenience inference on a whole recording, no gradients. Returns [n_doa x T].
Tensor predict_parallel(const Model& model, const Tensor& emg);

// Per-token activity seen by the streaming engine, for sparsity accounting.
struct TokenActivity {
    std::span<const Scalar> embedding;
    std::span<const Scalar> v;          // first block
    std::span<const Scalar> attention;  // first block
    std::span<const Scalar> ffl1;       // first block
    std::uint64_t qk_active = 0;        // (q_i, k_i) pairs with both nonzero
    std::uint64_t qk_pairs = 0;         // query-key products evaluated
};

// Token-by-token inference. Keeps the raw-sample window, ring buffers and
// LIF states of one stream. The single leading zero of the conv padding is
// applied at stream start only.
class StreamingSession {
   public:
    explicit StreamingSession(const Model& model);

    // Feeds one sample of C channels. Returns the predictions this sample
    // releases: nothing, or `stride` copies of the new token's n_doa
    // outputs, row after row.
    std::span<const Scalar> push(std::span<const Scalar> sample);
    // Appends the trailing zero pad. Releases the final token when the
    // parallel path would have produced one from that pad.
    std::span<const Scalar> finish();

    // Runs one embedding row through the encoder and regression.
    std::span<const Scalar> step_token(std::span<const Scalar> embedding);
    // Encoder stack only (advances the ring buffers and LIF states); returns
    // the output token.
    std::span<const Scalar> encode_token(std::span<const Scalar> token);

    void reset();
    void set_observer(std::function<void(const TokenActivity&)> observer) { observer_ = std::move(observer); }

    std::size_t samples_seen() const { return samples_seen_; }
    std::size_t tokens_emitted() const { return tokens_emitted_; }
    const KVRingBuffer& ring(std::size_t block) const { return blocks_.at(block).ring; }

   private:
    struct BlockState {
        KVRingBuffer ring;
        std::vector<LifState> qkv;  // sparseB: q, k, v layers
        std::vector<LifState> ffn;  // sparse: hidden, output layers
    };

    std::span<const Scalar> emit_token();

    const Model* model_;
    std::vector<AttentionParams> attn_;
    std::vector<BlockState> blocks_;
    std::vector<Scalar> window_;  // [k x C] ring of padded samples, sample-major
    std::size_t padded_seen_ = 0;
    std::size_t samples_seen_ = 0;
    std::size_t tokens_emitted_ = 0;
    bool finished_ = false;
    std::vector<Scalar> out_;
    std::vector<Scalar> z_;
    std::function<void(const TokenActivity&)> observer_;
};

// Streams a whole recording sample by sample (then finish()), returning the
// per-token regression outputs [N x n_doa].
Tensor stream_token_outputs(const Model& model, const Tensor& emg);
// Same, aligned to the recording length like predict_parallel: [n_doa x T].
Tensor stream_recording(const Model& model, const Tensor& emg);

// Duplicates token outputs [N x F] into [F x T] (see ops::upsample_tokens).
Tensor align_token_outputs(const Tensor& token_preds, std::size_t factor, std::size_t length);

STREAMTF_NS_END
