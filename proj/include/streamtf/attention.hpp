#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "streamtf/kernels.hpp"
#include "streamtf/tape.hpp"

STREAMTF_NS_BEGIN

// Fixed-capacity memory of the last M key/value projections for every head.
// Storage is head-major [h x M x d]. Slots at or beyond `fill` have never
// been written and are excluded from attention, not scored as zeros.
class KVRingBuffer {
   public:
    KVRingBuffer(std::size_t heads, std::size_t memory, std::size_t dim);

    // Overwrites the slot at the cursor (the oldest entry once full) with one
    // token's keys and values, each [h x d].
    void update(std::span<const Scalar> k_t, std::span<const Scalar> v_t);
    void reset();

    std::size_t heads() const { return heads_; }
    std::size_t memory() const { return memory_; }
    std::size_t dim() const { return dim_; }
    std::size_t cursor() const { return cursor_; }
    std::size_t fill() const { return fill_; }

    const Scalar* key(std::size_t head, std::size_t slot) const { return &keys_[(head * memory_ + slot) * dim_]; }
    const Scalar* value(std::size_t head, std::size_t slot) const { return &values_[(head * memory_ + slot) * dim_]; }
    // Slot holding the j-th oldest valid entry, j in [0, fill).
    std::size_t chronological_slot(std::size_t j) const;

   private:
    std::size_t heads_;
    std::size_t memory_;
    std::size_t dim_;
    std::size_t cursor_ = 0;
    std::size_t fill_ = 0;
    std::vector<Scalar> keys_;
    std::vector<Scalar> values_;
};

struct AttentionStep {
    std::vector<Scalar> output;  // [h x d], head-major
    bool degenerate = false;     // no valid slot yet; output is zero
};

// One query against the buffer contents, softmax over valid slots only.
AttentionStep online_attention_step(std::span<const Scalar> q_t, const KVRingBuffer& buf, Scalar scale,
                                    kernels::MacCounter* counter = nullptr);

// Training form of the same computation. Q, K, V are [N x (h*d)] with
// head-major columns. Token t attends to tokens max(0, t-M+1) .. t.
Var unfold_sliding_attention(Var q, Var k, Var v, std::size_t heads, std::size_t memory, Scalar scale,
                             kernels::MacCounter* counter = nullptr);

// Conventional full self-attention over all N tokens (optionally causal).
// Baseline only: O(N^2).
Var self_attention_reference(Var q, Var k, Var v, std::size_t heads, Scalar scale, bool causal = false,
                             kernels::MacCounter* counter = nullptr);

// Projection weights of one multi-head attention layer. wq/wk/wv are
// [(h*d) x D] (head j owns rows j*d .. j*d+d-1); wo is [D x (h*d)].
// Q/K/V projections carry no bias, the output projection does.
struct AttentionParams {
    std::size_t heads = 0;
    std::size_t dim = 0;
    std::size_t memory = 0;
    Tensor wq, wk, wv, wo, bo;

    Scalar scale() const;
    void validate(std::size_t embed_dim) const;
};

struct Projection {
    std::vector<Scalar> q, k, v;  // [h x d] each
};

Projection multi_head_project(std::span<const Scalar> x_t, const AttentionParams& p);
std::vector<Scalar> concat_output(std::span<const Scalar> heads, const AttentionParams& p);

STREAMTF_NS_END
