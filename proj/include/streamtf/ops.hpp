#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "streamtf/kernels.hpp"
#include "streamtf/rng.hpp"
#include "streamtf/tape.hpp"

// Differentiable ops. Every op records its output on the tape of its first
// input together with a backward rule.
STREAMTF_NS_BEGIN

namespace ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, Scalar c);
Var transpose(Var x);  // rank-2 only

// x [rows x in] times w^T with w [out x in], plus optional bias [out].
Var linear(Var x, Var w);
Var linear(Var x, Var w, Var b);

// x [C x T], weight [D x C x k], bias [D] -> [D x N] with
// N = floor((T + 2p - k) / s) + 1, zero padding on both ends.
Var conv1d_temporal(Var x, Var weight, Var bias, std::size_t stride, std::size_t padding);
std::size_t conv_output_length(std::size_t t, std::size_t kernel, std::size_t stride, std::size_t padding);

Var layer_norm(Var x, Var gain, Var offset, Scalar eps = Scalar(1e-5));
Var gelu(Var x);
// Identity when training is false or p == 0; otherwise zeroes entries with
// probability p and scales survivors by 1/(1-p).
Var dropout(Var x, Scalar p, bool training, Rng& rng);

// Forward H(x) with H(0) = 1; backward scaled by the SuperSpike surrogate.
Var heaviside_surrogate(Var x, Scalar beta_s);

// Softmax over the last axis honoring a mask with the same shape as scores
// (an empty mask leaves every entry in).
// Fully masked rows produce zeros; degenerate_rows (when given) receives
// their count.
Var masked_softmax(Var scores, const std::vector<bool>& mask, std::size_t* degenerate_rows = nullptr);

Var sum(Var x);
Var mean(Var x);
Var l1_loss(Var y, Var target);  // mean |y - target|
// Euclidean norm of the concatenation of all inputs.
Var l2_norm(std::span<const Var> xs);
Var l2_norm(Var x);

// Token outputs [N x F] duplicated `factor` times along time into [F x T]:
// the N*factor samples are truncated at the tail when longer than T and
// prefixed with copies of the first token when shorter.
Var upsample_tokens(Var tokens, std::size_t factor, std::size_t length);

}  // namespace ops

STREAMTF_NS_END
