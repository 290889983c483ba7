#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

#include "streamtf/base.hpp"

// Row-level numerical kernels. Both the parallel (tape) ops and the
// streaming engine call these, which is what makes the two paths agree
// bit-for-bit: same arithmetic, same order.
STREAMTF_NS_BEGIN

namespace kernels {

// Counts multiply-accumulates performed by the attention kernels.
struct MacCounter {
    std::uint64_t macs = 0;
};

inline Scalar heaviside(Scalar x) { return x >= Scalar(0) ? Scalar(1) : Scalar(0); }

// SuperSpike surrogate derivative 1 / (1 + beta |x|)^2.
inline Scalar superspike(Scalar x, Scalar beta) {
    const Scalar den = Scalar(1) + beta * std::abs(x);
    return Scalar(1) / (den * den);
}

// tanh approximation of GeLU.
Scalar gelu(Scalar x);
Scalar gelu_grad(Scalar x);

// out[o] = b[o] + sum_i w[o, i] * in[i]; w is [out x in] row-major. b may be empty.
void linear_row(std::span<const Scalar> in, const Scalar* w, std::span<const Scalar> b, std::span<Scalar> out);

// Normalizes over the row, then applies gain/offset. Writes the normalized
// (pre-affine) values to xhat when non-null; returns 1/sqrt(var + eps).
Scalar layer_norm_row(std::span<const Scalar> in, std::span<const Scalar> gain, std::span<const Scalar> offset, Scalar eps,
                      std::span<Scalar> out, Scalar* xhat = nullptr);

// Softmax of a row restricted to entries where mask is true (all entries when
// mask is empty). Masked entries come out as exactly 0. Returns false, and
// writes zeros, when no entry is unmasked.
bool masked_softmax_row(std::span<const Scalar> scores, std::span<const bool> mask, std::span<Scalar> out);

// Attention of one query over `count` key/value rows given in chronological
// order. keys[j] and values[j] each point at `d` scalars. weights receives
// the softmax weights (count entries). With count == 0 the output is zero
// and false is returned.
bool attend(const Scalar* q, const Scalar* const* keys, const Scalar* const* values, std::size_t count, std::size_t d,
            Scalar scale, Scalar* weights, Scalar* out, MacCounter* counter = nullptr);

// Conv output for one token. window is [C x k] row-major (channel-major),
// already including any zero padding; w is [D x C x k].
void conv_token(std::span<const Scalar> window, const Scalar* w, std::span<const Scalar> b, std::size_t channels,
                std::size_t kernel, std::span<Scalar> out);

struct LifCoefficients {
    Scalar alpha;
    Scalar beta;
    Scalar theta;
};

// One step of the LIF recurrence over a layer of units, exactly as
//   S_t = H(U_{t-1} - theta)
//   U_t = alpha (1 - S_{t-1}) U_{t-1} + (1 - alpha) I_{t-1}
//   I_t = beta I_{t-1} + (1 - beta) c_t
// where c_t is the already-weighted input. u, i, s hold the t-1 state on
// entry and the t state on exit.
void lif_step(std::span<Scalar> u, std::span<Scalar> i, std::span<Scalar> s, std::span<const Scalar> drive,
              const LifCoefficients& k);

}  // namespace kernels

STREAMTF_NS_END
