#include "streamtf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

STREAMTF_NS_BEGIN

namespace kernels {

namespace {
constexpr Scalar kGeluC = Scalar(0.7978845608028654);  // sqrt(2/pi)
constexpr Scalar kGeluA = Scalar(0.044715);
}  // namespace

Scalar gelu(Scalar x) {
    const Scalar inner = kGeluC * (x + kGeluA * x * x * x);
    return Scalar(0.5) * x * (Scalar(1) + std::tanh(inner));
}

Scalar gelu_grad(Scalar x) {
    const Scalar inner = kGeluC * (x + kGeluA * x * x * x);
    const Scalar t = std::tanh(inner);
    const Scalar dinner = kGeluC * (Scalar(1) + Scalar(3) * kGeluA * x * x);
    return Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * x * (Scalar(1) - t * t) * dinner;
}

void linear_row(std::span<const Scalar> in, const Scalar* w, std::span<const Scalar> b, std::span<Scalar> out) {
    const std::size_t n_in = in.size();
    for (std::size_t o = 0; o < out.size(); ++o) {
        const Scalar* wr = w + o * n_in;
        Scalar acc = b.empty() ? Scalar(0) : b[o];
        for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * in[i];
        out[o] = acc;
    }
}

Scalar layer_norm_row(std::span<const Scalar> in, std::span<const Scalar> gain, std::span<const Scalar> offset,
                      Scalar eps, std::span<Scalar> out, Scalar* xhat) {
    const std::size_t n = in.size();
    Scalar mean = 0;
    for (auto v : in) mean += v;
    mean /= static_cast<Scalar>(n);
    Scalar var = 0;
    for (auto v : in) var += (v - mean) * (v - mean);
    var /= static_cast<Scalar>(n);
    const Scalar rstd = Scalar(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
        const Scalar h = (in[i] - mean) * rstd;
        if (xhat) xhat[i] = h;
        out[i] = gain[i] * h + offset[i];
    }
    return rstd;
}

bool masked_softmax_row(std::span<const Scalar> scores, std::span<const bool> mask, std::span<Scalar> out) {
    const std::size_t n = scores.size();
    auto on = [&](std::size_t j) { return mask.empty() || mask[j]; };
    bool any = false;
    Scalar mx = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!on(j)) continue;
        if (!any || scores[j] > mx) mx = scores[j];
        any = true;
    }
    if (!any) {
        std::fill(out.begin(), out.end(), Scalar(0));
        return false;
    }
    Scalar sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = on(j) ? std::exp(scores[j] - mx) : Scalar(0);
        sum += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
    return true;
}

bool attend(const Scalar* q, const Scalar* const* keys, const Scalar* const* values, std::size_t count, std::size_t d,
            Scalar scale, Scalar* weights, Scalar* out, MacCounter* counter) {
    std::fill(out, out + d, Scalar(0));
    if (count == 0) return false;
    for (std::size_t j = 0; j < count; ++j) {
        Scalar dot = 0;
        for (std::size_t i = 0; i < d; ++i) dot += q[i] * keys[j][i];
        weights[j] = dot * scale;
    }
    masked_softmax_row({weights, count}, {}, {weights, count});
    for (std::size_t j = 0; j < count; ++j) {
        const Scalar w = weights[j];
        for (std::size_t i = 0; i < d; ++i) out[i] += w * values[j][i];
    }
    if (counter) counter->macs += 2 * count * d;
    return true;
}

void conv_token(std::span<const Scalar> window, const Scalar* w, std::span<const Scalar> b, std::size_t channels,
                std::size_t kernel, std::span<Scalar> out) {
    const std::size_t per_out = channels * kernel;
    for (std::size_t o = 0; o < out.size(); ++o) {
        const Scalar* wo = w + o * per_out;
        Scalar acc = b[o];
        for (std::size_t i = 0; i < per_out; ++i) acc += wo[i] * window[i];
        out[o] = acc;
    }
}

void lif_step(std::span<Scalar> u, std::span<Scalar> i, std::span<Scalar> s, std::span<const Scalar> drive,
              const LifCoefficients& k) {
    for (std::size_t n = 0; n < u.size(); ++n) {
        const Scalar u_prev = u[n];
        const Scalar i_prev = i[n];
        const Scalar s_prev = s[n];
        s[n] = heaviside(u_prev - k.theta);
        u[n] = k.alpha * (Scalar(1) - s_prev) * u_prev + (Scalar(1) - k.alpha) * i_prev;
        i[n] = k.beta * i_prev + (Scalar(1) - k.beta) * drive[n];
    }
}

}  // namespace kernels

STREAMTF_NS_END
