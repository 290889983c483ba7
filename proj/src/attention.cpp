#include "streamtf/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

STREAMTF_NS_BEGIN

KVRingBuffer::KVRingBuffer(std::size_t heads, std::size_t memory, std::size_t dim)
    : heads_(heads), memory_(memory), dim_(dim), keys_(heads * memory * dim, 0), values_(heads * memory * dim, 0) {
    if (memory < 1) throw ConfigError("KVRingBuffer: memory length M must be >= 1");
    if (heads < 1 || dim < 1) throw ConfigError("KVRingBuffer: heads and dim must be >= 1");
}

void KVRingBuffer::update(std::span<const Scalar> k_t, std::span<const Scalar> v_t) {
    if (k_t.size() != heads_ * dim_ || v_t.size() != heads_ * dim_) {
        throw ShapeError("KVRingBuffer::update: expected h*d = " + std::to_string(heads_ * dim_) + " values");
    }
    for (std::size_t h = 0; h < heads_; ++h) {
        std::copy_n(k_t.data() + h * dim_, dim_, keys_.data() + (h * memory_ + cursor_) * dim_);
        std::copy_n(v_t.data() + h * dim_, dim_, values_.data() + (h * memory_ + cursor_) * dim_);
    }
    cursor_ = (cursor_ + 1) % memory_;
    fill_ = std::min(fill_ + 1, memory_);
}

void KVRingBuffer::reset() {
    std::fill(keys_.begin(), keys_.end(), Scalar(0));
    std::fill(values_.begin(), values_.end(), Scalar(0));
    cursor_ = 0;
    fill_ = 0;
}

std::size_t KVRingBuffer::chronological_slot(std::size_t j) const {
    return fill_ < memory_ ? j : (cursor_ + j) % memory_;
}

AttentionStep online_attention_step(std::span<const Scalar> q_t, const KVRingBuffer& buf, Scalar scale,
                                    kernels::MacCounter* counter) {
    const std::size_t h = buf.heads(), d = buf.dim(), n = buf.fill();
    if (q_t.size() != h * d) throw ShapeError("online_attention_step: query must hold h*d values");
    AttentionStep step;
    step.output.assign(h * d, Scalar(0));
    step.degenerate = n == 0;
    std::vector<const Scalar*> keys(n), values(n);
    std::vector<Scalar> weights(n);
    for (std::size_t head = 0; head < h; ++head) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t slot = buf.chronological_slot(j);
            keys[j] = buf.key(head, slot);
            values[j] = buf.value(head, slot);
        }
        kernels::attend(q_t.data() + head * d, keys.data(), values.data(), n, d, scale, weights.data(),
                        step.output.data() + head * d, counter);
    }
    return step;
}

namespace {

// Each query t attends to the contiguous key range [first(t), last(t)].
// Forward and backward are shared by the sliding and the full forms.
template <typename Range>
Var windowed_attention(Var q, Var k, Var v, std::size_t heads, Scalar scale, Range range, const char* rule,
                       kernels::MacCounter* counter) {
    const Tensor& qv = q.value();
    const Tensor& kv = k.value();
    const Tensor& vv = v.value();
    if (q.tape != k.tape || q.tape != v.tape) throw std::invalid_argument("attention inputs live on different tapes");
    if (qv.rank() != 2) throw ShapeError(std::string(rule) + ": Q must be [N x h*d], got " + shape_str(qv.shape()));
    if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) throw ShapeError(std::string(rule) + ": Q/K/V shapes differ");
    if (heads == 0 || qv.cols() % heads != 0) throw ShapeError(std::string(rule) + ": h*d not divisible by heads");
    const std::size_t N = qv.dim(0), width = qv.cols(), d = width / heads;
    if (N < 1) throw ShapeError(std::string(rule) + ": N must be >= 1");

    std::size_t max_count = 0;
    for (std::size_t t = 0; t < N; ++t) max_count = std::max(max_count, range(t).second - range(t).first + 1);

    Tensor out({N, width});
    // Softmax weights per (t, head), max_count slots each.
    std::vector<Scalar> saved(N * heads * max_count, Scalar(0));
    std::vector<const Scalar*> keys(max_count), values(max_count);
    for (std::size_t t = 0; t < N; ++t) {
        const auto [first, last] = range(t);
        const std::size_t count = last - first + 1;
        for (std::size_t head = 0; head < heads; ++head) {
            for (std::size_t j = 0; j < count; ++j) {
                keys[j] = kv.data() + (first + j) * width + head * d;
                values[j] = vv.data() + (first + j) * width + head * d;
            }
            kernels::attend(qv.data() + t * width + head * d, keys.data(), values.data(), count, d, scale,
                            saved.data() + (t * heads + head) * max_count, out.data() + t * width + head * d, counter);
        }
    }

    return q.tape->record(
        std::move(out), {q.id, k.id, v.id},
        [qi = q.id, ki = k.id, vi = v.id, saved = std::move(saved), range, N, heads, d, width, max_count, scale](
            Tape& tp, std::size_t self) {
            const Tensor& g = tp.grad(self);
            const Tensor& qv = tp.value(qi);
            const Tensor& kv = tp.value(ki);
            const Tensor& vv = tp.value(vi);
            Tensor* gq = tp.requires_grad(qi) ? &tp.grad_acc(qi) : nullptr;
            Tensor* gk = tp.requires_grad(ki) ? &tp.grad_acc(ki) : nullptr;
            Tensor* gv = tp.requires_grad(vi) ? &tp.grad_acc(vi) : nullptr;
            std::vector<Scalar> gw(max_count);
            for (std::size_t t = 0; t < N; ++t) {
                const auto [first, last] = range(t);
                const std::size_t count = last - first + 1;
                for (std::size_t head = 0; head < heads; ++head) {
                    const Scalar* w = saved.data() + (t * heads + head) * max_count;
                    const Scalar* go = g.data() + t * width + head * d;
                    const Scalar* qt = qv.data() + t * width + head * d;
                    Scalar dot = 0;
                    for (std::size_t j = 0; j < count; ++j) {
                        const Scalar* vj = vv.data() + (first + j) * width + head * d;
                        Scalar acc = 0;
                        for (std::size_t i = 0; i < d; ++i) acc += go[i] * vj[i];
                        gw[j] = acc;
                        dot += w[j] * acc;
                    }
                    for (std::size_t j = 0; j < count; ++j) {
                        const std::size_t row = (first + j) * width + head * d;
                        if (gv) {
                            for (std::size_t i = 0; i < d; ++i) (*gv)[row + i] += w[j] * go[i];
                        }
                        const Scalar gs = w[j] * (gw[j] - dot) * scale;
                        if (gs == Scalar(0)) continue;
                        if (gq) {
                            for (std::size_t i = 0; i < d; ++i) (*gq)[t * width + head * d + i] += gs * kv[row + i];
                        }
                        if (gk) {
                            for (std::size_t i = 0; i < d; ++i) (*gk)[row + i] += gs * qt[i];
                        }
                    }
                }
            }
        },
        rule);
}

}  // namespace

Var unfold_sliding_attention(Var q, Var k, Var v, std::size_t heads, std::size_t memory, Scalar scale,
                             kernels::MacCounter* counter) {
    if (memory < 1) throw ConfigError("unfold_sliding_attention: memory length M must be >= 1");
    auto range = [memory](std::size_t t) {
        const std::size_t first = t + 1 >= memory ? t + 1 - memory : 0;
        return std::pair<std::size_t, std::size_t>{first, t};
    };
    return windowed_attention(q, k, v, heads, scale, range, "unfold_sliding_attention", counter);
}

Var self_attention_reference(Var q, Var k, Var v, std::size_t heads, Scalar scale, bool causal,
                             kernels::MacCounter* counter) {
    const std::size_t N = q.value().rank() == 2 ? q.value().dim(0) : 0;
    auto range = [N, causal](std::size_t t) { return std::pair<std::size_t, std::size_t>{0, causal ? t : N - 1}; };
    return windowed_attention(q, k, v, heads, scale, range, "self_attention_reference", counter);
}

Scalar AttentionParams::scale() const { return Scalar(1) / std::sqrt(static_cast<Scalar>(dim)); }

void AttentionParams::validate(std::size_t embed_dim) const {
    const std::size_t hd = heads * dim;
    if (heads < 1 || dim < 1) throw ConfigError("attention: heads and dim must be >= 1");
    if (memory < 1) throw ConfigError("attention: memory length M must be >= 1");
    expect_shape(wq, {hd, embed_dim}, "attention W_Q");
    expect_shape(wk, {hd, embed_dim}, "attention W_K");
    expect_shape(wv, {hd, embed_dim}, "attention W_V");
    expect_shape(wo, {embed_dim, hd}, "attention W_O");
    expect_shape(bo, {embed_dim}, "attention W_O bias");
}

Projection multi_head_project(std::span<const Scalar> x_t, const AttentionParams& p) {
    const std::size_t hd = p.heads * p.dim;
    if (p.wq.rank() != 2 || x_t.size() != p.wq.dim(1)) throw ShapeError("multi_head_project: input size mismatch");
    Projection out{std::vector<Scalar>(hd), std::vector<Scalar>(hd), std::vector<Scalar>(hd)};
    kernels::linear_row(x_t, p.wq.data(), {}, out.q);
    kernels::linear_row(x_t, p.wk.data(), {}, out.k);
    kernels::linear_row(x_t, p.wv.data(), {}, out.v);
    return out;
}

std::vector<Scalar> concat_output(std::span<const Scalar> heads, const AttentionParams& p) {
    if (p.wo.rank() != 2 || heads.size() != p.wo.dim(1)) throw ShapeError("concat_output: expected h*d values");
    std::vector<Scalar> out(p.wo.dim(0));
    kernels::linear_row(heads, p.wo.data(), p.bo.span(), out);
    return out;
}

STREAMTF_NS_END
