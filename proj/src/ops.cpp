#include "streamtf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

STREAMTF_NS_BEGIN

namespace ops {

namespace {

Tape& tape_of(Var v) {
    if (!v.tape) throw std::invalid_argument("op on an unbound variable");
    return *v.tape;
}

void same_tape(Var a, Var b) {
    if (a.tape != b.tape) throw std::invalid_argument("op inputs live on different tapes");
}

void expect_same_shape(Var a, Var b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Var add(Var a, Var b) {
    same_tape(a, b);
    expect_same_shape(a, b, "add");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
    return tape_of(a).record(
        std::move(out), {a.id, b.id},
        [a = a.id, b = b.id](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            for (auto in : {a, b}) {
                if (!t.requires_grad(in)) continue;
                Tensor& gi = t.grad_acc(in);
                for (std::size_t i = 0; i < g.numel(); ++i) gi[i] += g[i];
            }
        },
        "add");
}

Var sub(Var a, Var b) {
    same_tape(a, b);
    expect_same_shape(a, b, "sub");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
    return tape_of(a).record(
        std::move(out), {a.id, b.id},
        [a = a.id, b = b.id](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            if (t.requires_grad(a)) {
                Tensor& ga = t.grad_acc(a);
                for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
            }
            if (t.requires_grad(b)) {
                Tensor& gb = t.grad_acc(b);
                for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
            }
        },
        "sub");
}

Var scale(Var x, Scalar c) {
    Tensor out = x.value();
    for (auto& v : out.values()) v *= c;
    return tape_of(x).record(
        std::move(out), {x.id},
        [x = x.id, c](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad_acc(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += c * g[i];
        },
        "scale");
}

Var transpose(Var x) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("transpose: rank-2 input required, got " + shape_str(xv.shape()));
    const std::size_t r = xv.dim(0), c = xv.dim(1);
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
    return tape_of(x).record(
        std::move(out), {x.id},
        [x = x.id, r, c](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad_acc(x);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
        },
        "transpose");
}

namespace {

Var linear_impl(Var x, Var w, const Var* b) {
    same_tape(x, w);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (wv.rank() != 2) throw ShapeError("linear: weight must be [out x in], got " + shape_str(wv.shape()));
    const std::size_t n_out = wv.dim(0), n_in = wv.dim(1);
    if (xv.cols() != n_in) {
        throw ShapeError("linear: input " + shape_str(xv.shape()) + " incompatible with weight " + shape_str(wv.shape()));
    }
    if (b) {
        same_tape(x, *b);
        expect_shape(b->value(), {n_out}, "linear bias");
    }
    const std::size_t rows = xv.rows();
    Shape shape = xv.shape();
    shape.back() = n_out;
    Tensor out(shape);
    std::span<const Scalar> bias = b ? b->value().span() : std::span<const Scalar>{};
    for (std::size_t r = 0; r < rows; ++r) kernels::linear_row(xv.row(r), wv.data(), bias, out.row(r));

    std::vector<std::size_t> inputs{x.id, w.id};
    if (b) inputs.push_back(b->id);
    const std::size_t bid = b ? b->id : x.id;
    const bool has_bias = b != nullptr;
    return tape_of(x).record(
        std::move(out), inputs,
        [x = x.id, w = w.id, bid, has_bias, rows, n_in, n_out](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& xv = t.value(x);
            const Tensor& wv = t.value(w);
            if (t.requires_grad(x)) {
                Tensor& gx = t.grad_acc(x);
                for (std::size_t r = 0; r < rows; ++r) {
                    const Scalar* gr = g.data() + r * n_out;
                    Scalar* gxr = gx.data() + r * n_in;
                    for (std::size_t o = 0; o < n_out; ++o) {
                        const Scalar go = gr[o];
                        if (go == Scalar(0)) continue;
                        const Scalar* wr = wv.data() + o * n_in;
                        for (std::size_t i = 0; i < n_in; ++i) gxr[i] += go * wr[i];
                    }
                }
            }
            if (t.requires_grad(w)) {
                Tensor& gw = t.grad_acc(w);
                for (std::size_t r = 0; r < rows; ++r) {
                    const Scalar* gr = g.data() + r * n_out;
                    const Scalar* xr = xv.data() + r * n_in;
                    for (std::size_t o = 0; o < n_out; ++o) {
                        const Scalar go = gr[o];
                        if (go == Scalar(0)) continue;
                        Scalar* gwr = gw.data() + o * n_in;
                        for (std::size_t i = 0; i < n_in; ++i) gwr[i] += go * xr[i];
                    }
                }
            }
            if (has_bias && t.requires_grad(bid)) {
                Tensor& gb = t.grad_acc(bid);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t o = 0; o < n_out; ++o) gb[o] += g[r * n_out + o];
            }
        },
        "linear");
}

}  // namespace

Var linear(Var x, Var w) { return linear_impl(x, w, nullptr); }
Var linear(Var x, Var w, Var b) { return linear_impl(x, w, &b); }

std::size_t conv_output_length(std::size_t t, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (stride == 0) throw ConfigError("conv1d: stride must be >= 1");
    if (kernel == 0) throw ConfigError("conv1d: kernel must be >= 1");
    if (t + 2 * padding < kernel) {
        throw ShapeError("conv1d: input of " + std::to_string(t) + " samples is shorter than the kernel (" +
                         std::to_string(kernel) + ") with padding " + std::to_string(padding));
    }
    return (t + 2 * padding - kernel) / stride + 1;
}

Var conv1d_temporal(Var x, Var weight, Var bias, std::size_t stride, std::size_t padding) {
    same_tape(x, weight);
    same_tape(x, bias);
    const Tensor& xv = x.value();
    const Tensor& wv = weight.value();
    if (xv.rank() != 2) throw ShapeError("conv1d: input must be [C x T], got " + shape_str(xv.shape()));
    if (wv.rank() != 3) throw ShapeError("conv1d: weight must be [D x C x k], got " + shape_str(wv.shape()));
    const std::size_t C = xv.dim(0), T = xv.dim(1);
    const std::size_t D = wv.dim(0), k = wv.dim(2);
    if (wv.dim(1) != C) throw ShapeError("conv1d: weight channels do not match input channels");
    expect_shape(bias.value(), {D}, "conv1d bias");
    const std::size_t N = conv_output_length(T, k, stride, padding);

    // Gathers the zero-padded [C x k] window of token n.
    auto gather = [C, T, k, stride, padding](const Tensor& xs, std::size_t n, std::vector<Scalar>& win) {
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t p = n * stride + j;  // padded index
                win[c * k + j] = (p < padding || p - padding >= T) ? Scalar(0) : xs[c * T + (p - padding)];
            }
        }
    };

    Tensor out({D, N});
    std::vector<Scalar> win(C * k), col(D);
    for (std::size_t n = 0; n < N; ++n) {
        gather(xv, n, win);
        kernels::conv_token(win, wv.data(), bias.value().span(), C, k, col);
        for (std::size_t o = 0; o < D; ++o) out[o * N + n] = col[o];
    }
    return tape_of(x).record(
        std::move(out), {x.id, weight.id, bias.id},
        [x = x.id, w = weight.id, b = bias.id, C, T, D, k, N, stride, padding, gather](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& xv = t.value(x);
            const Tensor& wv = t.value(w);
            const bool gx_on = t.requires_grad(x), gw_on = t.requires_grad(w), gb_on = t.requires_grad(b);
            Tensor* gx = gx_on ? &t.grad_acc(x) : nullptr;
            Tensor* gw = gw_on ? &t.grad_acc(w) : nullptr;
            Tensor* gb = gb_on ? &t.grad_acc(b) : nullptr;
            std::vector<Scalar> win(C * k);
            for (std::size_t n = 0; n < N; ++n) {
                if (gw_on) gather(xv, n, win);
                for (std::size_t o = 0; o < D; ++o) {
                    const Scalar go = g[o * N + n];
                    if (gb_on) (*gb)[o] += go;
                    if (go == Scalar(0)) continue;
                    const Scalar* wo = wv.data() + o * C * k;
                    for (std::size_t c = 0; c < C; ++c) {
                        for (std::size_t j = 0; j < k; ++j) {
                            if (gw_on) (*gw)[o * C * k + c * k + j] += go * win[c * k + j];
                            if (gx_on) {
                                const std::size_t p = n * stride + j;
                                if (p >= padding && p - padding < T) (*gx)[c * T + (p - padding)] += go * wo[c * k + j];
                            }
                        }
                    }
                }
            }
        },
        "conv1d_temporal");
}

Var layer_norm(Var x, Var gain, Var offset, Scalar eps) {
    same_tape(x, gain);
    same_tape(x, offset);
    const Tensor& xv = x.value();
    const std::size_t D = xv.cols();
    if (D < 1) throw ShapeError("layer_norm: empty feature axis");
    expect_shape(gain.value(), {D}, "layer_norm gain");
    expect_shape(offset.value(), {D}, "layer_norm offset");
    const std::size_t rows = xv.rows();
    Tensor out(xv.shape());
    Tensor xhat(xv.shape());
    std::vector<Scalar> rstd(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        rstd[r] = kernels::layer_norm_row(xv.row(r), gain.value().span(), offset.value().span(), eps, out.row(r),
                                          xhat.row(r).data());
    }
    return tape_of(x).record(
        std::move(out), {x.id, gain.id, offset.id},
        [x = x.id, gn = gain.id, of = offset.id, xhat = std::move(xhat), rstd = std::move(rstd), rows, D](
            Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& gv = t.value(gn);
            if (t.requires_grad(gn)) {
                Tensor& gg = t.grad_acc(gn);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t i = 0; i < D; ++i) gg[i] += g[r * D + i] * xhat[r * D + i];
            }
            if (t.requires_grad(of)) {
                Tensor& go = t.grad_acc(of);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t i = 0; i < D; ++i) go[i] += g[r * D + i];
            }
            if (t.requires_grad(x)) {
                Tensor& gx = t.grad_acc(x);
                std::vector<Scalar> gh(D);
                for (std::size_t r = 0; r < rows; ++r) {
                    Scalar m1 = 0, m2 = 0;
                    for (std::size_t i = 0; i < D; ++i) {
                        gh[i] = g[r * D + i] * gv[i];
                        m1 += gh[i];
                        m2 += gh[i] * xhat[r * D + i];
                    }
                    m1 /= static_cast<Scalar>(D);
                    m2 /= static_cast<Scalar>(D);
                    for (std::size_t i = 0; i < D; ++i) {
                        gx[r * D + i] += rstd[r] * (gh[i] - m1 - xhat[r * D + i] * m2);
                    }
                }
            }
        },
        "layer_norm");
}

Var gelu(Var x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v = kernels::gelu(v);
    return tape_of(x).record(
        std::move(out), {x.id},
        [x = x.id](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& xv = t.value(x);
            Tensor& gx = t.grad_acc(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * kernels::gelu_grad(xv[i]);
        },
        "gelu");
}

Var dropout(Var x, Scalar p, bool training, Rng& rng) {
    if (!(p >= Scalar(0) && p < Scalar(1))) throw ConfigError("dropout: p must be in [0, 1)");
    if (!training || p == Scalar(0)) return x;
    const Scalar keep_scale = Scalar(1) / (Scalar(1) - p);
    std::vector<Scalar> mask(x.value().numel());
    for (auto& m : mask) m = rng.uniform() < static_cast<double>(p) ? Scalar(0) : keep_scale;
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask[i];
    return tape_of(x).record(
        std::move(out), {x.id},
        [x = x.id, mask = std::move(mask)](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad_acc(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * mask[i];
        },
        "dropout");
}

Var heaviside_surrogate(Var x, Scalar beta_s) {
    if (!(beta_s > Scalar(0))) throw ConfigError("heaviside_surrogate: beta_s must be > 0");
    Tensor out = x.value();
    for (auto& v : out.values()) v = kernels::heaviside(v);
    return tape_of(x).record(
        std::move(out), {x.id},
        [x = x.id, beta_s](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& xv = t.value(x);
            Tensor& gx = t.grad_acc(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * kernels::superspike(xv[i], beta_s);
        },
        "heaviside_surrogate");
}

Var masked_softmax(Var scores, const std::vector<bool>& mask, std::size_t* degenerate_rows) {
    const Tensor& sv = scores.value();
    if (!mask.empty() && mask.size() != sv.numel()) throw ShapeError("masked_softmax: mask size does not match scores");
    const std::size_t M = sv.cols(), rows = sv.rows();
    Tensor out(sv.shape());
    std::size_t degenerate = 0;
    // std::vector<bool> is not contiguous; rows are copied into a plain buffer.
    std::unique_ptr<bool[]> row_mask(new bool[M]);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < M; ++j) row_mask[j] = mask.empty() || mask[r * M + j];
        if (!kernels::masked_softmax_row(sv.row(r), {row_mask.get(), M}, out.row(r))) ++degenerate;
    }
    if (degenerate_rows) *degenerate_rows = degenerate;
    return tape_of(scores).record(
        std::move(out), {scores.id},
        [s = scores.id, rows, M](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& w = t.value(self);
            Tensor& gs = t.grad_acc(s);
            for (std::size_t r = 0; r < rows; ++r) {
                Scalar dot = 0;
                for (std::size_t j = 0; j < M; ++j) dot += w[r * M + j] * g[r * M + j];
                for (std::size_t j = 0; j < M; ++j) gs[r * M + j] += w[r * M + j] * (g[r * M + j] - dot);
            }
        },
        "masked_softmax");
}

Var sum(Var x) {
    Scalar acc = 0;
    for (auto v : x.value().values()) acc += v;
    return tape_of(x).record(
        Tensor({1}, {acc}), {x.id},
        [x = x.id](Tape& t, std::size_t self) {
            const Scalar g = t.grad(self)[0];
            Tensor& gx = t.grad_acc(x);
            for (auto& v : gx.values()) v += g;
        },
        "sum");
}

Var mean(Var x) {
    const std::size_t n = x.value().numel();
    if (n == 0) throw ShapeError("mean: empty tensor");
    return scale(sum(x), Scalar(1) / static_cast<Scalar>(n));
}

Var l1_loss(Var y, Var target) {
    same_tape(y, target);
    expect_same_shape(y, target, "l1_loss");
    const Tensor& yv = y.value();
    const Tensor& tv = target.value();
    const std::size_t n = yv.numel();
    if (n == 0) throw ShapeError("l1_loss: empty tensors");
    Scalar acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(yv[i] - tv[i]);
    acc /= static_cast<Scalar>(n);
    return tape_of(y).record(
        Tensor({1}, {acc}), {y.id, target.id},
        [y = y.id, tg = target.id, n](Tape& t, std::size_t self) {
            const Scalar g = t.grad(self)[0] / static_cast<Scalar>(n);
            const Tensor& yv = t.value(y);
            const Tensor& tv = t.value(tg);
            auto sign = [](Scalar v) { return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0)); };
            if (t.requires_grad(y)) {
                Tensor& gy = t.grad_acc(y);
                for (std::size_t i = 0; i < n; ++i) gy[i] += g * sign(yv[i] - tv[i]);
            }
            if (t.requires_grad(tg)) {
                Tensor& gt = t.grad_acc(tg);
                for (std::size_t i = 0; i < n; ++i) gt[i] -= g * sign(yv[i] - tv[i]);
            }
        },
        "l1_loss");
}

Var l2_norm(std::span<const Var> xs) {
    if (xs.empty()) throw ShapeError("l2_norm: no inputs");
    Scalar ss = 0;
    std::vector<std::size_t> ids;
    for (const Var& v : xs) {
        same_tape(xs[0], v);
        for (auto e : v.value().values()) ss += e * e;
        ids.push_back(v.id);
    }
    const Scalar norm = std::sqrt(ss);
    return tape_of(xs[0]).record(
        Tensor({1}, {norm}), ids,
        [ids, norm](Tape& t, std::size_t self) {
            // Subgradient 0 at the origin.
            if (norm == Scalar(0)) return;
            const Scalar g = t.grad(self)[0] / norm;
            for (auto id : ids) {
                if (!t.requires_grad(id)) continue;
                const Tensor& xv = t.value(id);
                Tensor& gx = t.grad_acc(id);
                for (std::size_t i = 0; i < xv.numel(); ++i) gx[i] += g * xv[i];
            }
        },
        "l2_norm");
}

Var l2_norm(Var x) { return l2_norm(std::span<const Var>(&x, 1)); }

Var upsample_tokens(Var tokens, std::size_t factor, std::size_t length) {
    const Tensor& tv = tokens.value();
    if (tv.rank() != 2) throw ShapeError("upsample_tokens: tokens must be [N x F]");
    if (factor == 0) throw ConfigError("upsample_tokens: factor must be >= 1");
    const std::size_t N = tv.dim(0), F = tv.dim(1);
    if (N == 0) throw ShapeError("upsample_tokens: no tokens");
    const std::size_t produced = N * factor;
    const std::size_t lead = produced < length ? length - produced : 0;
    std::vector<std::size_t> src(length);
    for (std::size_t t = 0; t < length; ++t) src[t] = t < lead ? 0 : (t - lead) / factor;
    Tensor out({F, length});
    for (std::size_t t = 0; t < length; ++t)
        for (std::size_t f = 0; f < F; ++f) out[f * length + t] = tv[src[t] * F + f];
    return tape_of(tokens).record(
        std::move(out), {tokens.id},
        [x = tokens.id, src = std::move(src), F, length](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad_acc(x);
            for (std::size_t s = 0; s < length; ++s)
                for (std::size_t f = 0; f < F; ++f) gx[src[s] * F + f] += g[f * length + s];
        },
        "upsample_tokens");
}

}  // namespace ops

STREAMTF_NS_END
