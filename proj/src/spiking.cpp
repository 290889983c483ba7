#include "streamtf/spiking.hpp"

#include <algorithm>

#include "streamtf/ops.hpp"

STREAMTF_NS_BEGIN

void LifParams::validate() const {
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("LIF: alpha must be in (0, 1)");
    if (!(beta > 0 && beta < 1)) throw ConfigError("LIF: beta must be in (0, 1)");
    if (!(theta > 0)) throw ConfigError("LIF: theta must be > 0");
    if (!(surrogate_beta > 0)) throw ConfigError("LIF: surrogate slope must be > 0");
}

void LifState::reset() {
    std::fill(u.begin(), u.end(), Scalar(0));
    std::fill(i.begin(), i.end(), Scalar(0));
    std::fill(s.begin(), s.end(), Scalar(0));
}

std::vector<Scalar> lif_step(LifState& state, std::span<const Scalar> drive, const LifParams& params) {
    if (drive.size() != state.width()) throw ShapeError("lif_step: drive width does not match the state");
    kernels::lif_step(state.u, state.i, state.s, drive, params.coefficients());
    return params.output == LifOutput::spikes ? state.s : state.u;
}

Var lif_sequence(Var drive, const LifParams& params) {
    params.validate();
    const Tensor& c = drive.value();
    if (c.rank() != 2) throw ShapeError("lif_sequence: drive must be [N x width], got " + shape_str(c.shape()));
    const std::size_t N = c.dim(0), W = c.dim(1);

    // Trajectories after each step; index t holds the state at token t.
    std::vector<Scalar> U(N * W), S(N * W);
    LifState st(W);
    Tensor out({N, W});
    const auto k = params.coefficients();
    for (std::size_t t = 0; t < N; ++t) {
        kernels::lif_step(st.u, st.i, st.s, c.row(t), k);
        std::copy(st.u.begin(), st.u.end(), U.begin() + t * W);
        std::copy(st.s.begin(), st.s.end(), S.begin() + t * W);
        const auto& o = params.output == LifOutput::spikes ? st.s : st.u;
        std::copy(o.begin(), o.end(), out.row(t).begin());
    }

    return drive.tape->record(
        std::move(out), {drive.id},
        [x = drive.id, U = std::move(U), S = std::move(S), params, N, W](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            Tensor& gc = t.grad_acc(x);
            const bool spikes = params.output == LifOutput::spikes;
            const Scalar a = params.alpha, b = params.beta;
            // dL/dU_{t+1}, dL/dS_{t+1}, dL/dI_{t+1}
            std::vector<Scalar> gu_next(W, 0), gs_next(W, 0), gi_next(W, 0);
            for (std::size_t step = N; step-- > 0;) {
                for (std::size_t n = 0; n < W; ++n) {
                    const std::size_t idx = step * W + n;
                    const Scalar u = U[idx], s = S[idx];
                    const Scalar go = g[idx];
                    const Scalar gu = (spikes ? Scalar(0) : go) +
                                      gs_next[n] * kernels::superspike(u - params.theta, params.surrogate_beta) +
                                      gu_next[n] * a * (Scalar(1) - s);
                    const Scalar gs = (spikes ? go : Scalar(0)) - gu_next[n] * a * u;
                    const Scalar gi = gu_next[n] * (Scalar(1) - a) + gi_next[n] * b;
                    gc[idx] += gi * (Scalar(1) - b);
                    gu_next[n] = gu;
                    gs_next[n] = gs;
                    gi_next[n] = gi;
                }
            }
        },
        "lif_sequence");
}

Var binarize(Var x, Scalar surrogate_beta) { return ops::heaviside_surrogate(x, surrogate_beta); }

STREAMTF_NS_END
