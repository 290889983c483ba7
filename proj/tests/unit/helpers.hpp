#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "streamtf/model.hpp"
#include "streamtf/ops.hpp"
#include "streamtf/rng.hpp"
#include "streamtf/tape.hpp"

namespace testutil {

using namespace streamtf;

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<Scalar>(rng.uniform(-scale, scale));
    return t;
}

// sum(x * w): reduces any tensor to a scalar with a non-trivial gradient.
inline Var weighted_sum(Var x, const Tensor& w) {
    const Tensor& xv = x.value();
    double acc = 0;
    for (std::size_t i = 0; i < xv.numel(); ++i) acc += static_cast<double>(xv[i]) * w[i];
    Tensor out({}, static_cast<Scalar>(acc));
    return x.tape->record(
        std::move(out), {x.id},
        [w, in = x.id](Tape& tape, std::size_t self) {
            const Scalar g = tape.grad(self).item();
            Tensor& acc_in = tape.grad_acc(in);
            for (std::size_t i = 0; i < acc_in.numel(); ++i) acc_in[i] += g * w[i];
        },
        "test.weighted_sum");
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
};

// Central differences (step h) on up to `per_input` random coordinates of
// every input, compared with the tape gradient. Relative error is
// |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(const std::vector<Tensor>& inputs,
                                 const std::function<Var(Tape&, const std::vector<Var>&)>& loss, Rng& rng,
                                 std::size_t per_input = 20, double h = 1e-3, double floor = 1e-6) {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
    Var l = loss(tape, leaves);
    tape.backward(l);
    std::vector<Tensor> analytic;
    for (const auto& v : leaves) analytic.push_back(v.grad());

    auto eval = [&](const std::vector<Tensor>& xs) {
        Tape t2;
        std::vector<Var> vs;
        for (const auto& x : xs) vs.push_back(t2.leaf(x, false));
        return static_cast<double>(loss(t2, vs).value().item());
    };

    GradCheck out;
    std::vector<Tensor> probe = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::size_t n = inputs[i].numel();
        std::vector<std::size_t> coords;
        if (n <= per_input) {
            for (std::size_t j = 0; j < n; ++j) coords.push_back(j);
        } else {
            for (std::size_t j = 0; j < per_input; ++j) coords.push_back(rng.below(n));
        }
        for (std::size_t j : coords) {
            const Scalar x0 = probe[i][j];
            probe[i][j] = static_cast<Scalar>(x0 + h);
            const double up = eval(probe);
            probe[i][j] = static_cast<Scalar>(x0 - h);
            const double down = eval(probe);
            probe[i][j] = x0;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[i][j];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            out.max_rel_error = std::max(out.max_rel_error, rel);
            ++out.coordinates;
        }
    }
    return out;
}

// The tiny dense configuration used by gradient checks.
inline ModelConfig tiny_gradient_config() {
    ModelConfig c;
    c.channels = 2;
    c.embed_dim = 4;
    c.attn_dim = 2;
    c.heads = 2;
    c.hidden = 4;
    c.kernel = 7;
    c.memory = 3;
    c.n_doa = 5;
    c.dropout = 0.0;
    return c;
}

// Small configuration for fast equivalence and training tests.
inline ModelConfig small_config(Variant v, std::size_t kernel = 7, std::size_t memory = 4) {
    ModelConfig c;
    c.channels = 4;
    c.embed_dim = 8;
    c.attn_dim = 4;
    c.heads = 2;
    c.hidden = 12;
    c.kernel = kernel;
    c.memory = memory;
    c.variant = v;
    return c;
}

}  // namespace testutil

#include "streamtf/data.hpp"
#include "streamtf/training.hpp"

namespace testutil {

// One synthetic subject: acquisitions 1 and 2 for training, 3 for test.
inline SubjectData synthetic_subject(int subject, std::size_t length, std::uint64_t seed) {
    SubjectData s;
    s.subject = subject;
    for (int acq : {1, 2, 3}) {
        SynthOptions o;
        o.length = length;
        o.subject = subject;
        o.acquisition = acq;
        Recording r = synth_dataset(o, seed * 31 + static_cast<std::uint64_t>(acq)).recording;
        (acq == 3 ? s.test : s.train).push_back(std::move(r));
    }
    return s;
}

// Desk-scale dense configuration used by the trainability checks.
inline ModelConfig desk_dense_config() {
    ModelConfig c;
    c.embed_dim = 16;
    c.attn_dim = 8;
    c.heads = 2;
    c.hidden = 32;
    c.kernel = 7;
    c.memory = 16;
    return c;
}

inline TrainConfig desk_train_config() {
    TrainConfig t;
    t.epochs = 10;
    t.batch = 8;
    t.lr = 1e-2;
    t.window = 400;
    t.duplicates = 8;
    t.max_shift = 400;
    t.seed = 7;
    return t;
}

}  // namespace testutil
