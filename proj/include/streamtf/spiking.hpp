#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "streamtf/kernels.hpp"
#include "streamtf/tape.hpp"

STREAMTF_NS_BEGIN

enum class LifOutput { spikes, membrane };

// Dynamics constants of a LIF layer. Input weights live with the layer that
// produces the drive (a bias-free linear map), not here.
struct LifParams {
    Scalar alpha = Scalar(0.95);
    Scalar beta = Scalar(0.9);
    Scalar theta = Scalar(1.0);
    Scalar surrogate_beta = Scalar(10);
    LifOutput output = LifOutput::spikes;

    void validate() const;
    kernels::LifCoefficients coefficients() const { return {alpha, beta, theta}; }
};

// Per-stream state of one LIF layer: values from the previous token.
struct LifState {
    std::vector<Scalar> u;  // membrane potential
    std::vector<Scalar> i;  // synaptic current
    std::vector<Scalar> s;  // last spike, 0 or 1

    explicit LifState(std::size_t width = 0) : u(width, 0), i(width, 0), s(width, 0) {}
    std::size_t width() const { return u.size(); }
    void reset();
};

// Advances the state by one token given the weighted input W x_t and
// returns S_t or U_t depending on params.output.
std::vector<Scalar> lif_step(LifState& state, std::span<const Scalar> drive, const LifParams& params);

// Scan of lif_step over the rows of drive [N x width], starting from a zero
// state. Backward propagates through the full recurrence, including the
// reset factor, using the SuperSpike surrogate for every Heaviside.
Var lif_sequence(Var drive, const LifParams& params);

// Elementwise Heaviside with surrogate backward.
Var binarize(Var x, Scalar surrogate_beta = Scalar(10));

STREAMTF_NS_END
