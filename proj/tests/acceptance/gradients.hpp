#pragma once

#include <cstddef>

// Finite-difference check of the dense model, run in double precision.
// Kept free of library types so both precisions can share one binary.
struct GradientReport {
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
    std::size_t layers = 0;
    std::size_t min_coordinates_per_layer = 0;
};

GradientReport acceptance_gradient_check();
