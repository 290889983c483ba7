#pragma once

#include <cstdint>
#include <random>

#include "streamtf/base.hpp"

STREAMTF_NS_BEGIN

// Seeded generator with distributions defined here rather than by the
// standard library, so sequences are identical across toolchains.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    double normal();

    // Independent child stream; used to give each consumer its own sequence.
    Rng fork(std::uint64_t salt);

   private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

STREAMTF_NS_END
