#pragma once

#include <cstddef>
#include <cstdint>

#include "skelact/sequence.hpp"

namespace skelact {

struct SynthSpec {
    std::size_t num_classes = 4;
    std::size_t per_class = 16;
    std::size_t joints = 11;  // chain topology 0-1-...-N-1
    std::size_t frames = 32;
    double noise_std = 0.01;
};

// Deterministic synthetic action corpus on a chain skeleton. Class c shifts
// a class-specific contiguous joint group along axis (c mod 3) by a constant
// lift (so raw class means stay linearly separable) plus a sinusoid with
// frequency 1+c; every sample adds a random phase, a small amplitude jitter,
// and Gaussian coordinate noise. Samples are ordered by class
// (label = index / per_class) and each sample's generator is seeded with
// seed XOR index, so generation is order-independent and reproducible.
// Values land on the f32 storage grid.
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace skelact
