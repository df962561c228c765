#pragma once

#include <cstddef>
#include <random>

#include "skelact/tensor.hpp"

namespace skelact {

// Glorot-uniform initialization: values drawn row-major from
// U(-b, b) with b = sqrt(6 / (fan_in + fan_out)). The draw order is part of
// the determinism contract: a fixed seed fixes every initial weight.
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng);

}  // namespace skelact
